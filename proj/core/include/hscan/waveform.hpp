#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "hscan/frame.hpp"

namespace hscan {

/// Uniformly sampled real signal. Sample n sits at t0 + n / sample_rate.
struct Waveform {
  std::vector<double> samples;
  double sample_rate = 1.0;
  double t0 = 0.0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }
  double time_at(std::size_t n) const noexcept {
    return t0 + static_cast<double>(n) / sample_rate;
  }
};

struct BitTiming {
  double bit_rate = 1e6;
  int samples_per_bit = 288;
  double rise_fall_time = 50e-9;

  double sample_rate() const noexcept { return bit_rate * samples_per_bit; }
  /// Offset of the bit sample point from the start of a bit period.
  std::size_t sample_point() const noexcept { return static_cast<std::size_t>(samples_per_bit) * 3 / 4; }
};

inline constexpr double kRecessiveLineLevel = 2.5;  // V, both lines when undriven
inline constexpr double kDominantSwing = 1.0;       // V, single-ended drive level
inline constexpr double kDifferentialThreshold = 1.0;

struct DifferentialPair {
  Waveform can_h;
  Waveform can_l;

  Waveform difference() const;
};

/// Single-ended drive level: 1 V while dominant, 0 V while recessive, linear
/// ramps of rise_fall_time starting at each bit boundary. The bus is idle
/// (recessive) before the first bit.
Waveform synthesize_single_ended(std::span<const Bit> bits, const BitTiming& timing);

DifferentialPair to_differential(const Waveform& q);

/// Standard CAN bit detector. One decision per bit period at the 75% sample
/// point, starting `first_sample` into the waveform: dominant iff the
/// differential level reaches the 1 V threshold.
BitStream threshold_detect(const Waveform& q_d, const BitTiming& timing,
                           std::size_t first_sample = 0);

void validate(const Waveform& w);

/// Two-column CSV: time_s,value.
void write_csv(std::ostream& os, const Waveform& w);

}  // namespace hscan
