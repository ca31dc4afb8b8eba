#include "hscan/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hscan {

namespace {

// The overlay is scaled so the composite minimum lands exactly on the
// threshold; this absorbs rounding in the 2.5 +/- q arithmetic.
constexpr double kThresholdTolerance = 1e-9;

double drive_level(Bit b) { return b == kDominant ? kDominantSwing : 0.0; }

}  // namespace

Waveform DifferentialPair::difference() const {
  Waveform d{std::vector<double>(can_h.size()), can_h.sample_rate, can_h.t0};
  for (std::size_t n = 0; n < d.samples.size(); ++n) {
    d.samples[n] = can_h.samples[n] - can_l.samples[n];
  }
  return d;
}

Waveform synthesize_single_ended(std::span<const Bit> bits, const BitTiming& timing) {
  if (bits.empty()) throw std::invalid_argument("synthesize_single_ended: empty bit stream");
  if (timing.samples_per_bit <= 0 || timing.bit_rate <= 0.0) {
    throw std::invalid_argument("synthesize_single_ended: invalid bit timing");
  }
  const auto spb = static_cast<std::size_t>(timing.samples_per_bit);
  const double fs = timing.sample_rate();
  Waveform w{std::vector<double>(bits.size() * spb), fs, 0.0};

  double previous = 0.0;  // idle bus
  for (std::size_t b = 0; b < bits.size(); ++b) {
    const double level = drive_level(bits[b]);
    double* out = w.samples.data() + b * spb;
    for (std::size_t k = 0; k < spb; ++k) {
      const double since_edge = static_cast<double>(k) / fs;
      if (level != previous && since_edge < timing.rise_fall_time) {
        out[k] = previous + (level - previous) * since_edge / timing.rise_fall_time;
      } else {
        out[k] = level;
      }
    }
    previous = level;
  }
  return w;
}

DifferentialPair to_differential(const Waveform& q) {
  DifferentialPair p{q, q};
  for (std::size_t n = 0; n < q.size(); ++n) {
    p.can_h.samples[n] = kRecessiveLineLevel + q.samples[n];
    p.can_l.samples[n] = kRecessiveLineLevel - q.samples[n];
  }
  return p;
}

BitStream threshold_detect(const Waveform& q_d, const BitTiming& timing, std::size_t first_sample) {
  const auto spb = static_cast<std::size_t>(timing.samples_per_bit);
  BitStream bits;
  if (q_d.size() <= first_sample) return bits;
  const std::size_t count = (q_d.size() - first_sample) / spb;
  bits.reserve(count);
  const std::size_t point = timing.sample_point();
  for (std::size_t b = 0; b < count; ++b) {
    const double v = q_d.samples[first_sample + b * spb + point];
    bits.push_back(v >= kDifferentialThreshold - kThresholdTolerance ? kDominant : kRecessive);
  }
  return bits;
}

void validate(const Waveform& w) {
  if (!(w.sample_rate > 0.0)) throw std::invalid_argument("waveform sample_rate must be positive");
  if (!std::all_of(w.samples.begin(), w.samples.end(), [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("waveform contains non-finite samples");
  }
}

void write_csv(std::ostream& os, const Waveform& w) {
  os << "time_s,value\n";
  const auto old_precision = os.precision(12);
  for (std::size_t n = 0; n < w.size(); ++n) {
    os << w.time_at(n) << ',' << w.samples[n] << '\n';
  }
  os.precision(old_precision);
}

}  // namespace hscan
