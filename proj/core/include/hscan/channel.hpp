#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string_view>

#include "hscan/waveform.hpp"

namespace hscan {

enum class ChannelKind { Flat, ChannelA, ChannelB };

std::string_view to_string(ChannelKind k) noexcept;
ChannelKind parse_channel_kind(std::string_view name);

inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Bus channel model. ChannelA is a matched twisted-pair line with
/// insertion loss (length/100 m) * (k1 sqrt(f_MHz) + k2 f_MHz) dB and a pure
/// propagation delay. ChannelB is the same line cut into segments with a
/// high-impedance node hanging off each junction through a short stub.
struct ChannelSpec {
  ChannelKind kind = ChannelKind::Flat;
  double length_m = 100.0;
  int tap_count = 9;
  double tap_spacing_m = 10.0;
  double stub_len_m = 0.3;
  double tap_load_ohm = 20'000.0;
  double k1 = 2.32;    // dB per 100 m per sqrt(MHz)
  double k2 = 0.238;   // dB per 100 m per MHz
  double z0_ohm = 100.0;
  double velocity_factor = 0.6;

  void validate() const;
};

struct NoiseSpec {
  double input_snr_db = std::numeric_limits<double>::infinity();  // inf disables noise
  std::uint64_t rng_seed = 0;
  // Reference band: carrier +/- symbol_rate/2, so input SNR reads as Es/N0.
  double band_low_hz = 6e6;
  double band_high_hz = 42e6;
};

/// Complex propagation constant (Np/m, rad/m) of the cable model.
std::complex<double> propagation_constant(double f_hz, const ChannelSpec& spec);

/// length_m / (velocity_factor * c) for cable channels, zero for Flat.
double bulk_delay_s(const ChannelSpec& spec);

std::complex<double> channel_a_response(double f_hz, const ChannelSpec& spec);

/// ABCD cascade of line segments and stub-loaded shunt branches between
/// matched Z0 terminations, normalized so a bare matched line gives e^{-gamma l}.
std::complex<double> channel_b_response(double f_hz, const ChannelSpec& spec);

/// Dispatches on spec.kind.
std::complex<double> channel_response(double f_hz, const ChannelSpec& spec);

/// Extra samples apply_channel() appends to hold the delayed response tail.
std::size_t response_tail_samples(const ChannelSpec& spec, double sample_rate);

/// Linear convolution with the channel, evaluated by multiplying the spectrum
/// of the zero-padded signal. Output length = input length + tail.
Waveform apply_channel(const Waveform& x, const ChannelSpec& spec);

/// Adds white Gaussian noise whose power inside [band_low_hz, band_high_hz]
/// is overlay_power_ref / 10^(snr/10). Deterministic for a given seed.
Waveform add_awgn(const Waveform& x, const NoiseSpec& noise, double overlay_power_ref);

/// Per-sample noise variance add_awgn() uses.
double awgn_variance(const NoiseSpec& noise, double overlay_power_ref, double sample_rate);

/// CSV: f_Hz,gain_dB,phase_rad over `points` frequencies in [f_start, f_stop].
void write_response_csv(std::ostream& os, const ChannelSpec& spec, double f_start, double f_stop,
                        std::size_t points);

}  // namespace hscan
