#include "hscan/channel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "hscan/spectral.hpp"

namespace hscan {

namespace {

using cd = std::complex<double>;
constexpr double kNeperPerDb = std::numbers::ln10 / 20.0;

// Row-major [A B; C D].
struct Abcd {
  cd a{1.0}, b{0.0}, c{0.0}, d{1.0};

  Abcd operator*(const Abcd& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
};

Abcd line_section(cd gamma, double z0, double len) {
  const cd gl = gamma * len;
  const cd ch = std::cosh(gl);
  const cd sh = std::sinh(gl);
  return {ch, z0 * sh, sh / z0, ch};
}

Abcd shunt(cd admittance) { return {1.0, 0.0, admittance, 1.0}; }

// Input impedance of a line of length `len` terminated in `load`.
cd stub_input_impedance(cd gamma, double z0, double len, double load) {
  const cd t = std::tanh(gamma * len);
  return z0 * (load + z0 * t) / (z0 + load * t);
}

}  // namespace

std::string_view to_string(ChannelKind k) noexcept {
  switch (k) {
    case ChannelKind::Flat: return "Flat";
    case ChannelKind::ChannelA: return "ChannelA";
    case ChannelKind::ChannelB: return "ChannelB";
  }
  return "?";
}

ChannelKind parse_channel_kind(std::string_view name) {
  for (auto k : {ChannelKind::Flat, ChannelKind::ChannelA, ChannelKind::ChannelB}) {
    if (name == to_string(k)) return k;
  }
  if (name == "A") return ChannelKind::ChannelA;
  if (name == "B") return ChannelKind::ChannelB;
  throw std::invalid_argument("unknown channel kind: " + std::string(name));
}

void ChannelSpec::validate() const {
  if (!(length_m > 0.0)) throw std::invalid_argument("channel length must be positive");
  if (tap_count < 0) throw std::invalid_argument("tap_count must be >= 0");
  if (kind == ChannelKind::ChannelB && tap_count > 0 && (tap_count - 1) * tap_spacing_m >= length_m) {
    throw std::invalid_argument("taps do not fit on the line");
  }
  if (!(z0_ohm > 0.0) || !(velocity_factor > 0.0) || velocity_factor > 1.0) {
    throw std::invalid_argument("z0_ohm and velocity_factor must be positive (vf <= 1)");
  }
  if (k1 < 0.0 || k2 < 0.0 || stub_len_m < 0.0 || !(tap_load_ohm > 0.0)) {
    throw std::invalid_argument("cable coefficients, stub length and tap load must be non-negative");
  }
}

cd propagation_constant(double f_hz, const ChannelSpec& spec) {
  const double f_mhz = std::abs(f_hz) * 1e-6;
  const double loss_db_per_m = (spec.k1 * std::sqrt(f_mhz) + spec.k2 * f_mhz) / 100.0;
  const double alpha = loss_db_per_m * kNeperPerDb;
  const double beta = 2.0 * std::numbers::pi * f_hz / (spec.velocity_factor * kSpeedOfLight);
  return {alpha, beta};
}

double bulk_delay_s(const ChannelSpec& spec) {
  if (spec.kind == ChannelKind::Flat) return 0.0;
  return spec.length_m / (spec.velocity_factor * kSpeedOfLight);
}

cd channel_a_response(double f_hz, const ChannelSpec& spec) {
  return std::exp(-propagation_constant(f_hz, spec) * spec.length_m);
}

cd channel_b_response(double f_hz, const ChannelSpec& spec) {
  const cd gamma = propagation_constant(f_hz, spec);
  const double z0 = spec.z0_ohm;
  if (spec.tap_count == 0) {
    const Abcd m = line_section(gamma, z0, spec.length_m);
    return 2.0 / (m.a + m.b / z0 + m.c * z0 + m.d);
  }
  // Taps are centered on the line, tap_spacing_m apart.
  const double span = (spec.tap_count - 1) * spec.tap_spacing_m;
  const double lead = (spec.length_m - span) / 2.0;
  const cd y_tap = 1.0 / stub_input_impedance(gamma, z0, spec.stub_len_m, spec.tap_load_ohm);

  Abcd m = line_section(gamma, z0, lead);
  for (int t = 0; t < spec.tap_count; ++t) {
    m = m * shunt(y_tap);
    const double next = (t + 1 < spec.tap_count) ? spec.tap_spacing_m : lead;
    m = m * line_section(gamma, z0, next);
  }
  // V_load / V_source between Z0 terminations is 1/(A + B/Z0 + C Z0 + D);
  // the factor 2 normalizes a zero-length through to unity.
  return 2.0 / (m.a + m.b / z0 + m.c * z0 + m.d);
}

cd channel_response(double f_hz, const ChannelSpec& spec) {
  switch (spec.kind) {
    case ChannelKind::Flat: return 1.0;
    case ChannelKind::ChannelA: return channel_a_response(f_hz, spec);
    case ChannelKind::ChannelB: return channel_b_response(f_hz, spec);
  }
  return 1.0;
}

std::size_t response_tail_samples(const ChannelSpec& spec, double sample_rate) {
  if (spec.kind == ChannelKind::Flat) return 0;
  return static_cast<std::size_t>(std::ceil(bulk_delay_s(spec) * sample_rate)) + 1024;
}

namespace {

// The cascade is costly to evaluate at every bin, and a sweep applies the
// same channel to hundreds of frames of one length, so sampled responses
// are kept by (spec, fs, n).
std::shared_ptr<const std::vector<cd>> sampled_response(const ChannelSpec& spec,
                                                        double sample_rate, std::size_t n) {
  using Key = std::array<double, 12>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const std::vector<cd>>> cache;
  const Key key = {static_cast<double>(spec.kind), spec.length_m, static_cast<double>(spec.tap_count),
                   spec.tap_spacing_m, spec.stub_len_m, spec.tap_load_ohm, spec.k1, spec.k2,
                   spec.z0_ohm, spec.velocity_factor, sample_rate, static_cast<double>(n)};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto h = std::make_shared<std::vector<cd>>(n / 2 + 1);
  const double df = sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < h->size(); ++k) (*h)[k] = channel_response(df * static_cast<double>(k), spec);
  std::lock_guard lock(mutex);
  if (cache.size() >= 32) cache.clear();
  return cache.emplace(key, std::move(h)).first->second;
}

}  // namespace

Waveform apply_channel(const Waveform& x, const ChannelSpec& spec) {
  spec.validate();
  validate(x);
  const std::size_t tail = response_tail_samples(spec, x.sample_rate);
  Waveform y{x.samples, x.sample_rate, x.t0};
  if (spec.kind == ChannelKind::Flat) return y;

  // Guard band absorbs the two-sided (non-causal about the bulk delay)
  // response so circular wrap stays out of the returned samples.
  const std::size_t n = spectral::next_pow2(x.size() + tail + 4096);
  const auto h = sampled_response(spec, x.sample_rate, n);
  auto bins = spectral::rfft(x.samples, n);
  for (std::size_t k = 0; k < bins.size(); ++k) bins[k] *= (*h)[k];
  y.samples = spectral::irfft(bins, n);
  y.samples.resize(std::min(x.size() + tail, n));
  return y;
}

double awgn_variance(const NoiseSpec& noise, double overlay_power_ref, double sample_rate) {
  if (!(overlay_power_ref > 0.0)) throw std::invalid_argument("add_awgn: overlay_power_ref must be positive");
  const double nyquist = sample_rate / 2.0;
  if (!(noise.band_low_hz >= 0.0) || !(noise.band_high_hz > noise.band_low_hz) ||
      noise.band_high_hz > nyquist) {
    throw std::invalid_argument("add_awgn: noise band must lie inside (0, fs/2)");
  }
  const double in_band = overlay_power_ref / std::pow(10.0, noise.input_snr_db / 10.0);
  return in_band * nyquist / (noise.band_high_hz - noise.band_low_hz);
}

Waveform add_awgn(const Waveform& x, const NoiseSpec& noise, double overlay_power_ref) {
  if (std::isinf(noise.input_snr_db) && noise.input_snr_db > 0) return x;
  const double sigma = std::sqrt(awgn_variance(noise, overlay_power_ref, x.sample_rate));
  std::mt19937_64 rng(noise.rng_seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  Waveform y = x;
  for (double& v : y.samples) v += gauss(rng);
  return y;
}

void write_response_csv(std::ostream& os, const ChannelSpec& spec, double f_start, double f_stop,
                        std::size_t points) {
  os << "f_Hz,gain_dB,phase_rad\n";
  const auto old_precision = os.precision(10);
  for (std::size_t k = 0; k < points; ++k) {
    const double f = points > 1 ? f_start + (f_stop - f_start) * k / (points - 1.0) : f_start;
    const cd h = channel_response(f, spec);
    os << f << ',' << 20.0 * std::log10(std::abs(h)) << ',' << std::arg(h) << '\n';
  }
  os.precision(old_precision);
}

}  // namespace hscan
