#include "hscan/rx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "hscan/spectral.hpp"

namespace hscan {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxDominantRun = 5;
constexpr std::size_t kMinCancelPeriods = 16;

double kaiser_beta(double attenuation_db) {
  if (attenuation_db > 50.0) return 0.1102 * (attenuation_db - 8.7);
  if (attenuation_db >= 21.0) {
    return 0.5842 * std::pow(attenuation_db - 21.0, 0.4) + 0.07886 * (attenuation_db - 21.0);
  }
  return 0.0;
}

std::vector<double> kaiser_window(int n, double beta) {
  std::vector<double> w(n);
  const double denom = std::cyl_bessel_i(0.0, beta);
  for (int k = 0; k < n; ++k) {
    const double r = n > 1 ? 2.0 * k / (n - 1.0) - 1.0 : 0.0;
    w[k] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
  }
  return w;
}

// Windowed-sinc lowpass normalized to unit DC gain.
std::vector<double> lowpass(int n, double cutoff_hz, double fs, const std::vector<double>& window) {
  const double fc = cutoff_hz / fs;
  const double center = (n - 1) / 2.0;
  std::vector<double> h(n);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = k - center;
    const double sinc = std::abs(t) < 1e-12 ? 2.0 * fc : std::sin(2.0 * kPi * fc * t) / (kPi * t);
    h[k] = sinc * window[k];
    sum += h[k];
  }
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Bandpass

BandpassFilter design_bandpass(double sample_rate, const BandpassSpec& spec) {
  if (spec.num_taps < 3 || spec.num_taps % 2 == 0) {
    throw std::invalid_argument("bandpass needs an odd tap count >= 3");
  }
  if (!(spec.cutoff_low_hz > 0.0) || !(spec.cutoff_high_hz > spec.cutoff_low_hz) ||
      spec.cutoff_high_hz >= sample_rate / 2.0) {
    throw std::invalid_argument("bandpass cutoffs must satisfy 0 < low < high < fs/2");
  }
  const auto window = kaiser_window(spec.num_taps, kaiser_beta(spec.stopband_db));
  const auto upper = lowpass(spec.num_taps, spec.cutoff_high_hz, sample_rate, window);
  const auto lower = lowpass(spec.num_taps, spec.cutoff_low_hz, sample_rate, window);
  BandpassFilter f;
  f.taps.resize(spec.num_taps);
  for (int k = 0; k < spec.num_taps; ++k) f.taps[k] = upper[k] - lower[k];
  f.group_delay = static_cast<std::size_t>(spec.num_taps / 2);
  f.sample_rate = sample_rate;
  return f;
}

Waveform bandpass(const Waveform& x, const BandpassFilter& filter) {
  Waveform y{spectral::convolve_fir(x.samples, filter.taps), x.sample_rate, x.t0};
  return y;
}

Waveform bandpass(const Waveform& x) { return bandpass(x, design_bandpass(x.sample_rate)); }

// ---------------------------------------------------------------------------
// Gating

BitStream detect_bits_filtered(const Waveform& q_d, const BitTiming& timing,
                               std::size_t first_sample, std::size_t average_samples) {
  const auto spb = static_cast<std::size_t>(timing.samples_per_bit);
  const std::size_t point = timing.sample_point();
  const std::size_t span = std::clamp<std::size_t>(average_samples, 1, point + 1);
  BitStream bits;
  if (q_d.size() <= first_sample) return bits;
  const std::size_t count = (q_d.size() - first_sample) / spb;
  bits.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t end = first_sample + b * spb + point + 1;
    double acc = 0.0;
    for (std::size_t n = end - span; n < end; ++n) acc += q_d.samples[n];
    bits.push_back(acc / static_cast<double>(span) >= kDifferentialThreshold ? kDominant : kRecessive);
  }
  return bits;
}

std::vector<GateWindow> track_gating(const Waveform& q_d, const BitTiming& timing,
                                     std::size_t data_begin, std::size_t data_end,
                                     std::size_t first_sample) {
  const auto bits = detect_bits_filtered(q_d, timing, first_sample);
  if (data_end > bits.size() || data_begin > data_end) {
    throw RxError("track_gating: data field [" + std::to_string(data_begin) + ", " +
                  std::to_string(data_end) + ") lies outside the detected " +
                  std::to_string(bits.size()) + " bits");
  }
  const auto spb = static_cast<std::size_t>(timing.samples_per_bit);

  // A dominant run may already be in progress when the data field opens.
  std::size_t carried_run = 0;
  for (std::size_t i = data_begin; i-- > 0 && bits[i] == kDominant;) ++carried_run;

  std::vector<GateWindow> windows;
  std::size_t i = data_begin;
  while (i < data_end) {
    if (bits[i] == kRecessive) {
      const bool after_full_run = i >= kMaxDominantRun && i > data_begin &&
                                  std::all_of(bits.begin() + (i - kMaxDominantRun), bits.begin() + i,
                                              [](Bit b) { return b == kDominant; });
      const bool at_open = i == data_begin;
      if (!after_full_run && !at_open) {
        throw RxError("track_gating: expected a recessive-to-dominant transition at bit " +
                      std::to_string(i));
      }
      ++i;  // hold for the stuff bit
      continue;
    }
    const std::size_t limit = kMaxDominantRun - std::min(carried_run, kMaxDominantRun);
    carried_run = 0;
    GateWindow w;
    w.first_bit = i;
    while (i < data_end && bits[i] == kDominant && w.bit_count < limit) {
      ++w.bit_count;
      ++i;
    }
    w.samples = {first_sample + w.first_bit * spb, first_sample + (w.first_bit + w.bit_count) * spb};
    w.recessive_after = i < bits.size() && bits[i] == kRecessive;
    if (w.bit_count > 0) windows.push_back(w);
    if (i < data_end && bits[i] == kDominant) {
      throw RxError("track_gating: dominant run exceeds five bits at bit " + std::to_string(i));
    }
  }
  return windows;
}

std::size_t gated_bit_count(std::span<const GateWindow> windows) noexcept {
  std::size_t total = 0;
  for (const auto& w : windows) total += w.bit_count;
  return total;
}

// ---------------------------------------------------------------------------
// Demodulation

std::size_t SymbolGrid::active_count() const noexcept {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), std::uint8_t{1}));
}

SymbolSequence SymbolGrid::active_symbols() const {
  SymbolSequence out;
  out.reserve(active_count());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    if (active[n]) out.push_back(samples[n]);
  }
  return out;
}

SymbolGrid downconvert(const Waveform& x, const OverlayConfig& cfg, const BitTiming& timing,
                       std::span<const GateWindow> windows, const DemodTiming& demod,
                       std::size_t bandpass_delay) {
  const double fs = x.sample_rate;
  const int sps = cfg.samples_per_symbol(fs);
  const std::size_t per_bit = cfg.symbols_per_bit(timing);
  const auto spb = static_cast<long long>(timing.samples_per_bit);
  if (demod.data_end_bit < demod.data_begin_bit) throw RxError("downconvert: empty data field");

  const std::size_t data_slots = (demod.data_end_bit - demod.data_begin_bit) * per_bit;
  const std::size_t total_slots = demod.margin_before + data_slots + demod.margin_after;

  SymbolGrid grid;
  grid.samples.assign(total_slots, Complex{});
  grid.active.assign(total_slots, 0);
  if (total_slots == 0) return grid;

  for (const auto& w : windows) {
    if (w.first_bit < demod.data_begin_bit || w.first_bit + w.bit_count > demod.data_end_bit) {
      throw RxError("downconvert: gate window outside the data field");
    }
    const std::size_t first = demod.margin_before + (w.first_bit - demod.data_begin_bit) * per_bit;
    std::fill_n(grid.active.begin() + static_cast<long long>(first), w.bit_count * per_bit, 1);
  }

  auto mf = rrc_taps(cfg.rrc_rolloff, cfg.rrc_span, sps);
  double energy = 0.0;
  for (double v : mf) energy += v * v;
  for (double& v : mf) v /= energy;  // cascade peak of tx and rx filters = 1
  const long long half = static_cast<long long>(mf.size() / 2);

  const long long delay_samples = std::llround(demod.delay_s * fs);
  const long long offset = delay_samples + static_cast<long long>(bandpass_delay);
  const auto center_of = [&](std::size_t slot) {
    const long long rel = static_cast<long long>(slot) - static_cast<long long>(demod.margin_before);
    const long long tx_peak =
        static_cast<long long>(demod.data_begin_bit) * spb + rel * sps + sps / 2;
    return tx_peak + offset;
  };

  // Baseband over the span the matched filter touches.
  const long long lo = center_of(0) - half;
  const long long hi = center_of(total_slots - 1) + half + 1;
  std::vector<Complex> z(static_cast<std::size_t>(hi - lo));
  const double cycles_per_sample = cfg.carrier_freq / fs;
  const double phase_origin =
      cfg.carrier_freq * (static_cast<double>(bandpass_delay) / fs + demod.delay_s);
  for (long long n = lo; n < hi; ++n) {
    if (n < 0 || n >= static_cast<long long>(x.size())) continue;
    const double cycles = std::fmod(cycles_per_sample * static_cast<double>(n) - phase_origin, 1.0);
    z[static_cast<std::size_t>(n - lo)] = 2.0 * x.samples[static_cast<std::size_t>(n)] *
                                          std::polar(1.0, -2.0 * kPi * cycles);
  }

  for (std::size_t s = 0; s < total_slots; ++s) {
    const long long c = center_of(s) - lo;
    Complex acc{};
    for (long long j = -half; j <= half; ++j) acc += mf[static_cast<std::size_t>(j + half)] * z[c + j];
    grid.samples[s] = acc;
  }

  if (demod.normalize) {
    double power = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < total_slots; ++s) {
      if (!grid.active[s]) continue;
      power += std::norm(grid.samples[s]);
      ++count;
    }
    if (count > 0 && power > 0.0) {
      const double scale = 1.0 / std::sqrt(power / static_cast<double>(count));
      for (auto& v : grid.samples) v *= scale;
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Equalization

void EqualizerConfig::validate() const {
  if (ff_taps <= 0) throw std::invalid_argument("ff_taps must be positive");
  if (fb_taps < 0) throw std::invalid_argument("fb_taps must be non-negative");
  if (!(mu_train > 0.0 && mu_train <= 1.0) || !(mu_dd > 0.0 && mu_dd <= 1.0)) {
    throw std::invalid_argument("LMS step sizes must lie in (0, 1]");
  }
  if (center_tap_index < 0 || center_tap_index >= ff_taps) {
    throw std::invalid_argument("center_tap_index must index a feed-forward tap");
  }
}

EqualizerState initial_state(const EqualizerConfig& cfg) {
  EqualizerState s;
  s.ff_weights.assign(static_cast<std::size_t>(cfg.ff_taps), Complex{});
  s.ff_weights[static_cast<std::size_t>(cfg.center_tap_index)] = 1.0;
  s.fb_weights.assign(static_cast<std::size_t>(cfg.fb_taps), Complex{});
  s.decision_history.assign(static_cast<std::size_t>(cfg.fb_taps), Complex{});
  return s;
}

std::size_t slice(Complex z, Modulation m) {
  const auto& points = constellation(m);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double d = std::norm(z - points[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

namespace {

void append_label(BitStream& out, std::size_t label, std::size_t width) {
  for (std::size_t j = width; j-- > 0;) out.push_back(static_cast<Bit>((label >> j) & 1u));
}

}  // namespace

BitStream demap(std::span<const Complex> symbols, Modulation m) {
  const std::size_t width = bits_per_symbol(m);
  BitStream out;
  out.reserve(symbols.size() * width);
  for (const auto& z : symbols) append_label(out, slice(z, m), width);
  return out;
}

RxOutput dfe_equalize(const SymbolGrid& grid, std::span<const Complex> training,
                      const EqualizerConfig& cfg, std::span<const Complex> bias) {
  cfg.validate();
  if (grid.samples.size() != grid.active.size()) throw RxError("dfe: grid mask size mismatch");
  if (!bias.empty() && bias.size() != grid.samples.size()) throw RxError("dfe: bias size mismatch");
  const std::size_t active_total = grid.active_count();
  if (active_total < training.size()) {
    throw RxError("dfe: " + std::to_string(active_total) + " symbols cannot hold " +
                  std::to_string(training.size()) + " training symbols");
  }

  const auto ff = static_cast<std::size_t>(cfg.ff_taps);
  const auto fb = static_cast<std::size_t>(cfg.fb_taps);
  const auto center = static_cast<long long>(cfg.center_tap_index);
  const auto& points = constellation(cfg.payload_modulation);
  const std::size_t width = bits_per_symbol(cfg.payload_modulation);

  RxOutput out;
  out.state = initial_state(cfg);
  auto& w = out.state.ff_weights;
  auto& b = out.state.fb_weights;
  auto& history = out.state.decision_history;  // history[j] = decision j+1 slots back
  out.training_mse.reserve(training.size());
  out.equalized_symbols.reserve(active_total - training.size());
  out.decisions.reserve(active_total - training.size());
  out.errors.reserve(active_total);

  const auto n_slots = static_cast<long long>(grid.samples.size());
  const auto input_at = [&](long long k) {
    return (k >= 0 && k < n_slots) ? grid.samples[static_cast<std::size_t>(k)] : Complex{};
  };

  double in_power = 0.0;
  double out_power = 0.0;
  constexpr double kSmoothing = 1.0 / 256.0;
  std::size_t produced = 0;
  std::vector<Complex> taps_in(ff);

  for (long long n = 0; n < n_slots; ++n) {
    Complex reference{};
    if (grid.active[static_cast<std::size_t>(n)]) {
      Complex y{};
      for (std::size_t i = 0; i < ff; ++i) {
        taps_in[i] = input_at(n + center - static_cast<long long>(i));
        y += w[i] * taps_in[i];
      }
      for (std::size_t j = 0; j < fb; ++j) y -= b[j] * history[j];
      if (!bias.empty()) y -= bias[static_cast<std::size_t>(n)];

      const bool training_phase = produced < training.size();
      double mu = cfg.mu_train;
      if (training_phase) {
        reference = training[produced];
      } else {
        const std::size_t label = slice(y, cfg.payload_modulation);
        reference = points[label];
        mu = cfg.mu_dd;
        out.equalized_symbols.push_back(y);
        out.decisions.push_back(label);
        append_label(out.payload_bits, label, width);
      }
      const Complex e = reference - y;
      if (training_phase) out.training_mse.push_back(std::norm(e));
      out.errors.push_back(e);

      for (std::size_t i = 0; i < ff; ++i) w[i] += mu * e * std::conj(taps_in[i]);
      for (std::size_t j = 0; j < fb; ++j) b[j] -= mu * e * std::conj(history[j]);

      in_power += kSmoothing * (std::norm(taps_in[static_cast<std::size_t>(center)]) - in_power);
      out_power += kSmoothing * (std::norm(y) - out_power);
      ++produced;
      if (!std::isfinite(out_power) || (produced > 256 && out_power > 100.0 * in_power && in_power > 0.0)) {
        throw RxError("dfe: equalizer diverged after " + std::to_string(produced) + " symbols");
      }
    }
    // Inactive slots carry no symbol, so the feedback sees zero there.
    if (fb > 0) {
      std::rotate(history.rbegin(), history.rbegin() + 1, history.rend());
      history[0] = reference;
    }
  }
  return out;
}

RxOutput dfe_equalize(std::span<const Complex> symbols, std::span<const Complex> training,
                      const EqualizerConfig& cfg) {
  SymbolGrid grid;
  grid.samples.assign(symbols.begin(), symbols.end());
  grid.active.assign(symbols.size(), 1);
  return dfe_equalize(grid, training, cfg);
}

// ---------------------------------------------------------------------------
// CAN interference cancellation

namespace {

// Five dominant bits with one stuff bit on either side.
bool is_regular_window(std::span<const GateWindow> windows, std::size_t k) {
  const auto& w = windows[k];
  if (w.bit_count != kMaxDominantRun || k == 0 || k + 1 == windows.size()) return false;
  const auto& prev = windows[k - 1];
  return prev.first_bit + prev.bit_count + 1 == w.first_bit &&
         w.first_bit + w.bit_count + 1 == windows[k + 1].first_bit;
}

// Offset into a regular window's template for symbol `o` of window `w`.
// A short window that closes on a falling edge takes its last bit from the
// last bit of a regular window, where that edge's residue was averaged.
std::size_t template_offset(const GateWindow& w, std::size_t o, std::size_t symbols_per_bit) {
  if (w.bit_count >= kMaxDominantRun || !w.recessive_after) return o;
  const std::size_t last_bit = (w.bit_count - 1) * symbols_per_bit;
  return o < last_bit ? o : o + (kMaxDominantRun - w.bit_count) * symbols_per_bit;
}

// Per-offset mean over `count` periods, shrunk towards zero where the
// spread between periods says the mean is mostly estimation noise:
//   m * max(0, 1 - var / (count |m|^2)).
void shrink_mean(SymbolSequence& sum, const std::vector<double>& sum_sq, std::size_t count) {
  const auto n = static_cast<double>(count);
  for (std::size_t o = 0; o < sum.size(); ++o) {
    const Complex m = sum[o] / n;
    const double var = std::max(0.0, sum_sq[o] / n - std::norm(m));
    const double power = std::norm(m);
    const double keep = power > 0.0 ? std::max(0.0, 1.0 - var / (n * power)) : 0.0;
    sum[o] = m * keep;
  }
}

}  // namespace

void subtract_period_template(SymbolGrid& grid, std::span<const GateWindow> windows,
                              std::size_t symbols_per_bit, std::size_t margin_before,
                              std::size_t data_begin_bit) {
  const std::size_t lead = symbols_per_bit;  // the stuff bit ahead of a window
  const std::size_t period = (kMaxDominantRun + 1) * symbols_per_bit;
  const auto start_of = [&](const GateWindow& w) {
    return static_cast<long long>(margin_before + (w.first_bit - data_begin_bit) * symbols_per_bit) -
           static_cast<long long>(lead);
  };
  const auto n_slots = static_cast<long long>(grid.samples.size());

  SymbolSequence mean(period);
  std::vector<double> sum_sq(period);
  std::size_t count = 0;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    if (!is_regular_window(windows, k)) continue;
    const long long s0 = start_of(windows[k]);
    if (s0 < 0 || s0 + static_cast<long long>(period) > n_slots) continue;
    for (std::size_t o = 0; o < period; ++o) {
      const Complex x = grid.samples[static_cast<std::size_t>(s0) + o];
      mean[o] += x;
      sum_sq[o] += std::norm(x);
    }
    ++count;
  }
  if (count < 2) return;
  shrink_mean(mean, sum_sq, count);

  for (const auto& w : windows) {
    const long long s0 = start_of(w);
    const std::size_t n = std::min(period, lead + w.bit_count * symbols_per_bit);
    for (std::size_t o = 0; o < n; ++o) {
      const long long s = s0 + static_cast<long long>(o);
      const std::size_t t = o < lead ? o : lead + template_offset(w, o - lead, symbols_per_bit);
      if (s >= 0 && s < n_slots) grid.samples[static_cast<std::size_t>(s)] -= mean[t];
    }
  }
}

SymbolSequence estimate_window_bias(const SymbolGrid& grid, std::span<const GateWindow> windows,
                                    std::span<const Complex> errors, std::size_t symbols_per_bit,
                                    std::size_t margin_before, std::size_t data_begin_bit) {
  SymbolSequence bias(grid.samples.size());
  if (errors.size() != grid.active_count()) throw RxError("window bias: one error per active slot expected");

  const std::size_t period = kMaxDominantRun * symbols_per_bit;
  const auto regular = [&](std::size_t k) { return is_regular_window(windows, k); };

  SymbolSequence mean(period);
  std::vector<double> sum_sq(period);
  std::size_t count = 0;
  std::size_t cursor = 0;  // index into errors
  std::vector<std::size_t> first_error(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k) {
    first_error[k] = cursor;
    const std::size_t n = windows[k].bit_count * symbols_per_bit;
    if (cursor + n > errors.size()) throw RxError("window bias: windows exceed the error trace");
    if (regular(k)) {
      for (std::size_t o = 0; o < period; ++o) {
        mean[o] += errors[cursor + o];
        sum_sq[o] += std::norm(errors[cursor + o]);
      }
      ++count;
    }
    cursor += n;
  }
  if (count < 2) return bias;
  shrink_mean(mean, sum_sq, count);

  // error = reference - output, so the output carries -mean on top of the
  // symbol at each offset.
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    const std::size_t slot = margin_before + (w.first_bit - data_begin_bit) * symbols_per_bit;
    const std::size_t n = std::min(w.bit_count * symbols_per_bit, period);
    for (std::size_t o = 0; o < n; ++o) bias[slot + o] = -mean[template_offset(w, o, symbols_per_bit)];
  }
  return bias;
}

// ---------------------------------------------------------------------------
// Receive chain

RxResult receive(const Waveform& q_d, const RxConfig& cfg) {
  cfg.overlay.validate(cfg.timing);
  cfg.equalizer.validate();
  const double fs = cfg.timing.sample_rate();
  const auto first_sample = static_cast<std::size_t>(std::llround(cfg.channel_delay_s * fs));

  RxResult r;
  r.detected_bits = detect_bits_filtered(q_d, cfg.timing, first_sample);
  try {
    r.data_field = locate_data_field(r.detected_bits, cfg.data_field_bits);
  } catch (const std::exception& e) {
    throw RxError(std::string("receive: cannot locate data field: ") + e.what());
  }
  r.windows = track_gating(q_d, cfg.timing, r.data_field.begin, r.data_field.end, first_sample);

  const auto filter = design_bandpass(fs, cfg.bandpass);
  const Waveform filtered = bandpass(q_d, filter);

  DemodTiming demod;
  demod.delay_s = cfg.channel_delay_s;
  demod.data_begin_bit = r.data_field.begin;
  demod.data_end_bit = r.data_field.end;
  demod.margin_before = static_cast<std::size_t>(cfg.equalizer.ff_taps - 1 - cfg.equalizer.center_tap_index);
  demod.margin_after = static_cast<std::size_t>(cfg.equalizer.center_tap_index);
  r.grid = downconvert(filtered, cfg.overlay, cfg.timing, r.windows, demod, filter.group_delay);

  const std::size_t per_bit = cfg.overlay.symbols_per_bit(cfg.timing);
  std::size_t regular = 0;
  for (std::size_t k = 0; k < r.windows.size(); ++k) regular += is_regular_window(r.windows, k);
  // Below this many periods the averaged estimate is noisier than the
  // residue it would remove.
  const int passes = regular >= kMinCancelPeriods ? cfg.cancel_passes : 0;
  if (passes > 0) {
    subtract_period_template(r.grid, r.windows, per_bit, demod.margin_before, demod.data_begin_bit);
  }
  const std::size_t training_periods = std::min(gated_bit_count(r.windows), cfg.overlay.training_bits);
  const auto training = training_sequence(cfg.training_seed, training_periods * per_bit);

  EqualizerConfig eq = cfg.equalizer;
  eq.payload_modulation = cfg.overlay.modulation;
  r.output = dfe_equalize(r.grid, training, eq);

  SymbolSequence bias(r.grid.samples.size());
  for (int pass = 0; pass < passes; ++pass) {
    const auto step = estimate_window_bias(r.grid, r.windows, r.output.errors, per_bit,
                                           demod.margin_before, demod.data_begin_bit);
    for (std::size_t s = 0; s < bias.size(); ++s) bias[s] += step[s];
    r.output = dfe_equalize(r.grid, training, eq, bias);
  }
  return r;
}

void write_csv(std::ostream& os, const RxOutput& out, std::span<const Complex> reference,
               Modulation m) {
  os << "index,i,q,decision,ref_i,ref_q\n";
  const auto old_precision = os.precision(8);
  const auto& points = constellation(m);
  for (std::size_t k = 0; k < out.equalized_symbols.size(); ++k) {
    const Complex ref = k < reference.size() ? reference[k] : points[out.decisions[k]];
    os << k << ',' << out.equalized_symbols[k].real() << ',' << out.equalized_symbols[k].imag()
       << ',' << out.decisions[k] << ',' << ref.real() << ',' << ref.imag() << '\n';
  }
  os.precision(old_precision);
}

}  // namespace hscan
