#include "hscan/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

namespace hscan {

namespace {

constexpr double kPi = std::numbers::pi;

// Binary-reflected Gray sequence for one axis / ring position.
constexpr unsigned gray(unsigned i) { return i ^ (i >> 1); }

std::vector<Complex> make_square_qam(unsigned bits_per_axis) {
  const unsigned levels = 1u << bits_per_axis;
  const unsigned points = levels * levels;
  // Average energy of the odd-integer grid {+-1, +-3, ...}^2.
  const double norm = std::sqrt(2.0 * (static_cast<double>(points) - 1.0) / 3.0);
  std::vector<double> axis(levels);
  for (unsigned pos = 0; pos < levels; ++pos) {
    axis[gray(pos)] = (2.0 * pos - (levels - 1.0)) / norm;
  }
  std::vector<Complex> out(points);
  for (unsigned label = 0; label < points; ++label) {
    const unsigned i_bits = label >> bits_per_axis;
    const unsigned q_bits = label & (levels - 1);
    out[label] = {axis[i_bits], axis[q_bits]};
  }
  return out;
}

std::vector<Complex> make_psk8() {
  std::vector<Complex> out(8);
  for (unsigned pos = 0; pos < 8; ++pos) {
    out[gray(pos)] = std::polar(1.0, kPi / 8.0 + pos * kPi / 4.0);
  }
  return out;
}

std::vector<Complex> make_qpsk() {
  const double a = 1.0 / std::sqrt(2.0);
  // 00 -> (+1+j), 01 -> (-1+j), 10 -> (+1-j), 11 -> (-1-j), all / sqrt(2)
  return {{a, a}, {-a, a}, {a, -a}, {-a, -a}};
}

double rrc_value(double t, double rolloff) {
  const double a = rolloff;
  if (std::abs(t) < 1e-12) return 1.0 - a + 4.0 * a / kPi;
  if (a > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * a)) < 1e-9) {
    return a / std::sqrt(2.0) *
           ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * a)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * a)));
  }
  const double num = std::sin(kPi * t * (1.0 - a)) + 4.0 * a * t * std::cos(kPi * t * (1.0 + a));
  const double den = kPi * t * (1.0 - (4.0 * a * t) * (4.0 * a * t));
  return num / den;
}

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace

std::size_t bits_per_symbol(Modulation m) noexcept {
  switch (m) {
    case Modulation::Qpsk: return 2;
    case Modulation::Psk8: return 3;
    case Modulation::Qam16: return 4;
    case Modulation::Qam64: return 6;
  }
  return 0;
}

std::string_view to_string(Modulation m) noexcept {
  switch (m) {
    case Modulation::Qpsk: return "QPSK";
    case Modulation::Psk8: return "8PSK";
    case Modulation::Qam16: return "16QAM";
    case Modulation::Qam64: return "64QAM";
  }
  return "?";
}

Modulation parse_modulation(std::string_view name) {
  for (auto m : {Modulation::Qpsk, Modulation::Psk8, Modulation::Qam16, Modulation::Qam64}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown modulation: " + std::string(name));
}

const std::vector<Complex>& constellation(Modulation m) {
  static const std::vector<Complex> qpsk = make_qpsk();
  static const std::vector<Complex> psk8 = make_psk8();
  static const std::vector<Complex> qam16 = make_square_qam(2);
  static const std::vector<Complex> qam64 = make_square_qam(3);
  switch (m) {
    case Modulation::Qpsk: return qpsk;
    case Modulation::Psk8: return psk8;
    case Modulation::Qam16: return qam16;
    case Modulation::Qam64: return qam64;
  }
  return qpsk;
}

void OverlayConfig::validate(const BitTiming& timing) const {
  const double fs = timing.sample_rate();
  if (!(carrier_freq > 0.0) || !(symbol_rate > 0.0)) {
    throw OverlayError("carrier_freq and symbol_rate must be positive");
  }
  if (rrc_rolloff < 0.0 || rrc_rolloff > 1.0 || rrc_span <= 0 || rrc_span % 2 != 0) {
    throw OverlayError("rrc_rolloff must be in [0,1] and rrc_span a positive even count");
  }
  if (carrier_freq + symbol_rate * (1.0 + rrc_rolloff) / 2.0 >= fs / 2.0) {
    throw OverlayError("overlay band exceeds Nyquist at " + std::to_string(fs) + " Hz");
  }
  if (carrier_freq - symbol_rate * (1.0 + rrc_rolloff) / 2.0 <= 0.0) {
    throw OverlayError("overlay band folds through DC");
  }
  samples_per_symbol(fs);
  symbols_per_bit(timing);
  if (!(v_offset > v_threshold)) throw OverlayError("v_offset must exceed v_threshold");
}

int OverlayConfig::samples_per_symbol(double sample_rate) const {
  const double ratio = sample_rate / symbol_rate;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw OverlayError("sample_rate / symbol_rate must be a positive integer");
  }
  return static_cast<int>(rounded);
}

std::size_t OverlayConfig::symbols_per_bit(const BitTiming& timing) const {
  const double ratio = symbol_rate / timing.bit_rate;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw OverlayError("symbol_rate / bit_rate must be a positive integer");
  }
  return static_cast<std::size_t>(rounded);
}

SymbolSequence map_symbols(std::span<const Bit> bits, Modulation m) {
  const std::size_t n = bits_per_symbol(m);
  if (bits.size() % n != 0) {
    throw OverlayError("bit count " + std::to_string(bits.size()) + " not divisible by " +
                       std::to_string(n));
  }
  const auto& points = constellation(m);
  SymbolSequence out;
  out.reserve(bits.size() / n);
  for (std::size_t k = 0; k < bits.size(); k += n) {
    unsigned label = 0;
    for (std::size_t j = 0; j < n; ++j) label = (label << 1) | (bits[k + j] & 1u);
    out.push_back(points[label]);
  }
  return out;
}

std::vector<double> rrc_taps(double rolloff, int span, int samples_per_symbol) {
  const int len = span * samples_per_symbol + 1;
  const int center = len / 2;
  std::vector<double> taps(len);
  double sum = 0.0;
  for (int n = 0; n < len; ++n) {
    taps[n] = rrc_value(static_cast<double>(n - center) / samples_per_symbol, rolloff);
    sum += taps[n];
  }
  for (double& t : taps) t *= samples_per_symbol / sum;
  return taps;
}

ComplexBaseband pulse_shape(std::span<const Complex> symbols, const OverlayConfig& cfg,
                            double sample_rate) {
  const int sps = cfg.samples_per_symbol(sample_rate);
  const auto taps = rrc_taps(cfg.rrc_rolloff, cfg.rrc_span, sps);
  const std::size_t len = symbols.size() * sps + static_cast<std::size_t>(cfg.rrc_span) * sps;
  ComplexBaseband out{{std::vector<double>(len), sample_rate, 0.0},
                      {std::vector<double>(len), sample_rate, 0.0}};
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const std::size_t base = k * sps;
    for (std::size_t j = 0; j < taps.size() && base + j < len; ++j) {
      out.i.samples[base + j] += symbols[k].real() * taps[j];
      out.q.samples[base + j] += symbols[k].imag() * taps[j];
    }
  }
  return out;
}

Waveform upconvert(const Waveform& i, const Waveform& q, double carrier_freq) {
  if (i.size() != q.size()) throw OverlayError("upconvert: I/Q length mismatch");
  if (i.sample_rate != q.sample_rate) throw OverlayError("upconvert: I/Q sample rate mismatch");
  Waveform out{std::vector<double>(i.size()), i.sample_rate, i.t0};
  const double cycles_per_sample = carrier_freq / i.sample_rate;
  const double start_cycles = std::fmod(carrier_freq * i.t0, 1.0);
  for (std::size_t n = 0; n < i.size(); ++n) {
    const double phase =
        2.0 * kPi * std::fmod(start_cycles + cycles_per_sample * static_cast<double>(n), 1.0);
    out.samples[n] = i.samples[n] * std::cos(phase) - q.samples[n] * std::sin(phase);
  }
  return out;
}

double compute_ap(const Waveform& s_p, std::span<const SampleRange> windows, double v_offset,
                  double v_threshold) {
  double peak = 0.0;
  for (const auto& w : windows) {
    for (std::size_t n = w.begin; n < w.end && n < s_p.size(); ++n) {
      peak = std::max(peak, std::abs(s_p.samples[n]));
    }
  }
  if (!(peak > 0.0)) throw OverlayError("compute_ap: overlay is zero inside every window");
  return (v_offset - v_threshold) / peak;
}

BitStream random_bits(std::uint64_t seed, std::size_t count) {
  auto rng = make_rng(seed);
  BitStream bits(count);
  std::uint64_t word = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (k % 64 == 0) word = rng();
    bits[k] = static_cast<Bit>((word >> (k % 64)) & 1u);
  }
  return bits;
}

SymbolSequence training_sequence(std::uint64_t seed, std::size_t count) {
  return map_symbols(random_bits(seed, 2 * count), Modulation::Qpsk);
}

std::size_t payload_capacity_bits(const CanFrame& frame, const OverlayConfig& cfg,
                                  const BitTiming& timing) {
  const auto schedule = dominant_schedule(stuff_frame(frame));
  const std::size_t dominant = count_dominant(schedule);
  const std::size_t payload_bits_periods =
      dominant > cfg.training_bits ? dominant - cfg.training_bits : 0;
  return payload_bits_periods * cfg.symbols_per_bit(timing) * bits_per_symbol(cfg.modulation);
}

TxResult build_tx(const CanFrame& frame, std::span<const Bit> payload_bits,
                  const OverlayConfig& cfg, const BitTiming& timing,
                  std::uint64_t training_seed) {
  cfg.validate(timing);
  if (!std::all_of(frame.data.begin(), frame.data.end(), [](Bit b) { return b == kDominant; })) {
    throw OverlayError("build_tx: overlay frames need an all-dominant data field");
  }
  const double fs = timing.sample_rate();
  const auto spb = static_cast<std::size_t>(timing.samples_per_bit);
  const int sps = cfg.samples_per_symbol(fs);
  const std::size_t symbols_per_bit = cfg.symbols_per_bit(timing);

  TxResult tx;
  tx.stuffed = stuff_frame(frame);
  tx.schedule = dominant_schedule(tx.stuffed);
  const std::size_t dominant = count_dominant(tx.schedule);
  const std::size_t training_periods = std::min(dominant, cfg.training_bits);
  const std::size_t payload_periods = dominant - training_periods;
  const std::size_t expected_bits = payload_periods * symbols_per_bit * bits_per_symbol(cfg.modulation);
  if (payload_bits.size() != expected_bits) {
    throw OverlayError("build_tx: payload has " + std::to_string(payload_bits.size()) +
                       " bits, frame carries " + std::to_string(expected_bits));
  }

  tx.log.symbols_per_bit = symbols_per_bit;
  tx.log.training_symbols = training_sequence(training_seed, training_periods * symbols_per_bit);
  tx.log.payload_symbols = map_symbols(payload_bits, cfg.modulation);

  tx.baseline = synthesize_single_ended(tx.stuffed.bits, timing);
  const std::size_t total = tx.baseline.size();

  // Each window is shaped on its own: filter state starts empty at the
  // window edge and the pulse tails beyond the window are gated off.
  Waveform bb_i{std::vector<double>(total), fs, 0.0};
  Waveform bb_q{std::vector<double>(total), fs, 0.0};
  const std::size_t lead = static_cast<std::size_t>(cfg.rrc_span) * sps / 2 - sps / 2;
  std::size_t next_symbol = 0;
  const auto symbol_at = [&](std::size_t k) {
    return k < tx.log.training_symbols.size()
               ? tx.log.training_symbols[k]
               : tx.log.payload_symbols[k - tx.log.training_symbols.size()];
  };
  for (const auto& w : tx.schedule) {
    const std::size_t count = w.bit_count * symbols_per_bit;
    SymbolSequence window_symbols(count);
    for (std::size_t k = 0; k < count; ++k) window_symbols[k] = symbol_at(next_symbol + k);
    next_symbol += count;

    const auto shaped = pulse_shape(window_symbols, cfg, fs);
    const SampleRange range{w.first_bit * spb, (w.first_bit + w.bit_count) * spb};
    for (std::size_t n = 0; n < range.size(); ++n) {
      bb_i.samples[range.begin + n] = shaped.i.samples[lead + n];
      bb_q.samples[range.begin + n] = shaped.q.samples[lead + n];
    }
    tx.windows.push_back(range);
  }

  const Waveform s_p = upconvert(bb_i, bb_q, cfg.carrier_freq);
  tx.a_p = cfg.a_p > 0.0 ? cfg.a_p
           : tx.windows.empty()
               ? 0.0
               : compute_ap(s_p, tx.windows, cfg.v_offset, cfg.v_threshold);

  tx.overlay = Waveform{std::vector<double>(total), fs, 0.0};
  for (const auto& r : tx.windows) {
    for (std::size_t n = r.begin; n < r.end; ++n) tx.overlay.samples[n] = tx.a_p * s_p.samples[n];
  }
  tx.composite = tx.baseline;
  for (std::size_t n = 0; n < total; ++n) tx.composite.samples[n] += tx.overlay.samples[n];

  // Amplitude constraint on the settled dominant level; the leading edge
  // ramp sits below v_offset by construction and is excluded.
  for (const auto& r : tx.windows) {
    for (std::size_t n = r.begin; n < r.end; ++n) {
      if (tx.baseline.samples[n] < cfg.v_offset) continue;
      if (tx.composite.samples[n] < cfg.v_threshold - 1e-9) {
        throw OverlayError("build_tx: a_p = " + std::to_string(tx.a_p) +
                           " drives the dominant level below " + std::to_string(cfg.v_threshold) +
                           " V at sample " + std::to_string(n));
      }
    }
  }

  tx.q_d = tx.composite;
  for (double& v : tx.q_d.samples) v *= 2.0;
  return tx;
}

void write_csv(std::ostream& os, const SymbolLog& log) {
  os << "index,segment,i,q\n";
  const auto old_precision = os.precision(10);
  std::size_t index = 0;
  for (const auto& s : log.training_symbols) {
    os << index++ << ",training," << s.real() << ',' << s.imag() << '\n';
  }
  for (const auto& s : log.payload_symbols) {
    os << index++ << ",payload," << s.real() << ',' << s.imag() << '\n';
  }
  os.precision(old_precision);
}

}  // namespace hscan
