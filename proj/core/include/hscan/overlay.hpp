#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "hscan/frame.hpp"
#include "hscan/waveform.hpp"

namespace hscan {

using Complex = std::complex<double>;
using SymbolSequence = std::vector<Complex>;

enum class Modulation { Qpsk, Psk8, Qam16, Qam64 };

std::size_t bits_per_symbol(Modulation m) noexcept;
std::string_view to_string(Modulation m) noexcept;
Modulation parse_modulation(std::string_view name);

/// Unit-average-energy constellation indexed by the symbol's bit label,
/// first bit most significant.
const std::vector<Complex>& constellation(Modulation m);

class OverlayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OverlayConfig {
  Modulation modulation = Modulation::Qam16;
  double carrier_freq = 24e6;
  double symbol_rate = 36e6;
  double rrc_rolloff = 0.25;
  int rrc_span = 8;            // symbols
  std::size_t training_bits = 15;
  double v_offset = 1.0;
  double v_threshold = 0.5;
  double a_p = 0.0;  // 0 selects compute_ap()

  /// Throws OverlayError if the band does not fit below Nyquist or the
  /// symbol clock is not commensurate with the bit timing.
  void validate(const BitTiming& timing) const;
  int samples_per_symbol(double sample_rate) const;
  std::size_t symbols_per_bit(const BitTiming& timing) const;
};

struct SymbolLog {
  SymbolSequence training_symbols;
  SymbolSequence payload_symbols;
  std::size_t symbols_per_bit = 0;
};

/// Half-open sample interval [begin, end).
struct SampleRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

struct ComplexBaseband {
  Waveform i;
  Waveform q;
};

SymbolSequence map_symbols(std::span<const Bit> bits, Modulation m);

/// Root-raised-cosine taps, span*sps+1 long, scaled so the taps sum to sps
/// (a zero-stuffed constant symbol stream settles to the symbol value).
std::vector<double> rrc_taps(double rolloff, int span, int samples_per_symbol);

/// Zero-stuffs the symbols to the sample rate and filters them with the RRC.
/// Output length is n*sps + span*sps; symbol k peaks at k*sps + span*sps/2.
ComplexBaseband pulse_shape(std::span<const Complex> symbols, const OverlayConfig& cfg,
                            double sample_rate);

/// s_p(t) = i(t) cos(2 pi fc t) - q(t) sin(2 pi fc t), t = t0 + n/fs.
Waveform upconvert(const Waveform& i, const Waveform& q, double carrier_freq);

/// Largest scale that keeps v_offset + a_p * s_p >= v_threshold inside the
/// windows.
double compute_ap(const Waveform& s_p, std::span<const SampleRange> windows, double v_offset,
                  double v_threshold);

/// Seeded QPSK training sequence; receiver and transmitter derive the same one.
SymbolSequence training_sequence(std::uint64_t seed, std::size_t count);

/// Seeded uniform random bits.
BitStream random_bits(std::uint64_t seed, std::size_t count);

struct TxResult {
  StuffedFrame stuffed;
  std::vector<DominantWindow> schedule;
  std::vector<SampleRange> windows;  // sample ranges of `schedule`
  Waveform baseline;                 // single-ended CAN drive, no overlay
  Waveform overlay;                  // gated a_p * s_p, single-ended
  Waveform composite;                // baseline + overlay
  Waveform q_d;                      // differential bus signal, 2 * composite
  SymbolLog log;
  double a_p = 0.0;
};

/// Number of payload bits build_tx() expects for a frame.
std::size_t payload_capacity_bits(const CanFrame& frame, const OverlayConfig& cfg,
                                  const BitTiming& timing);

/// Assembles the composite transmit waveform: CAN baseline plus the carrier
/// overlay gated onto the dominant data-field bits. The first
/// cfg.training_bits dominant bits carry QPSK training derived from
/// `training_seed`; the rest carry `payload_bits` at cfg.modulation.
TxResult build_tx(const CanFrame& frame, std::span<const Bit> payload_bits,
                  const OverlayConfig& cfg, const BitTiming& timing,
                  std::uint64_t training_seed);

/// CSV: index,segment,i,q where segment is "training" or "payload".
void write_csv(std::ostream& os, const SymbolLog& log);

}  // namespace hscan
