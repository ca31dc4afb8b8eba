#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "hscan/frame.hpp"
#include "hscan/overlay.hpp"
#include "hscan/waveform.hpp"

namespace hscan {

class RxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Bandpass front end

struct BandpassSpec {
  double pass_low_hz = 2e6;
  double pass_high_hz = 47e6;
  double cutoff_low_hz = 1.5e6;   // -6 dB edges of the windowed-sinc design
  double cutoff_high_hz = 53e6;
  int num_taps = 257;
  double stopband_db = 60.0;
};

struct BandpassFilter {
  std::vector<double> taps;
  std::size_t group_delay = 0;  // samples
  double sample_rate = 0.0;
};

/// Kaiser-windowed linear-phase bandpass built as the difference of two
/// unit-DC-gain lowpasses, which puts an exact null at DC.
BandpassFilter design_bandpass(double sample_rate, const BandpassSpec& spec = {});

/// Causal FIR filtering; output has the input's length and lags it by
/// filter.group_delay samples.
Waveform bandpass(const Waveform& x, const BandpassFilter& filter);

/// Convenience overload with the default design at x.sample_rate.
Waveform bandpass(const Waveform& x);

// ---------------------------------------------------------------------------
// Gating

/// An interval of dominant data-field bits during which the demodulator runs.
struct GateWindow {
  std::size_t first_bit = 0;  // bus bit index, transmitter time base
  std::size_t bit_count = 0;
  SampleRange samples;        // in the received waveform's sample grid
  bool recessive_after = true;  // the window closes on a falling edge
};

/// Receiver-side CAN bit detector: averages the differential level over
/// `average_samples` ending at the 75% sample point before thresholding, so
/// the zero-mean overlay and noise do not flip decisions.
BitStream detect_bits_filtered(const Waveform& q_d, const BitTiming& timing,
                               std::size_t first_sample, std::size_t average_samples = 72);

/// Runs the demodulator for up to five dominant bit periods from every
/// recessive-to-dominant transition inside [data_begin, data_end), holding
/// across the recessive stuff bit. Throws RxError if a window does not
/// start where the DDDDDR pattern requires one.
std::vector<GateWindow> track_gating(const Waveform& q_d, const BitTiming& timing,
                                     std::size_t data_begin, std::size_t data_end,
                                     std::size_t first_sample = 0);

std::size_t gated_bit_count(std::span<const GateWindow> windows) noexcept;

// ---------------------------------------------------------------------------
// Demodulation

/// Symbol-spaced samples over the data field on a continuous grid, with the
/// grid positions that carried a transmitted symbol flagged active. Leading
/// and trailing margin slots (inactive) feed the equalizer delay line.
struct SymbolGrid {
  SymbolSequence samples;
  std::vector<std::uint8_t> active;

  std::size_t active_count() const noexcept;
  SymbolSequence active_symbols() const;
};

struct DemodTiming {
  double delay_s = 0.0;           // channel bulk delay (perfect sync)
  std::size_t data_begin_bit = 0;
  std::size_t data_end_bit = 0;
  std::size_t margin_before = 0;  // grid slots ahead of the data field
  std::size_t margin_after = 0;
  bool normalize = true;          // scale to unit mean power over active slots
};

/// Mixes the bandpassed signal to baseband with the transmitter's carrier
/// phase, applies the RRC matched filter and samples at symbol instants.
/// Delays of the bandpass filter, the matched filter and the channel are
/// compensated.
SymbolGrid downconvert(const Waveform& x, const OverlayConfig& cfg, const BitTiming& timing,
                       std::span<const GateWindow> windows, const DemodTiming& demod,
                       std::size_t bandpass_delay);

// ---------------------------------------------------------------------------
// Equalization

struct EqualizerConfig {
  int ff_taps = 24;
  int fb_taps = 8;
  double mu_train = 2e-2;
  double mu_dd = 2e-3;
  int center_tap_index = 12;
  Modulation payload_modulation = Modulation::Qam16;

  void validate() const;
};

struct EqualizerState {
  SymbolSequence ff_weights;
  SymbolSequence fb_weights;
  SymbolSequence decision_history;  // most recent first
};

struct RxOutput {
  std::vector<double> training_mse;  // |e|^2 per training symbol
  SymbolSequence equalized_symbols;  // decision-directed segment
  std::vector<std::size_t> decisions;
  BitStream payload_bits;
  SymbolSequence errors;  // reference - output, every active symbol
  EqualizerState state;
};

EqualizerState initial_state(const EqualizerConfig& cfg);

/// Decision-feedback equalizer with LMS adaptation: data-aided on the
/// training symbols, decision-directed afterwards. Inactive grid slots keep
/// the delay line running but produce no output and no weight update.
/// `bias`, if given, holds one value per grid slot that is subtracted from
/// the equalizer output before the decision.
RxOutput dfe_equalize(const SymbolGrid& grid, std::span<const Complex> training,
                      const EqualizerConfig& cfg, std::span<const Complex> bias = {});

/// Every sample is an active symbol.
RxOutput dfe_equalize(std::span<const Complex> symbols, std::span<const Complex> training,
                      const EqualizerConfig& cfg);

/// Index of the nearest constellation point.
std::size_t slice(Complex z, Modulation m);

/// Minimum-distance decision followed by inverse Gray mapping.
BitStream demap(std::span<const Complex> symbols, Modulation m);

// ---------------------------------------------------------------------------
// CAN interference cancellation

// The stuffed all-dominant field repeats DDDDDR, and a bit period holds a
// whole number of carrier cycles and symbols, so the residue of the CAN
// edges after the bandpass is the same at a given offset into every window.

/// Decision-free first step: averages the demodulated grid over regular
/// periods (the stuff bit before a window plus the window) and subtracts
/// that template from every period. The overlay averages towards zero, so
/// what is removed is mostly the CAN residue.
void subtract_period_template(SymbolGrid& grid, std::span<const GateWindow> windows,
                              std::size_t symbols_per_bit, std::size_t margin_before,
                              std::size_t data_begin_bit);

/// Averages the equalizer error at each offset over the windows that sit in
/// the regular pattern and returns the per-slot output bias it implies
/// (zero on inactive slots).
SymbolSequence estimate_window_bias(const SymbolGrid& grid, std::span<const GateWindow> windows,
                                    std::span<const Complex> errors, std::size_t symbols_per_bit,
                                    std::size_t margin_before, std::size_t data_begin_bit);

// ---------------------------------------------------------------------------
// Full receive chain

struct RxConfig {
  OverlayConfig overlay;
  EqualizerConfig equalizer;
  BitTiming timing;
  BandpassSpec bandpass;
  double channel_delay_s = 0.0;
  std::size_t data_field_bits = 0;
  std::uint64_t training_seed = 0;
  // Extra equalizer passes with the window bias removed. Frames with fewer
  // than 16 regular DDDDDR periods are not cancelled.
  int cancel_passes = 2;
};

struct RxResult {
  BitStream detected_bits;  // standard CAN detector output
  DataFieldSpan data_field;
  std::vector<GateWindow> windows;
  SymbolGrid grid;
  RxOutput output;
};

RxResult receive(const Waveform& q_d, const RxConfig& cfg);

/// CSV: index,i,q,decision,ref_i,ref_q for constellation plots.
void write_csv(std::ostream& os, const RxOutput& out, std::span<const Complex> reference,
               Modulation m);

}  // namespace hscan
