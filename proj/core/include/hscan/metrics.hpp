#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "hscan/channel.hpp"
#include "hscan/frame.hpp"
#include "hscan/overlay.hpp"
#include "hscan/waveform.hpp"

namespace hscan {

inline constexpr double kOutputSnrCapDb = 60.0;
inline constexpr std::size_t kDefaultTrainingBits = 15;

/// 10 log10(mean|truth|^2 / mean|equalized - truth|^2), capped at 60 dB.
double output_snr_db(std::span<const Complex> equalized, std::span<const Complex> truth);

struct ErrorRates {
  double ber = 0.0;
  double ser = 0.0;
  std::size_t bit_errors = 0;
  std::size_t symbol_errors = 0;
  std::size_t bits = 0;
  std::size_t symbols = 0;
};

/// Bit and symbol error rates; symbols are consecutive groups of
/// `bits_per_symbol` bits.
ErrorRates error_rates(std::span<const Bit> decisions, std::span<const Bit> truth,
                       std::size_t bits_per_symbol = 1);

/// Payload-bearing dominant bit periods over total bus bit periods for an
/// all-dominant data field of `data_field_bits`:
///   max(0, L - training) / (overhead + L + floor(L/5)).
double net_rate_ratio(std::size_t data_field_bits, std::size_t training_bits = kDefaultTrainingBits,
                      std::size_t overhead_bits = field::kOverhead);

/// ratio * symbol_rate * bits_per_symbol.
double net_rate_bps(double ratio, const OverlayConfig& cfg);

struct CompatibilityReport {
  bool pass = true;
  std::optional<std::size_t> first_mismatch;  // bit index
};

/// Runs the standard detector on both differential waveforms and compares
/// the decisions bit for bit.
CompatibilityReport compatibility_check(const Waveform& tx_composite, const Waveform& tx_baseline,
                                        const BitTiming& timing);

struct SweepResult {
  ChannelKind channel_kind = ChannelKind::Flat;
  double input_snr_db = 0.0;
  double output_snr_db = 0.0;
  std::size_t symbol_errors = 0;
  std::size_t bit_errors = 0;
  std::size_t symbols_total = 0;
  std::size_t bits_total = 0;
  std::size_t frames = 0;
  std::uint64_t seed = 0;
  std::string config_digest;

  double ber() const noexcept {
    return bits_total ? static_cast<double>(bit_errors) / static_cast<double>(bits_total) : 0.0;
  }
};

/// Column order: channel,input_snr_db,output_snr_db,symbol_errors,
/// bit_errors,symbols_total,bits_total,frames,seed,config_digest
void write_sweep_header(std::ostream& os);
void write_sweep_row(std::ostream& os, const SweepResult& r);

}  // namespace hscan
