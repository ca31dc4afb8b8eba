#include "hscan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hscan {

double output_snr_db(std::span<const Complex> equalized, std::span<const Complex> truth) {
  if (equalized.empty()) throw std::invalid_argument("output_snr_db: empty input");
  if (equalized.size() != truth.size()) throw std::invalid_argument("output_snr_db: length mismatch");
  double signal = 0.0;
  double error = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    signal += std::norm(truth[k]);
    error += std::norm(equalized[k] - truth[k]);
  }
  if (error <= 0.0) return kOutputSnrCapDb;
  return std::min(kOutputSnrCapDb, 10.0 * std::log10(signal / error));
}

ErrorRates error_rates(std::span<const Bit> decisions, std::span<const Bit> truth,
                       std::size_t bits_per_symbol) {
  if (decisions.size() != truth.size()) throw std::invalid_argument("error_rates: length mismatch");
  if (bits_per_symbol == 0) throw std::invalid_argument("error_rates: bits_per_symbol must be >= 1");
  ErrorRates r;
  r.bits = truth.size();
  r.symbols = truth.size() / bits_per_symbol;
  for (std::size_t s = 0; s * bits_per_symbol < truth.size(); ++s) {
    bool symbol_wrong = false;
    for (std::size_t j = 0; j < bits_per_symbol && s * bits_per_symbol + j < truth.size(); ++j) {
      const std::size_t k = s * bits_per_symbol + j;
      if (decisions[k] != truth[k]) {
        ++r.bit_errors;
        symbol_wrong = true;
      }
    }
    if (symbol_wrong && s < r.symbols) ++r.symbol_errors;
  }
  r.ber = r.bits ? static_cast<double>(r.bit_errors) / static_cast<double>(r.bits) : 0.0;
  r.ser = r.symbols ? static_cast<double>(r.symbol_errors) / static_cast<double>(r.symbols) : 0.0;
  return r;
}

double net_rate_ratio(std::size_t data_field_bits, std::size_t training_bits,
                      std::size_t overhead_bits) {
  const std::size_t payload = data_field_bits > training_bits ? data_field_bits - training_bits : 0;
  const std::size_t on_bus = overhead_bits + data_field_bits + data_field_bits / 5;
  if (on_bus == 0) return 0.0;
  return static_cast<double>(payload) / static_cast<double>(on_bus);
}

double net_rate_bps(double ratio, const OverlayConfig& cfg) {
  return ratio * cfg.symbol_rate * static_cast<double>(bits_per_symbol(cfg.modulation));
}

CompatibilityReport compatibility_check(const Waveform& tx_composite, const Waveform& tx_baseline,
                                        const BitTiming& timing) {
  const auto a = threshold_detect(tx_composite, timing);
  const auto b = threshold_detect(tx_baseline, timing);
  CompatibilityReport r;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (a[k] != b[k]) {
      r.pass = false;
      r.first_mismatch = k;
      return r;
    }
  }
  if (a.size() != b.size()) {
    r.pass = false;
    r.first_mismatch = n;
  }
  return r;
}

void write_sweep_header(std::ostream& os) {
  os << "channel,input_snr_db,output_snr_db,symbol_errors,bit_errors,symbols_total,bits_total,"
        "frames,seed,config_digest\n";
}

void write_sweep_row(std::ostream& os, const SweepResult& r) {
  const auto old_precision = os.precision(6);
  const auto old_flags = os.flags();
  os << to_string(r.channel_kind) << ',' << r.input_snr_db << ',' << std::fixed << r.output_snr_db;
  os.flags(old_flags);
  os << ',' << r.symbol_errors << ',' << r.bit_errors << ',' << r.symbols_total << ','
     << r.bits_total << ',' << r.frames << ',' << r.seed << ',' << r.config_digest << '\n';
  os.precision(old_precision);
}

}  // namespace hscan
