#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hscan/channel.hpp"
#include "hscan/metrics.hpp"
#include "hscan/overlay.hpp"
#include "hscan/rx.hpp"
#include "hscan/waveform.hpp"

namespace hscan {

class PlanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by run_sweep() when a frame fails; the message names the channel,
/// SNR, frame index and seed.
class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepPlan {
  std::vector<ChannelSpec> channels;
  std::vector<double> snr_points_db;  // +inf means noiseless
  std::size_t frames_per_point = 20;
  std::size_t data_field_bits = 1024;
  std::uint16_t identifier = 0x123;
  OverlayConfig overlay;
  EqualizerConfig equalizer;
  BitTiming timing;
  BandpassSpec bandpass;
  int cancel_passes = 2;
  double noise_band_low_hz = 6e6;
  double noise_band_high_hz = 42e6;
  std::uint64_t base_seed = 1;
  std::vector<std::size_t> rate_lengths;  // data-field sizes for the rate table

  void validate() const;
};

/// JSON plan. Missing keys keep their defaults; SNR points may be the
/// string "inf".
SweepPlan parse_plan(std::string_view json_text);
SweepPlan load_plan(const std::filesystem::path& path);

/// Canonical JSON of every field (sorted keys), the input to the digest.
std::string canonical_json(const SweepPlan& plan);

/// 64-bit FNV-1a of canonical_json(), as 16 hex digits.
std::string config_digest(const SweepPlan& plan);

/// splitmix64 folded over (base_seed, channel, snr, frame).
std::uint64_t frame_seed(std::uint64_t base_seed, std::size_t channel_index,
                         std::size_t snr_index, std::size_t frame_index);

/// Independent streams for the payload, the training sequence and the
/// noise, all derived from one frame seed.
struct FrameSeeds {
  std::uint64_t payload;
  std::uint64_t training;
  std::uint64_t noise;
};
FrameSeeds split_seed(std::uint64_t seed);

struct FrameOutcome {
  double output_snr_db = 0.0;
  ErrorRates errors;
  std::uint64_t seed = 0;
  double overlay_power_ref = 0.0;
  RxOutput rx;                      // filled when keep_symbols is set
  SymbolSequence payload_reference;  // transmitted payload symbols
};

/// One end-to-end frame: all-dominant data field, random payload, channel,
/// AWGN at `input_snr_db` relative to the received overlay power, receiver.
FrameOutcome simulate_frame(const SweepPlan& plan, const ChannelSpec& channel,
                            double input_snr_db, std::uint64_t seed, bool keep_symbols = false);

struct SweepOptions {
  unsigned threads = 0;                       // 0 = hardware concurrency
  std::optional<std::vector<std::size_t>> channel_indices;  // subset of plan.channels
  std::optional<std::vector<std::size_t>> snr_indices;
  /// Called once per finished frame (from worker threads, serialized).
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// One SweepResult per selected (channel, snr), in plan order.
std::vector<SweepResult> run_sweep(const SweepPlan& plan, const SweepOptions& options = {});

struct RateRow {
  std::size_t data_field_bits = 0;
  double ratio = 0.0;
  double net_rate_bps = 0.0;
};
std::vector<RateRow> rate_table(const SweepPlan& plan);

/// fig8.csv: channel,input_snr_db,mean_output_snr_db,ber
void write_fig8_csv(std::ostream& os, const std::vector<SweepResult>& results,
                    const std::string& digest);
/// fig9.csv: L,ratio,net_rate_bps
void write_fig9_csv(std::ostream& os, const std::vector<RateRow>& rows, const std::string& digest);
/// Full per-point records (write_sweep_header column order).
void write_results_csv(std::ostream& os, const std::vector<SweepResult>& results,
                       const std::string& digest);

}  // namespace hscan
