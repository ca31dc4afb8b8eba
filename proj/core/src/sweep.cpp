#include "hscan/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "hscan/frame.hpp"
#include "json.hpp"

namespace hscan {

namespace {

using nlohmann::json;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string snr_text(double db) {
  if (std::isinf(db)) return db > 0 ? "inf" : "-inf";
  return fmt("%.3f", db);
}

double snr_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    throw PlanError("snr point must be a number or \"inf\", got \"" + s + "\"");
  }
  return j.get<double>();
}

json snr_to_json(double db) {
  if (std::isinf(db)) return db > 0 ? json("inf") : json("-inf");
  return db;
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

ChannelSpec channel_from_json(const json& j) {
  ChannelSpec c;
  if (j.is_string()) {
    c.kind = parse_channel_kind(j.get<std::string>());
    return c;
  }
  if (auto it = j.find("kind"); it != j.end()) c.kind = parse_channel_kind(it->get<std::string>());
  read(j, "length_m", c.length_m);
  read(j, "tap_count", c.tap_count);
  read(j, "tap_spacing_m", c.tap_spacing_m);
  read(j, "stub_len_m", c.stub_len_m);
  read(j, "tap_load_ohm", c.tap_load_ohm);
  read(j, "k1", c.k1);
  read(j, "k2", c.k2);
  read(j, "z0_ohm", c.z0_ohm);
  read(j, "velocity_factor", c.velocity_factor);
  return c;
}

json channel_to_json(const ChannelSpec& c) {
  return {{"kind", std::string(to_string(c.kind))},
          {"length_m", c.length_m},
          {"tap_count", c.tap_count},
          {"tap_spacing_m", c.tap_spacing_m},
          {"stub_len_m", c.stub_len_m},
          {"tap_load_ohm", c.tap_load_ohm},
          {"k1", c.k1},
          {"k2", c.k2},
          {"z0_ohm", c.z0_ohm},
          {"velocity_factor", c.velocity_factor}};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

void SweepPlan::validate() const {
  if (channels.empty()) throw PlanError("plan has no channels");
  if (snr_points_db.empty()) throw PlanError("plan has no snr points");
  if (frames_per_point == 0) throw PlanError("frames_per_point must be positive");
  if (data_field_bits == 0 || data_field_bits % 8 != 0) {
    throw PlanError("data_field_bits must be a positive multiple of 8");
  }
  if (identifier > kMaxIdentifier) throw PlanError("identifier out of range");
  if (cancel_passes < 0) throw PlanError("cancel_passes must be >= 0");
  if (!(noise_band_high_hz > noise_band_low_hz) || noise_band_low_hz < 0.0) {
    throw PlanError("noise band must satisfy 0 <= low < high");
  }
  for (const auto& c : channels) c.validate();
  for (double s : snr_points_db) {
    if (std::isnan(s) || (std::isinf(s) && s < 0)) throw PlanError("snr points must be finite or +inf");
  }
  overlay.validate(timing);
  equalizer.validate();
}

SweepPlan parse_plan(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw PlanError(std::string("plan is not valid JSON: ") + e.what());
  }
  SweepPlan p;
  try {
    if (auto it = j.find("channels"); it != j.end()) {
      for (const auto& c : *it) p.channels.push_back(channel_from_json(c));
    }
    if (auto it = j.find("snr_points_db"); it != j.end()) {
      for (const auto& s : *it) p.snr_points_db.push_back(snr_from_json(s));
    }
    read(j, "frames_per_point", p.frames_per_point);
    read(j, "data_field_bits", p.data_field_bits);
    read(j, "identifier", p.identifier);
    read(j, "base_seed", p.base_seed);
    read(j, "rate_lengths", p.rate_lengths);
    if (auto it = j.find("noise_band_hz"); it != j.end()) {
      const auto band = it->get<std::vector<double>>();
      if (band.size() != 2) throw PlanError("noise_band_hz needs two entries");
      p.noise_band_low_hz = band[0];
      p.noise_band_high_hz = band[1];
    }
    if (auto it = j.find("timing"); it != j.end()) {
      read(*it, "bit_rate", p.timing.bit_rate);
      read(*it, "samples_per_bit", p.timing.samples_per_bit);
      read(*it, "rise_fall_time", p.timing.rise_fall_time);
    }
    if (auto it = j.find("overlay"); it != j.end()) {
      const auto& o = *it;
      if (auto m = o.find("modulation"); m != o.end()) {
        p.overlay.modulation = parse_modulation(m->get<std::string>());
      }
      read(o, "carrier_freq", p.overlay.carrier_freq);
      read(o, "symbol_rate", p.overlay.symbol_rate);
      read(o, "rrc_rolloff", p.overlay.rrc_rolloff);
      read(o, "rrc_span", p.overlay.rrc_span);
      read(o, "training_bits", p.overlay.training_bits);
      read(o, "v_offset", p.overlay.v_offset);
      read(o, "v_threshold", p.overlay.v_threshold);
      read(o, "a_p", p.overlay.a_p);
    }
    if (auto it = j.find("equalizer"); it != j.end()) {
      read(*it, "ff_taps", p.equalizer.ff_taps);
      read(*it, "fb_taps", p.equalizer.fb_taps);
      read(*it, "mu_train", p.equalizer.mu_train);
      read(*it, "mu_dd", p.equalizer.mu_dd);
      read(*it, "center_tap_index", p.equalizer.center_tap_index);
    }
    read(j, "cancel_passes", p.cancel_passes);
    if (auto it = j.find("bandpass"); it != j.end()) {
      read(*it, "pass_low_hz", p.bandpass.pass_low_hz);
      read(*it, "pass_high_hz", p.bandpass.pass_high_hz);
      read(*it, "cutoff_low_hz", p.bandpass.cutoff_low_hz);
      read(*it, "cutoff_high_hz", p.bandpass.cutoff_high_hz);
      read(*it, "num_taps", p.bandpass.num_taps);
      read(*it, "stopband_db", p.bandpass.stopband_db);
    }
  } catch (const json::exception& e) {
    throw PlanError(std::string("malformed plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw PlanError(std::string("malformed plan: ") + e.what());
  }
  p.equalizer.payload_modulation = p.overlay.modulation;
  p.validate();
  return p;
}

SweepPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PlanError("cannot open plan file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str());
}

std::string canonical_json(const SweepPlan& p) {
  json channels = json::array();
  for (const auto& c : p.channels) channels.push_back(channel_to_json(c));
  json snr = json::array();
  for (double s : p.snr_points_db) snr.push_back(snr_to_json(s));
  json j = {
      {"channels", channels},
      {"snr_points_db", snr},
      {"frames_per_point", p.frames_per_point},
      {"data_field_bits", p.data_field_bits},
      {"identifier", p.identifier},
      {"base_seed", p.base_seed},
      {"cancel_passes", p.cancel_passes},
      {"rate_lengths", p.rate_lengths},
      {"noise_band_hz", {p.noise_band_low_hz, p.noise_band_high_hz}},
      {"timing",
       {{"bit_rate", p.timing.bit_rate},
        {"samples_per_bit", p.timing.samples_per_bit},
        {"rise_fall_time", p.timing.rise_fall_time}}},
      {"overlay",
       {{"modulation", std::string(to_string(p.overlay.modulation))},
        {"carrier_freq", p.overlay.carrier_freq},
        {"symbol_rate", p.overlay.symbol_rate},
        {"rrc_rolloff", p.overlay.rrc_rolloff},
        {"rrc_span", p.overlay.rrc_span},
        {"training_bits", p.overlay.training_bits},
        {"v_offset", p.overlay.v_offset},
        {"v_threshold", p.overlay.v_threshold},
        {"a_p", p.overlay.a_p}}},
      {"equalizer",
       {{"ff_taps", p.equalizer.ff_taps},
        {"fb_taps", p.equalizer.fb_taps},
        {"mu_train", p.equalizer.mu_train},
        {"mu_dd", p.equalizer.mu_dd},
        {"center_tap_index", p.equalizer.center_tap_index}}},
      {"bandpass",
       {{"pass_low_hz", p.bandpass.pass_low_hz},
        {"pass_high_hz", p.bandpass.pass_high_hz},
        {"cutoff_low_hz", p.bandpass.cutoff_low_hz},
        {"cutoff_high_hz", p.bandpass.cutoff_high_hz},
        {"num_taps", p.bandpass.num_taps},
        {"stopband_db", p.bandpass.stopband_db}}},
  };
  return j.dump();
}

std::string config_digest(const SweepPlan& plan) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : canonical_json(plan)) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t frame_seed(std::uint64_t base_seed, std::size_t channel_index, std::size_t snr_index,
                         std::size_t frame_index) {
  std::uint64_t s = splitmix64(base_seed);
  s = splitmix64(s ^ channel_index);
  s = splitmix64(s ^ snr_index);
  return splitmix64(s ^ frame_index);
}

FrameSeeds split_seed(std::uint64_t seed) {
  return {splitmix64(seed ^ 0x01), splitmix64(seed ^ 0x02), splitmix64(seed ^ 0x03)};
}

FrameOutcome simulate_frame(const SweepPlan& plan, const ChannelSpec& channel, double input_snr_db,
                            std::uint64_t seed, bool keep_symbols) {
  const auto seeds = split_seed(seed);
  const BitTiming& timing = plan.timing;

  const CanFrame frame = build_frame(plan.identifier, BitStream(plan.data_field_bits, kDominant),
                                     plan.data_field_bits > kMaxStandardDataBits);
  const auto payload = random_bits(seeds.payload, payload_capacity_bits(frame, plan.overlay, timing));
  const TxResult tx = build_tx(frame, payload, plan.overlay, timing, seeds.training);

  // The bus is linear, so baseline and overlay go through the channel
  // separately; the received overlay alone sets the noise reference.
  Waveform baseline_d = tx.baseline;
  for (double& v : baseline_d.samples) v *= 2.0;
  Waveform overlay_d = tx.overlay;
  for (double& v : overlay_d.samples) v *= 2.0;
  const Waveform base_rx = apply_channel(baseline_d, channel);
  const Waveform overlay_rx = apply_channel(overlay_d, channel);

  const double fs = timing.sample_rate();
  const double delay = bulk_delay_s(channel);
  const auto shift = static_cast<std::size_t>(std::llround(delay * fs));
  double energy = 0.0;
  std::size_t count = 0;
  for (const auto& w : tx.windows) {
    for (std::size_t n = w.begin + shift; n < w.end + shift && n < overlay_rx.size(); ++n) {
      energy += overlay_rx.samples[n] * overlay_rx.samples[n];
      ++count;
    }
  }
  if (count == 0 || !(energy > 0.0)) throw RxError("simulate_frame: received overlay has no power");
  const double p_ref = energy / static_cast<double>(count);

  Waveform rx = base_rx;
  for (std::size_t n = 0; n < rx.size(); ++n) rx.samples[n] += overlay_rx.samples[n];
  NoiseSpec noise;
  noise.input_snr_db = input_snr_db;
  noise.rng_seed = seeds.noise;
  noise.band_low_hz = plan.noise_band_low_hz;
  noise.band_high_hz = plan.noise_band_high_hz;
  rx = add_awgn(rx, noise, p_ref);

  RxConfig rc;
  rc.overlay = plan.overlay;
  rc.equalizer = plan.equalizer;
  rc.timing = timing;
  rc.bandpass = plan.bandpass;
  rc.channel_delay_s = delay;
  rc.data_field_bits = plan.data_field_bits;
  rc.training_seed = seeds.training;
  rc.cancel_passes = plan.cancel_passes;
  RxResult r = receive(rx, rc);

  const auto& truth = tx.log.payload_symbols;
  if (r.output.equalized_symbols.size() != truth.size()) {
    throw RxError("simulate_frame: received " + std::to_string(r.output.equalized_symbols.size()) +
                  " payload symbols, sent " + std::to_string(truth.size()));
  }
  FrameOutcome out;
  out.seed = seed;
  out.overlay_power_ref = p_ref;
  out.output_snr_db = output_snr_db(r.output.equalized_symbols, truth);
  const std::size_t sent_bits = truth.size() * bits_per_symbol(plan.overlay.modulation);
  out.errors = error_rates(std::span<const Bit>(r.output.payload_bits),
                           std::span<const Bit>(payload).first(sent_bits),
                           bits_per_symbol(plan.overlay.modulation));
  if (keep_symbols) {
    out.rx = std::move(r.output);
    out.payload_reference = truth;
  }
  return out;
}

std::vector<SweepResult> run_sweep(const SweepPlan& plan, const SweepOptions& options) {
  plan.validate();
  const auto all = [](std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = k;
    return v;
  };
  const auto channels = options.channel_indices.value_or(all(plan.channels.size()));
  const auto snrs = options.snr_indices.value_or(all(plan.snr_points_db.size()));
  for (auto c : channels) {
    if (c >= plan.channels.size()) throw PlanError("channel index out of range");
  }
  for (auto s : snrs) {
    if (s >= plan.snr_points_db.size()) throw PlanError("snr index out of range");
  }

  struct Item {
    std::size_t channel, snr, frame, point;
  };
  std::vector<Item> items;
  for (std::size_t ci = 0; ci < channels.size(); ++ci) {
    for (std::size_t si = 0; si < snrs.size(); ++si) {
      for (std::size_t f = 0; f < plan.frames_per_point; ++f) {
        items.push_back({channels[ci], snrs[si], f, ci * snrs.size() + si});
      }
    }
  }

  std::vector<FrameOutcome> outcomes(items.size());
  std::vector<std::string> failures(items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  const auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < items.size();) {
      const auto& it = items[k];
      const auto& ch = plan.channels[it.channel];
      const double snr = plan.snr_points_db[it.snr];
      const auto seed = frame_seed(plan.base_seed, it.channel, it.snr, it.frame);
      try {
        outcomes[k] = simulate_frame(plan, ch, snr, seed);
      } catch (const std::exception& e) {
        failures[k] = std::string(to_string(ch.kind)) + " (channel " + std::to_string(it.channel) +
                      "), snr " + snr_text(snr) + " dB, frame " + std::to_string(it.frame) +
                      ", seed " + std::to_string(seed) + ": " + e.what();
        next.store(items.size());
      }
      const auto d = done.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(d, items.size());
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(items.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw SweepError(f);
  }

  // Aggregate in plan order so the sums do not depend on scheduling.
  const auto digest = config_digest(plan);
  std::vector<SweepResult> results(channels.size() * snrs.size());
  std::vector<double> snr_sum(results.size(), 0.0);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& it = items[k];
    auto& r = results[it.point];
    r.channel_kind = plan.channels[it.channel].kind;
    r.input_snr_db = plan.snr_points_db[it.snr];
    r.seed = plan.base_seed;
    r.config_digest = digest;
    r.frames += 1;
    r.symbol_errors += outcomes[k].errors.symbol_errors;
    r.bit_errors += outcomes[k].errors.bit_errors;
    r.symbols_total += outcomes[k].errors.symbols;
    r.bits_total += outcomes[k].errors.bits;
    snr_sum[it.point] += outcomes[k].output_snr_db;
  }
  for (std::size_t p = 0; p < results.size(); ++p) {
    results[p].output_snr_db = snr_sum[p] / static_cast<double>(results[p].frames);
  }
  return results;
}

std::vector<RateRow> rate_table(const SweepPlan& plan) {
  std::vector<std::size_t> lengths = plan.rate_lengths;
  if (lengths.empty()) {
    for (std::size_t L = 64; L <= 4096; L *= 2) lengths.push_back(L);
  }
  std::vector<RateRow> rows;
  for (auto L : lengths) {
    const double ratio = net_rate_ratio(L, plan.overlay.training_bits);
    rows.push_back({L, ratio, net_rate_bps(ratio, plan.overlay)});
  }
  return rows;
}

void write_fig8_csv(std::ostream& os, const std::vector<SweepResult>& results,
                    const std::string& digest) {
  os << "# config_digest=" << digest << '\n';
  os << "channel,input_snr_db,mean_output_snr_db,ber\n";
  for (const auto& r : results) {
    os << to_string(r.channel_kind) << ',' << snr_text(r.input_snr_db) << ','
       << fmt("%.4f", r.output_snr_db) << ',' << fmt("%.6e", r.ber()) << '\n';
  }
}

void write_fig9_csv(std::ostream& os, const std::vector<RateRow>& rows, const std::string& digest) {
  os << "# config_digest=" << digest << '\n';
  os << "L,ratio,net_rate_bps\n";
  for (const auto& r : rows) {
    os << r.data_field_bits << ',' << fmt("%.6f", r.ratio) << ',' << fmt("%.1f", r.net_rate_bps)
       << '\n';
  }
}

void write_results_csv(std::ostream& os, const std::vector<SweepResult>& results,
                       const std::string& digest) {
  os << "# config_digest=" << digest << '\n';
  write_sweep_header(os);
  for (const auto& r : results) write_sweep_row(os, r);
}

}  // namespace hscan
