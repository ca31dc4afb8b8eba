// hscan: sweep runner and signal dumps for the CAN overlay simulator.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hscan/channel.hpp"
#include "hscan/frame.hpp"
#include "hscan/metrics.hpp"
#include "hscan/overlay.hpp"
#include "hscan/rx.hpp"
#include "hscan/sweep.hpp"
#include "hscan/waveform.hpp"

namespace fs = std::filesystem;
using namespace hscan;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

// Maps names or values given on the command line to plan indices.
std::vector<std::size_t> select_channels(const SweepPlan& plan, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    const auto kind = parse_channel_kind(n);
    bool found = false;
    for (std::size_t k = 0; k < plan.channels.size(); ++k) {
      if (plan.channels[k].kind == kind) {
        out.push_back(k);
        found = true;
      }
    }
    if (!found) throw std::runtime_error("plan has no channel " + n);
  }
  return out;
}

std::vector<std::size_t> select_snrs(const SweepPlan& plan, const std::vector<double>& values) {
  std::vector<std::size_t> out;
  for (double v : values) {
    bool found = false;
    for (std::size_t k = 0; k < plan.snr_points_db.size(); ++k) {
      const double p = plan.snr_points_db[k];
      if ((std::isinf(v) && std::isinf(p)) || std::abs(p - v) < 1e-9) {
        out.push_back(k);
        found = true;
      }
    }
    if (!found) throw std::runtime_error("plan has no snr point " + std::to_string(v));
  }
  return out;
}

int run_sweep_cmd(const fs::path& plan_path, const fs::path& out_dir,
                  std::optional<std::uint64_t> seed, const std::vector<std::string>& channels,
                  const std::vector<double>& snrs, unsigned threads, bool constellation, bool quiet) {
  SweepPlan plan = load_plan(plan_path);
  if (seed) plan.base_seed = *seed;
  SweepOptions opt;
  opt.threads = threads;
  if (!channels.empty()) opt.channel_indices = select_channels(plan, channels);
  if (!snrs.empty()) opt.snr_indices = select_snrs(plan, snrs);
  if (!quiet) {
    opt.progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 10 == 0) std::fprintf(stderr, "\r%zu/%zu frames", done, total);
      if (done == total) std::fputc('\n', stderr);
    };
  }

  fs::create_directories(out_dir);
  const auto digest = config_digest(plan);
  const auto results = run_sweep(plan, opt);
  {
    auto os = open_out(out_dir / "fig8.csv");
    write_fig8_csv(os, results, digest);
  }
  {
    auto os = open_out(out_dir / "results.csv");
    write_results_csv(os, results, digest);
  }
  {
    auto os = open_out(out_dir / "fig9.csv");
    write_fig9_csv(os, rate_table(plan), digest);
  }

  if (constellation) {
    // Frame 0 of every selected point.
    const auto chans = opt.channel_indices.value_or([&] {
      std::vector<std::size_t> v(plan.channels.size());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = k;
      return v;
    }());
    const auto points = opt.snr_indices.value_or([&] {
      std::vector<std::size_t> v(plan.snr_points_db.size());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = k;
      return v;
    }());
    for (auto c : chans) {
      for (auto s : points) {
        const double snr = plan.snr_points_db[s];
        const auto f = simulate_frame(plan, plan.channels[c], snr,
                                      frame_seed(plan.base_seed, c, s, 0), true);
        const std::string name = "constellation_" + std::string(to_string(plan.channels[c].kind)) +
                                 "_" + (std::isinf(snr) ? std::string("inf") : std::to_string(static_cast<int>(std::lround(snr)))) +
                                 "dB.csv";
        auto os = open_out(out_dir / name);
        os << "# config_digest=" << digest << '\n';
        write_csv(os, f.rx, f.payload_reference, plan.overlay.modulation);
      }
    }
  }

  for (const auto& r : results) {
    std::printf("%-9s snr_in %7.2f dB  snr_out %7.2f dB  loss %5.2f dB  ber %.3e\n",
                std::string(to_string(r.channel_kind)).c_str(), r.input_snr_db, r.output_snr_db,
                r.input_snr_db - r.output_snr_db, r.ber());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carrier overlay on CAN: sweep runner and signal dumps"};
  app.require_subcommand(1);

  auto* sweep = app.add_subcommand("sweep", "Run an SNR sweep and write fig8/fig9/results CSVs");
  std::string plan_path = "plans/default_plan.json";
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> channel_filter;
  std::vector<double> snr_filter;
  unsigned threads = 0;
  bool constellation = false;
  bool quiet = false;
  sweep->add_option("-p,--plan", plan_path, "Plan file (JSON)")->check(CLI::ExistingFile);
  sweep->add_option("-o,--out", out_dir, "Output directory");
  sweep->add_option("--seed", seed, "Override the plan's base_seed");
  sweep->add_option("--channel", channel_filter, "Only these channels (Flat, ChannelA, ChannelB)");
  sweep->add_option("--snr", snr_filter, "Only these input SNR points (dB)");
  sweep->add_option("-j,--threads", threads, "Worker threads (0 = all cores)");
  sweep->add_flag("--constellation", constellation, "Also write equalized symbols of frame 0 per point");
  sweep->add_flag("-q,--quiet", quiet, "No progress output");

  auto* rates = app.add_subcommand("rates", "Print the net rate table");
  std::string rates_plan;
  std::vector<std::size_t> lengths;
  rates->add_option("-p,--plan", rates_plan, "Plan file (JSON); defaults otherwise");
  rates->add_option("-L,--length", lengths, "Data field sizes in bits");

  auto* response = app.add_subcommand("response", "Write a channel frequency response CSV");
  std::string kind = "ChannelB";
  double f_lo = 0.0, f_hi = 60e6;
  std::size_t points = 601;
  std::string response_out = "-";
  response->add_option("-c,--channel", kind, "Flat, ChannelA or ChannelB");
  response->add_option("--f-start", f_lo, "Start frequency (Hz)");
  response->add_option("--f-stop", f_hi, "Stop frequency (Hz)");
  response->add_option("-n,--points", points, "Number of frequencies");
  response->add_option("-o,--out", response_out, "Output file or - for stdout");

  auto* wave = app.add_subcommand("waveform", "Write the noiseless transmit waveform of one frame");
  std::size_t wave_bits = 64;
  std::uint64_t wave_seed = 1;
  std::string wave_out = "-";
  std::string symbols_out;
  wave->add_option("-L,--length", wave_bits, "Data field bits (multiple of 8)");
  wave->add_option("--seed", wave_seed, "Payload/training seed");
  wave->add_option("-o,--out", wave_out, "Output file or - for stdout");
  wave->add_option("--symbols", symbols_out, "Also write the symbol log here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      return run_sweep_cmd(plan_path, out_dir, seed, channel_filter, snr_filter, threads,
                           constellation, quiet);
    }
    if (*rates) {
      SweepPlan plan;
      if (!rates_plan.empty()) plan = load_plan(rates_plan);
      if (!lengths.empty()) plan.rate_lengths = lengths;
      write_fig9_csv(std::cout, rate_table(plan), config_digest(plan));
      return 0;
    }
    if (*response) {
      ChannelSpec spec;
      spec.kind = parse_channel_kind(kind);
      if (response_out == "-") {
        write_response_csv(std::cout, spec, f_lo, f_hi, points);
      } else {
        auto os = open_out(response_out);
        write_response_csv(os, spec, f_lo, f_hi, points);
      }
      return 0;
    }
    if (*wave) {
      const OverlayConfig cfg;
      const BitTiming timing;
      const auto frame = build_frame(0x123, BitStream(wave_bits, kDominant), wave_bits > kMaxStandardDataBits);
      const auto bits = random_bits(wave_seed, payload_capacity_bits(frame, cfg, timing));
      const auto tx = build_tx(frame, bits, cfg, timing, wave_seed);
      if (wave_out == "-") {
        write_csv(std::cout, tx.q_d);
      } else {
        auto os = open_out(wave_out);
        write_csv(os, tx.q_d);
      }
      if (!symbols_out.empty()) {
        auto os = open_out(symbols_out);
        write_csv(os, tx.log);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "hscan: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
