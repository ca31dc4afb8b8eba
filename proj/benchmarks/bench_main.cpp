#include <benchmark/benchmark.h>

#include "hscan/channel.hpp"
#include "hscan/frame.hpp"
#include "hscan/overlay.hpp"
#include "hscan/rx.hpp"
#include "hscan/sweep.hpp"

using namespace hscan;

namespace {

void BM_StuffFrame(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto frame = build_frame(0x123, random_bits(1, L), L > 64);
  for (auto _ : state) benchmark::DoNotOptimize(stuff_frame(frame));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(L));
}
BENCHMARK(BM_StuffFrame)->Arg(64)->Arg(1024)->Arg(4096);

void BM_Crc15(benchmark::State& state) {
  const auto bits = random_bits(2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(crc15(bits));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Crc15)->Arg(1024);

TxResult make_tx(std::size_t L) {
  OverlayConfig cfg;
  BitTiming t;
  const auto frame = build_frame(0x123, BitStream(L, kDominant), L > 64);
  return build_tx(frame, random_bits(3, payload_capacity_bits(frame, cfg, t)), cfg, t, 4);
}

void BM_BuildTx(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(make_tx(1024));
}
BENCHMARK(BM_BuildTx)->Unit(benchmark::kMillisecond);

void BM_ApplyChannel(benchmark::State& state) {
  const auto tx = make_tx(1024);
  ChannelSpec spec;
  spec.kind = static_cast<ChannelKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(apply_channel(tx.q_d, spec));
}
BENCHMARK(BM_ApplyChannel)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Bandpass(benchmark::State& state) {
  const auto tx = make_tx(1024);
  const auto f = design_bandpass(tx.q_d.sample_rate);
  for (auto _ : state) benchmark::DoNotOptimize(bandpass(tx.q_d, f));
}
BENCHMARK(BM_Bandpass)->Unit(benchmark::kMillisecond);

void BM_Dfe(benchmark::State& state) {
  EqualizerConfig cfg;
  const auto train = training_sequence(5, 540);
  auto sym = train;
  const auto payload = map_symbols(random_bits(6, 4 * 36000), Modulation::Qam16);
  sym.insert(sym.end(), payload.begin(), payload.end());
  for (auto _ : state) benchmark::DoNotOptimize(dfe_equalize(sym, train, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(sym.size()));
}
BENCHMARK(BM_Dfe)->Unit(benchmark::kMillisecond);

void BM_SimulateFrame(benchmark::State& state) {
  SweepPlan plan;
  ChannelSpec spec;
  spec.kind = static_cast<ChannelKind>(state.range(0));
  plan.channels = {spec};
  plan.snr_points_db = {20.0};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_frame(plan, spec, 20.0, ++seed));
}
BENCHMARK(BM_SimulateFrame)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
