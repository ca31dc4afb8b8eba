#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hscan/frame.hpp"
#include "hscan/metrics.hpp"
#include "hscan/overlay.hpp"

using namespace hscan;

TEST_CASE("output snr") {
  const SymbolSequence truth = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  CHECK(output_snr_db(truth, truth) == kOutputSnrCapDb);
  SymbolSequence off = truth;
  for (auto& z : off) z *= 2.0;  // error power equals signal power
  CHECK(output_snr_db(off, truth) == doctest::Approx(0.0));
  SymbolSequence small = truth;
  small[0] += 0.1;
  CHECK(output_snr_db(small, truth) == doctest::Approx(10 * std::log10(4 / 0.01)));
  CHECK_THROWS(output_snr_db(SymbolSequence{}, SymbolSequence{}));
  CHECK_THROWS(output_snr_db(truth, SymbolSequence(3)));
}

TEST_CASE("error rates") {
  const auto a = random_bits(1, 10000);
  auto e = error_rates(a, a, 4);
  CHECK(e.ber == 0.0);
  CHECK(e.ser == 0.0);
  BitStream flipped = a;
  for (auto& b : flipped) b ^= 1;
  e = error_rates(flipped, a, 4);
  CHECK(e.ber == 1.0);
  CHECK(e.ser == 1.0);
  BitStream one = a;
  one[1234] ^= 1;
  e = error_rates(one, a, 4);
  CHECK(e.ber == doctest::Approx(1e-4));
  CHECK(e.bit_errors == 1);
  CHECK(e.symbol_errors == 1);
  CHECK(e.symbols == 2500);
  CHECK_THROWS(error_rates(a, random_bits(1, 9999), 1));
}

TEST_CASE("net rate ratio") {
  CHECK(net_rate_ratio(0) == 0.0);
  CHECK(net_rate_ratio(8) == 0.0);
  CHECK(net_rate_ratio(1024) == doctest::Approx(1009.0 / 1274.0));
  CHECK(net_rate_ratio(64) == doctest::Approx(49.0 / 122.0));
  double prev = 0.0;
  for (std::size_t L = 16; L <= 1 << 20; L *= 2) {
    const double r = net_rate_ratio(L);
    CHECK(r > prev);
    CHECK(r < 5.0 / 6.0);
    prev = r;
  }
  OverlayConfig cfg;
  CHECK(net_rate_bps(1.0, cfg) == doctest::Approx(144e6));
  CHECK(net_rate_bps(0.0, cfg) == 0.0);
  CHECK(net_rate_bps(net_rate_ratio(1024), cfg) > 100e6);
}

TEST_CASE("compatibility check") {
  BitTiming t;
  OverlayConfig cfg;
  const auto frame = build_frame(0x55, BitStream(64, kDominant));
  const auto cap = payload_capacity_bits(frame, cfg, t);
  const auto tx = build_tx(frame, random_bits(2, cap), cfg, t, 3);
  Waveform base = tx.baseline;
  for (double& v : base.samples) v *= 2.0;
  CHECK(compatibility_check(tx.q_d, base, t).pass);
  CHECK(compatibility_check(base, base, t).pass);

  // twice the allowed swing pulls dominant samples under the threshold
  Waveform hot = tx.baseline;
  for (std::size_t n = 0; n < hot.size(); ++n) hot.samples[n] = 2.0 * (hot.samples[n] + 2.0 * tx.overlay.samples[n]);
  const auto r = compatibility_check(hot, base, t);
  CHECK_FALSE(r.pass);
  REQUIRE(r.first_mismatch.has_value());
  CHECK(*r.first_mismatch >= tx.stuffed.data_begin);
  CHECK(*r.first_mismatch < tx.stuffed.data_end);
}

TEST_CASE("sweep rows") {
  SweepResult r;
  r.channel_kind = ChannelKind::ChannelB;
  r.input_snr_db = 20;
  r.output_snr_db = 16.5;
  r.bit_errors = 3;
  r.bits_total = 300;
  r.frames = 2;
  r.seed = 9;
  r.config_digest = "abc";
  CHECK(r.ber() == doctest::Approx(0.01));
  std::ostringstream os;
  write_sweep_header(os);
  write_sweep_row(os, r);
  const auto s = os.str();
  CHECK(s.rfind("channel,input_snr_db,output_snr_db,symbol_errors,bit_errors,symbols_total,bits_total,frames,seed,config_digest\n", 0) == 0);
  CHECK(s.find("ChannelB,") != std::string::npos);
  CHECK(s.find(",abc") != std::string::npos);
}
