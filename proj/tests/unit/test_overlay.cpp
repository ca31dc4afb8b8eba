#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "hscan/frame.hpp"
#include "hscan/overlay.hpp"
#include "hscan/spectral.hpp"

using namespace hscan;

TEST_CASE("constellations have unit average energy and Gray labels") {
  for (auto m : {Modulation::Qpsk, Modulation::Psk8, Modulation::Qam16, Modulation::Qam64}) {
    const auto& c = constellation(m);
    REQUIRE(c.size() == (1u << bits_per_symbol(m)));
    double e = 0.0;
    for (auto z : c) e += std::norm(z);
    CHECK(e / c.size() == doctest::Approx(1.0));
    // nearest neighbours differ in one label bit
    double dmin = 1e9;
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = a + 1; b < c.size(); ++b) dmin = std::min(dmin, std::abs(c[a] - c[b]));
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = a + 1; b < c.size(); ++b)
        if (std::abs(c[a] - c[b]) < dmin * 1.0001) REQUIRE(std::popcount(a ^ b) == 1);
  }
  CHECK(parse_modulation("16QAM") == Modulation::Qam16);
  CHECK_THROWS(parse_modulation("32APSK"));
}

TEST_CASE("qpsk mapping table") {
  const double a = 1.0 / std::sqrt(2.0);
  const auto s = map_symbols(BitStream{0, 0, 0, 1, 1, 0, 1, 1}, Modulation::Qpsk);
  CHECK(std::abs(s[0] - Complex(a, a)) < 1e-12);
  CHECK(std::abs(s[1] - Complex(-a, a)) < 1e-12);
  CHECK(std::abs(s[2] - Complex(a, -a)) < 1e-12);
  CHECK(std::abs(s[3] - Complex(-a, -a)) < 1e-12);
  CHECK_THROWS_AS(map_symbols(BitStream{0, 1, 1}, Modulation::Qam16), OverlayError);
}

TEST_CASE("rrc taps") {
  const auto h = rrc_taps(0.25, 8, 8);
  REQUIRE(h.size() == 65);
  CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(8.0));
  for (std::size_t k = 0; k < h.size(); ++k) REQUIRE(h[k] == doctest::Approx(h[h.size() - 1 - k]));
  // RRC convolved with itself is a Nyquist pulse: zero crossings every sps
  std::vector<double> g(2 * h.size() - 1, 0.0);
  for (std::size_t a = 0; a < h.size(); ++a)
    for (std::size_t b = 0; b < h.size(); ++b) g[a + b] += h[a] * h[b];
  const std::size_t c = h.size() - 1;
  for (int k = 1; k <= 3; ++k) {
    CHECK(std::abs(g[c + 8 * k]) / g[c] < 2e-3);
    CHECK(std::abs(g[c - 8 * k]) / g[c] < 2e-3);
  }
}

TEST_CASE("upconvert matches the carrier formula") {
  const double fs = 288e6, fc = 24e6;
  Waveform i{std::vector<double>(64, 1.0), fs, 1e-6};
  Waveform q{std::vector<double>(64, 0.5), fs, 1e-6};
  const auto s = upconvert(i, q, fc);
  for (std::size_t n = 0; n < 64; ++n) {
    const double t = 1e-6 + n / fs;
    const double ref = std::cos(2 * M_PI * fc * t) - 0.5 * std::sin(2 * M_PI * fc * t);
    REQUIRE(s.samples[n] == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("config validation") {
  BitTiming t;
  OverlayConfig c;
  CHECK_NOTHROW(c.validate(t));
  CHECK(c.samples_per_symbol(t.sample_rate()) == 8);
  CHECK(c.symbols_per_bit(t) == 36);
  OverlayConfig bad = c;
  bad.carrier_freq = 130e6;
  CHECK_THROWS_AS(bad.validate(t), OverlayError);
  bad = c;
  bad.symbol_rate = 35e6;
  CHECK_THROWS_AS(bad.validate(t), OverlayError);
  bad = c;
  bad.v_threshold = 1.5;
  CHECK_THROWS_AS(bad.validate(t), OverlayError);
}

TEST_CASE("seeded sources are deterministic") {
  CHECK(random_bits(9, 1000) == random_bits(9, 1000));
  CHECK(random_bits(9, 1000) != random_bits(10, 1000));
  const auto a = training_sequence(4, 540);
  CHECK(a == training_sequence(4, 540));
  CHECK(a.size() == 540);
}

TEST_CASE("build_tx assembles a gated composite") {
  BitTiming t;
  OverlayConfig cfg;
  const auto frame = build_frame(0x123, BitStream(64, kDominant));
  const std::size_t cap = payload_capacity_bits(frame, cfg, t);
  CHECK(cap == (64 - 15) * 36 * 4);
  const auto tx = build_tx(frame, random_bits(1, cap), cfg, t, 2);

  CHECK(tx.schedule.size() == 13);
  CHECK(tx.log.training_symbols.size() == 15 * 36);
  CHECK(tx.log.payload_symbols.size() == 49 * 36);
  CHECK(tx.a_p > 0.0);
  CHECK(tx.q_d.size() == tx.stuffed.bits.size() * 288);

  // overlay is zero outside the windows
  std::vector<std::uint8_t> inside(tx.overlay.size(), 0);
  for (const auto& w : tx.windows) std::fill(inside.begin() + w.begin, inside.begin() + w.end, 1);
  double outside = 0.0, peak = 0.0;
  for (std::size_t n = 0; n < inside.size(); ++n) {
    if (!inside[n]) outside = std::max(outside, std::abs(tx.overlay.samples[n]));
    else peak = std::max(peak, std::abs(tx.overlay.samples[n]));
  }
  CHECK(outside == 0.0);
  // the peak swing uses all the room between v_offset and v_threshold
  CHECK(peak == doctest::Approx(cfg.v_offset - cfg.v_threshold));

  // overlay spectrum sits in the carrier band
  const std::size_t n = spectral::next_pow2(tx.overlay.size());
  const auto bins = spectral::rfft(tx.overlay.samples, n);
  double in_band = 0.0, total = 0.0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double f = k * t.sample_rate() / n;
    const double p = std::norm(bins[k]);
    total += p;
    if (f > 1.5e6 && f < 46.5e6) in_band += p;
  }
  CHECK(in_band / total > 0.99);

  CHECK_THROWS_AS(build_tx(frame, random_bits(1, cap - 4), cfg, t, 2), OverlayError);
  auto mixed = BitStream(64, kDominant);
  mixed[3] = kRecessive;
  CHECK_THROWS_AS(build_tx(build_frame(1, mixed), random_bits(1, cap), cfg, t, 2), OverlayError);
}

TEST_CASE("compute_ap scales the peak to the margin") {
  Waveform s{{0.1, -0.4, 0.2, 3.0}, 1.0, 0.0};
  const std::vector<SampleRange> w = {{0, 3}};
  CHECK(compute_ap(s, w, 1.0, 0.5) == doctest::Approx(0.5 / 0.4));
  Waveform zero{{0.0, 0.0}, 1.0, 0.0};
  CHECK_THROWS_AS(compute_ap(zero, std::vector<SampleRange>{{0, 2}}, 1.0, 0.5), OverlayError);
}
