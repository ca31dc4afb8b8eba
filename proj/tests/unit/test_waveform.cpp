#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hscan/frame.hpp"
#include "hscan/waveform.hpp"

using namespace hscan;

TEST_CASE("single-ended drive levels and ramps") {
  BitTiming t;
  const auto w = synthesize_single_ended(BitStream{1, 0, 0, 1}, t);
  REQUIRE(w.size() == 4 * 288);
  CHECK(w.sample_rate == doctest::Approx(288e6));
  CHECK(w.samples[100] == 0.0);                   // recessive
  CHECK(w.samples[288 + 200] == 1.0);             // settled dominant
  CHECK(w.samples[2 * 288 + 1] == 1.0);           // D to D has no edge
  // 50 ns ramp at 288 MHz is 14.4 samples; halfway through is about 0.5
  CHECK(w.samples[288 + 7] == doctest::Approx(7.0 / 14.4));
  CHECK(w.samples[3 * 288 + 7] == doctest::Approx(1.0 - 7.0 / 14.4));
  CHECK(w.samples[3 * 288 + 20] == 0.0);
  CHECK_THROWS(synthesize_single_ended(BitStream{}, t));
}

TEST_CASE("differential pair is symmetric about 2.5 V") {
  BitTiming t;
  const auto q = synthesize_single_ended(BitStream{0, 1, 0}, t);
  const auto p = to_differential(q);
  for (std::size_t n = 0; n < q.size(); n += 17) {
    REQUIRE(p.can_h.samples[n] + p.can_l.samples[n] == doctest::Approx(2 * kRecessiveLineLevel));
  }
  const auto d = p.difference();
  CHECK(d.samples[200] == doctest::Approx(2.0));
  CHECK(d.samples[288 + 200] == doctest::Approx(0.0));
}

TEST_CASE("threshold detector recovers the bits") {
  BitTiming t;
  const BitStream bits = {0, 1, 1, 0, 1, 0, 0, 0, 0, 0, 1};
  auto q = synthesize_single_ended(bits, t);
  for (double& v : q.samples) v *= 2.0;
  CHECK(threshold_detect(q, t) == bits);
  CHECK(t.sample_point() == 216);

  SUBCASE("exactly at threshold counts as dominant") {
    Waveform flat{std::vector<double>(288, kDifferentialThreshold), t.sample_rate(), 0.0};
    CHECK(threshold_detect(flat, t) == BitStream{0});
  }
  SUBCASE("first_sample offsets the bit grid") {
    Waveform shifted = q;
    shifted.samples.insert(shifted.samples.begin(), 50, 0.0);
    CHECK(threshold_detect(shifted, t, 50) == bits);
  }
}

TEST_CASE("waveform validation and csv") {
  Waveform w{{0.0, 1.0}, 2.0, 0.0};
  CHECK_NOTHROW(validate(w));
  w.samples[1] = std::nan("");
  CHECK_THROWS(validate(w));
  Waveform v{{0.5, -0.5}, 4.0, 1.0};
  std::ostringstream os;
  write_csv(os, v);
  CHECK(os.str().find("time_s,value") == 0);
  CHECK(v.time_at(1) == doctest::Approx(1.25));
  CHECK(v.duration() == doctest::Approx(0.5));
}
