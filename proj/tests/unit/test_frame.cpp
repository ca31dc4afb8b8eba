#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "hscan/frame.hpp"

using namespace hscan;

namespace {

// Reference CRC: literal polynomial long division of the message followed by
// 15 zero bits, independent of the shift-register form in the library.
std::uint16_t crc15_long_division(const BitStream& msg) {
  const std::vector<int> poly = {1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1};  // 0xC599
  std::vector<int> r(msg.begin(), msg.end());
  r.insert(r.end(), 15, 0);
  for (std::size_t i = 0; i + 15 < r.size(); ++i) {
    if (r[i] == 0) continue;
    for (std::size_t k = 0; k < poly.size(); ++k) r[i + k] ^= poly[k];
  }
  std::uint16_t out = 0;
  for (std::size_t i = r.size() - 15; i < r.size(); ++i) out = static_cast<std::uint16_t>((out << 1) | r[i]);
  return out;
}

BitStream random_stream(std::mt19937_64& rng, std::size_t n, double p_one = 0.5) {
  std::bernoulli_distribution d(p_one);
  BitStream b(n);
  for (auto& x : b) x = d(rng) ? 1 : 0;
  return b;
}

std::size_t longest_run(const BitStream& b) {
  std::size_t best = 0, run = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    run = (i > 0 && b[i] == b[i - 1]) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

// Bus-level arbitration: each bit time the bus is the AND of all drivers;
// a node sending recessive that reads dominant drops out.
std::uint16_t wired_and_winner(std::vector<std::uint16_t> nodes) {
  for (int bit = 10; bit >= 0; --bit) {
    unsigned bus = 1;
    for (auto id : nodes) bus &= (id >> bit) & 1u;
    std::erase_if(nodes, [&](std::uint16_t id) { return ((id >> bit) & 1u) != bus; });
  }
  return nodes.front();
}

}  // namespace

TEST_CASE("overhead adds up to a 110-bit eight-byte frame") {
  CHECK(field::kOverhead == 46);
  const auto f = build_frame(0x555, BitStream(64, 0));
  CHECK(serialize(f).size() == 110);
}

TEST_CASE("build_frame rejects bad input") {
  CHECK_THROWS_AS(build_frame(0x800, {}), FrameError);
  CHECK_THROWS_AS(build_frame(1, BitStream(7, 0)), FrameError);
  CHECK_THROWS_AS(build_frame(1, BitStream(72, 0)), FrameError);
  CHECK_NOTHROW(build_frame(1, BitStream(72, 0), true));
  BitStream bad(8, 0);
  bad[3] = 2;
  CHECK_THROWS_AS(build_frame(1, bad), FrameError);
}

TEST_CASE("length code") {
  CHECK(build_frame(1, BitStream(0, 0)).length_code() == 0);
  CHECK(build_frame(1, BitStream(40, 0)).length_code() == 5);
  CHECK(build_frame(1, BitStream(64, 0)).length_code() == 0xF);
  CHECK(build_frame(1, BitStream(1024, 0), true).length_code() == 0xF);
}

TEST_CASE("crc15 matches long division") {
  CHECK(crc15(BitStream{}) == 0);
  CHECK(crc15(BitStream{1}) == 0x4599);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 500; ++t) {
    const auto msg = random_stream(rng, 1 + rng() % 200);
    REQUIRE(crc15(msg) == crc15_long_division(msg));
  }
}

TEST_CASE("appending the crc leaves a zero remainder") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    auto msg = random_stream(rng, 83);
    const auto c = crc15(msg);
    for (int k = 14; k >= 0; --k) msg.push_back(static_cast<Bit>((c >> k) & 1));
    REQUIRE(crc15(msg) == 0);
  }
}

TEST_CASE("stuffing") {
  SUBCASE("five equal bits get a complement") {
    const auto s = stuff(BitStream{0, 0, 0, 0, 0});
    CHECK(s.bits == BitStream{0, 0, 0, 0, 0, 1});
    CHECK(s.stuff_positions == std::vector<std::size_t>{5});
  }
  SUBCASE("stuff bits count toward the next run") {
    // 00000 1 1111 -> stuffed 1 plus four ones makes five, so another 0 goes in
    const auto s = stuff(BitStream{0, 0, 0, 0, 0, 1, 1, 1, 1});
    CHECK(s.bits == BitStream{0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 0});
  }
  SUBCASE("all-dominant field stuffs to DDDDDR") {
    for (std::size_t L : {5u, 64u, 100u, 1024u}) {
      const auto s = stuff(BitStream(L, 0));
      CHECK(s.bits.size() == L + L / 5);
      for (std::size_t i = 0; i < s.bits.size(); ++i) REQUIRE(s.bits[i] == (i % 6 == 5 ? 1 : 0));
    }
  }
  SUBCASE("round trip and run bound") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 1000; ++t) {
      const auto b = random_stream(rng, rng() % 300, t % 2 ? 0.5 : 0.1);
      const auto s = stuff(b);
      REQUIRE(longest_run(s.bits) <= 5);
      REQUIRE(unstuff(s.bits) == b);
    }
  }
  SUBCASE("six in a row is a violation") {
    try {
      (void)unstuff(BitStream{1, 0, 0, 0, 0, 0, 0});
      FAIL("expected StuffingViolation");
    } catch (const StuffingViolation& e) {
      CHECK(e.position() == 6);
    }
    try {
      (void)unstuff(BitStream(6, 0));
      FAIL("expected StuffingViolation");
    } catch (const StuffingViolation& e) {
      CHECK(e.position() == 5);
    }
    CHECK(unstuff(BitStream{0, 0, 0, 0, 0, 1}) == BitStream(5, 0));
    CHECK(stuff(BitStream{}).bits.empty());
  }
  SUBCASE("64 zeros") {
    const auto s = stuff(BitStream(64, 0));
    CHECK(s.bits.size() == 76);
    CHECK(s.stuff_positions.size() == 12);
  }
}

TEST_CASE("stuffed frame locates its data field") {
  for (std::size_t L : {0u, 8u, 64u, 1024u}) {
    const auto f = build_frame(0x123, BitStream(L, 0), L > 64);
    const auto s = stuff_frame(f);
    const auto span = locate_data_field(s.bits, L);
    CHECK(span.begin == s.data_begin);
    CHECK(span.end == s.data_end);
    // tail is delimiter, ACK, EOF and IFS, all recessive and unstuffed
    CHECK(std::all_of(s.bits.end() - field::kTrailer, s.bits.end(), [](Bit b) { return b == 1; }));
  }
}

TEST_CASE("dominant schedule of an all-dominant field") {
  const auto f = build_frame(0x123, BitStream(64, 0));
  const auto s = stuff_frame(f);
  const auto w = dominant_schedule(s);
  REQUIRE(w.size() == 13);
  for (std::size_t k = 0; k < 12; ++k) CHECK(w[k].bit_count == 5);
  CHECK(w[12].bit_count == 4);
  CHECK(count_dominant(w) == 64);
  CHECK(w.front().first_bit == s.data_begin);

  const auto big = stuff_frame(build_frame(0x123, BitStream(1024, 0), true));
  CHECK(count_dominant(dominant_schedule(big)) == 1024);
}

TEST_CASE("arbitration picks the lowest identifier") {
  const std::vector<std::uint16_t> ids = {0x700, 0x123, 0x124, 0x7FF};
  CHECK(arbitrate(ids) == 0x123);
  CHECK_THROWS_AS(arbitrate(std::vector<std::uint16_t>{}), FrameError);
  CHECK(arbitrate(std::vector<std::uint16_t>{0x0FF, 0x100}) == 0x0FF);
  CHECK(arbitrate(std::vector<std::uint16_t>{0x2A}) == 0x2A);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint16_t> v(1 + rng() % 8);
    for (auto& x : v) x = static_cast<std::uint16_t>(rng() & 0x7FF);
    REQUIRE(arbitrate(v) == *std::min_element(v.begin(), v.end()));
    REQUIRE(arbitrate(v) == wired_and_winner(v));
  }
}
