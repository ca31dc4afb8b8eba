#include "hscan/frame.hpp"

#include <algorithm>

namespace hscan {

namespace {

constexpr std::size_t kStuffRun = 5;
constexpr std::uint16_t kCrcPolynomial = 0x4599;  // x^15 term implicit

void append_msb_first(BitStream& out, unsigned value, std::size_t width) {
  for (std::size_t i = width; i-- > 0;) {
    out.push_back(static_cast<Bit>((value >> i) & 1u));
  }
}

}  // namespace

std::uint8_t CanFrame::length_code() const noexcept {
  // CAN 2.0 decodes codes 9..15 as eight bytes. 0b1111 is used for every
  // frame carrying eight bytes or more: its trailing recessive run restarts
  // the stuff counter so an all-dominant data field stuffs as DDDDDR.
  const std::size_t bytes = data.size() / 8;
  return bytes < 8 ? static_cast<std::uint8_t>(bytes) : std::uint8_t{0xF};
}

bool is_valid_bitstream(std::span<const Bit> bits) noexcept {
  return std::all_of(bits.begin(), bits.end(), [](Bit b) { return b <= 1; });
}

CanFrame build_frame(std::uint16_t identifier, BitStream data, bool extended_data_mode) {
  if (identifier > kMaxIdentifier) {
    throw FrameError("identifier out of range: " + std::to_string(identifier));
  }
  if (data.size() % 8 != 0) {
    throw FrameError("data length must be a multiple of 8 bits, got " + std::to_string(data.size()));
  }
  if (!extended_data_mode && data.size() > kMaxStandardDataBits) {
    throw FrameError("data field of " + std::to_string(data.size()) +
                     " bits needs extended_data_mode");
  }
  if (!is_valid_bitstream(data)) {
    throw FrameError("data contains values other than 0 and 1");
  }
  return CanFrame{identifier, std::move(data), extended_data_mode};
}

BitStream serialize_crc_region(const CanFrame& frame) {
  BitStream out;
  out.reserve(field::kHeader + frame.data.size());
  out.push_back(kDominant);                                     // SOF
  append_msb_first(out, frame.identifier, field::kIdentifier);  // ID
  out.push_back(kDominant);                                     // RTR: data frame
  out.push_back(kDominant);                                     // IDE: standard format
  out.push_back(kDominant);                                     // r0
  append_msb_first(out, frame.length_code(), 4);
  out.insert(out.end(), frame.data.begin(), frame.data.end());
  return out;
}

BitStream serialize(const CanFrame& frame) {
  BitStream out = serialize_crc_region(frame);
  append_msb_first(out, crc15(out), field::kCrc);
  out.insert(out.end(), field::kTrailer, kRecessive);
  return out;
}

std::uint16_t crc15(std::span<const Bit> bits) {
  std::uint16_t reg = 0;
  for (Bit b : bits) {
    const bool feedback = ((reg >> 14) & 1u) != (b & 1u);
    reg = static_cast<std::uint16_t>((reg << 1) & 0x7FFF);
    if (feedback) reg ^= kCrcPolynomial;
  }
  return reg;
}

StuffedFrame stuff(std::span<const Bit> bits) {
  StuffedFrame out;
  out.bits.reserve(bits.size() + bits.size() / 4 + 1);
  Bit last = 2;
  std::size_t run = 0;
  for (Bit b : bits) {
    out.bits.push_back(b);
    run = (b == last) ? run + 1 : 1;
    last = b;
    if (run == kStuffRun) {
      const Bit complement = static_cast<Bit>(b ^ 1u);
      out.stuff_positions.push_back(out.bits.size());
      out.bits.push_back(complement);
      last = complement;
      run = 1;
    }
  }
  return out;
}

BitStream unstuff(std::span<const Bit> bits) {
  BitStream out;
  out.reserve(bits.size());
  Bit last = 2;
  std::size_t run = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const Bit b = bits[i];
    if (run == kStuffRun) {
      if (b == last) {
        throw StuffingViolation(i, "stuffing violation: six identical bits ending at index " +
                                       std::to_string(i));
      }
      last = b;
      run = 1;
      continue;  // drop the stuff bit
    }
    out.push_back(b);
    run = (b == last) ? run + 1 : 1;
    last = b;
  }
  return out;
}

DataFieldSpan locate_data_field(std::span<const Bit> stuffed, std::size_t data_bits) {
  const std::size_t first = field::kHeader;
  const std::size_t past_last = field::kHeader + data_bits;
  DataFieldSpan span;
  Bit last = 2;
  std::size_t run = 0;
  std::size_t unstuffed = 0;
  for (std::size_t i = 0; i < stuffed.size(); ++i) {
    const Bit b = stuffed[i];
    if (run == kStuffRun) {
      if (b == last) {
        throw StuffingViolation(i, "stuffing violation at index " + std::to_string(i));
      }
      last = b;
      run = 1;
      if (data_bits > 0 && unstuffed == past_last) {
        span.end = i + 1;
        return span;
      }
      continue;
    }
    if (unstuffed == first) span.begin = i;
    if (unstuffed == past_last) {
      if (data_bits == 0) span.end = span.begin;
      return span;
    }
    ++unstuffed;
    if (unstuffed == past_last) span.end = i + 1;
    run = (b == last) ? run + 1 : 1;
    last = b;
  }
  if (unstuffed < past_last) throw FrameError("stream ends before the data field does");
  if (data_bits == 0) span.begin = span.end = stuffed.size();
  return span;
}

StuffedFrame stuff_frame(const CanFrame& frame) {
  BitStream region = serialize_crc_region(frame);
  append_msb_first(region, crc15(region), field::kCrc);

  StuffedFrame out = stuff(region);
  const auto span = locate_data_field(out.bits, frame.data.size());
  out.data_begin = span.begin;
  out.data_end = span.end;
  out.bits.insert(out.bits.end(), field::kTrailer, kRecessive);
  return out;
}

std::uint16_t arbitrate(std::span<const std::uint16_t> identifiers) {
  if (identifiers.empty()) {
    throw FrameError("arbitration needs at least one contender");
  }
  std::vector<std::uint16_t> contenders(identifiers.begin(), identifiers.end());
  for (const auto id : contenders) {
    if (id > kMaxIdentifier) throw FrameError("identifier out of range: " + std::to_string(id));
  }
  for (std::size_t bit = field::kIdentifier; bit-- > 0;) {
    // Wired-AND: the bus is dominant if any contender drives dominant.
    unsigned bus = 1;
    for (const auto id : contenders) bus &= (id >> bit) & 1u;
    std::erase_if(contenders, [&](std::uint16_t id) { return ((id >> bit) & 1u) != bus; });
  }
  return contenders.front();
}

std::vector<DominantWindow> dominant_schedule(const StuffedFrame& stuffed) {
  std::vector<DominantWindow> windows;
  for (std::size_t i = stuffed.data_begin; i < stuffed.data_end;) {
    if (stuffed.bits[i] != kDominant) {
      ++i;
      continue;
    }
    DominantWindow w{i, 0};
    while (i < stuffed.data_end && stuffed.bits[i] == kDominant) {
      ++w.bit_count;
      ++i;
    }
    windows.push_back(w);
  }
  return windows;
}

std::size_t count_dominant(std::span<const DominantWindow> windows) noexcept {
  std::size_t total = 0;
  for (const auto& w : windows) total += w.bit_count;
  return total;
}

}  // namespace hscan
