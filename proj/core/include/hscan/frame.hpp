#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hscan {

/// One bus bit: 0 = dominant (D), 1 = recessive (R).
using Bit = std::uint8_t;
using BitStream = std::vector<Bit>;

inline constexpr Bit kDominant = 0;
inline constexpr Bit kRecessive = 1;

/// Field widths of the serialized (unstuffed) standard frame. They add up
/// to 46 overhead bits, so an 8-byte frame occupies 110 bit periods.
namespace field {
inline constexpr std::size_t kSof = 1;
inline constexpr std::size_t kIdentifier = 11;
inline constexpr std::size_t kArbitration = 12;  // identifier + RTR
inline constexpr std::size_t kControl = 6;       // IDE, r0, 4-bit length code
inline constexpr std::size_t kCrc = 15;
inline constexpr std::size_t kCrcDelimiter = 1;
inline constexpr std::size_t kAck = 1;  // slot only; see README "Frame layout"
inline constexpr std::size_t kEof = 7;
inline constexpr std::size_t kIfs = 3;

inline constexpr std::size_t kHeader = kSof + kArbitration + kControl;
inline constexpr std::size_t kTrailer = kCrcDelimiter + kAck + kEof + kIfs;
inline constexpr std::size_t kOverhead = kHeader + kCrc + kTrailer;
}  // namespace field

inline constexpr std::size_t kMaxStandardDataBits = 64;
inline constexpr std::uint16_t kMaxIdentifier = (1u << field::kIdentifier) - 1;

class FrameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by unstuff() when six identical bits appear inside the stuffed
/// region. `position` indexes the offending (sixth) bit in the input.
class StuffingViolation : public std::runtime_error {
 public:
  StuffingViolation(std::size_t position, const std::string& what)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

struct CanFrame {
  std::uint16_t identifier = 0;
  BitStream data;
  bool extended_data_mode = false;

  std::size_t dlc_bits() const noexcept { return data.size(); }
  /// 4-bit length code carried in the control field.
  std::uint8_t length_code() const noexcept;
};

/// Result of stuffing. `data_begin`/`data_end` locate the data field inside
/// `bits` (half-open) when the stream came from stuff_frame(); both are zero
/// for a plain stuff() call.
struct StuffedFrame {
  BitStream bits;
  std::vector<std::size_t> stuff_positions;
  std::size_t data_begin = 0;
  std::size_t data_end = 0;
};

/// A run of consecutive dominant data-field bits in the stuffed stream.
struct DominantWindow {
  std::size_t first_bit = 0;  // index into StuffedFrame::bits
  std::size_t bit_count = 0;
};

CanFrame build_frame(std::uint16_t identifier, BitStream data, bool extended_data_mode = false);

/// SOF through the end of the data field, i.e. the CRC input.
BitStream serialize_crc_region(const CanFrame& frame);

/// Full unstuffed frame: SOF .. IFS.
BitStream serialize(const CanFrame& frame);

/// CAN 2.0 CRC-15 (x^15+x^14+x^10+x^8+x^7+x^4+x^3+1), zero initial register.
std::uint16_t crc15(std::span<const Bit> bits);

/// Inserts a complement bit after every five identical bits. Inserted bits
/// take part in subsequent run detection.
StuffedFrame stuff(std::span<const Bit> bits);

/// Inverse of stuff(); throws StuffingViolation on a run of six.
BitStream unstuff(std::span<const Bit> bits);

/// Half-open location of the data field inside a stuffed stream.
struct DataFieldSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Walks a stuffed frame from SOF, skipping stuff bits, and returns where
/// the `data_bits`-long data field sits. A stuff bit right after the last
/// data bit is counted as part of the field's bus time.
DataFieldSpan locate_data_field(std::span<const Bit> stuffed, std::size_t data_bits);

/// Stuffs SOF..CRC and appends the fixed-form delimiter/ACK/EOF/IFS tail.
StuffedFrame stuff_frame(const CanFrame& frame);

/// Bitwise wired-AND arbitration, MSB first. Returns the surviving
/// identifier, which is the numeric minimum.
std::uint16_t arbitrate(std::span<const std::uint16_t> identifiers);

/// Dominant runs inside the data field of a stuffed frame, in bus order.
std::vector<DominantWindow> dominant_schedule(const StuffedFrame& stuffed);

std::size_t count_dominant(std::span<const DominantWindow> windows) noexcept;

/// True if every element is 0 or 1.
bool is_valid_bitstream(std::span<const Bit> bits) noexcept;

}  // namespace hscan
