#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "firstcontact/dsp.hpp"
#include "firstcontact/synth.hpp"

namespace firstcontact::wire {

// Frame layout, all multi-byte fields little-endian:
//
//   offset  size  field
//   0       2     sync 0xAA 0x55
//   2       2     seq (wraps at 2^16)
//   4       4     timestamp_us
//   8       2     piezo code (10-bit)
//   10      12    force codes, taxels (r0,c0) (r0,c1) (r1,c0) (r1,c1) (r2,c0) (r2,c1)
//   22      2     CRC-16/CCITT (poly 0x1021, init 0xFFFF) over bytes [0, 22)
inline constexpr std::size_t kFrameSize = 24;
inline constexpr std::size_t kCrcOffset = 22;
inline constexpr std::uint8_t kSync0 = 0xAA;
inline constexpr std::uint8_t kSync1 = 0x55;
inline constexpr std::uint16_t kMaxCode = 1023;

struct Frame {
  std::uint16_t seq = 0;
  std::uint32_t timestamp_us = 0;
  std::uint16_t piezo = 0;
  std::array<std::uint16_t, kForceChannels> force{};
  friend bool operator==(const Frame&, const Frame&) = default;
};

[[nodiscard]] std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes, std::uint16_t crc = 0xFFFF);

/// Throws std::out_of_range when a code exceeds 10 bits.
[[nodiscard]] std::array<std::uint8_t, kFrameSize> encode_frame(const Frame& frame);
/// nullopt unless sync, CRC and code ranges all check out.
[[nodiscard]] std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes);

struct ParserState {
  enum class Mode { hunting, synced };
  Mode mode = Mode::hunting;
  std::uint64_t frames_ok = 0;
  std::uint64_t crc_fail_count = 0;   // sync found but frame rejected
  std::uint64_t resync_count = 0;     // locks acquired after discarding bytes
  std::uint64_t bytes_discarded = 0;
  std::uint64_t seq_gap_count = 0;    // discontinuities in seq
  std::uint64_t frames_missing = 0;   // total frames implied missing by seq gaps
  std::uint16_t last_gap = 0;
  std::optional<std::uint16_t> last_seq;
  std::vector<std::uint8_t> pending;  // bytes not yet consumed
  bool skipped_since_lock = false;
};

/// Decodes every complete frame available after appending `chunk`. The decoded
/// sequence and counters depend only on the concatenated bytes, never on chunking.
std::vector<Frame> feed_parser(ParserState& state, std::span<const std::uint8_t> chunk);

class FrameParser {
 public:
  std::vector<Frame> feed(std::span<const std::uint8_t> chunk) { return feed_parser(state_, chunk); }
  [[nodiscard]] const ParserState& state() const { return state_; }

 private:
  ParserState state_;
};

/// One frame per sample; seq = index mod 2^16, timestamp from the sample rate.
[[nodiscard]] std::vector<std::uint8_t> stream_trace(const GraspTrace& trace, const AdcSpec& adc = {});

struct TraceChannels {
  std::vector<double> vibration;
  std::array<std::vector<double>, kForceChannels> force;
  std::vector<std::uint32_t> timestamp_us;
  std::vector<std::uint16_t> seq;
};

[[nodiscard]] TraceChannels parse_to_trace(std::span<const std::uint8_t> bytes, const AdcSpec& adc = {},
                                           ParserState* state_out = nullptr);

struct FuzzResult {
  std::size_t frames_sent = 0;
  std::size_t frames_decoded = 0;
  std::size_t corruptions = 0;
  ParserState counters;
};

/// Encodes random frames, flips `corruptions` random bytes (each in a different
/// frame), feeds the stream in random chunk sizes and reports what survived.
[[nodiscard]] FuzzResult fuzz(std::size_t frames, std::size_t corruptions, std::uint64_t seed);

}  // namespace firstcontact::wire
