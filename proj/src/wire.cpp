#include "firstcontact/wire.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "firstcontact/random.hpp"

namespace firstcontact::wire {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> t{};
  for (std::uint16_t i = 0; i < 256; ++i) {
    std::uint16_t c = static_cast<std::uint16_t>(i << 8);
    for (int b = 0; b < 8; ++b) c = static_cast<std::uint16_t>((c & 0x8000) ? (c << 1) ^ 0x1021 : c << 1);
    t[i] = c;
  }
  return t;
}

constexpr auto kCrcTable = make_crc_table();

void put16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v & 0xFF);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

void put32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

std::uint16_t get16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes, std::uint16_t crc) {
  for (std::uint8_t b : bytes) crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ b) & 0xFF]);
  return crc;
}

std::array<std::uint8_t, kFrameSize> encode_frame(const Frame& frame) {
  if (frame.piezo > kMaxCode) throw std::out_of_range("encode_frame: piezo code " + std::to_string(frame.piezo) + " > 1023");
  for (auto f : frame.force)
    if (f > kMaxCode) throw std::out_of_range("encode_frame: force code " + std::to_string(f) + " > 1023");
  std::array<std::uint8_t, kFrameSize> out{};
  out[0] = kSync0;
  out[1] = kSync1;
  put16(&out[2], frame.seq);
  put32(&out[4], frame.timestamp_us);
  put16(&out[8], frame.piezo);
  for (std::size_t ch = 0; ch < kForceChannels; ++ch) put16(&out[10 + 2 * ch], frame.force[ch]);
  put16(&out[kCrcOffset], crc16_ccitt(std::span(out).first(kCrcOffset)));
  return out;
}

std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameSize || bytes[0] != kSync0 || bytes[1] != kSync1) return std::nullopt;
  if (crc16_ccitt(bytes.first(kCrcOffset)) != get16(&bytes[kCrcOffset])) return std::nullopt;
  Frame f;
  f.seq = get16(&bytes[2]);
  f.timestamp_us = get32(&bytes[4]);
  f.piezo = get16(&bytes[8]);
  if (f.piezo > kMaxCode) return std::nullopt;
  for (std::size_t ch = 0; ch < kForceChannels; ++ch) {
    f.force[ch] = get16(&bytes[10 + 2 * ch]);
    if (f.force[ch] > kMaxCode) return std::nullopt;
  }
  return f;
}

std::vector<Frame> feed_parser(ParserState& state, std::span<const std::uint8_t> chunk) {
  auto& buf = state.pending;
  buf.insert(buf.end(), chunk.begin(), chunk.end());
  std::vector<Frame> out;
  std::size_t pos = 0;
  while (buf.size() - pos >= 2) {
    if (buf[pos] != kSync0 || buf[pos + 1] != kSync1) {
      state.mode = ParserState::Mode::hunting;
      state.skipped_since_lock = true;
      ++state.bytes_discarded;
      ++pos;
      continue;
    }
    if (buf.size() - pos < kFrameSize) break;
    const auto frame = decode_frame(std::span(buf).subspan(pos, kFrameSize));
    if (!frame) {
      ++state.crc_fail_count;
      state.mode = ParserState::Mode::hunting;
      state.skipped_since_lock = true;
      ++state.bytes_discarded;
      ++pos;
      continue;
    }
    if (state.skipped_since_lock) {
      ++state.resync_count;
      state.skipped_since_lock = false;
    }
    state.mode = ParserState::Mode::synced;
    ++state.frames_ok;
    if (state.last_seq) {
      const auto expected = static_cast<std::uint16_t>(*state.last_seq + 1);
      if (frame->seq != expected) {
        ++state.seq_gap_count;
        state.last_gap = static_cast<std::uint16_t>(frame->seq - expected);
        state.frames_missing += state.last_gap;
      }
    }
    state.last_seq = frame->seq;
    out.push_back(*frame);
    pos += kFrameSize;
  }
  buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(pos));
  return out;
}

std::vector<std::uint8_t> stream_trace(const GraspTrace& trace, const AdcSpec& adc) {
  std::vector<std::uint8_t> out;
  out.reserve(trace.size() * kFrameSize);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    Frame f;
    f.seq = static_cast<std::uint16_t>(k & 0xFFFF);
    f.timestamp_us = static_cast<std::uint32_t>(
        static_cast<std::uint64_t>(std::llround(static_cast<double>(k) * 1e6 / trace.sample_rate_hz)) & 0xFFFFFFFFULL);
    f.piezo = quantize(trace.vibration[k], adc);
    for (std::size_t ch = 0; ch < kForceChannels; ++ch) f.force[ch] = quantize(trace.force[ch][k], adc);
    const auto bytes = encode_frame(f);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

TraceChannels parse_to_trace(std::span<const std::uint8_t> bytes, const AdcSpec& adc, ParserState* state_out) {
  ParserState state;
  const auto frames = feed_parser(state, bytes);
  TraceChannels t;
  for (const auto& f : frames) {
    t.vibration.push_back(dequantize(f.piezo, adc));
    for (std::size_t ch = 0; ch < kForceChannels; ++ch) t.force[ch].push_back(dequantize(f.force[ch], adc));
    t.timestamp_us.push_back(f.timestamp_us);
    t.seq.push_back(f.seq);
  }
  if (state_out) *state_out = std::move(state);
  return t;
}

FuzzResult fuzz(std::size_t frames, std::size_t corruptions, std::uint64_t seed) {
  if (corruptions > frames) throw std::invalid_argument("fuzz: more corruptions than frames");
  Rng rng(derive_seed(seed, 0x66757A7A));
  std::uniform_int_distribution<std::uint16_t> code(0, kMaxCode);
  std::vector<std::uint8_t> stream;
  stream.reserve(frames * kFrameSize);
  for (std::size_t i = 0; i < frames; ++i) {
    Frame f;
    f.seq = static_cast<std::uint16_t>(i);
    f.timestamp_us = static_cast<std::uint32_t>(rng());
    f.piezo = code(rng);
    for (auto& c : f.force) c = code(rng);
    const auto b = encode_frame(f);
    stream.insert(stream.end(), b.begin(), b.end());
  }
  std::vector<std::size_t> victims(frames);
  std::iota(victims.begin(), victims.end(), 0);
  std::shuffle(victims.begin(), victims.end(), rng);
  victims.resize(corruptions);
  std::uniform_int_distribution<std::size_t> offset(0, kFrameSize - 1);
  std::uniform_int_distribution<int> bit(0, 7);
  for (std::size_t v : victims) stream[v * kFrameSize + offset(rng)] ^= static_cast<std::uint8_t>(1u << bit(rng));

  FuzzResult r;
  r.frames_sent = frames;
  r.corruptions = corruptions;
  std::uniform_int_distribution<std::size_t> chunk(1, 3 * kFrameSize);
  for (std::size_t pos = 0; pos < stream.size();) {
    const std::size_t n = std::min(chunk(rng), stream.size() - pos);
    r.frames_decoded += feed_parser(r.counters, std::span(stream).subspan(pos, n)).size();
    pos += n;
  }
  return r;
}

}  // namespace firstcontact::wire
