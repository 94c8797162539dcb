#include <doctest.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "../oracles/crc_reference.hpp"
#include "firstcontact/synth.hpp"
#include "firstcontact/wire.hpp"
#include "gen.hpp"

using namespace firstcontact;

namespace {

wire::Frame random_frame(gen::Source& g, std::uint16_t seq) {
  wire::Frame f;
  f.seq = seq;
  f.timestamp_us = static_cast<std::uint32_t>(g.engine()());
  f.piezo = static_cast<std::uint16_t>(g.index(0, wire::kMaxCode));
  for (auto& v : f.force) v = static_cast<std::uint16_t>(g.index(0, wire::kMaxCode));
  return f;
}

std::vector<std::uint8_t> encode_all(const std::vector<wire::Frame>& frames) {
  std::vector<std::uint8_t> out;
  for (const auto& f : frames) {
    const auto b = wire::encode_frame(f);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

std::vector<wire::Frame> sequence(gen::Source& g, std::size_t n, std::uint16_t first = 0) {
  std::vector<wire::Frame> frames;
  for (std::size_t i = 0; i < n; ++i) frames.push_back(random_frame(g, static_cast<std::uint16_t>(first + i)));
  return frames;
}

}  // namespace

TEST_CASE("crc check value and agreement with the bitwise reference") {
  const std::uint8_t check[] = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
  CHECK(wire::crc16_ccitt(check) == 0x29B1);
  CHECK(oracle::crc16_bitwise(check, 9) == 0x29B1);
  gen::for_cases(1, 200, [](gen::Source& g, int) {
    std::vector<std::uint8_t> bytes(g.index(0, 64));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(g.index(0, 255));
    CHECK(wire::crc16_ccitt(bytes) == oracle::crc16_bitwise(bytes.data(), bytes.size()));
  });
}

TEST_CASE("frame layout") {
  wire::Frame f;
  f.seq = 0x0102;
  f.timestamp_us = 0x03040506;
  f.piezo = 0x0207;
  f.force = {1, 2, 3, 4, 5, 1023};
  const auto b = wire::encode_frame(f);
  CHECK(b[0] == 0xAA);
  CHECK(b[1] == 0x55);
  CHECK(b[2] == 0x02);
  CHECK(b[3] == 0x01);
  CHECK(b[4] == 0x06);
  CHECK(b[7] == 0x03);
  CHECK(b[8] == 0x07);
  CHECK(b[9] == 0x02);
  CHECK(b[20] == 0xFF);
  CHECK(b[21] == 0x03);
  const auto crc = oracle::crc16_bitwise(b.data(), wire::kCrcOffset);
  CHECK(b[22] == (crc & 0xFF));
  CHECK(b[23] == (crc >> 8));
}

TEST_CASE("all-zero payload round trips") {
  const wire::Frame f;
  const auto back = wire::decode_frame(wire::encode_frame(f));
  REQUIRE(back.has_value());
  CHECK(*back == f);
}

TEST_CASE("out-of-range codes are rejected on both sides") {
  wire::Frame f;
  f.piezo = 1024;
  CHECK_THROWS_AS((void)wire::encode_frame(f), std::out_of_range);
  f.piezo = 0;
  f.force[5] = 4000;
  CHECK_THROWS_AS((void)wire::encode_frame(f), std::out_of_range);

  // A frame carrying an 11-bit code with a valid CRC still fails to decode.
  auto b = wire::encode_frame(wire::Frame{});
  b[9] = 0x04;
  const auto crc = wire::crc16_ccitt(std::span(b).first(wire::kCrcOffset));
  b[22] = static_cast<std::uint8_t>(crc & 0xFF);
  b[23] = static_cast<std::uint8_t>(crc >> 8);
  CHECK_FALSE(wire::decode_frame(b).has_value());
  CHECK_FALSE(wire::decode_frame(std::span(b).first(23)).has_value());
}

TEST_CASE("encode/decode round trip") {
  gen::for_cases(2, 2000, [](gen::Source& g, int) {
    const auto f = random_frame(g, static_cast<std::uint16_t>(g.index(0, 65535)));
    const auto back = wire::decode_frame(wire::encode_frame(f));
    REQUIRE(back.has_value());
    CHECK(*back == f);
  });
}

TEST_CASE("decoding does not depend on chunking") {
  gen::for_cases(3, 30, [](gen::Source& g, int) {
    const auto frames = sequence(g, g.index(1, 40));
    const auto bytes = encode_all(frames);
    wire::FrameParser p;
    std::vector<wire::Frame> got;
    for (std::size_t at = 0; at < bytes.size();) {
      const std::size_t n = std::min(bytes.size() - at, g.index(1, 50));
      const auto f = p.feed(std::span(bytes).subspan(at, n));
      got.insert(got.end(), f.begin(), f.end());
      at += n;
    }
    CHECK(got == frames);
    CHECK(p.state().frames_ok == frames.size());
    CHECK(p.state().crc_fail_count == 0);
  });
}

TEST_CASE("a corrupted frame costs only that frame") {
  gen::Source g(4);
  const auto frames = sequence(g, 100);
  for (std::size_t k : {0UL, 1UL, 50UL, 99UL}) {
    auto bytes = encode_all(frames);
    bytes[k * wire::kFrameSize + 12] ^= 0x10;
    wire::FrameParser p;
    const auto got = p.feed(bytes);
    CHECK(got.size() == 99);
    for (const auto& f : got) CHECK(f.seq != k);
  }
}

TEST_CASE("parser resynchronizes after a mid-frame start") {
  gen::Source g(5);
  const auto frames = sequence(g, 20);
  const auto bytes = encode_all(frames);
  wire::FrameParser p;
  const auto got = p.feed(std::span(bytes).subspan(10));
  REQUIRE(got.size() == 19);
  CHECK(got.front() == frames[1]);
  CHECK(p.state().resync_count >= 1);
  CHECK(p.state().bytes_discarded >= 14);
}

TEST_CASE("sequence gaps are counted") {
  gen::Source g(6);
  auto frames = sequence(g, 10);
  const std::size_t drop = 3;
  frames.erase(frames.begin() + 4, frames.begin() + 4 + static_cast<std::ptrdiff_t>(drop));
  wire::FrameParser p;
  CHECK(p.feed(encode_all(frames)).size() == 7);
  CHECK(p.state().seq_gap_count == 1);
  CHECK(p.state().frames_missing == drop);
  CHECK(p.state().last_gap == drop);
}

TEST_CASE("sequence wrap is not a gap") {
  gen::Source g(7);
  const auto frames = sequence(g, 6, 65533);
  wire::FrameParser p;
  CHECK(p.feed(encode_all(frames)).size() == 6);
  CHECK(p.state().seq_gap_count == 0);
}

TEST_CASE("trace streaming round trip") {
  SynthConfig cfg;
  Rng rng(8);
  const auto t = synthesize_grasp(cfg, StiffnessLabel(43), rng);
  const auto bytes = wire::stream_trace(t, cfg.adc());
  CHECK(bytes.size() == t.size() * wire::kFrameSize);
  wire::ParserState st;
  const auto back = wire::parse_to_trace(bytes, cfg.adc(), &st);
  CHECK(back.vibration == t.vibration);
  for (std::size_t c = 0; c < kForceChannels; ++c) CHECK(back.force[c] == t.force[c]);
  for (std::size_t i = 1; i < back.timestamp_us.size(); ++i) {
    CHECK(back.timestamp_us[i] > back.timestamp_us[i - 1]);
    CHECK(back.seq[i] == static_cast<std::uint16_t>(back.seq[i - 1] + 1));
  }
  CHECK(st.frames_ok == t.size());
}

TEST_CASE("fuzzing loses at most one frame per corruption") {
  gen::for_cases(9, 10, [](gen::Source& g, int) {
    const std::size_t frames = g.index(50, 400);
    const std::size_t corruptions = g.index(0, 10);
    const auto r = wire::fuzz(frames, corruptions, g.engine()());
    CHECK(r.frames_sent == frames);
    CHECK(r.corruptions == corruptions);
    CHECK(r.frames_decoded + 2 * corruptions >= frames);
    CHECK(r.frames_decoded <= frames);
  });
}
