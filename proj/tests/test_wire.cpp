#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "cardio/rng.hpp"
#include "cardio/wire.hpp"

using namespace cardio;
using wire::DecodeStatus;
using wire::MediaKind;
using wire::MediaPacket;

namespace {

MediaPacket random_packet(SplitMix64& rng) {
  MediaPacket p;
  p.kind = rng.next_double() < 0.5 ? MediaKind::Audio : MediaKind::Video;
  const std::size_t unit = p.kind == MediaKind::Audio ? 2 : 3;
  p.timestamp_us = rng.next_u64() % 1'000'000'000ull;
  const std::size_t units = rng.next_u64() % 300;
  p.payload.resize(units * unit);
  for (auto& b : p.payload) b = static_cast<std::uint8_t>(rng.next_u64());
  return p;
}

}  // namespace

TEST_SUITE("wire") {
  TEST_CASE("packet round trip is byte exact") {
    SplitMix64 rng(11);
    for (int i = 0; i < 500; ++i) {
      const auto pkt = random_packet(rng);
      const auto bytes = wire::encode_packet(pkt);
      REQUIRE(bytes.size() == wire::kPacketHeaderBytes + pkt.payload.size());
      const auto res = wire::decode_packet(bytes);
      REQUIRE(res.status == DecodeStatus::Ok);
      CHECK(res.packet == pkt);
      CHECK(res.consumed == bytes.size());
      CHECK(res.skipped == 0);
    }
  }

  TEST_CASE("header record round trip") {
    wire::StreamHeader h{.video_height = 48, .video_width = 64, .audio_sample_rate = 8000,
                         .nominal_fps = 29.97};
    const auto bytes = wire::encode_header(h);
    REQUIRE(bytes.size() == wire::kHeaderRecordBytes);
    const auto res = wire::decode_header(bytes);
    REQUIRE(res.status == DecodeStatus::Ok);
    CHECK(res.header == h);
    CHECK(res.consumed == bytes.size());
  }

  TEST_CASE("payload divisibility is enforced") {
    MediaPacket p;
    p.kind = MediaKind::Video;
    p.payload.resize(4);  // not divisible by 3
    CHECK_THROWS_AS((void)wire::encode_packet(p), std::invalid_argument);
    p.kind = MediaKind::Audio;
    p.payload.resize(3);  // not divisible by 2
    CHECK_THROWS_AS((void)wire::encode_packet(p), std::invalid_argument);
  }

  TEST_CASE("decoder resyncs after junk") {
    SplitMix64 rng(13);
    MediaPacket a = random_packet(rng);
    MediaPacket b = random_packet(rng);
    std::vector<std::uint8_t> stream;
    for (int i = 0; i < 9; ++i) stream.push_back(static_cast<std::uint8_t>(rng.next_u64()));
    wire::append_packet(stream, a);
    stream.insert(stream.end(), {0xde, 0xad, 0xbe, 0xef});
    wire::append_packet(stream, b);

    auto r1 = wire::decode_packet(stream);
    REQUIRE(r1.status == DecodeStatus::Ok);
    CHECK(r1.packet == a);
    CHECK(r1.skipped == 9);
    auto r2 = wire::decode_packet(std::span(stream).subspan(r1.consumed));
    REQUIRE(r2.status == DecodeStatus::Ok);
    CHECK(r2.packet == b);
    CHECK(r2.skipped == 4);
  }

  TEST_CASE("corrupt kind byte resyncs to the next frame") {
    SplitMix64 rng(17);
    MediaPacket a = random_packet(rng);
    MediaPacket b = random_packet(rng);
    std::vector<std::uint8_t> stream = wire::encode_packet(a);
    stream[4] = 7;  // invalid kind, forces a resync scan from inside a
    wire::append_packet(stream, b);
    auto res = wire::decode_packet(stream);
    REQUIRE(res.status == DecodeStatus::Ok);
    CHECK(res.packet == b);
  }

  TEST_CASE("truncated frame asks for more without consuming the candidate") {
    SplitMix64 rng(19);
    MediaPacket a = random_packet(rng);
    auto bytes = wire::encode_packet(a);
    for (std::size_t cut : {1ul, wire::kPacketHeaderBytes - 1, bytes.size() - 1}) {
      auto res = wire::decode_packet(std::span(bytes).first(cut));
      CHECK(res.status == DecodeStatus::NeedMore);
      CHECK(res.consumed == 0);
    }
    // Junk before a truncated candidate is consumable immediately.
    std::vector<std::uint8_t> padded = {1, 2, 3};
    padded.insert(padded.end(), bytes.begin(), bytes.begin() + 10);
    auto res = wire::decode_packet(padded);
    CHECK(res.status == DecodeStatus::NeedMore);
    CHECK(res.consumed == 3);
  }

  TEST_CASE("junk with no magic is consumed except a possible magic prefix") {
    std::vector<std::uint8_t> junk = {9, 9, 9, 9, 9, 'C', 'R'};
    auto res = wire::decode_packet(junk);
    CHECK(res.status == DecodeStatus::NeedMore);
    // "CR" could be the start of a magic split across reads; it must survive.
    CHECK(res.consumed == 5);
  }

  TEST_CASE("header decode rejects other content at buffer start") {
    std::vector<std::uint8_t> buf = {'X', 'X', 'X', 'X', 0, 0, 0, 0, 0, 0, 0, 0,
                                     0,   0,   0,   0,   0, 0, 0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS((void)wire::decode_header(buf), std::invalid_argument);
    auto res = wire::decode_header(std::vector<std::uint8_t>{'C', 'R', 'D'});
    CHECK(res.status == DecodeStatus::NeedMore);
  }

  TEST_CASE("zero length payloads are legal") {
    MediaPacket p;
    p.kind = MediaKind::Audio;
    p.timestamp_us = 5;
    auto res = wire::decode_packet(wire::encode_packet(p));
    REQUIRE(res.status == DecodeStatus::Ok);
    CHECK(res.packet.payload.empty());
  }
}
