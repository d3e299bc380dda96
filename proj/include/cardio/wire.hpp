#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cardio::wire {

// Frame layout, little-endian:
//   magic "CRDL" | kind u8 (0=audio, 1=video) | payload_len u32 | timestamp_us u64 | payload
inline constexpr std::array<std::uint8_t, 4> kPacketMagic = {'C', 'R', 'D', 'L'};
inline constexpr std::size_t kPacketHeaderBytes = 17;

// Capture files start with one header record:
//   magic "CRDH" | video_height u32 | video_width u32 | audio_sample_rate u32 | nominal_fps f64
inline constexpr std::array<std::uint8_t, 4> kHeaderMagic = {'C', 'R', 'D', 'H'};
inline constexpr std::size_t kHeaderRecordBytes = 24;

enum class MediaKind : std::uint8_t { Audio = 0, Video = 1 };

/// Video payload is interleaved RGB8 (len divisible by 3); audio payload is
/// s16le PCM (len divisible by 2).
struct MediaPacket {
  MediaKind kind = MediaKind::Audio;
  std::uint64_t timestamp_us = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const MediaPacket&) const = default;
};

struct StreamHeader {
  std::uint32_t video_height = 0;
  std::uint32_t video_width = 0;
  std::uint32_t audio_sample_rate = 0;
  double nominal_fps = 0.0;

  bool operator==(const StreamHeader&) const = default;
};

/// Throws std::invalid_argument when the payload violates the kind's
/// divisibility rule or exceeds the u32 length field.
std::vector<std::uint8_t> encode_packet(const MediaPacket& pkt);
void append_packet(std::vector<std::uint8_t>& out, const MediaPacket& pkt);

enum class DecodeStatus { Ok, NeedMore };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMore;
  MediaPacket packet;       // valid only when status == Ok
  std::size_t consumed = 0; // safe to drop from the front of the buffer
  std::size_t skipped = 0;  // junk bytes before the accepted frame
};

/// Scans for the next well-formed frame. Corrupt candidates (bad kind byte,
/// divisibility failure) are skipped by resyncing on the next magic. A
/// truncated frame yields NeedMore with consumed = junk before the candidate.
DecodeResult decode_packet(std::span<const std::uint8_t> buf);

std::vector<std::uint8_t> encode_header(const StreamHeader& hdr);

struct HeaderDecodeResult {
  DecodeStatus status = DecodeStatus::NeedMore;
  StreamHeader header;
  std::size_t consumed = 0;
};

/// Header records are only valid at the start of the buffer; no resync.
HeaderDecodeResult decode_header(std::span<const std::uint8_t> buf);

}  // namespace cardio::wire
