#include "cardio/wire.hpp"

#include <cstring>
#include <limits>
#include <stdexcept>

namespace cardio::wire {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

bool len_valid(MediaKind kind, std::uint64_t len) {
  return kind == MediaKind::Video ? (len % 3 == 0) : (len % 2 == 0);
}

// Index of the first magic at or after `from`, or npos.
std::size_t find_magic(std::span<const std::uint8_t> buf, std::size_t from,
                       const std::array<std::uint8_t, 4>& magic) {
  if (buf.size() < magic.size()) return std::string::npos;
  for (std::size_t i = from; i + magic.size() <= buf.size(); ++i) {
    if (std::memcmp(buf.data() + i, magic.data(), magic.size()) == 0) return i;
  }
  return std::string::npos;
}

// Longest magic prefix that the buffer ends with (for NeedMore bookkeeping).
std::size_t magic_suffix_overlap(std::span<const std::uint8_t> buf,
                                 const std::array<std::uint8_t, 4>& magic) {
  const std::size_t max_k = std::min(buf.size(), magic.size() - 1);
  for (std::size_t k = max_k; k > 0; --k) {
    if (std::memcmp(buf.data() + buf.size() - k, magic.data(), k) == 0) return k;
  }
  return 0;
}

}  // namespace

std::vector<std::uint8_t> encode_packet(const MediaPacket& pkt) {
  std::vector<std::uint8_t> out;
  append_packet(out, pkt);
  return out;
}

void append_packet(std::vector<std::uint8_t>& out, const MediaPacket& pkt) {
  if (pkt.kind != MediaKind::Audio && pkt.kind != MediaKind::Video)
    throw std::invalid_argument("encode_packet: bad media kind");
  if (pkt.payload.size() > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("encode_packet: payload exceeds u32 length field");
  if (!len_valid(pkt.kind, pkt.payload.size()))
    throw std::invalid_argument("encode_packet: payload length violates kind alignment");
  out.reserve(out.size() + kPacketHeaderBytes + pkt.payload.size());
  out.insert(out.end(), kPacketMagic.begin(), kPacketMagic.end());
  out.push_back(static_cast<std::uint8_t>(pkt.kind));
  put_u32(out, static_cast<std::uint32_t>(pkt.payload.size()));
  put_u64(out, pkt.timestamp_us);
  out.insert(out.end(), pkt.payload.begin(), pkt.payload.end());
}

DecodeResult decode_packet(std::span<const std::uint8_t> buf) {
  std::size_t pos = 0;
  while (true) {
    const std::size_t p = find_magic(buf, pos, kPacketMagic);
    if (p == std::string::npos) {
      DecodeResult r;
      // Everything except a possible partial magic at the tail is junk.
      r.consumed = buf.size() - magic_suffix_overlap(buf, kPacketMagic);
      r.skipped = r.consumed;
      return r;
    }
    if (buf.size() - p < kPacketHeaderBytes) {
      DecodeResult r;
      r.consumed = p;
      r.skipped = p;
      return r;
    }
    const std::uint8_t kind_byte = buf[p + 4];
    if (kind_byte > 1) {
      pos = p + 1;  // corrupt kind: resync on the next magic
      continue;
    }
    const auto kind = static_cast<MediaKind>(kind_byte);
    const std::uint32_t payload_len = get_u32(buf.data() + p + 5);
    if (!len_valid(kind, payload_len)) {
      pos = p + 1;
      continue;
    }
    if (buf.size() - p - kPacketHeaderBytes < payload_len) {
      DecodeResult r;
      r.consumed = p;
      r.skipped = p;
      return r;
    }
    DecodeResult r;
    r.status = DecodeStatus::Ok;
    r.packet.kind = kind;
    r.packet.timestamp_us = get_u64(buf.data() + p + 9);
    const std::uint8_t* body = buf.data() + p + kPacketHeaderBytes;
    r.packet.payload.assign(body, body + payload_len);
    r.consumed = p + kPacketHeaderBytes + payload_len;
    r.skipped = p;
    return r;
  }
}

std::vector<std::uint8_t> encode_header(const StreamHeader& hdr) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderRecordBytes);
  out.insert(out.end(), kHeaderMagic.begin(), kHeaderMagic.end());
  put_u32(out, hdr.video_height);
  put_u32(out, hdr.video_width);
  put_u32(out, hdr.audio_sample_rate);
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(hdr.nominal_fps));
  std::memcpy(&bits, &hdr.nominal_fps, sizeof(bits));
  put_u64(out, bits);
  return out;
}

HeaderDecodeResult decode_header(std::span<const std::uint8_t> buf) {
  HeaderDecodeResult r;
  if (buf.size() < kHeaderRecordBytes) return r;
  if (std::memcmp(buf.data(), kHeaderMagic.data(), kHeaderMagic.size()) != 0)
    throw std::invalid_argument("decode_header: missing CRDH magic");
  r.header.video_height = get_u32(buf.data() + 4);
  r.header.video_width = get_u32(buf.data() + 8);
  r.header.audio_sample_rate = get_u32(buf.data() + 12);
  const std::uint64_t bits = get_u64(buf.data() + 16);
  std::memcpy(&r.header.nominal_fps, &bits, sizeof(bits));
  r.status = DecodeStatus::Ok;
  r.consumed = kHeaderRecordBytes;
  return r;
}

}  // namespace cardio::wire
