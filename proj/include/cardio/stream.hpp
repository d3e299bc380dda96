#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "cardio/wire.hpp"

namespace cardio::stream {

using PayloadPtr = std::shared_ptr<const std::vector<std::uint8_t>>;

struct BufferEntry {
  std::uint64_t timestamp_us = 0;
  PayloadPtr payload;
};

/// Time-ordered queue for one modality. Pushes must be strictly monotonic in
/// timestamp; violations are counted in dropped_late() and discarded. The
/// front-to-back span never exceeds capacity_us; overflow evicts the oldest
/// entries. One writer and one reader may run concurrently.
class StreamBuffer {
 public:
  StreamBuffer(wire::MediaKind kind, std::uint64_t capacity_us)
      : kind_(kind), capacity_us_(capacity_us) {}

  bool push(const wire::MediaPacket& pkt);
  bool push(std::uint64_t timestamp_us, PayloadPtr payload);

  wire::MediaKind kind() const { return kind_; }
  std::uint64_t capacity_us() const { return capacity_us_; }

  std::uint64_t dropped_late() const;
  std::uint64_t dropped_capacity() const;
  std::size_t size() const;
  bool empty() const;
  std::uint64_t span_us() const;
  std::optional<std::uint64_t> front_timestamp() const;
  std::optional<std::uint64_t> back_timestamp() const;

  std::vector<BufferEntry> snapshot() const;

  /// Drops entries with timestamp < ts; returns how many were removed.
  std::size_t evict_before(std::uint64_t ts);

 private:
  wire::MediaKind kind_;
  std::uint64_t capacity_us_;
  mutable std::mutex mu_;
  std::deque<BufferEntry> entries_;
  std::uint64_t dropped_late_ = 0;
  std::uint64_t dropped_capacity_ = 0;
};

struct SyncConfig {
  std::uint64_t window_us = 4'000'000;
  std::uint64_t step_us = 1'000'000;
  std::uint64_t epsilon_us = 300'000;  // max tolerated |t_a - t_v| before realigning
  double nominal_fps = 30.0;
  std::uint32_t audio_sample_rate = 8000;
};

struct VideoFrameRef {
  std::uint64_t timestamp_us = 0;
  PayloadPtr payload;
};

/// One synchronized slice of both modalities. Every contained timestamp lies
/// in [start_us, end_us); audio sample i sits at
/// audio_first_sample_us + i * 1e6 / sample_rate.
struct SyncWindow {
  std::uint64_t start_us = 0;
  std::uint64_t end_us = 0;
  bool realigned = false;
  bool video_only = false;
  std::vector<VideoFrameRef> video;
  std::vector<std::int16_t> audio;
  std::uint64_t audio_first_sample_us = 0;
};

struct EvictStats {
  std::size_t removed_audio = 0;
  std::size_t removed_video = 0;
};

/// Sliding-window scheduler over a pair of buffers. Cursors live on entry
/// timestamps (frames, audio chunks); each emission advances them by step_us
/// and they snap forward to the next available entry. When the cursors
/// drift apart by more than epsilon the window start jumps to the later one
/// and both snap to it (a realign event). Single scheduling thread assumed.
class Synchronizer {
 public:
  explicit Synchronizer(const SyncConfig& cfg) : cfg_(cfg) {}

  const SyncConfig& config() const { return cfg_; }

  /// Emits the next window when both modalities cover [start, start +
  /// window). With allow_video_only set, a covered video span is emitted
  /// even when audio is absent or starved (window.video_only = true, audio
  /// cursor untouched). Returns nullopt without mutating cursors otherwise.
  std::optional<SyncWindow> try_emit_window(StreamBuffer& qa, StreamBuffer& qv,
                                            bool allow_video_only = false);

  /// Drops every entry both cursors have moved past. Idempotent.
  EvictStats evict_processed(StreamBuffer& qa, StreamBuffer& qv);

  std::uint64_t realign_events() const { return realign_events_; }
  std::uint64_t windows_emitted() const { return windows_emitted_; }
  std::optional<std::uint64_t> video_cursor() const { return target_v_; }
  std::optional<std::uint64_t> audio_cursor() const { return target_a_; }

 private:
  SyncConfig cfg_;
  std::optional<std::uint64_t> target_v_;
  std::optional<std::uint64_t> target_a_;
  std::uint64_t realign_events_ = 0;
  std::uint64_t windows_emitted_ = 0;
};

}  // namespace cardio::stream
