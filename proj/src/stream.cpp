#include "cardio/stream.hpp"

#include <cmath>
#include <stdexcept>

namespace cardio::stream {

namespace {

std::size_t chunk_samples(const BufferEntry& e) { return e.payload ? e.payload->size() / 2 : 0; }

std::int16_t sample_at(const BufferEntry& e, std::size_t i) {
  const std::uint8_t* p = e.payload->data() + 2 * i;
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0]) |
                                   (static_cast<std::uint16_t>(p[1]) << 8));
}

// First sample index in the chunk with timestamp >= ts; may equal the count.
std::size_t first_index_at_or_after(const BufferEntry& e, std::uint64_t ts, std::uint32_t rate) {
  if (ts <= e.timestamp_us) return 0;
  const double delta = static_cast<double>(ts - e.timestamp_us);
  const double idx = std::ceil(delta * static_cast<double>(rate) / 1e6 - 1e-6);
  const std::size_t n = chunk_samples(e);
  if (idx <= 0.0) return 0;
  if (idx >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(idx);
}

std::uint64_t sample_timestamp(const BufferEntry& e, std::size_t i, std::uint32_t rate) {
  return e.timestamp_us + static_cast<std::uint64_t>(std::llround(
                              static_cast<double>(i) * 1e6 / static_cast<double>(rate)));
}

}  // namespace

bool StreamBuffer::push(const wire::MediaPacket& pkt) {
  if (pkt.kind != kind_) throw std::invalid_argument("StreamBuffer: packet kind mismatch");
  return push(pkt.timestamp_us, std::make_shared<const std::vector<std::uint8_t>>(pkt.payload));
}

bool StreamBuffer::push(std::uint64_t timestamp_us, PayloadPtr payload) {
  std::lock_guard lk(mu_);
  if (!entries_.empty() && timestamp_us <= entries_.back().timestamp_us) {
    ++dropped_late_;
    return false;
  }
  entries_.push_back(BufferEntry{timestamp_us, std::move(payload)});
  while (entries_.size() > 1 &&
         entries_.back().timestamp_us - entries_.front().timestamp_us > capacity_us_) {
    entries_.pop_front();
    ++dropped_capacity_;
  }
  return true;
}

std::uint64_t StreamBuffer::dropped_late() const {
  std::lock_guard lk(mu_);
  return dropped_late_;
}

std::uint64_t StreamBuffer::dropped_capacity() const {
  std::lock_guard lk(mu_);
  return dropped_capacity_;
}

std::size_t StreamBuffer::size() const {
  std::lock_guard lk(mu_);
  return entries_.size();
}

bool StreamBuffer::empty() const {
  std::lock_guard lk(mu_);
  return entries_.empty();
}

std::uint64_t StreamBuffer::span_us() const {
  std::lock_guard lk(mu_);
  if (entries_.size() < 2) return 0;
  return entries_.back().timestamp_us - entries_.front().timestamp_us;
}

std::optional<std::uint64_t> StreamBuffer::front_timestamp() const {
  std::lock_guard lk(mu_);
  if (entries_.empty()) return std::nullopt;
  return entries_.front().timestamp_us;
}

std::optional<std::uint64_t> StreamBuffer::back_timestamp() const {
  std::lock_guard lk(mu_);
  if (entries_.empty()) return std::nullopt;
  return entries_.back().timestamp_us;
}

std::vector<BufferEntry> StreamBuffer::snapshot() const {
  std::lock_guard lk(mu_);
  return {entries_.begin(), entries_.end()};
}

std::size_t StreamBuffer::evict_before(std::uint64_t ts) {
  std::lock_guard lk(mu_);
  std::size_t n = 0;
  while (!entries_.empty() && entries_.front().timestamp_us < ts) {
    entries_.pop_front();
    ++n;
  }
  return n;
}

std::optional<SyncWindow> Synchronizer::try_emit_window(StreamBuffer& qa, StreamBuffer& qv,
                                                        bool allow_video_only) {
  const auto vframes = qv.snapshot();
  if (vframes.empty()) return std::nullopt;
  const auto achunks = qa.snapshot();

  if (!target_v_) target_v_ = vframes.front().timestamp_us;
  if (!target_a_ && !achunks.empty()) target_a_ = achunks.front().timestamp_us;

  // Cursors resolve to the first entry timestamp at or past their targets.
  std::size_t v_begin = vframes.size();
  for (std::size_t i = 0; i < vframes.size(); ++i) {
    if (vframes[i].timestamp_us >= *target_v_) {
      v_begin = i;
      break;
    }
  }
  if (v_begin == vframes.size()) return std::nullopt;
  const std::uint64_t t_v = vframes[v_begin].timestamp_us;

  std::optional<std::uint64_t> t_a;
  if (target_a_) {
    for (const auto& c : achunks) {
      if (c.timestamp_us >= *target_a_) {
        t_a = c.timestamp_us;
        break;
      }
    }
  }

  bool realign = false;
  std::uint64_t start = t_v;
  if (t_a) {
    const std::uint64_t hi = std::max(*t_a, t_v);
    const std::uint64_t lo = std::min(*t_a, t_v);
    if (hi - lo > cfg_.epsilon_us) {
      realign = true;
      start = hi;
    } else {
      start = lo;
    }
  }
  std::uint64_t end = start + cfg_.window_us;

  const auto frame_interval_us =
      static_cast<std::uint64_t>(std::llround(1e6 / cfg_.nominal_fps));
  const std::uint32_t rate = cfg_.audio_sample_rate;

  auto video_covers = [&](std::uint64_t lo, std::uint64_t hi_end) {
    return lo < hi_end && vframes.back().timestamp_us + frame_interval_us >= hi_end;
  };
  auto audio_covers = [&](std::uint64_t lo, std::uint64_t hi_end) {
    if (achunks.empty() || lo >= hi_end) return false;
    const auto& last = achunks.back();
    return sample_timestamp(last, chunk_samples(last), rate) >= hi_end;
  };

  std::uint64_t v_lo = t_v;
  std::uint64_t a_lo = t_a.value_or(0);
  if (realign) {
    // Both effective starts jump to the shared realigned start.
    bool found = false;
    for (std::size_t i = v_begin; i < vframes.size(); ++i) {
      if (vframes[i].timestamp_us >= start) {
        v_begin = i;
        v_lo = vframes[i].timestamp_us;
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;  // video has not reached the realigned start yet
    a_lo = start;
  }

  bool full_window = t_a && video_covers(v_lo, end) && audio_covers(a_lo, end);
  bool video_only = false;
  if (!full_window) {
    // Audio absent or starved; the caller decides whether video may go alone.
    if (!allow_video_only) return std::nullopt;
    realign = false;
    start = t_v;
    end = start + cfg_.window_us;
    v_lo = t_v;
    if (!video_covers(v_lo, end)) return std::nullopt;
    video_only = true;
  }

  SyncWindow w;
  w.start_us = start;
  w.end_us = end;
  w.realigned = realign;
  w.video_only = video_only;
  for (std::size_t i = v_begin; i < vframes.size(); ++i) {
    const std::uint64_t ts = vframes[i].timestamp_us;
    if (ts >= end) break;
    if (ts < v_lo) continue;
    w.video.push_back(VideoFrameRef{ts, vframes[i].payload});
  }
  if (!video_only) {
    bool first = true;
    for (const auto& c : achunks) {
      const std::size_t n = chunk_samples(c);
      const std::size_t i0 = first_index_at_or_after(c, a_lo, rate);
      const std::size_t i1 = first_index_at_or_after(c, end, rate);
      for (std::size_t i = i0; i < i1 && i < n; ++i) {
        if (first) {
          w.audio_first_sample_us = sample_timestamp(c, i, rate);
          first = false;
        }
        w.audio.push_back(sample_at(c, i));
      }
    }
  }

  // Per-modality cursor advance; a realign collapses both onto the shared
  // start. A starved-audio emission leaves the audio cursor untouched.
  target_v_ = (realign ? start : t_v) + cfg_.step_us;
  if (!video_only && t_a) target_a_ = (realign ? start : *t_a) + cfg_.step_us;
  if (realign) ++realign_events_;
  ++windows_emitted_;
  return w;
}

EvictStats Synchronizer::evict_processed(StreamBuffer& qa, StreamBuffer& qv) {
  EvictStats st;
  if (target_v_) st.removed_video = qv.evict_before(*target_v_);
  if (target_a_) st.removed_audio = qa.evict_before(*target_a_);
  return st;
}

}  // namespace cardio::stream
