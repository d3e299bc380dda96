#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cardio/stream.hpp"
#include "cardio/tensor.hpp"
#include "cardio/wire.hpp"

namespace cardio::resample {

struct NormalizeOptions {
  double target_fps = 30.0;
  std::uint32_t target_audio_rate = 8000;
};

/// Fixed-rate window ready for the kernels: frames [N, H, W, 3] scaled to
/// [0, 1], audio [M] scaled to [-1, 1], frame_times_s are seconds relative to
/// start_us (duplicated frames repeat their source time).
struct NormalizedWindow {
  TensorNd frames;
  std::vector<double> frame_times_s;
  TensorNd audio;
  bool realigned = false;
  bool video_only = false;
  std::uint64_t start_us = 0;
  std::uint64_t end_us = 0;
  std::uint32_t duplicated_frames = 0;
  std::uint32_t dropped_frames = 0;
  std::uint32_t padded_audio_samples = 0;
};

/// Source index for each output slot when stretching n frames to target.
/// Inserts a duplicate after every floor(n / (target - n)) originals,
/// cycling; once all duplicates are placed the tail repeats the last frame.
std::vector<std::size_t> duplication_plan(std::size_t n, std::size_t target);

/// Source index per output slot when compressing: round(i * (n-1) / (target-1)).
std::vector<std::size_t> decimation_plan(std::size_t n, std::size_t target);

struct VideoNormResult {
  TensorNd frames;
  std::vector<double> times_s;
  std::uint32_t duplicated = 0;
  std::uint32_t dropped = 0;
};

/// Normalizes a window's frames to round(window_s * target_fps) slots.
/// Frames must carry interleaved RGB8 payloads of exactly height*width*3.
VideoNormResult normalize_video(std::span<const stream::VideoFrameRef> frames,
                                std::uint32_t height, std::uint32_t width,
                                std::uint64_t start_us, double window_s, double target_fps);

struct AudioNormResult {
  TensorNd audio;
  std::uint32_t padded = 0;
};

/// Resamples to round(window_s * target_rate) samples via a windowed-sinc
/// lowpass (64 taps, Hamming). Only downsampling or pass-through is
/// supported; src_rate < target_rate throws. Short input is zero-padded at
/// the tail (counted).
AudioNormResult normalize_audio(std::span<const std::int16_t> samples, std::uint32_t src_rate,
                                std::uint32_t target_rate, double window_s);

NormalizedWindow normalize_window(const stream::SyncWindow& win, const wire::StreamHeader& hdr,
                                  const NormalizeOptions& opt = {});

}  // namespace cardio::resample
