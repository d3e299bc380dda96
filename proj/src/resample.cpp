#include "cardio/resample.hpp"

#include <cmath>
#include <stdexcept>

namespace cardio::resample {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::size_t target_count(double window_s, double rate) {
  return static_cast<std::size_t>(std::llround(window_s * rate));
}

}  // namespace

std::vector<std::size_t> duplication_plan(std::size_t n, std::size_t target) {
  if (n == 0) throw std::invalid_argument("duplication_plan: empty input");
  if (n > target) throw std::invalid_argument("duplication_plan: n exceeds target");
  std::vector<std::size_t> plan;
  plan.reserve(target);
  const std::size_t deficit = target - n;
  if (deficit == 0) {
    for (std::size_t i = 0; i < n; ++i) plan.push_back(i);
    return plan;
  }
  const std::size_t gap = std::max<std::size_t>(1, n / deficit);
  std::size_t placed = 0;
  std::size_t since = 0;
  for (std::size_t i = 0; i < n && plan.size() < target; ++i) {
    plan.push_back(i);
    ++since;
    if (placed < deficit && since == gap && plan.size() < target) {
      plan.push_back(i);  // duplicate in place
      ++placed;
      since = 0;
    }
  }
  while (plan.size() < target) plan.push_back(n - 1);  // tail fill
  return plan;
}

std::vector<std::size_t> decimation_plan(std::size_t n, std::size_t target) {
  if (target == 0 || n < target) throw std::invalid_argument("decimation_plan: n must be >= target");
  std::vector<std::size_t> plan(target);
  if (target == 1) {
    plan[0] = 0;
    return plan;
  }
  for (std::size_t i = 0; i < target; ++i) {
    plan[i] = static_cast<std::size_t>(std::llround(
        static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(target - 1)));
  }
  return plan;
}

VideoNormResult normalize_video(std::span<const stream::VideoFrameRef> frames,
                                std::uint32_t height, std::uint32_t width,
                                std::uint64_t start_us, double window_s, double target_fps) {
  if (frames.empty()) throw std::invalid_argument("normalize_video: no frames");
  const std::size_t pixel_bytes = static_cast<std::size_t>(height) * width * 3;
  for (const auto& f : frames) {
    if (!f.payload || f.payload->size() != pixel_bytes)
      throw std::invalid_argument("normalize_video: frame payload size mismatch");
  }
  const std::size_t n = frames.size();
  const std::size_t N = target_count(window_s, target_fps);
  std::vector<std::size_t> plan =
      n <= N ? duplication_plan(n, N) : decimation_plan(n, N);

  VideoNormResult out;
  out.frames = TensorNd({N, height, width, 3});
  out.times_s.resize(N);
  if (n <= N)
    out.duplicated = static_cast<std::uint32_t>(N - n);
  else
    out.dropped = static_cast<std::uint32_t>(n - N);

  double* dst = out.frames.data();
  for (std::size_t slot = 0; slot < N; ++slot) {
    const auto& src = frames[plan[slot]];
    out.times_s[slot] = static_cast<double>(src.timestamp_us - start_us) * 1e-6;
    const std::uint8_t* p = src.payload->data();
    double* d = dst + slot * pixel_bytes;
    for (std::size_t i = 0; i < pixel_bytes; ++i) d[i] = static_cast<double>(p[i]) / 255.0;
  }
  return out;
}

AudioNormResult normalize_audio(std::span<const std::int16_t> samples, std::uint32_t src_rate,
                                std::uint32_t target_rate, double window_s) {
  if (src_rate == 0 || target_rate == 0)
    throw std::invalid_argument("normalize_audio: zero sample rate");
  if (src_rate < target_rate)
    throw std::invalid_argument("normalize_audio: upsampling is not supported");

  const std::size_t M = target_count(window_s, static_cast<double>(target_rate));
  AudioNormResult out;
  out.audio = TensorNd({M});

  if (src_rate == target_rate) {
    const std::size_t n = std::min(M, samples.size());
    for (std::size_t i = 0; i < n; ++i) out.audio[i] = samples[i] / 32768.0;
    out.padded = static_cast<std::uint32_t>(M - n);
    return out;
  }

  // Windowed-sinc lowpass evaluated at fractional source positions. Taps are
  // renormalized per position so DC gain stays exactly 1 at the edges.
  constexpr int kTaps = 64;
  const double ratio = static_cast<double>(src_rate) / target_rate;
  const double cutoff = 0.45 * static_cast<double>(target_rate);
  const double fc = cutoff / src_rate;  // cycles per source sample
  const std::size_t n_src = samples.size();
  const std::size_t usable =
      std::min(M, static_cast<std::size_t>(std::floor(static_cast<double>(n_src) / ratio)));

  for (std::size_t i = 0; i < usable; ++i) {
    const double center = static_cast<double>(i) * ratio;
    const int lo = static_cast<int>(std::ceil(center)) - kTaps / 2;
    double acc = 0.0;
    double wsum = 0.0;
    for (int k = 0; k < kTaps; ++k) {
      const int j = lo + k;
      const double x = static_cast<double>(j) - center;
      double h = 2.0 * fc;
      if (x != 0.0) h = std::sin(2.0 * kPi * fc * x) / (kPi * x);
      const double wpos = (static_cast<double>(k) + 0.5) / kTaps;
      const double win = 0.54 - 0.46 * std::cos(2.0 * kPi * wpos);
      h *= win;
      wsum += h;
      if (j >= 0 && static_cast<std::size_t>(j) < n_src) acc += h * (samples[j] / 32768.0);
    }
    out.audio[i] = wsum != 0.0 ? acc / wsum : 0.0;
  }
  out.padded = static_cast<std::uint32_t>(M - usable);
  return out;
}

NormalizedWindow normalize_window(const stream::SyncWindow& win, const wire::StreamHeader& hdr,
                                  const NormalizeOptions& opt) {
  NormalizedWindow out;
  out.start_us = win.start_us;
  out.end_us = win.end_us;
  out.realigned = win.realigned;
  out.video_only = win.video_only;
  const double window_s = static_cast<double>(win.end_us - win.start_us) * 1e-6;

  auto v = normalize_video(win.video, hdr.video_height, hdr.video_width, win.start_us, window_s,
                           opt.target_fps);
  out.frames = std::move(v.frames);
  out.frame_times_s = std::move(v.times_s);
  out.duplicated_frames = v.duplicated;
  out.dropped_frames = v.dropped;

  if (!win.video_only && !win.audio.empty()) {
    auto a = normalize_audio(win.audio, hdr.audio_sample_rate, opt.target_audio_rate, window_s);
    out.audio = std::move(a.audio);
    out.padded_audio_samples = a.padded;
  }
  return out;
}

}  // namespace cardio::resample
