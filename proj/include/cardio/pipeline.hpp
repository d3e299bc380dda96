#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cardio/estimator.hpp"
#include "cardio/synth.hpp"

namespace cardio::pipeline {

/// Bad configuration; the CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or malformed source; the CLI maps this to exit code 3.
class SourceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pacing clock. Real-time and as-fast-as-possible runs share one code
/// path; tests substitute ManualClock for determinism.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::uint64_t now_us() = 0;
  virtual void sleep_until_us(std::uint64_t t_us) = 0;
};

class RealClock final : public Clock {
 public:
  RealClock() : start_(std::chrono::steady_clock::now()) {}
  std::uint64_t now_us() override;
  void sleep_until_us(std::uint64_t t_us) override;

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Time advances only via sleep_until_us (or advance_to_us); now never
/// moves backwards.
class ManualClock final : public Clock {
 public:
  std::uint64_t now_us() override { return now_.load(); }
  void sleep_until_us(std::uint64_t t_us) override { advance_to_us(t_us); }
  void advance_to_us(std::uint64_t t_us) {
    std::uint64_t cur = now_.load();
    while (cur < t_us && !now_.compare_exchange_weak(cur, t_us)) {
    }
  }

 private:
  std::atomic<std::uint64_t> now_{0};
};

struct PipelineConfig {
  /// Capture file to replay; empty means live synthesis from `synth`.
  std::string input_path;
  synth::SynthConfig synth;
  /// Pace ingest to packet timestamps instead of as-fast-as-possible.
  bool realtime = false;

  double window_s = 4.0;
  double step_s = 1.0;
  double epsilon_s = 0.3;
  /// Buffer retention horizon; 0 resolves to 3 * window_s.
  double retention_s = 0.0;
  double target_fps = 30.0;
  std::uint32_t target_audio_rate = 8000;

  bool enable_kernel_pass = false;
  std::string params_path;
  std::uint64_t params_seed = 42;

  std::size_t max_inflight_windows = 4;
  std::size_t workers = 2;
  double update_period_s = 5.0;

  estimator::EstimatorConfig est;

  /// Output paths; "-" means stdout, empty disables the file.
  std::string estimates_path;
  std::string stats_path;

  void validate() const;
  std::uint64_t retention_us() const;
};

/// Applies one config key ("window_s", "kernels", ...); false when unknown.
bool apply_pipeline_key(PipelineConfig& cfg, const std::string& key, const std::string& value);

struct StageLatency {
  std::string stage;
  std::uint64_t count = 0;
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p95_us = 0.0;
  double p99_us = 0.0;
  double max_us = 0.0;
};

struct RunReport {
  std::uint64_t windows_emitted = 0;
  std::uint64_t invalid_estimates = 0;
  std::uint64_t realign_events = 0;
  std::uint64_t dropped_late_video = 0;
  std::uint64_t dropped_late_audio = 0;
  std::uint64_t dropped_capacity_video = 0;
  std::uint64_t dropped_capacity_audio = 0;
  std::uint64_t buffer_depth_us_video = 0;
  std::uint64_t buffer_depth_us_audio = 0;
  std::uint64_t peak_buffer_depth_us_video = 0;
  std::uint64_t peak_buffer_depth_us_audio = 0;
  /// Source frames contained in emitted windows (throughput volume).
  std::uint64_t frames_processed = 0;
  double wall_s = 0.0;
  double throughput_fps = 0.0;
  std::vector<StageLatency> stages;
  /// Wall gaps between consecutive estimate emissions.
  std::vector<double> update_period_samples_s;
  /// Frames processed per stats update period.
  std::vector<double> throughput_samples_fps;
  std::vector<estimator::HrEstimate> estimates;
  std::string stats_json;
};

/// Processes the whole source: decode, buffer, sync, normalize, optional
/// kernel pass, estimate, ordered JSONL sink. Streams estimates/stats to the
/// configured paths and returns the full report.
RunReport run(const PipelineConfig& cfg, Clock* clock = nullptr);

/// run() with real-time pacing forced off; measures sustainable throughput.
RunReport bench(const PipelineConfig& cfg);

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };
/// Level comes from CARDIOSTREAM_LOG (debug|info|warn|error), default warn.
LogLevel log_level();
void log(LogLevel lvl, const std::string& msg);

}  // namespace cardio::pipeline
