#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cardio/rng.hpp"
#include "cardio/wire.hpp"

namespace cardio::synth {

/// Piecewise-linear heart-rate schedule over (t_s, bpm) control points with
/// strictly increasing times. Rate is held constant outside the point range.
struct HrSchedule {
  std::vector<std::pair<double, double>> points{{0.0, 70.0}};

  double bpm_at(double t_s) const;
  /// Accumulated beat phase in radians, zero at t = 0.
  double phase_at(double t_s) const;
  /// Phase-derived average rate over [t0, t1]; bpm_at(t0) when degenerate.
  double mean_bpm(double t0_s, double t1_s) const;

  /// Parses "0:70,30:90" style text.
  static HrSchedule parse(const std::string& text);
  void validate() const;
};

/// Raised-cosine systolic pulse with the given duty cycle; one pulse per
/// 2*pi of phase, zero during diastole.
double pulse_waveform(double phase, double duty = 0.4);

enum class AudioContent { ToneComplex, FilteredNoise };

struct VideoSynthConfig {
  std::uint32_t width = 64;
  std::uint32_t height = 64;
  double fps = 30.0;
  double base_level = 0.55;
  double pulse_amplitude = 0.08;
  double pixel_noise_std = 0.0;
  double jitter_us = 0.0;
  double dropout = 0.0;
};

struct AudioSynthConfig {
  std::uint32_t sample_rate = 8000;
  double chunk_ms = 40.0;
  AudioContent content = AudioContent::ToneComplex;
  double modulation_depth = 0.9;
  double noise_level = 0.0;
  double dropout = 0.0;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  double duration_s = 60.0;
  /// Audio clock skew: emitted timestamps are nominal * (1 + drift_ppm/1e6).
  double drift_ppm = 0.0;
  HrSchedule schedule;
  VideoSynthConfig video;
  AudioSynthConfig audio;

  void validate() const;
};

struct GroundTruth {
  double trace_fs = 30.0;
  std::vector<double> bpm_trace;
  HrSchedule schedule;

  double mean_bpm(double t0_s, double t1_s) const { return schedule.mean_bpm(t0_s, t1_s); }
};

GroundTruth make_ground_truth(const SynthConfig& cfg);

/// Streaming packet source. Content is deterministic in the seed and is
/// evaluated at nominal sample times; jitter, drift, and dropout only affect
/// timestamps and emission.
class Generator {
 public:
  explicit Generator(const SynthConfig& cfg);

  const wire::StreamHeader& header() const { return header_; }
  /// Next packet in timestamp order (ties go to audio); nullopt at the end.
  std::optional<wire::MediaPacket> next();

 private:
  std::optional<wire::MediaPacket> make_frame();
  std::optional<wire::MediaPacket> make_chunk();
  void fill_video();
  void fill_audio();

  SynthConfig cfg_;
  wire::StreamHeader header_;
  std::size_t frame_idx_ = 0;
  std::size_t chunk_idx_ = 0;
  std::size_t n_frames_ = 0;
  std::size_t n_chunks_ = 0;
  std::size_t chunk_samples_ = 0;
  std::optional<wire::MediaPacket> pending_video_;
  std::optional<wire::MediaPacket> pending_audio_;
  // Sequential noise-content state (pink filter + band-pass sections).
  double pink_[7] = {0, 0, 0, 0, 0, 0, 0};
  double hp_x_ = 0.0, hp_y_ = 0.0, lp_y_ = 0.0;
  SplitMix64 content_rng_{0};
};

std::vector<wire::MediaPacket> generate(const SynthConfig& cfg);

void write_capture(const std::string& path, const wire::StreamHeader& header,
                   const std::vector<wire::MediaPacket>& packets);
/// Synthesizes and writes a capture in one pass (no full in-memory copy).
void synth_to_file(const std::string& path, const SynthConfig& cfg);

struct Capture {
  wire::StreamHeader header;
  std::vector<wire::MediaPacket> packets;
};

Capture load_capture(const std::string& path);

/// Flat key=value lines; '#' comments and blank lines are skipped.
std::map<std::string, std::string> parse_kv_text(const std::string& text);
std::map<std::string, std::string> load_kv_file(const std::string& path);

/// Applies one config key ("video.fps", "hr", ...); false when unknown.
bool apply_synth_key(SynthConfig& cfg, const std::string& key, const std::string& value);

}  // namespace cardio::synth
