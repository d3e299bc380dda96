#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cardio/pipeline.hpp"
#include "cardio/synth.hpp"

namespace {

using cardio::pipeline::ConfigError;
using cardio::pipeline::PipelineConfig;
using cardio::pipeline::SourceError;
using cardio::synth::SynthConfig;

struct SynthFlags {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::optional<double> drift_ppm;
  std::optional<std::string> hr;
  std::optional<std::uint32_t> width, height;
  std::optional<double> fps;
  std::optional<double> base_level, amplitude, video_noise, jitter_us, video_dropout;
  std::optional<std::uint32_t> rate;
  std::optional<double> chunk_ms, depth, noise_level, audio_dropout;
  std::optional<std::string> content;
};

void add_synth_flags(CLI::App* app, SynthFlags& f) {
  app->add_option("--seed", f.seed, "RNG seed");
  app->add_option("--duration", f.duration_s, "stream length, seconds");
  app->add_option("--drift-ppm", f.drift_ppm, "audio clock skew, ppm");
  app->add_option("--hr", f.hr, "heart-rate schedule, e.g. 0:70,30:90");
  app->add_option("--width", f.width, "frame width");
  app->add_option("--height", f.height, "frame height");
  app->add_option("--fps", f.fps, "nominal video rate");
  app->add_option("--base-level", f.base_level, "resting green level in [0,1]");
  app->add_option("--amplitude", f.amplitude, "green pulse amplitude");
  app->add_option("--video-noise", f.video_noise, "pixel noise stddev");
  app->add_option("--jitter-us", f.jitter_us, "video timestamp jitter bound");
  app->add_option("--video-dropout", f.video_dropout, "frame drop probability");
  app->add_option("--rate", f.rate, "audio sample rate");
  app->add_option("--chunk-ms", f.chunk_ms, "audio chunk length, ms");
  app->add_option("--depth", f.depth, "audio modulation depth in [0,1]");
  app->add_option("--noise-level", f.noise_level, "audio additive noise stddev");
  app->add_option("--audio-dropout", f.audio_dropout, "chunk drop probability");
  app->add_option("--content", f.content, "audio content: tone_complex|filtered_noise");
}

void apply_synth_flags(SynthConfig& s, const SynthFlags& f) {
  if (f.seed) s.seed = *f.seed;
  if (f.duration_s) s.duration_s = *f.duration_s;
  if (f.drift_ppm) s.drift_ppm = *f.drift_ppm;
  if (f.hr) s.schedule = cardio::synth::HrSchedule::parse(*f.hr);
  if (f.width) s.video.width = *f.width;
  if (f.height) s.video.height = *f.height;
  if (f.fps) s.video.fps = *f.fps;
  if (f.base_level) s.video.base_level = *f.base_level;
  if (f.amplitude) s.video.pulse_amplitude = *f.amplitude;
  if (f.video_noise) s.video.pixel_noise_std = *f.video_noise;
  if (f.jitter_us) s.video.jitter_us = *f.jitter_us;
  if (f.video_dropout) s.video.dropout = *f.video_dropout;
  if (f.rate) s.audio.sample_rate = *f.rate;
  if (f.chunk_ms) s.audio.chunk_ms = *f.chunk_ms;
  if (f.depth) s.audio.modulation_depth = *f.depth;
  if (f.noise_level) s.audio.noise_level = *f.noise_level;
  if (f.audio_dropout) s.audio.dropout = *f.audio_dropout;
  if (f.content) {
    if (!cardio::synth::apply_synth_key(s, "audio.content", *f.content)) {
      throw ConfigError("bad audio content '" + *f.content + "'");
    }
  }
}

struct PipelineFlags {
  std::optional<std::string> input;
  std::optional<double> window_s, step_s, epsilon_s, retention_s, update_period_s;
  std::optional<double> target_fps;
  std::optional<std::uint32_t> target_rate;
  std::optional<std::size_t> max_inflight, workers;
  std::optional<std::string> params_path;
  std::optional<std::uint64_t> params_seed;
  std::optional<std::string> estimates_path, stats_path;
  bool realtime = false;
  bool kernels = false;
};

void add_pipeline_flags(CLI::App* app, PipelineFlags& f, bool with_realtime) {
  app->add_option("--input,-i", f.input, "capture file (omit for live synthesis)");
  app->add_option("--window", f.window_s, "sync window, seconds");
  app->add_option("--step", f.step_s, "window step, seconds");
  app->add_option("--epsilon", f.epsilon_s, "drift threshold, seconds");
  app->add_option("--retention", f.retention_s, "buffer retention, seconds (0 = 3x window)");
  app->add_option("--update-period", f.update_period_s, "stats sampling period, seconds");
  app->add_option("--target-fps", f.target_fps, "normalized frame rate");
  app->add_option("--target-rate", f.target_rate, "normalized audio rate");
  app->add_option("--max-inflight", f.max_inflight, "bounded in-flight windows");
  app->add_option("--workers", f.workers, "estimator worker threads");
  app->add_option("--params", f.params_path, "kernel parameter blob path");
  app->add_option("--params-seed", f.params_seed, "seed for default kernel params");
  app->add_option("--estimates,-o", f.estimates_path, "estimates JSONL path ('-' = stdout)");
  app->add_option("--stats", f.stats_path, "stats JSON path ('-' = stdout)");
  app->add_flag("--kernels", f.kernels, "run the kernel feature pass per window");
  if (with_realtime) {
    app->add_flag("--realtime", f.realtime, "pace ingest to packet timestamps");
  }
}

void apply_pipeline_flags(PipelineConfig& p, const PipelineFlags& f) {
  if (f.input) p.input_path = *f.input;
  if (f.window_s) p.window_s = *f.window_s;
  if (f.step_s) p.step_s = *f.step_s;
  if (f.epsilon_s) p.epsilon_s = *f.epsilon_s;
  if (f.retention_s) p.retention_s = *f.retention_s;
  if (f.update_period_s) p.update_period_s = *f.update_period_s;
  if (f.target_fps) p.target_fps = *f.target_fps;
  if (f.target_rate) p.target_audio_rate = *f.target_rate;
  if (f.max_inflight) p.max_inflight_windows = *f.max_inflight;
  if (f.workers) p.workers = *f.workers;
  if (f.params_path) p.params_path = *f.params_path;
  if (f.params_seed) p.params_seed = *f.params_seed;
  if (f.estimates_path) p.estimates_path = *f.estimates_path;
  if (f.stats_path) p.stats_path = *f.stats_path;
  if (f.kernels) p.enable_kernel_pass = true;
  if (f.realtime) p.realtime = true;
}

void apply_config_file(PipelineConfig& p, const std::string& path) {
  for (const auto& [k, v] : cardio::synth::load_kv_file(path)) {
    if (cardio::pipeline::apply_pipeline_key(p, k, v)) continue;
    if (cardio::synth::apply_synth_key(p.synth, k, v)) continue;
    throw ConfigError("unknown config key '" + k + "' in " + path);
  }
}

void apply_config_file(SynthConfig& s, const std::string& path) {
  for (const auto& [k, v] : cardio::synth::load_kv_file(path)) {
    if (!cardio::synth::apply_synth_key(s, k, v)) {
      throw ConfigError("unknown config key '" + k + "' in " + path);
    }
  }
}

void print_summary(const cardio::pipeline::RunReport& rep) {
  std::fprintf(stderr, "windows: %llu  invalid: %llu  realigns: %llu\n",
               static_cast<unsigned long long>(rep.windows_emitted),
               static_cast<unsigned long long>(rep.invalid_estimates),
               static_cast<unsigned long long>(rep.realign_events));
  std::fprintf(stderr, "throughput: %.1f fps over %.2f s (%llu frames)\n", rep.throughput_fps,
               rep.wall_s, static_cast<unsigned long long>(rep.frames_processed));
  double period_mean = 0.0;
  for (double v : rep.update_period_samples_s) period_mean += v;
  if (!rep.update_period_samples_s.empty()) {
    period_mean /= static_cast<double>(rep.update_period_samples_s.size());
    std::fprintf(stderr, "update period: %.3f s mean over %zu gaps\n", period_mean,
                 rep.update_period_samples_s.size());
  }
  for (const auto& s : rep.stages) {
    std::fprintf(stderr, "stage %-9s n=%-6llu mean=%8.1fus p50=%8.1fus p95=%8.1fus p99=%8.1fus\n",
                 s.stage.c_str(), static_cast<unsigned long long>(s.count), s.mean_us, s.p50_us,
                 s.p95_us, s.p99_us);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cardiostream: synchronized audio/video heart-rate estimation"};
  app.require_subcommand(1);

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic capture file");
  SynthFlags sf;
  std::string synth_out;
  std::string synth_config;
  synth_cmd->add_option("--out,-o", synth_out, "capture output path")->required();
  synth_cmd->add_option("--config", synth_config, "flat key=value config file");
  add_synth_flags(synth_cmd, sf);

  auto* run_cmd = app.add_subcommand("run", "process a capture or live synthesis");
  PipelineFlags rf;
  SynthFlags rsf;
  std::string run_config;
  run_cmd->add_option("--config", run_config, "flat key=value config file");
  add_pipeline_flags(run_cmd, rf, true);
  add_synth_flags(run_cmd, rsf);

  auto* bench_cmd = app.add_subcommand("bench", "max-throughput run, pacing disabled");
  PipelineFlags bf;
  SynthFlags bsf;
  std::string bench_config;
  bench_cmd->add_option("--config", bench_config, "flat key=value config file");
  add_pipeline_flags(bench_cmd, bf, false);
  add_synth_flags(bench_cmd, bsf);

  try {
    app.parse(argc, argv);

    if (synth_cmd->parsed()) {
      SynthConfig s;
      if (!synth_config.empty()) apply_config_file(s, synth_config);
      apply_synth_flags(s, sf);
      try {
        s.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      cardio::synth::synth_to_file(synth_out, s);
      std::fprintf(stderr, "wrote %s (%.1f s, seed %llu)\n", synth_out.c_str(), s.duration_s,
                   static_cast<unsigned long long>(s.seed));
      return 0;
    }

    PipelineConfig p;
    if (run_cmd->parsed()) {
      if (p.estimates_path.empty()) p.estimates_path = "-";
      if (!run_config.empty()) apply_config_file(p, run_config);
      apply_pipeline_flags(p, rf);
      apply_synth_flags(p.synth, rsf);
      auto rep = cardio::pipeline::run(p, nullptr);
      print_summary(rep);
      return 0;
    }

    if (bench_cmd->parsed()) {
      if (!bench_config.empty()) apply_config_file(p, bench_config);
      apply_pipeline_flags(p, bf);
      apply_synth_flags(p.synth, bsf);
      if (p.estimates_path.empty() && p.stats_path.empty()) p.stats_path = "-";
      auto rep = cardio::pipeline::bench(p);
      print_summary(rep);
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const SourceError& e) {
    std::fprintf(stderr, "source error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
