#include "cardio/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>

#include "json.hpp"

#include "cardio/kernels.hpp"
#include "cardio/resample.hpp"
#include "cardio/stream.hpp"
#include "cardio/wire.hpp"

namespace cardio::pipeline {

namespace {

using SteadyClock = std::chrono::steady_clock;

std::uint64_t elapsed_us(SteadyClock::time_point a, SteadyClock::time_point b) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(b - a).count());
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("expected boolean, got '" + v + "'");
}

/// Blocking MPMC queue with a hard capacity; push blocks while full,
/// pop blocks while empty, close() releases everyone.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t cap) : cap_(cap) {}

  bool push(T v) {
    std::unique_lock lk(mu_);
    cv_push_.wait(lk, [&] { return closed_ || q_.size() < cap_; });
    if (closed_) return false;
    q_.push_back(std::move(v));
    cv_pop_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lk(mu_);
    cv_pop_.wait(lk, [&] { return closed_ || !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    std::optional<T> v(std::move(q_.front()));
    q_.pop_front();
    cv_push_.notify_one();
    return v;
  }

  void close() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    cv_push_.notify_all();
    cv_pop_.notify_all();
  }

 private:
  std::size_t cap_;
  std::mutex mu_;
  std::condition_variable cv_push_, cv_pop_;
  std::deque<T> q_;
  bool closed_ = false;
};

class PacketSource {
 public:
  virtual ~PacketSource() = default;
  virtual const wire::StreamHeader& header() const = 0;
  virtual std::optional<wire::MediaPacket> next() = 0;
};

class SynthSource final : public PacketSource {
 public:
  explicit SynthSource(const synth::SynthConfig& cfg) : gen_(cfg) {}
  const wire::StreamHeader& header() const override { return gen_.header(); }
  std::optional<wire::MediaPacket> next() override { return gen_.next(); }

 private:
  synth::Generator gen_;
};

class CaptureSource final : public PacketSource {
 public:
  explicit CaptureSource(const std::string& path) : is_(path, std::ios::binary) {
    if (!is_) throw SourceError("cannot open capture file '" + path + "'");
    refill();
    const auto hr = wire::decode_header(buf_);
    if (hr.status != wire::DecodeStatus::Ok) {
      throw SourceError("no stream header at start of '" + path + "'");
    }
    header_ = hr.header;
    off_ = hr.consumed;
  }

  const wire::StreamHeader& header() const override { return header_; }

  std::optional<wire::MediaPacket> next() override {
    for (;;) {
      auto res = wire::decode_packet(std::span(buf_).subspan(off_));
      off_ += res.consumed;
      if (res.status == wire::DecodeStatus::Ok) return std::move(res.packet);
      compact();
      if (!refill()) return std::nullopt;
    }
  }

 private:
  void compact() {
    if (off_ > 0) {
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(off_));
      off_ = 0;
    }
  }

  bool refill() {
    if (!is_) return false;
    constexpr std::size_t kChunk = 1 << 16;
    const std::size_t old = buf_.size();
    buf_.resize(old + kChunk);
    is_.read(reinterpret_cast<char*>(buf_.data() + old), kChunk);
    const auto got = static_cast<std::size_t>(is_.gcount());
    buf_.resize(old + got);
    return got > 0;
  }

  std::ifstream is_;
  std::vector<std::uint8_t> buf_;
  std::size_t off_ = 0;
  wire::StreamHeader header_;
};

struct WindowJob {
  std::uint64_t seq = 0;
  stream::SyncWindow win;
};

struct WindowResult {
  std::uint64_t seq = 0;
  estimator::HrEstimate est;
  std::uint64_t frames = 0;
  std::uint64_t resample_us = 0;
  std::uint64_t kernel_us = 0;
  std::uint64_t estimate_us = 0;
  std::uint64_t total_us = 0;
};

class LatencyCollector {
 public:
  void add(const char* stage, std::uint64_t us) {
    std::lock_guard lk(mu_);
    samples_[stage].push_back(us);
  }

  std::vector<StageLatency> summarize() const {
    std::lock_guard lk(mu_);
    std::vector<StageLatency> out;
    for (const auto& [name, us] : samples_) {
      StageLatency s;
      s.stage = name;
      s.count = us.size();
      if (!us.empty()) {
        std::vector<std::uint64_t> sorted(us);
        std::sort(sorted.begin(), sorted.end());
        double sum = 0.0;
        for (auto v : sorted) sum += static_cast<double>(v);
        s.mean_us = sum / static_cast<double>(sorted.size());
        auto pct = [&](double q) {
          const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
          return static_cast<double>(sorted[idx]);
        };
        s.p50_us = pct(0.50);
        s.p95_us = pct(0.95);
        s.p99_us = pct(0.99);
        s.max_us = static_cast<double>(sorted.back());
      }
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<std::uint64_t>> samples_;
};

nlohmann::json stats_to_json(const RunReport& r) {
  nlohmann::json j;
  j["counters"]["windows_emitted"] = r.windows_emitted;
  j["counters"]["realign_events"] = r.realign_events;
  j["counters"]["dropped_late"]["video"] = r.dropped_late_video;
  j["counters"]["dropped_late"]["audio"] = r.dropped_late_audio;
  j["counters"]["dropped_capacity"]["video"] = r.dropped_capacity_video;
  j["counters"]["dropped_capacity"]["audio"] = r.dropped_capacity_audio;
  j["counters"]["buffer_depth_us"]["video"] = r.buffer_depth_us_video;
  j["counters"]["buffer_depth_us"]["audio"] = r.buffer_depth_us_audio;
  j["counters"]["buffer_depth_us_peak"]["video"] = r.peak_buffer_depth_us_video;
  j["counters"]["buffer_depth_us_peak"]["audio"] = r.peak_buffer_depth_us_audio;
  j["invalid_estimates"] = r.invalid_estimates;
  j["frames_processed"] = r.frames_processed;
  j["wall_s"] = r.wall_s;
  j["throughput_fps"]["mean"] = r.throughput_fps;
  j["throughput_fps"]["samples"] = r.throughput_samples_fps;
  double period_mean = 0.0;
  for (double v : r.update_period_samples_s) period_mean += v;
  if (!r.update_period_samples_s.empty()) {
    period_mean /= static_cast<double>(r.update_period_samples_s.size());
  }
  j["update_period_s"]["mean"] = period_mean;
  j["update_period_s"]["samples"] = r.update_period_samples_s;
  for (const auto& s : r.stages) {
    j["stages"][s.stage] = {{"count", s.count},   {"mean_us", s.mean_us}, {"p50_us", s.p50_us},
                            {"p95_us", s.p95_us}, {"p99_us", s.p99_us},  {"max_us", s.max_us}};
  }
  return j;
}

}  // namespace

std::uint64_t RealClock::now_us() { return elapsed_us(start_, SteadyClock::now()); }

void RealClock::sleep_until_us(std::uint64_t t_us) {
  std::this_thread::sleep_until(start_ + std::chrono::microseconds(t_us));
}

LogLevel log_level() {
  static const LogLevel lvl = [] {
    const char* e = std::getenv("CARDIOSTREAM_LOG");
    if (!e) return LogLevel::Warn;
    std::string s(e);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    if (s == "warn" || s == "warning") return LogLevel::Warn;
    if (s == "error") return LogLevel::Error;
    return LogLevel::Warn;
  }();
  return lvl;
}

void log(LogLevel lvl, const std::string& msg) {
  if (static_cast<int>(lvl) < static_cast<int>(log_level())) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  static std::mutex mu;
  std::lock_guard lk(mu);
  std::fprintf(stderr, "[cardiostream %s] %s\n", names[static_cast<int>(lvl)], msg.c_str());
}

void PipelineConfig::validate() const {
  if (window_s <= 0.0 || step_s <= 0.0) throw ConfigError("window_s and step_s must be positive");
  if (epsilon_s < 0.0) throw ConfigError("epsilon_s must be nonnegative");
  if (target_fps <= 0.0) throw ConfigError("target_fps must be positive");
  if (target_audio_rate == 0) throw ConfigError("target_audio_rate must be positive");
  if (max_inflight_windows < 1) throw ConfigError("max_inflight_windows must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (update_period_s <= 0.0) throw ConfigError("update_period_s must be positive");
  if (retention_s != 0.0 && retention_s < window_s + step_s) {
    throw ConfigError("retention_s must cover window_s + step_s");
  }
  if (est.band_lo_hz <= 0.0 || est.band_hi_hz <= est.band_lo_hz) {
    throw ConfigError("estimator band must satisfy 0 < lo < hi");
  }
  if (input_path.empty()) {
    try {
      synth.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
}

std::uint64_t PipelineConfig::retention_us() const {
  const double r = retention_s > 0.0 ? retention_s : 3.0 * window_s;
  return static_cast<std::uint64_t>(std::llround(r * 1e6));
}

bool apply_pipeline_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "input") cfg.input_path = value;
  else if (key == "realtime") cfg.realtime = parse_bool(value);
  else if (key == "window_s") cfg.window_s = std::stod(value);
  else if (key == "step_s") cfg.step_s = std::stod(value);
  else if (key == "epsilon_s") cfg.epsilon_s = std::stod(value);
  else if (key == "retention_s") cfg.retention_s = std::stod(value);
  else if (key == "target_fps") cfg.target_fps = std::stod(value);
  else if (key == "target_rate") cfg.target_audio_rate = static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "kernels") cfg.enable_kernel_pass = parse_bool(value);
  else if (key == "params") cfg.params_path = value;
  else if (key == "params_seed") cfg.params_seed = std::stoull(value);
  else if (key == "max_inflight") cfg.max_inflight_windows = std::stoul(value);
  else if (key == "workers") cfg.workers = std::stoul(value);
  else if (key == "update_period_s") cfg.update_period_s = std::stod(value);
  else if (key == "estimates") cfg.estimates_path = value;
  else if (key == "stats") cfg.stats_path = value;
  else if (key == "est.band_lo_hz") cfg.est.band_lo_hz = std::stod(value);
  else if (key == "est.band_hi_hz") cfg.est.band_hi_hz = std::stod(value);
  else if (key == "est.audio_min_snr_db") cfg.est.audio_min_snr_db = std::stod(value);
  else if (key == "est.video_min_snr_db") cfg.est.video_min_snr_db = std::stod(value);
  else return false;
  return true;
}

RunReport run(const PipelineConfig& cfg, Clock* clock) {
  cfg.validate();
  RealClock fallback_clock;
  if (!clock) clock = &fallback_clock;

  std::unique_ptr<PacketSource> src;
  if (cfg.input_path.empty()) {
    src = std::make_unique<SynthSource>(cfg.synth);
  } else {
    src = std::make_unique<CaptureSource>(cfg.input_path);
  }
  const wire::StreamHeader hdr = src->header();
  if (hdr.video_width == 0 || hdr.video_height == 0 || hdr.audio_sample_rate == 0 ||
      hdr.nominal_fps <= 0.0) {
    throw SourceError("stream header carries empty geometry");
  }

  std::unique_ptr<std::ofstream> est_file;
  std::ostream* est_out = nullptr;
  if (cfg.estimates_path == "-") {
    est_out = &std::cout;
  } else if (!cfg.estimates_path.empty()) {
    est_file = std::make_unique<std::ofstream>(cfg.estimates_path);
    if (!*est_file) throw ConfigError("cannot open estimates path '" + cfg.estimates_path + "'");
    est_out = est_file.get();
  }

  kernels::KernelParams params;
  if (cfg.enable_kernel_pass) {
    try {
      params = cfg.params_path.empty() ? kernels::default_params(cfg.params_seed)
                                       : kernels::load_params(cfg.params_path);
      kernels::validate(params);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("kernel params: ") + e.what());
    }
    const auto frames = static_cast<std::size_t>(std::lround(cfg.window_s * cfg.target_fps));
    if (params.freq_bins != frames / 2 + 1) {
      throw ConfigError("kernel params expect " +
                        std::to_string((params.freq_bins - 1) * 2) + "-frame windows, got " +
                        std::to_string(frames));
    }
  }

  const std::uint64_t retention = cfg.retention_us();
  stream::StreamBuffer qv(wire::MediaKind::Video, retention);
  stream::StreamBuffer qa(wire::MediaKind::Audio, retention);
  stream::SyncConfig sync_cfg;
  sync_cfg.window_us = static_cast<std::uint64_t>(std::llround(cfg.window_s * 1e6));
  sync_cfg.step_us = static_cast<std::uint64_t>(std::llround(cfg.step_s * 1e6));
  sync_cfg.epsilon_us = static_cast<std::uint64_t>(std::llround(cfg.epsilon_s * 1e6));
  sync_cfg.nominal_fps = hdr.nominal_fps;
  sync_cfg.audio_sample_rate = hdr.audio_sample_rate;
  stream::Synchronizer sync(sync_cfg);

  BoundedQueue<WindowJob> window_q(cfg.max_inflight_windows);
  BoundedQueue<WindowResult> result_q(cfg.max_inflight_windows + cfg.workers + 1);

  LatencyCollector latency;
  std::atomic<bool> abort{false};
  std::atomic<bool> ingest_done{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto fail = [&](std::exception_ptr ep) {
    {
      std::lock_guard lk(err_mu);
      if (!first_error) first_error = ep;
    }
    abort.store(true);
    window_q.close();
    result_q.close();
  };

  std::mutex wake_mu;
  std::condition_variable data_cv;   // ingest -> scheduler
  std::condition_variable space_cv;  // scheduler -> ingest backpressure

  RunReport report;
  const auto wall_start = SteadyClock::now();

  // Ingest: decode packets, pace when realtime, push into the stream
  // buffers. Pauses when a buffer gets close to the retention horizon so
  // the scheduler bounds losses; capacity eviction stays the hard limit.
  std::thread ingest([&] {
    try {
      const std::uint64_t pause_span =
          retention > 1'000'000 ? retention - 500'000 : retention / 2 + retention / 4;
      while (!abort.load()) {
        auto pkt = src->next();
        if (!pkt) break;
        if (cfg.realtime) clock->sleep_until_us(pkt->timestamp_us);
        auto& buf = pkt->kind == wire::MediaKind::Video ? qv : qa;
        for (int spins = 0; spins < 5000 && buf.span_us() >= pause_span && !abort.load();
             ++spins) {
          std::unique_lock lk(wake_mu);
          space_cv.wait_for(lk, std::chrono::milliseconds(1));
        }
        if (abort.load()) break;
        buf.push(*pkt);
        data_cv.notify_all();
      }
    } catch (...) {
      fail(std::current_exception());
    }
    ingest_done.store(true);
    std::lock_guard lk(wake_mu);
    data_cv.notify_all();
  });

  // Scheduler: drive the synchronizer, hand emitted windows to the pool.
  std::thread scheduler([&] {
    try {
      std::uint64_t seq = 0;
      const std::uint64_t starve_patience = sync_cfg.window_us;
      for (;;) {
        if (abort.load()) break;
        report.peak_buffer_depth_us_video =
            std::max(report.peak_buffer_depth_us_video, qv.span_us());
        report.peak_buffer_depth_us_audio =
            std::max(report.peak_buffer_depth_us_audio, qa.span_us());

        const bool eof = ingest_done.load();
        bool audio_starved = false;
        const auto vb = qv.back_timestamp();
        const auto ab = qa.back_timestamp();
        if (vb && !ab) {
          audio_starved = qv.span_us() > sync_cfg.window_us + sync_cfg.step_us;
        } else if (vb && ab) {
          audio_starved = *ab + starve_patience < *vb;
        }

        auto t0 = SteadyClock::now();
        auto win = sync.try_emit_window(qa, qv, eof || audio_starved);
        if (win) {
          sync.evict_processed(qa, qv);
          latency.add("sync", elapsed_us(t0, SteadyClock::now()));
          {
            std::lock_guard lk(wake_mu);
            space_cv.notify_all();
          }
          WindowJob job;
          job.seq = seq++;
          job.win = std::move(*win);
          if (!window_q.push(std::move(job))) break;
          continue;
        }
        if (eof) break;
        std::unique_lock lk(wake_mu);
        data_cv.wait_for(lk, std::chrono::milliseconds(1));
      }
    } catch (...) {
      fail(std::current_exception());
    }
    window_q.close();
  });

  // Worker pool: normalize, optional kernel pass, estimate.
  std::atomic<double> kernel_checksum{0.0};
  auto worker_fn = [&] {
    try {
      resample::NormalizeOptions opt;
      opt.target_fps = cfg.target_fps;
      opt.target_audio_rate = cfg.target_audio_rate;
      while (auto job = window_q.pop()) {
        const auto t0 = SteadyClock::now();
        WindowResult res;
        res.seq = job->seq;
        res.frames = job->win.video.size();

        auto norm = resample::normalize_window(job->win, hdr, opt);
        const auto t1 = SteadyClock::now();
        res.resample_us = elapsed_us(t0, t1);

        auto t2 = t1;
        if (cfg.enable_kernel_pass) {
          const auto out = kernels::model_forward(norm, params);
          double acc = 0.0;
          for (double v : out) acc += v;
          double cur = kernel_checksum.load();
          while (!kernel_checksum.compare_exchange_weak(cur, cur + acc)) {
          }
          t2 = SteadyClock::now();
          res.kernel_us = elapsed_us(t1, t2);
          latency.add("kernel", res.kernel_us);
        }

        auto est_v = estimator::rppg_video_estimate(norm, cfg.est);
        estimator::HrEstimate final_est;
        if (norm.video_only || norm.audio.size() == 0) {
          final_est = est_v;
        } else {
          auto est_a =
              estimator::audio_envelope_estimate(norm.audio, cfg.target_audio_rate, cfg.est);
          est_a.window_start_us = norm.start_us;
          est_a.window_end_us = norm.end_us;
          final_est = estimator::fuse_estimates(est_v, est_a);
        }
        const auto t3 = SteadyClock::now();
        res.estimate_us = elapsed_us(t2, t3);
        res.total_us = elapsed_us(t0, t3);
        res.est = final_est;
        latency.add("resample", res.resample_us);
        latency.add("estimate", res.estimate_us);
        latency.add("total", res.total_us);
        if (!result_q.push(std::move(res))) break;
      }
    } catch (...) {
      fail(std::current_exception());
    }
  };
  std::vector<std::thread> workers;
  workers.reserve(cfg.workers);
  for (std::size_t i = 0; i < cfg.workers; ++i) workers.emplace_back(worker_fn);

  // Ordered sink: reorders by sequence, writes JSONL, samples liveness and
  // throughput.
  std::thread sink([&] {
    try {
      std::map<std::uint64_t, WindowResult> pending;
      std::uint64_t next_seq = 0;
      bool have_last_emit = false;
      std::uint64_t last_emit_us = 0;
      auto period_start = SteadyClock::now();
      std::uint64_t period_frames = 0;
      while (auto res = result_q.pop()) {
        pending.emplace(res->seq, std::move(*res));
        while (!pending.empty() && pending.begin()->first == next_seq) {
          WindowResult r = std::move(pending.begin()->second);
          pending.erase(pending.begin());
          ++next_seq;

          if (est_out) {
            *est_out << estimator::to_jsonl(r.est) << '\n';
            est_out->flush();
          }
          if (!r.est.valid) ++report.invalid_estimates;
          report.frames_processed += r.frames;
          report.estimates.push_back(r.est);

          const std::uint64_t now = clock->now_us();
          if (have_last_emit) {
            report.update_period_samples_s.push_back(static_cast<double>(now - last_emit_us) /
                                                     1e6);
          }
          have_last_emit = true;
          last_emit_us = now;

          period_frames += r.frames;
          const auto wall_now = SteadyClock::now();
          const double period_elapsed =
              static_cast<double>(elapsed_us(period_start, wall_now)) / 1e6;
          if (period_elapsed >= cfg.update_period_s) {
            report.throughput_samples_fps.push_back(static_cast<double>(period_frames) /
                                                    period_elapsed);
            period_start = wall_now;
            period_frames = 0;
          }
        }
      }
      const auto wall_now = SteadyClock::now();
      const double period_elapsed = static_cast<double>(elapsed_us(period_start, wall_now)) / 1e6;
      if (period_frames > 0 && period_elapsed > 0.05) {
        report.throughput_samples_fps.push_back(static_cast<double>(period_frames) /
                                                period_elapsed);
      }
    } catch (...) {
      fail(std::current_exception());
    }
  });

  ingest.join();
  {
    std::lock_guard lk(wake_mu);
    data_cv.notify_all();
  }
  scheduler.join();
  for (auto& w : workers) w.join();
  result_q.close();
  sink.join();

  {
    std::lock_guard lk(err_mu);
    if (first_error) std::rethrow_exception(first_error);
  }

  report.wall_s = static_cast<double>(elapsed_us(wall_start, SteadyClock::now())) / 1e6;
  report.windows_emitted = sync.windows_emitted();
  report.realign_events = sync.realign_events();
  report.dropped_late_video = qv.dropped_late();
  report.dropped_late_audio = qa.dropped_late();
  report.dropped_capacity_video = qv.dropped_capacity();
  report.dropped_capacity_audio = qa.dropped_capacity();
  report.buffer_depth_us_video = qv.span_us();
  report.buffer_depth_us_audio = qa.span_us();
  report.stages = latency.summarize();
  report.throughput_fps =
      report.wall_s > 0.0 ? static_cast<double>(report.frames_processed) / report.wall_s : 0.0;
  report.stats_json = stats_to_json(report).dump(2);

  if (cfg.stats_path == "-") {
    std::cout << report.stats_json << '\n';
  } else if (!cfg.stats_path.empty()) {
    std::ofstream os(cfg.stats_path);
    if (!os) throw ConfigError("cannot open stats path '" + cfg.stats_path + "'");
    os << report.stats_json << '\n';
  }

  log(LogLevel::Info,
      "run complete: " + std::to_string(report.windows_emitted) + " windows, " +
          std::to_string(report.invalid_estimates) + " invalid, throughput " +
          std::to_string(report.throughput_fps) + " fps");
  return report;
}

RunReport bench(const PipelineConfig& cfg) {
  PipelineConfig c = cfg;
  c.realtime = false;
  return run(c, nullptr);
}

}  // namespace cardio::pipeline
