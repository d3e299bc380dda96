#include "cardio/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cardio/rng.hpp"

namespace cardio::synth {

namespace {

constexpr double kPi = std::numbers::pi;

// Keyed sub-stream tags; content noise advances sequentially instead so
// dropout and jitter cannot shift it.
enum : std::uint64_t {
  kTagJitter = 0x53796e4a,
  kTagVideoDrop = 0x53796e44,
  kTagVideoNoise = 0x53796e4e,
  kTagAudioDrop = 0x53796e41,
  kTagAudioNoise = 0x53796e42,
  kTagContent = 0x53796e43,
};

std::uint8_t quant_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::int16_t quant_s16(double v) {
  return static_cast<std::int16_t>(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0));
}

}  // namespace

double HrSchedule::bpm_at(double t_s) const {
  if (points.empty()) throw std::logic_error("HrSchedule: no points");
  if (t_s <= points.front().first) return points.front().second;
  if (t_s >= points.back().first) return points.back().second;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (t_s <= points[i].first) {
      const auto& [t0, b0] = points[i - 1];
      const auto& [t1, b1] = points[i];
      const double u = (t_s - t0) / (t1 - t0);
      return b0 + u * (b1 - b0);
    }
  }
  return points.back().second;
}

double HrSchedule::phase_at(double t_s) const {
  if (points.empty()) throw std::logic_error("HrSchedule: no points");
  // f(t) = bpm(t)/60 is piecewise linear, so each span integrates as a
  // trapezoid.
  double phase = 0.0;
  double t_prev = 0.0;
  double f_prev = bpm_at(0.0) / 60.0;
  if (t_s <= 0.0) return 2.0 * kPi * f_prev * t_s;
  for (const auto& [tp, bp] : points) {
    if (tp <= t_prev) continue;
    const double t_stop = std::min(tp, t_s);
    const double f_stop = bpm_at(t_stop) / 60.0;
    phase += kPi * (f_prev + f_stop) * (t_stop - t_prev);
    t_prev = t_stop;
    f_prev = f_stop;
    if (t_prev >= t_s) return phase;
  }
  phase += 2.0 * kPi * f_prev * (t_s - t_prev);
  return phase;
}

double HrSchedule::mean_bpm(double t0_s, double t1_s) const {
  if (t1_s <= t0_s + 1e-12) return bpm_at(t0_s);
  const double dphi = phase_at(t1_s) - phase_at(t0_s);
  return 60.0 * dphi / (2.0 * kPi * (t1_s - t0_s));
}

HrSchedule HrSchedule::parse(const std::string& text) {
  HrSchedule out;
  out.points.clear();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("HrSchedule::parse: expected t:bpm, got '" + item + "'");
    }
    out.points.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
  }
  out.validate();
  return out;
}

void HrSchedule::validate() const {
  if (points.empty()) throw std::invalid_argument("HrSchedule: at least one point required");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].second < 20.0 || points[i].second > 300.0) {
      throw std::invalid_argument("HrSchedule: bpm out of range");
    }
    if (i > 0 && points[i].first <= points[i - 1].first) {
      throw std::invalid_argument("HrSchedule: times must be strictly increasing");
    }
  }
}

double pulse_waveform(double phase, double duty) {
  if (duty <= 0.0 || duty >= 1.0) throw std::invalid_argument("pulse_waveform: duty in (0,1)");
  double u = phase / (2.0 * kPi);
  u -= std::floor(u);
  if (u >= duty) return 0.0;
  return 0.5 * (1.0 - std::cos(2.0 * kPi * u / duty));
}

void SynthConfig::validate() const {
  schedule.validate();
  if (duration_s <= 0.0) throw std::invalid_argument("synth: duration_s must be positive");
  if (video.width == 0 || video.height == 0) throw std::invalid_argument("synth: empty frame");
  if (video.fps <= 0.0) throw std::invalid_argument("synth: fps must be positive");
  if (video.dropout < 0.0 || video.dropout > 1.0 || audio.dropout < 0.0 || audio.dropout > 1.0) {
    throw std::invalid_argument("synth: dropout in [0,1]");
  }
  if (video.pixel_noise_std < 0.0 || audio.noise_level < 0.0) {
    throw std::invalid_argument("synth: noise levels must be nonnegative");
  }
  if (video.jitter_us < 0.0) throw std::invalid_argument("synth: jitter_us must be nonnegative");
  if (audio.sample_rate == 0) throw std::invalid_argument("synth: sample_rate must be positive");
  if (audio.chunk_ms <= 0.0) throw std::invalid_argument("synth: chunk_ms must be positive");
  if (audio.modulation_depth < 0.0 || audio.modulation_depth > 1.0) {
    throw std::invalid_argument("synth: modulation_depth in [0,1]");
  }
}

GroundTruth make_ground_truth(const SynthConfig& cfg) {
  GroundTruth gt;
  gt.schedule = cfg.schedule;
  const auto n = static_cast<std::size_t>(std::ceil(cfg.duration_s * gt.trace_fs));
  gt.bpm_trace.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    gt.bpm_trace[i] = cfg.schedule.bpm_at(static_cast<double>(i) / gt.trace_fs);
  }
  return gt;
}

Generator::Generator(const SynthConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  header_.video_height = cfg_.video.height;
  header_.video_width = cfg_.video.width;
  header_.audio_sample_rate = cfg_.audio.sample_rate;
  header_.nominal_fps = cfg_.video.fps;
  n_frames_ = static_cast<std::size_t>(std::ceil(cfg_.duration_s * cfg_.video.fps - 1e-9));
  const double chunk_s = cfg_.audio.chunk_ms / 1e3;
  n_chunks_ = static_cast<std::size_t>(std::ceil(cfg_.duration_s / chunk_s - 1e-9));
  chunk_samples_ = static_cast<std::size_t>(
      std::lround(chunk_s * static_cast<double>(cfg_.audio.sample_rate)));
  if (chunk_samples_ == 0) throw std::invalid_argument("synth: chunk too short for sample rate");
  content_rng_ = SplitMix64(SplitMix64::derive(cfg_.seed, kTagContent, 0));
  fill_video();
  fill_audio();
}

std::optional<wire::MediaPacket> Generator::make_frame() {
  std::size_t i = 0;
  double nominal_s = 0.0;
  for (;;) {
    if (frame_idx_ >= n_frames_) return std::nullopt;
    i = frame_idx_++;
    nominal_s = static_cast<double>(i) / cfg_.video.fps;
    if (cfg_.video.dropout > 0.0) {
      SplitMix64 dr(SplitMix64::derive(cfg_.seed, kTagVideoDrop, i));
      if (dr.next_double() < cfg_.video.dropout) continue;
    }
    break;
  }

  double ts = nominal_s * 1e6;
  if (cfg_.video.jitter_us > 0.0) {
    SplitMix64 jr(SplitMix64::derive(cfg_.seed, kTagJitter, i));
    ts += jr.uniform(-cfg_.video.jitter_us, cfg_.video.jitter_us);
  }
  if (ts < 0.0) ts = 0.0;

  const double pulse = pulse_waveform(cfg_.schedule.phase_at(nominal_s));
  const double rv = 0.45;
  const double gv = cfg_.video.base_level + cfg_.video.pulse_amplitude * pulse;
  const double bv = 0.35;

  wire::MediaPacket pkt;
  pkt.kind = wire::MediaKind::Video;
  pkt.timestamp_us = static_cast<std::uint64_t>(std::llround(ts));
  const std::size_t n_px = static_cast<std::size_t>(cfg_.video.width) * cfg_.video.height;
  pkt.payload.resize(n_px * 3);
  if (cfg_.video.pixel_noise_std > 0.0) {
    SplitMix64 nr(SplitMix64::derive(cfg_.seed, kTagVideoNoise, i));
    const double s = cfg_.video.pixel_noise_std;
    for (std::size_t p = 0; p < n_px; ++p) {
      pkt.payload[3 * p] = quant_u8(rv + s * nr.gaussian());
      pkt.payload[3 * p + 1] = quant_u8(gv + s * nr.gaussian());
      pkt.payload[3 * p + 2] = quant_u8(bv + s * nr.gaussian());
    }
  } else {
    const std::uint8_t qr = quant_u8(rv), qg = quant_u8(gv), qb = quant_u8(bv);
    for (std::size_t p = 0; p < n_px; ++p) {
      pkt.payload[3 * p] = qr;
      pkt.payload[3 * p + 1] = qg;
      pkt.payload[3 * p + 2] = qb;
    }
  }
  return pkt;
}

std::optional<wire::MediaPacket> Generator::make_chunk() {
  while (chunk_idx_ < n_chunks_) {
    const std::size_t j = chunk_idx_++;
    const double chunk_s = cfg_.audio.chunk_ms / 1e3;
    const double sr = static_cast<double>(cfg_.audio.sample_rate);
    const std::size_t first_sample = j * chunk_samples_;

    std::vector<double> raw(chunk_samples_);
    if (cfg_.audio.content == AudioContent::ToneComplex) {
      for (std::size_t k = 0; k < chunk_samples_; ++k) {
        const double t = static_cast<double>(first_sample + k) / sr;
        raw[k] = 0.45 * (std::sin(2.0 * kPi * 180.0 * t) + 0.5 * std::sin(2.0 * kPi * 360.0 * t) +
                         0.25 * std::sin(2.0 * kPi * 540.0 * t)) /
                 1.75;
      }
    } else {
      // Pink noise (Kellet filter) band-limited to roughly 100..3500 Hz by
      // one-pole sections; all state is sequential across chunks.
      SplitMix64& rng = content_rng_;
      const double dt = 1.0 / sr;
      const double rc_hp = 1.0 / (2.0 * kPi * 100.0);
      const double a_hp = rc_hp / (rc_hp + dt);
      const double rc_lp = 1.0 / (2.0 * kPi * 3500.0);
      const double b_lp = dt / (rc_lp + dt);
      for (std::size_t k = 0; k < chunk_samples_; ++k) {
        const double w = rng.gaussian();
        pink_[0] = 0.99886 * pink_[0] + w * 0.0555179;
        pink_[1] = 0.99332 * pink_[1] + w * 0.0750759;
        pink_[2] = 0.96900 * pink_[2] + w * 0.1538520;
        pink_[3] = 0.86650 * pink_[3] + w * 0.3104856;
        pink_[4] = 0.55000 * pink_[4] + w * 0.5329522;
        pink_[5] = -0.7616 * pink_[5] - w * 0.0168980;
        double x = (pink_[0] + pink_[1] + pink_[2] + pink_[3] + pink_[4] + pink_[5] + pink_[6] +
                    w * 0.5362) *
                   0.11;
        pink_[6] = w * 0.115926;
        const double hp = a_hp * (hp_y_ + x - hp_x_);
        hp_x_ = x;
        hp_y_ = hp;
        lp_y_ += b_lp * (hp - lp_y_);
        raw[k] = lp_y_;
      }
    }

    bool dropped = false;
    if (cfg_.audio.dropout > 0.0) {
      SplitMix64 dr(SplitMix64::derive(cfg_.seed, kTagAudioDrop, j));
      dropped = dr.next_double() < cfg_.audio.dropout;
    }
    if (dropped) continue;

    wire::MediaPacket pkt;
    pkt.kind = wire::MediaKind::Audio;
    const double nominal_us = static_cast<double>(j) * chunk_s * 1e6;
    pkt.timestamp_us =
        static_cast<std::uint64_t>(std::llround(nominal_us * (1.0 + cfg_.drift_ppm / 1e6)));
    pkt.payload.resize(chunk_samples_ * 2);

    SplitMix64 nr(SplitMix64::derive(cfg_.seed, kTagAudioNoise, j));
    const double depth = cfg_.audio.modulation_depth;
    for (std::size_t k = 0; k < chunk_samples_; ++k) {
      const double t = static_cast<double>(first_sample + k) / sr;
      const double env = (1.0 - depth) + depth * pulse_waveform(cfg_.schedule.phase_at(t));
      double v = raw[k] * env;
      if (cfg_.audio.noise_level > 0.0) v += cfg_.audio.noise_level * nr.gaussian();
      const std::int16_t q = quant_s16(v);
      pkt.payload[2 * k] = static_cast<std::uint8_t>(q & 0xff);
      pkt.payload[2 * k + 1] = static_cast<std::uint8_t>((q >> 8) & 0xff);
    }
    return pkt;
  }
  return std::nullopt;
}

void Generator::fill_video() {
  if (!pending_video_) pending_video_ = make_frame();
}

void Generator::fill_audio() {
  if (!pending_audio_) pending_audio_ = make_chunk();
}

std::optional<wire::MediaPacket> Generator::next() {
  fill_video();
  fill_audio();
  if (!pending_video_ && !pending_audio_) return std::nullopt;
  const bool take_audio =
      pending_audio_ &&
      (!pending_video_ || pending_audio_->timestamp_us <= pending_video_->timestamp_us);
  std::optional<wire::MediaPacket> out;
  if (take_audio) {
    out.swap(pending_audio_);
  } else {
    out.swap(pending_video_);
  }
  return out;
}

std::vector<wire::MediaPacket> generate(const SynthConfig& cfg) {
  Generator gen(cfg);
  std::vector<wire::MediaPacket> out;
  while (auto pkt = gen.next()) out.push_back(std::move(*pkt));
  return out;
}

void write_capture(const std::string& path, const wire::StreamHeader& header,
                   const std::vector<wire::MediaPacket>& packets) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_capture: cannot open " + path);
  const auto hdr = wire::encode_header(header);
  os.write(reinterpret_cast<const char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
  std::vector<std::uint8_t> buf;
  for (const auto& pkt : packets) {
    buf.clear();
    wire::append_packet(buf, pkt);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) throw std::runtime_error("write_capture: write failed for " + path);
}

void synth_to_file(const std::string& path, const SynthConfig& cfg) {
  Generator gen(cfg);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("synth_to_file: cannot open " + path);
  const auto hdr = wire::encode_header(gen.header());
  os.write(reinterpret_cast<const char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
  std::vector<std::uint8_t> buf;
  while (auto pkt = gen.next()) {
    buf.clear();
    wire::append_packet(buf, *pkt);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) throw std::runtime_error("synth_to_file: write failed for " + path);
}

Capture load_capture(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_capture: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  auto hdr = wire::decode_header(bytes);
  if (hdr.status != wire::DecodeStatus::Ok) {
    throw std::runtime_error("load_capture: missing stream header in " + path);
  }
  Capture cap;
  cap.header = hdr.header;
  std::size_t off = hdr.consumed;
  while (off < bytes.size()) {
    auto res = wire::decode_packet(std::span(bytes).subspan(off));
    if (res.status != wire::DecodeStatus::Ok) break;
    cap.packets.push_back(std::move(res.packet));
    off += res.consumed;
  }
  return cap;
}

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> load_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_kv_text(text);
}

bool apply_synth_key(SynthConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "duration_s") cfg.duration_s = std::stod(value);
  else if (key == "drift_ppm") cfg.drift_ppm = std::stod(value);
  else if (key == "hr") cfg.schedule = HrSchedule::parse(value);
  else if (key == "video.width") cfg.video.width = static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "video.height") cfg.video.height = static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "video.fps") cfg.video.fps = std::stod(value);
  else if (key == "video.base_level") cfg.video.base_level = std::stod(value);
  else if (key == "video.amplitude") cfg.video.pulse_amplitude = std::stod(value);
  else if (key == "video.noise_std") cfg.video.pixel_noise_std = std::stod(value);
  else if (key == "video.jitter_us") cfg.video.jitter_us = std::stod(value);
  else if (key == "video.dropout") cfg.video.dropout = std::stod(value);
  else if (key == "audio.rate") cfg.audio.sample_rate = static_cast<std::uint32_t>(std::stoul(value));
  else if (key == "audio.chunk_ms") cfg.audio.chunk_ms = std::stod(value);
  else if (key == "audio.depth") cfg.audio.modulation_depth = std::stod(value);
  else if (key == "audio.noise_level") cfg.audio.noise_level = std::stod(value);
  else if (key == "audio.dropout") cfg.audio.dropout = std::stod(value);
  else if (key == "audio.content") {
    if (value == "tone_complex") cfg.audio.content = AudioContent::ToneComplex;
    else if (value == "filtered_noise") cfg.audio.content = AudioContent::FilteredNoise;
    else throw std::invalid_argument("audio.content: unknown value '" + value + "'");
  } else {
    return false;
  }
  return true;
}

}  // namespace cardio::synth
