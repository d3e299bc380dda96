#include "cardio/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cardio/fft.hpp"

namespace cardio::estimator {

namespace {

constexpr double kPi = std::numbers::pi;

void hann_window(std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] *= 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1)));
  }
}

void remove_mean(std::vector<double>& x) {
  if (x.empty()) return;
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  for (double& v : x) v -= mu;
}

// Least squares line fit subtracted in place.
void detrend(std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 3) return;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    sx += t;
    sy += x[i];
    sxx += t * t;
    sxy += t * x[i];
  }
  const double nn = static_cast<double>(n);
  const double denom = nn * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) return;
  const double slope = (nn * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / nn;
  for (std::size_t i = 0; i < n; ++i) x[i] -= intercept + slope * static_cast<double>(i);
}

double stddev(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

}  // namespace

const char* to_string(Source s) {
  switch (s) {
    case Source::VideoOnly: return "video";
    case Source::AudioOnly: return "audio";
    case Source::Fused: return "fused";
  }
  return "video";
}

SpectralPeak band_peak(std::span<const double> x, double fs, const EstimatorConfig& cfg) {
  SpectralPeak out;
  if (x.size() < 8 || fs <= 0.0) return out;

  std::vector<double> work(x.begin(), x.end());
  remove_mean(work);
  detrend(work);
  hann_window(work);

  std::size_t n_fft = cfg.fft_bins;
  if (n_fft < work.size()) {
    n_fft = 1;
    while (n_fft < work.size()) n_fft *= 2;
  }
  work.resize(n_fft, 0.0);

  const auto spec = fft::rfft(work);
  std::vector<double> power(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) power[i] = std::norm(spec[i]);

  const double hz_per_bin = fs / static_cast<double>(n_fft);
  std::size_t lo = static_cast<std::size_t>(std::ceil(cfg.band_lo_hz / hz_per_bin));
  std::size_t hi = static_cast<std::size_t>(std::floor(cfg.band_hi_hz / hz_per_bin));
  lo = std::max<std::size_t>(lo, 1);
  hi = std::min(hi, power.size() - 1);
  if (lo >= hi) return out;

  std::size_t k_peak = lo;
  for (std::size_t k = lo; k <= hi; ++k) {
    if (power[k] > power[k_peak]) k_peak = k;
  }
  if (power[k_peak] <= 0.0) return out;

  // Parabolic interpolation over log power for sub-bin frequency.
  double delta = 0.0;
  if (k_peak > lo && k_peak < hi) {
    const double eps = 1e-300;
    const double a = std::log(power[k_peak - 1] + eps);
    const double b = std::log(power[k_peak] + eps);
    const double c = std::log(power[k_peak + 1] + eps);
    const double denom = a - 2.0 * b + c;
    if (std::abs(denom) > 1e-30) {
      delta = 0.5 * (a - c) / denom;
      delta = std::clamp(delta, -0.5, 0.5);
    }
  }
  out.found = true;
  out.freq_hz = (static_cast<double>(k_peak) + delta) * hz_per_bin;
  out.power = power[k_peak];

  // Noise floor: median of band bins more than guard_hz away from the
  // peak's first three harmonics.
  const double guard_hz = 0.25;
  std::vector<double> noise;
  noise.reserve(hi - lo + 1);
  for (std::size_t k = lo; k <= hi; ++k) {
    const double f = static_cast<double>(k) * hz_per_bin;
    bool guarded = false;
    for (int m = 1; m <= 3; ++m) {
      if (std::abs(f - static_cast<double>(m) * out.freq_hz) < guard_hz) {
        guarded = true;
        break;
      }
    }
    if (!guarded) noise.push_back(power[k]);
  }
  if (noise.empty()) {
    out.snr_db = std::numeric_limits<double>::infinity();
    return out;
  }
  std::nth_element(noise.begin(), noise.begin() + noise.size() / 2, noise.end());
  const double floor = noise[noise.size() / 2];
  if (floor <= 0.0) {
    out.snr_db = std::numeric_limits<double>::infinity();
  } else {
    out.snr_db = 10.0 * std::log10(out.power / floor);
  }
  return out;
}

std::vector<double> pos_pulse(const TensorNd& frames, double fps, const EstimatorConfig& cfg) {
  if (frames.rank() != 4 || frames.extent(3) != 3) {
    throw std::invalid_argument("pos_pulse: frames must be [T,H,W,3]");
  }
  if (fps <= 0.0) throw std::invalid_argument("pos_pulse: fps must be positive");
  const std::size_t t_len = frames.extent(0);
  const std::size_t hw = frames.extent(1) * frames.extent(2);
  if (t_len == 0 || hw == 0) return {};

  // Spatial mean per channel.
  std::vector<double> r(t_len), g(t_len), b(t_len);
  const double* p = frames.data();
  for (std::size_t t = 0; t < t_len; ++t) {
    double sr = 0.0, sg = 0.0, sb = 0.0;
    const double* q = p + t * hw * 3;
    for (std::size_t i = 0; i < hw; ++i) {
      sr += q[3 * i];
      sg += q[3 * i + 1];
      sb += q[3 * i + 2];
    }
    r[t] = sr / static_cast<double>(hw);
    g[t] = sg / static_cast<double>(hw);
    b[t] = sb / static_cast<double>(hw);
  }

  std::vector<double> pulse(t_len, 0.0);
  std::vector<double> weight(t_len, 0.0);

  std::size_t win = static_cast<std::size_t>(std::lround(cfg.pos_window_s * fps));
  win = std::clamp<std::size_t>(win, 2, t_len);
  std::size_t hop = static_cast<std::size_t>(std::lround(static_cast<double>(win) * (1.0 - cfg.pos_overlap)));
  hop = std::max<std::size_t>(hop, 1);

  std::vector<double> s1(win), s2(win), hann(win);
  for (std::size_t i = 0; i < win; ++i) {
    hann[i] = win < 2 ? 1.0
                      : 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                              static_cast<double>(win - 1)));
  }

  for (std::size_t start = 0;; start += hop) {
    if (start + win > t_len) {
      if (start == 0 || start >= t_len) break;
      // Final partial span realigned to the tail so every frame is covered.
      start = t_len - win;
    }
    const bool last = start + win >= t_len;
    double mr = 0.0, mg = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < win; ++i) {
      mr += r[start + i];
      mg += g[start + i];
      mb += b[start + i];
    }
    mr /= static_cast<double>(win);
    mg /= static_cast<double>(win);
    mb /= static_cast<double>(win);
    if (mr < 1e-12 || mg < 1e-12 || mb < 1e-12) {
      if (last) break;
      continue;
    }

    // Temporally normalized chrominance projections.
    for (std::size_t i = 0; i < win; ++i) {
      const double xr = r[start + i] / mr;
      const double xg = g[start + i] / mg;
      const double xb = b[start + i] / mb;
      s1[i] = xg - xb;
      s2[i] = xg + xb - 2.0 * xr;
    }
    const double sd2 = stddev(s2);
    const double alpha = sd2 < 1e-12 ? 0.0 : stddev(s1) / sd2;
    double mean_h = 0.0;
    for (std::size_t i = 0; i < win; ++i) {
      s1[i] = s1[i] + alpha * s2[i];
      mean_h += s1[i];
    }
    mean_h /= static_cast<double>(win);
    for (std::size_t i = 0; i < win; ++i) {
      pulse[start + i] += (s1[i] - mean_h) * hann[i];
      weight[start + i] += hann[i];
    }
    if (last) break;
  }

  for (std::size_t i = 0; i < t_len; ++i) {
    if (weight[i] > 1e-12) pulse[i] /= weight[i];
  }
  return pulse;
}

HrEstimate rppg_video_estimate(const resample::NormalizedWindow& window,
                               const EstimatorConfig& cfg) {
  HrEstimate est;
  est.window_start_us = window.start_us;
  est.window_end_us = window.end_us;
  est.source = Source::VideoOnly;
  if (window.frames.size() == 0) return est;

  const std::size_t t_len = window.frames.extent(0);
  double fps = 30.0;
  if (window.frame_times_s.size() >= 2) {
    const double span = window.frame_times_s.back() - window.frame_times_s.front();
    if (span > 1e-9) fps = static_cast<double>(window.frame_times_s.size() - 1) / span;
  } else if (window.end_us > window.start_us) {
    fps = static_cast<double>(t_len) * 1e6 /
          static_cast<double>(window.end_us - window.start_us);
  }

  const auto pulse = pos_pulse(window.frames, fps, cfg);
  const auto peak = band_peak(pulse, fps, cfg);
  if (!peak.found) return est;
  est.snr_db = peak.snr_db;
  const double bpm = peak.freq_hz * 60.0;
  est.valid = peak.snr_db >= cfg.video_min_snr_db && bpm >= cfg.min_bpm && bpm <= cfg.max_bpm;
  est.bpm = est.valid ? bpm : 0.0;
  return est;
}

HrEstimate audio_envelope_estimate(const TensorNd& audio, double sample_rate,
                                   const EstimatorConfig& cfg) {
  HrEstimate est;
  est.source = Source::AudioOnly;
  if (audio.rank() != 1) throw std::invalid_argument("audio_envelope_estimate: audio must be 1-d");
  if (sample_rate <= 0.0) throw std::invalid_argument("audio_envelope_estimate: bad sample rate");
  const std::size_t n = audio.size();
  if (n < 16) return est;

  double rms = 0.0;
  for (std::size_t i = 0; i < n; ++i) rms += audio[i] * audio[i];
  rms = std::sqrt(rms / static_cast<double>(n));
  if (rms < cfg.silence_rms) return est;

  // Rectify and block-average down to the envelope rate.
  const std::size_t block = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(sample_rate / cfg.envelope_rate_hz)));
  const double env_fs = sample_rate / static_cast<double>(block);
  const std::size_t m = n / block;
  if (m < 16) return est;
  std::vector<double> env(m);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < block; ++j) acc += std::abs(audio[i * block + j]);
    env[i] = acc / static_cast<double>(block);
  }

  // FIR low-pass to isolate the beat-rate modulation.
  const std::size_t taps = cfg.envelope_taps | 1;
  std::vector<double> h(taps);
  const double fc = cfg.envelope_cutoff_hz / env_fs;
  const auto half = static_cast<double>(taps / 2);
  double hsum = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double t = static_cast<double>(i) - half;
    const double arg = 2.0 * kPi * fc * t;
    double v = std::abs(t) < 1e-12 ? 2.0 * fc : std::sin(arg) / (kPi * t);
    v *= 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(taps - 1));
    h[i] = v;
    hsum += v;
  }
  for (double& v : h) v /= hsum;

  std::vector<double> smooth(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(taps / 2) -
                               static_cast<std::ptrdiff_t>(k);
      if (j >= 0 && j < static_cast<std::ptrdiff_t>(m)) acc += h[k] * env[static_cast<std::size_t>(j)];
    }
    smooth[i] = acc;
  }

  const auto peak = band_peak(smooth, env_fs, cfg);
  if (!peak.found) return est;
  est.snr_db = peak.snr_db;
  const double bpm = peak.freq_hz * 60.0;
  est.valid = peak.snr_db >= cfg.audio_min_snr_db && bpm >= cfg.min_bpm && bpm <= cfg.max_bpm;
  est.bpm = est.valid ? bpm : 0.0;
  return est;
}

HrEstimate fuse_estimates(const HrEstimate& v, const HrEstimate& a) {
  if (!v.valid && !a.valid) {
    HrEstimate out = v;
    out.valid = false;
    out.bpm = 0.0;
    out.source = Source::Fused;
    out.snr_db = std::max(v.snr_db, a.snr_db);
    return out;
  }
  if (v.valid && !a.valid) return v;
  if (!v.valid && a.valid) {
    HrEstimate out = a;
    out.window_start_us = v.window_start_us ? v.window_start_us : a.window_start_us;
    out.window_end_us = v.window_end_us ? v.window_end_us : a.window_end_us;
    return out;
  }
  HrEstimate out;
  out.valid = true;
  out.window_start_us = v.window_start_us;
  out.window_end_us = v.window_end_us;
  out.source = Source::Fused;
  const double wv = std::pow(10.0, v.snr_db / 10.0);
  const double wa = std::pow(10.0, a.snr_db / 10.0);
  out.bpm = (wv * v.bpm + wa * a.bpm) / (wv + wa);
  out.snr_db = 10.0 * std::log10(wv + wa);
  return out;
}

MetricReport compute_metrics(std::span<const double> preds, std::span<const double> truths) {
  if (preds.size() != truths.size()) {
    throw std::invalid_argument("compute_metrics: length mismatch");
  }
  if (preds.empty()) throw std::invalid_argument("compute_metrics: empty input");
  MetricReport rep;
  double se = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (truths[i] <= 0.0) throw std::invalid_argument("compute_metrics: nonpositive truth");
    const double e = preds[i] - truths[i];
    rep.mae += std::abs(e);
    se += e * e;
    rep.mape += std::abs(e) / truths[i];
  }
  const double n = static_cast<double>(preds.size());
  rep.mae /= n;
  rep.rmse = std::sqrt(se / n);
  rep.mape = rep.mape / n * 100.0;
  return rep;
}

std::string to_jsonl(const HrEstimate& e) {
  double snr = e.snr_db;
  if (std::isinf(snr)) snr = snr > 0 ? 999.0 : -999.0;
  if (std::isnan(snr)) snr = -999.0;
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "{\"t_start_us\": " << e.window_start_us << ", \"t_end_us\": " << e.window_end_us
     << ", \"bpm\": " << (e.valid ? e.bpm : 0.0) << ", \"snr_db\": " << snr << ", \"source\": \""
     << to_string(e.source) << "\"}";
  return os.str();
}

}  // namespace cardio::estimator
