#include "cardio/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cardio/fft.hpp"
#include "cardio/rng.hpp"

namespace cardio::kernels {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stable tensor tags for keyed sub-stream seeding; appending new tags never
// reshuffles existing draws.
enum SeedTag : std::uint64_t {
  kTagVideoStatic = 1,
  kTagVideoDynamic = 2,
  kTagFreqFilter = 3,
  kTagAudioConv = 4,
  kTagFusionQ = 5,
  kTagFusionK = 6,
  kTagFusionV = 7,
  kTagFusionHead = 8,
};

void fill_uniform(TensorNd& t, std::uint64_t seed, std::uint64_t tag, std::uint64_t index,
                  double fan_in) {
  SplitMix64 g(SplitMix64::derive(seed, tag, index));
  const double bound = 1.0 / std::sqrt(fan_in);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = g.uniform(-bound, bound);
}

double mel_of(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double hz_of(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t pad, std::size_t stride) {
  const std::size_t padded = in + 2 * pad;
  if (padded < k) return 0;
  return (padded - k) / stride + 1;
}

void softmax_inplace(std::vector<double>& s) {
  double mx = s[0];
  for (double v : s) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : s) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : s) v /= sum;
}

}  // namespace

std::vector<std::pair<double, double>> mel_bands(std::size_t n, double f_lo, double f_hi) {
  if (n == 0 || !(f_lo >= 0.0) || !(f_hi > f_lo))
    throw std::invalid_argument("mel_bands: bad band spec");
  const double m_lo = mel_of(f_lo), m_hi = mel_of(f_hi);
  std::vector<std::pair<double, double>> bands(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(n);
    const double b = m_lo + (m_hi - m_lo) * static_cast<double>(i + 1) / static_cast<double>(n);
    bands[i] = {hz_of(a), hz_of(b)};
  }
  bands.front().first = f_lo;
  bands.back().second = f_hi;
  return bands;
}

TensorNd temporal_differential(const TensorNd& frames) {
  if (frames.rank() < 1 || frames.extent(0) < 2)
    throw std::invalid_argument("temporal_differential: needs T >= 2");
  const std::size_t t_len = frames.extent(0);
  const std::size_t step = frames.size() / t_len;
  TensorNd out(frames.shape());
  const double* src = frames.data();
  double* dst = out.data();
  for (std::size_t t = 1; t < t_len; ++t) {
    const double* cur = src + t * step;
    const double* prev = src + (t - 1) * step;
    double* d = dst + t * step;
    for (std::size_t i = 0; i < step; ++i) d[i] = cur[i] - prev[i];
  }
  return out;
}

TensorNd motion_aware_aggregation(const TensorNd& latent, std::size_t grid_k) {
  if (latent.rank() != 4) throw std::invalid_argument("motion_aware_aggregation: expects [T,H,W,D]");
  if (grid_k == 0 || grid_k % 2 == 0)
    throw std::invalid_argument("motion_aware_aggregation: grid_k must be odd");
  const std::size_t T = latent.extent(0), H = latent.extent(1), W = latent.extent(2),
                    D = latent.extent(3);
  if (T < 2) throw std::invalid_argument("motion_aware_aggregation: needs T >= 2");
  if (grid_k > std::min(H, W))
    throw std::invalid_argument("motion_aware_aggregation: grid_k exceeds spatial extent");

  TensorNd out(latent.shape());
  const double* src = latent.data();
  double* dst = out.data();
  const std::size_t frame = H * W * D;
  std::copy(src, src + frame, dst);  // out[0] = latent[0]

  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(grid_k / 2);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(D));
  std::vector<double> scores;
  std::vector<const double*> nbrs;
  for (std::size_t t = 1; t < T; ++t) {
    const double* cur = src + t * frame;
    const double* prev = src + (t - 1) * frame;
    double* o = dst + t * frame;
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        const double* q = cur + (i * W + j) * D;
        scores.clear();
        nbrs.clear();
        const std::ptrdiff_t i0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(i) - r);
        const std::ptrdiff_t i1 =
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(H) - 1,
                                     static_cast<std::ptrdiff_t>(i) + r);
        const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(j) - r);
        const std::ptrdiff_t j1 =
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(W) - 1,
                                     static_cast<std::ptrdiff_t>(j) + r);
        for (std::ptrdiff_t ni = i0; ni <= i1; ++ni) {
          for (std::ptrdiff_t nj = j0; nj <= j1; ++nj) {
            const double* n = prev + (static_cast<std::size_t>(ni) * W +
                                      static_cast<std::size_t>(nj)) * D;
            double dot = 0.0;
            for (std::size_t d = 0; d < D; ++d) dot += q[d] * n[d];
            scores.push_back(dot * inv_sqrt_d);
            nbrs.push_back(n);
          }
        }
        softmax_inplace(scores);
        double* po = o + (i * W + j) * D;
        for (std::size_t d = 0; d < D; ++d) po[d] = q[d];
        for (std::size_t s = 0; s < scores.size(); ++s) {
          const double w = scores[s];
          const double* n = nbrs[s];
          for (std::size_t d = 0; d < D; ++d) po[d] += w * n[d];
        }
      }
    }
  }
  return out;
}

TensorNd frequency_aware_block(const TensorNd& latent, std::span<const cplx> filter,
                               std::size_t n_bins) {
  if (latent.rank() != 2) throw std::invalid_argument("frequency_aware_block: expects [T,C]");
  const std::size_t T = latent.extent(0), C = latent.extent(1);
  if (n_bins != T / 2 + 1)
    throw std::invalid_argument("frequency_aware_block: n_bins must be T/2+1");
  if (filter.size() != C * n_bins)
    throw std::invalid_argument("frequency_aware_block: filter size mismatch");

  TensorNd out(latent.shape());
  double residue = 0.0;
  double norm_sq = 0.0;
  std::vector<cplx> x(T);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) x[t] = cplx(latent.at(t, c), 0.0);
    fft::transform(x, false);
    const cplx* f = filter.data() + c * n_bins;
    for (std::size_t k = 0; k < n_bins; ++k) x[k] *= f[k];
    for (std::size_t k = n_bins; k < T; ++k) x[k] *= std::conj(f[T - k]);
    fft::transform(x, true);
    for (std::size_t t = 0; t < T; ++t) {
      out.at(t, c) = x[t].real();
      residue = std::max(residue, std::abs(x[t].imag()));
      norm_sq += x[t].real() * x[t].real();
    }
  }
  const double norm = std::sqrt(norm_sq);
  if (norm > 0.0 && residue >= 1e-9 * norm)
    throw std::runtime_error("frequency_aware_block: non-Hermitian filter left imaginary residue");
  return out;
}

TensorNd time_embedding(std::span<const double> times_s, std::size_t n_td, double f_m) {
  if (n_td == 0 || n_td % 2 != 0) throw std::invalid_argument("time_embedding: N_td must be even");
  if (!(f_m > 1.0)) throw std::invalid_argument("time_embedding: f_m must exceed 1");
  const std::size_t half = n_td / 2;
  TensorNd out({times_s.size(), n_td});
  for (std::size_t k = 1; k <= half; ++k) {
    const double w = std::pow(f_m, 2.0 * static_cast<double>(k) / static_cast<double>(n_td));
    for (std::size_t i = 0; i < times_s.size(); ++i) {
      const double theta = 2.0 * kPi * times_s[i] * w;
      out.at(i, k - 1) = std::sin(theta);
      out.at(i, half + k - 1) = std::cos(theta);
    }
  }
  return out;
}

std::vector<double> sinc_kernel(double f1, double f2, std::size_t kernel_len, double sample_rate) {
  if (!(f1 >= 0.0) || !(f2 > f1) || !(f2 <= sample_rate / 2.0))
    throw std::invalid_argument("sinc_kernel: need 0 <= f1 < f2 <= Nyquist");
  if (kernel_len == 0 || kernel_len % 2 == 0)
    throw std::invalid_argument("sinc_kernel: kernel_len must be odd");
  std::vector<double> taps(kernel_len);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kernel_len - 1) / 2;
  for (std::size_t i = 0; i < kernel_len; ++i) {
    const double m = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half);
    const double t = m / sample_rate;
    double r;
    if (m == 0.0) {
      r = 2.0 * (f2 - f1);
    } else {
      const double a2 = 2.0 * kPi * f2 * t;
      const double a1 = 2.0 * kPi * f1 * t;
      r = 2.0 * f2 * (std::sin(a2) / a2) - (f1 > 0.0 ? 2.0 * f1 * (std::sin(a1) / a1) : 0.0);
    }
    const double win =
        0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                               static_cast<double>(kernel_len - 1));
    taps[i] = win * r / sample_rate;
  }
  return taps;
}

TensorNd sinc_filterbank(std::span<const double> audio,
                         std::span<const std::pair<double, double>> cutoffs,
                         std::size_t kernel_len, double sample_rate) {
  const std::size_t L = audio.size();
  if (L == 0) throw std::invalid_argument("sinc_filterbank: empty audio");
  TensorNd out({cutoffs.size(), L});

  // Shared-input FFT convolution; exactness is covered by the naive oracle
  // in tests.
  const std::size_t full = L + kernel_len - 1;
  std::size_t padded = 1;
  while (padded < full) padded <<= 1;
  std::vector<cplx> xf(padded, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < L; ++i) xf[i] = cplx(audio[i], 0.0);
  fft::transform(xf, false);

  const std::size_t offset = (kernel_len - 1) / 2;
  std::vector<cplx> hf(padded);
  for (std::size_t b = 0; b < cutoffs.size(); ++b) {
    const auto taps = sinc_kernel(cutoffs[b].first, cutoffs[b].second, kernel_len, sample_rate);
    std::fill(hf.begin(), hf.end(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < kernel_len; ++i) hf[i] = cplx(taps[i], 0.0);
    fft::transform(hf, false);
    for (std::size_t i = 0; i < padded; ++i) hf[i] *= xf[i];
    fft::transform(hf, true);
    for (std::size_t i = 0; i < L; ++i) out.at(b, i) = hf[i + offset].real();
  }
  return out;
}

TensorNd attention(const TensorNd& q, const TensorNd& k, const TensorNd& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
    throw std::invalid_argument("attention: expects rank-2 inputs");
  const std::size_t Tq = q.extent(0), D = q.extent(1);
  const std::size_t Tk = k.extent(0), Dv = v.extent(1);
  if (k.extent(1) != D) throw std::invalid_argument("attention: query/key dim mismatch");
  if (v.extent(0) != Tk) throw std::invalid_argument("attention: key/value length mismatch");

  TensorNd out({Tq, Dv});
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  std::vector<double> row(Tk);
  for (std::size_t i = 0; i < Tq; ++i) {
    for (std::size_t j = 0; j < Tk; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < D; ++d) dot += q.at(i, d) * k.at(j, d);
      row[j] = dot * scale;
    }
    softmax_inplace(row);
    for (std::size_t j = 0; j < Tk; ++j) {
      const double w = row[j];
      for (std::size_t d = 0; d < Dv; ++d) out.at(i, d) += w * v.at(j, d);
    }
  }
  return out;
}

TensorNd fusion_cross_attention(const TensorNd& video_feat, const TensorNd& audio_feat) {
  return attention(video_feat, audio_feat, audio_feat);
}

TensorNd conv3d(const TensorNd& in, const ConvStage& st) {
  if (in.rank() != 4) throw std::invalid_argument("conv3d: expects [T,H,W,C]");
  if (st.weight.rank() != 5) throw std::invalid_argument("conv3d: weight expects 5 dims");
  const std::size_t T = in.extent(0), H = in.extent(1), W = in.extent(2), Cin = in.extent(3);
  const std::size_t Cout = st.weight.extent(0);
  if (st.weight.extent(1) != Cin) throw std::invalid_argument("conv3d: channel mismatch");
  const std::size_t kt = st.weight.extent(2), kh = st.weight.extent(3), kw = st.weight.extent(4);
  if (st.bias.size() != Cout) throw std::invalid_argument("conv3d: bias size mismatch");
  const std::size_t pt = kt / 2, ph = kh / 2, pw = kw / 2;
  const std::size_t To = conv_out_extent(T, kt, pt, st.stride_t);
  const std::size_t Ho = conv_out_extent(H, kh, ph, st.stride_h);
  const std::size_t Wo = conv_out_extent(W, kw, pw, st.stride_w);
  if (To == 0 || Ho == 0 || Wo == 0) throw std::invalid_argument("conv3d: output collapses to zero");

  TensorNd out({To, Ho, Wo, Cout});
  const double* x = in.data();
  const double* wgt = st.weight.data();
  double* y = out.data();
  const std::size_t w_ci = kt * kh * kw;
  for (std::size_t to = 0; to < To; ++to) {
    for (std::size_t ho = 0; ho < Ho; ++ho) {
      for (std::size_t wo = 0; wo < Wo; ++wo) {
        double* dst = y + ((to * Ho + ho) * Wo + wo) * Cout;
        for (std::size_t co = 0; co < Cout; ++co) dst[co] = st.bias[co];
        for (std::size_t dt = 0; dt < kt; ++dt) {
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(to * st.stride_t + dt) -
                                    static_cast<std::ptrdiff_t>(pt);
          if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) continue;
          for (std::size_t dh = 0; dh < kh; ++dh) {
            const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(ho * st.stride_h + dh) -
                                      static_cast<std::ptrdiff_t>(ph);
            if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t dw = 0; dw < kw; ++dw) {
              const std::ptrdiff_t wi = static_cast<std::ptrdiff_t>(wo * st.stride_w + dw) -
                                        static_cast<std::ptrdiff_t>(pw);
              if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(W)) continue;
              const double* px = x + ((static_cast<std::size_t>(ti) * H +
                                       static_cast<std::size_t>(hi)) * W +
                                      static_cast<std::size_t>(wi)) * Cin;
              const std::size_t w_off = (dt * kh + dh) * kw + dw;
              for (std::size_t co = 0; co < Cout; ++co) {
                const double* pw_row = wgt + (co * Cin) * w_ci + w_off;
                double acc = 0.0;
                for (std::size_t ci = 0; ci < Cin; ++ci) acc += pw_row[ci * w_ci] * px[ci];
                dst[co] += acc;
              }
            }
          }
        }
      }
    }
  }
  return out;
}

TensorNd conv1d(const TensorNd& in, const Conv1dStage& st) {
  if (in.rank() != 2) throw std::invalid_argument("conv1d: expects [C,L]");
  const std::size_t Cin = in.extent(0), L = in.extent(1);
  const std::size_t Cout = st.weight.extent(0);
  if (st.weight.rank() != 3 || st.weight.extent(1) != Cin)
    throw std::invalid_argument("conv1d: weight shape mismatch");
  const std::size_t K = st.weight.extent(2);
  if (L < K) throw std::invalid_argument("conv1d: input shorter than kernel");
  const std::size_t Lo = (L - K) / st.stride + 1;

  TensorNd out({Cout, Lo});
  for (std::size_t co = 0; co < Cout; ++co) {
    const double b = st.bias[co];
    for (std::size_t j = 0; j < Lo; ++j) {
      double acc = b;
      const std::size_t base = j * st.stride;
      for (std::size_t ci = 0; ci < Cin; ++ci) {
        const double* w = st.weight.data() + (co * Cin + ci) * K;
        const double* x = in.data() + ci * L + base;
        for (std::size_t k = 0; k < K; ++k) acc += w[k] * x[k];
      }
      out.at(co, j) = acc;
    }
  }
  return out;
}

TensorNd relu(TensorNd x) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(0.0, x[i]);
  return x;
}

TensorNd matmul(const TensorNd& a, const TensorNd& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0))
    throw std::invalid_argument("matmul: shape mismatch");
  const std::size_t n = a.extent(0), m = a.extent(1), p = b.extent(1);
  TensorNd out({n, p});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const double av = a.at(i, k);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < p; ++j) out.at(i, j) += av * b.at(k, j);
    }
  }
  return out;
}

TensorNd upsample_time_nearest(const TensorNd& x, std::size_t target_t) {
  if (x.rank() < 1) throw std::invalid_argument("upsample_time_nearest: rank 0");
  const std::size_t T = x.extent(0);
  if (T == target_t) return x;
  if (T == 0 || target_t == 0) throw std::invalid_argument("upsample_time_nearest: empty axis");
  auto shape = x.shape();
  shape[0] = target_t;
  TensorNd out(shape);
  const std::size_t step = x.size() / T;
  for (std::size_t t = 0; t < target_t; ++t) {
    const std::size_t src = std::min(T - 1, t * T / target_t);
    std::copy(x.data() + src * step, x.data() + (src + 1) * step, out.data() + t * step);
  }
  return out;
}

TensorNd video_encoder_forward(const resample::NormalizedWindow& win, const KernelParams& p) {
  const TensorNd& x = win.frames;
  if (x.rank() != 4) throw std::invalid_argument("video_encoder_forward: frames must be [T,H,W,3]");
  const std::size_t T = x.extent(0);
  if (p.video_static.size() != p.video_dynamic.size())
    throw std::invalid_argument("video_encoder_forward: stream stage counts differ");

  TensorNd d = temporal_differential(x);
  TensorNd s = x;
  for (std::size_t i = 0; i < p.video_static.size(); ++i) {
    d = relu(conv3d(d, p.video_dynamic[i]));
    s = relu(conv3d(s, p.video_static[i]));
    if (!s.same_shape(d))
      throw std::invalid_argument("video_encoder_forward: lateral shapes diverge");
    for (std::size_t j = 0; j < s.size(); ++j) s[j] += d[j];
  }
  if (s.extent(0) != T) s = upsample_time_nearest(s, T);

  s = motion_aware_aggregation(s, p.grid_k);

  // Spatial mean -> [T, C]; the per-channel spectral filter commutes with
  // the mean, so pooling first is exact and cheaper than per-pixel FFTs.
  const std::size_t Hs = s.extent(1), Ws = s.extent(2), C = s.extent(3);
  if (C != p.freq_channels)
    throw std::invalid_argument("video_encoder_forward: channel count mismatch");
  TensorNd feat({T, C});
  const double inv_px = 1.0 / static_cast<double>(Hs * Ws);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < Hs; ++i)
      for (std::size_t j = 0; j < Ws; ++j) {
        const double* px = s.data() + ((t * Hs + i) * Ws + j) * C;
        for (std::size_t c = 0; c < C; ++c) feat.at(t, c) += px[c];
      }
    for (std::size_t c = 0; c < C; ++c) feat.at(t, c) *= inv_px;
  }

  TensorNd fab = frequency_aware_block(feat, p.freq_filter, p.freq_bins);

  if (win.frame_times_s.size() != T)
    throw std::invalid_argument("video_encoder_forward: frame time count mismatch");
  if (p.time_dims != C)
    throw std::invalid_argument("video_encoder_forward: N_td must match channels");
  TensorNd emb = time_embedding(win.frame_times_s, p.time_dims, p.f_m);
  for (std::size_t i = 0; i < fab.size(); ++i) fab[i] += emb[i];
  return fab;
}

TensorNd audio_encoder_forward(const TensorNd& audio, const KernelParams& p) {
  if (audio.rank() != 1) throw std::invalid_argument("audio_encoder_forward: expects [L]");
  TensorNd h = sinc_filterbank(std::span<const double>(audio.data(), audio.size()), p.sinc_bands,
                               p.sinc_len, p.sample_rate);
  for (const auto& st : p.audio_stages) h = relu(conv1d(h, st));
  const std::size_t C = h.extent(0), L = h.extent(1);
  TensorNd out({L, C});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t j = 0; j < L; ++j) out.at(j, c) = h.at(c, j);
  return out;
}

std::vector<double> model_forward(const resample::NormalizedWindow& win, const KernelParams& p) {
  TensorNd vf = video_encoder_forward(win, p);
  const std::size_t T = vf.extent(0), D = vf.extent(1);
  TensorNd fused = vf;
  if (!win.video_only && win.audio.size() > 0) {
    TensorNd af = audio_encoder_forward(win.audio, p);
    TensorNd q = matmul(vf, p.fusion.wq);
    TensorNd k = matmul(af, p.fusion.wk);
    TensorNd v = matmul(af, p.fusion.wv);
    TensorNd att = attention(q, k, v);
    for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += att[i];
  }
  if (p.fusion.head_w.size() != D)
    throw std::invalid_argument("model_forward: head dimension mismatch");
  std::vector<double> y(T);
  for (std::size_t t = 0; t < T; ++t) {
    double acc = p.fusion.head_b;
    for (std::size_t d = 0; d < D; ++d) acc += fused.at(t, d) * p.fusion.head_w[d];
    y[t] = acc;
  }
  return y;
}

void validate(const KernelParams& p) {
  if (p.time_dims == 0 || p.time_dims % 2 != 0)
    throw std::invalid_argument("KernelParams: N_td must be even");
  if (!(p.f_m > 1.0)) throw std::invalid_argument("KernelParams: f_m must exceed 1");
  if (p.grid_k == 0 || p.grid_k % 2 == 0)
    throw std::invalid_argument("KernelParams: grid_k must be odd");
  for (const auto& [f1, f2] : p.sinc_bands) {
    if (!(f1 >= 0.0) || !(f2 > f1) || !(f2 <= p.sample_rate / 2.0))
      throw std::invalid_argument("KernelParams: sinc cutoffs must satisfy 0 <= f1 < f2 <= Nyquist");
  }
  if (p.sinc_len == 0 || p.sinc_len % 2 == 0)
    throw std::invalid_argument("KernelParams: sinc kernel length must be odd");
  if (p.video_static.size() != p.video_dynamic.size())
    throw std::invalid_argument("KernelParams: video stream stage counts differ");
  for (std::size_t i = 0; i < p.video_static.size(); ++i) {
    const auto& a = p.video_static[i].weight;
    const auto& b = p.video_dynamic[i].weight;
    if (a.rank() != 5 || b.rank() != 5 || a.shape() != b.shape())
      throw std::invalid_argument("KernelParams: mismatched video stage shapes");
    if (i > 0 && a.extent(1) != p.video_static[i - 1].weight.extent(0))
      throw std::invalid_argument("KernelParams: video stage channels do not chain");
  }
  if (!p.video_static.empty()) {
    const std::size_t c_out = p.video_static.back().weight.extent(0);
    if (c_out != p.freq_channels || c_out != p.time_dims)
      throw std::invalid_argument("KernelParams: conv output, filter channels and N_td must agree");
  }
  if (p.freq_filter.size() != p.freq_channels * p.freq_bins)
    throw std::invalid_argument("KernelParams: freq filter size mismatch");
  for (std::size_t i = 1; i < p.audio_stages.size(); ++i) {
    if (p.audio_stages[i].weight.extent(1) != p.audio_stages[i - 1].weight.extent(0))
      throw std::invalid_argument("KernelParams: audio stage channels do not chain");
  }
  if (!p.audio_stages.empty() && !p.sinc_bands.empty() &&
      p.audio_stages.front().weight.extent(1) != p.sinc_bands.size())
    throw std::invalid_argument("KernelParams: first audio stage must consume the filterbank");
  const std::size_t d = p.freq_channels;
  for (const TensorNd* t : {&p.fusion.wq, &p.fusion.wk, &p.fusion.wv}) {
    if (t->rank() != 2 || t->extent(0) != d || t->extent(1) != d)
      throw std::invalid_argument("KernelParams: fusion projections must be [D,D]");
  }
  if (p.fusion.head_w.size() != d)
    throw std::invalid_argument("KernelParams: fusion head must be [D]");
}

KernelParams default_params(std::uint64_t seed) {
  KernelParams p;
  p.seed = seed;

  const std::size_t video_ch[4] = {3, 16, 32, 64};
  for (std::size_t i = 0; i < 3; ++i) {
    ConvStage s;
    s.weight = TensorNd({video_ch[i + 1], video_ch[i], 3, 3, 3});
    s.bias = TensorNd({video_ch[i + 1]});
    const double fan_in = static_cast<double>(video_ch[i] * 27);
    ConvStage d = s;
    fill_uniform(s.weight, seed, kTagVideoStatic, i, fan_in);
    fill_uniform(d.weight, seed, kTagVideoDynamic, i, fan_in);
    p.video_static.push_back(std::move(s));
    p.video_dynamic.push_back(std::move(d));
  }

  // Spectral filter for T = 120 frame windows; imaginary parts vanish at DC
  // and Nyquist so the modulated signal stays real.
  p.freq_bins = 61;
  p.freq_channels = 64;
  p.freq_filter.resize(p.freq_channels * p.freq_bins);
  {
    SplitMix64 g(SplitMix64::derive(seed, kTagFreqFilter, 0));
    for (std::size_t c = 0; c < p.freq_channels; ++c) {
      for (std::size_t k = 0; k < p.freq_bins; ++k) {
        const double re = g.uniform(0.5, 1.5);
        double im = g.uniform(-0.5, 0.5);
        if (k == 0 || k == p.freq_bins - 1) im = 0.0;
        p.freq_filter[c * p.freq_bins + k] = cplx(re, im);
      }
    }
  }

  p.sample_rate = 8000.0;
  p.sinc_len = 251;
  p.sinc_bands = mel_bands(32, 30.0, 4000.0);

  const std::size_t audio_ch[4] = {32, 32, 64, 64};
  const std::size_t audio_k[3] = {25, 25, 9};
  const std::size_t audio_s[3] = {10, 10, 4};
  for (std::size_t i = 0; i < 3; ++i) {
    Conv1dStage st;
    st.weight = TensorNd({audio_ch[i + 1], audio_ch[i], audio_k[i]});
    st.bias = TensorNd({audio_ch[i + 1]});
    st.stride = audio_s[i];
    fill_uniform(st.weight, seed, kTagAudioConv, i,
                 static_cast<double>(audio_ch[i] * audio_k[i]));
    p.audio_stages.push_back(std::move(st));
  }

  const std::size_t d = p.freq_channels;
  p.fusion.wq = TensorNd({d, d});
  p.fusion.wk = TensorNd({d, d});
  p.fusion.wv = TensorNd({d, d});
  p.fusion.head_w = TensorNd({d});
  fill_uniform(p.fusion.wq, seed, kTagFusionQ, 0, static_cast<double>(d));
  fill_uniform(p.fusion.wk, seed, kTagFusionK, 0, static_cast<double>(d));
  fill_uniform(p.fusion.wv, seed, kTagFusionV, 0, static_cast<double>(d));
  fill_uniform(p.fusion.head_w, seed, kTagFusionHead, 0, static_cast<double>(d));
  p.fusion.head_b = 0.0;

  validate(p);
  return p;
}

}  // namespace cardio::kernels
