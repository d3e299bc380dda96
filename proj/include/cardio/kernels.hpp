#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "cardio/resample.hpp"
#include "cardio/tensor.hpp"

namespace cardio::kernels {

using cplx = std::complex<double>;

struct ConvStage {
  TensorNd weight;  // [Cout, Cin, kt, kh, kw]
  TensorNd bias;    // [Cout]
  std::size_t stride_t = 1;
  std::size_t stride_h = 2;
  std::size_t stride_w = 2;
};

struct Conv1dStage {
  TensorNd weight;  // [Cout, Cin, K]
  TensorNd bias;    // [Cout]
  std::size_t stride = 1;
};

struct FusionParams {
  TensorNd wq, wk, wv;  // [D, D]
  TensorNd head_w;      // [D]
  double head_b = 0.0;
};

/// Immutable forward-pass parameters. Weights are uniform(-1/sqrt(fan_in),
/// +1/sqrt(fan_in)) from keyed splitmix64 sub-streams, biases zero, so the
/// whole set is a pure function of the seed.
struct KernelParams {
  std::uint64_t seed = 0;
  std::size_t grid_k = 3;
  double f_m = 30.0;
  std::size_t time_dims = 64;  // N_td, even
  std::size_t freq_bins = 61;  // retained real-FFT bins, T/2+1
  std::size_t freq_channels = 64;
  std::vector<ConvStage> video_static;
  std::vector<ConvStage> video_dynamic;
  std::vector<cplx> freq_filter;  // [freq_channels * freq_bins]
  double sample_rate = 8000.0;
  std::size_t sinc_len = 251;
  std::vector<std::pair<double, double>> sinc_bands;  // (f1, f2) Hz
  std::vector<Conv1dStage> audio_stages;
  FusionParams fusion;
};

/// Throws std::invalid_argument when an invariant is broken (even N_td,
/// cutoff ordering, stage shape chaining, dimension agreement).
void validate(const KernelParams& p);

KernelParams default_params(std::uint64_t seed);

/// n contiguous mel-spaced (f1, f2) bands covering [f_lo, f_hi].
std::vector<std::pair<double, double>> mel_bands(std::size_t n, double f_lo, double f_hi);

/// out[t] = frames[t] - frames[t-1] for t >= 1, out[0] = 0. Any rank >= 1,
/// leading axis is time. T < 2 throws.
TensorNd temporal_differential(const TensorNd& frames);

/// Neighborhood attention against the previous frame, residual form.
/// latent [T,H,W,D]; softmax over the clamped grid_k x grid_k window of
/// frame t-1 with scores dot(q, n)/sqrt(D); out[0] = latent[0].
TensorNd motion_aware_aggregation(const TensorNd& latent, std::size_t grid_k);

/// Per-channel spectral reweighting: FFT along T, multiply the n_bins
/// retained bins (upper bins get the conjugate mirror), IFFT, real part.
/// n_bins must equal T/2+1; imaginary residue above 1e-9 * ||out|| throws.
TensorNd frequency_aware_block(const TensorNd& latent, std::span<const cplx> filter,
                               std::size_t n_bins);

/// Row i = [sin(2pi t_i w^1) .. sin(2pi t_i w^{n/2}), cos(...)] with
/// w^k = f_m^(2k/n_td). n_td even, f_m > 1.
TensorNd time_embedding(std::span<const double> times_s, std::size_t n_td, double f_m);

/// Hamming-windowed band-pass taps: r(t) = 2 f2 sinc(2 pi f2 t) - 2 f1
/// sinc(2 pi f1 t) sampled at t = m/sample_rate and scaled by 1/sample_rate
/// (DC gain of the f1=0 low-pass is ~1).
std::vector<double> sinc_kernel(double f1, double f2, std::size_t kernel_len, double sample_rate);

/// Same-length convolution of audio with each band's kernel -> [n_filters, L].
TensorNd sinc_filterbank(std::span<const double> audio,
                         std::span<const std::pair<double, double>> cutoffs,
                         std::size_t kernel_len, double sample_rate);

/// softmax(q k^T / sqrt(D)) v. q [Tq,D], k [Tk,D], v [Tk,Dv].
TensorNd attention(const TensorNd& q, const TensorNd& k, const TensorNd& v);

/// Cross-modal attention with video as query and audio as key and value.
TensorNd fusion_cross_attention(const TensorNd& video_feat, const TensorNd& audio_feat);

/// Zero-padded (k/2 per side) strided 3-D convolution over [T,H,W,Cin].
/// No activation; callers apply relu() where the stack needs it.
TensorNd conv3d(const TensorNd& in, const ConvStage& st);

/// Valid strided 1-D convolution over [Cin, L].
TensorNd conv1d(const TensorNd& in, const Conv1dStage& st);

TensorNd relu(TensorNd x);
TensorNd matmul(const TensorNd& a, const TensorNd& b);
TensorNd upsample_time_nearest(const TensorNd& x, std::size_t target_t);

/// Static/dynamic two-stream conv stack with lateral merges, then
/// motion-aware aggregation, spectral reweighting of the pooled features,
/// and additive time embedding. Output [T, freq_channels].
TensorNd video_encoder_forward(const resample::NormalizedWindow& win, const KernelParams& p);

/// sinc filterbank followed by strided 1-D conv stages -> [Tf_a, channels].
TensorNd audio_encoder_forward(const TensorNd& audio, const KernelParams& p);

/// Full fused forward pass: video encoder, audio encoder when the window has
/// audio, projected cross-attention with residual, linear head -> [T].
std::vector<double> model_forward(const resample::NormalizedWindow& win, const KernelParams& p);

struct LossBreakdown {
  double total = 0.0;
  double dis = 0.0;
  double sim = 0.0;
  double freq = 0.0;
};

/// alpha * L_dis + beta * L_sim + gamma * L_freq. L_dis is the focal-
/// modulated squared error mean(e^2 (1 - exp(-|e|/sigma))^2), sigma =
/// std(truth); L_sim = 1 - Pearson (1 on zero variance); L_freq = mean
/// squared difference of DFT magnitudes.
LossBreakdown loss_all(std::span<const double> pred, std::span<const double> truth,
                       double alpha = 1.0, double beta = 1.0, double gamma = 1.0);
double loss_dis(std::span<const double> pred, std::span<const double> truth);
double loss_sim(std::span<const double> pred, std::span<const double> truth);
double loss_freq(std::span<const double> pred, std::span<const double> truth);
std::vector<double> loss_sim_grad(std::span<const double> pred, std::span<const double> truth);
std::vector<double> loss_freq_grad(std::span<const double> pred, std::span<const double> truth);

// Self-describing parameter blob: "CRDP", version byte, seed, then
// length-prefixed named tensors (f64 or c128), little-endian throughout.
std::vector<std::uint8_t> serialize_params(const KernelParams& p);
KernelParams deserialize_params(std::span<const std::uint8_t> blob);
void save_params(const KernelParams& p, const std::filesystem::path& path);
KernelParams load_params(const std::filesystem::path& path);

}  // namespace cardio::kernels
