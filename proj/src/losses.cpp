#include <cmath>
#include <stdexcept>

#include "cardio/fft.hpp"
#include "cardio/kernels.hpp"

namespace cardio::kernels {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("loss: pred/truth length mismatch");
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double std_of(std::span<const double> x) {
  const double mu = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(x.size()));
}

constexpr double kVarEps = 1e-12;

}  // namespace

double loss_dis(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  const double sigma = std_of(truth);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = std::abs(pred[i] - truth[i]);
    double factor;
    if (sigma < kVarEps) {
      factor = e > 0.0 ? 1.0 : 0.0;  // limit of (1 - exp(-e/s))^2 as s -> 0
    } else {
      const double m = 1.0 - std::exp(-e / sigma);
      factor = m * m;
    }
    acc += e * e * factor;
  }
  return acc / static_cast<double>(pred.size());
}

double loss_sim(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  const double mp = mean_of(pred), mt = mean_of(truth);
  double spp = 0.0, stt = 0.0, spt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double a = pred[i] - mp, b = truth[i] - mt;
    spp += a * a;
    stt += b * b;
    spt += a * b;
  }
  if (spp < kVarEps || stt < kVarEps) return 1.0;  // no alignment evidence
  double rho = spt / std::sqrt(spp * stt);
  rho = std::clamp(rho, -1.0, 1.0);
  return 1.0 - rho;
}

double loss_freq(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  const auto pf = fft::forward(pred);
  const auto tf = fft::forward(truth);
  double acc = 0.0;
  for (std::size_t k = 0; k < pf.size(); ++k) {
    const double d = std::abs(pf[k]) - std::abs(tf[k]);
    acc += d * d;
  }
  return acc / static_cast<double>(pf.size());
}

LossBreakdown loss_all(std::span<const double> pred, std::span<const double> truth, double alpha,
                       double beta, double gamma) {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw std::invalid_argument("loss_all: weights must be non-negative");
  LossBreakdown b;
  b.dis = loss_dis(pred, truth);
  b.sim = loss_sim(pred, truth);
  b.freq = loss_freq(pred, truth);
  b.total = alpha * b.dis + beta * b.sim + gamma * b.freq;
  return b;
}

std::vector<double> loss_sim_grad(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  const std::size_t n = pred.size();
  const double mp = mean_of(pred), mt = mean_of(truth);
  double spp = 0.0, stt = 0.0, spt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = pred[i] - mp, b = truth[i] - mt;
    spp += a * a;
    stt += b * b;
    spt += a * b;
  }
  std::vector<double> g(n, 0.0);
  if (spp < kVarEps || stt < kVarEps) return g;  // flat plateau, matches loss_sim = 1
  const double np = std::sqrt(spp), nt = std::sqrt(stt);
  const double rho = spt / (np * nt);
  // d rho / d pred = C^T (tbar/(|p||t|) - rho pbar/|p|^2); C centers, so
  // subtract the mean. L = 1 - rho flips the sign.
  double gsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = pred[i] - mp, b = truth[i] - mt;
    g[i] = b / (np * nt) - rho * a / spp;
    gsum += g[i];
  }
  const double gmean = gsum / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = -(g[i] - gmean);
  return g;
}

std::vector<double> loss_freq_grad(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  const std::size_t n = pred.size();
  const auto pf = fft::forward(pred);
  const auto tf = fft::forward(truth);
  // dL/dp = (2/n) Re(DFT(w)) with w_k = (|P_k| - |T_k|) P_k* / |P_k|.
  std::vector<fft::cplx> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double mag = std::abs(pf[k]);
    w[k] = mag > 0.0 ? (mag - std::abs(tf[k])) * std::conj(pf[k]) / mag : fft::cplx(0.0, 0.0);
  }
  fft::transform(w, false);
  std::vector<double> g(n);
  const double scale = 2.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = scale * w[j].real();
  return g;
}

}  // namespace cardio::kernels
