#pragma once

// Slow reference implementations the fast paths are tested against.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "cardio/tensor.hpp"

namespace oracle {

using cplx = std::complex<double>;

inline std::vector<cplx> naive_dft(std::span<const cplx> x, bool inverse = false) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k) *
                       static_cast<double>(j) / static_cast<double>(n);
      acc += x[j] * cplx{std::cos(a), std::sin(a)};
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

inline std::vector<cplx> naive_dft_real(std::span<const double> x) {
  std::vector<cplx> cx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) cx[i] = {x[i], 0.0};
  return naive_dft(cx);
}

/// Same-length convolution with the kernel centered (matches the filterbank).
inline std::vector<double> naive_conv_same(std::span<const double> x, std::span<const double> h) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(h.size());
  const std::ptrdiff_t half = m / 2;
  std::vector<double> out(x.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < m; ++k) {
      const std::ptrdiff_t j = i + half - k;
      if (j >= 0 && j < n) acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

/// softmax(q k^T / sqrt(D)) v computed with straight loops.
inline cardio::TensorNd naive_attention(const cardio::TensorNd& q, const cardio::TensorNd& k,
                                        const cardio::TensorNd& v) {
  const std::size_t tq = q.extent(0), d = q.extent(1);
  const std::size_t tk = k.extent(0), dv = v.extent(1);
  cardio::TensorNd out({tq, dv});
  std::vector<double> scores(tk);
  for (std::size_t i = 0; i < tq; ++i) {
    double mx = -1e300;
    for (std::size_t j = 0; j < tk; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q.at(i, c) * k.at(j, c);
      scores[j] = s / std::sqrt(static_cast<double>(d));
      mx = std::max(mx, scores[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < tk; ++j) {
      scores[j] = std::exp(scores[j] - mx);
      z += scores[j];
    }
    for (std::size_t c = 0; c < dv; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < tk; ++j) acc += scores[j] * v.at(j, c);
      out.at(i, c) = acc / z;
    }
  }
  return out;
}

/// Residual neighborhood attention against frame t-1, brute force.
inline cardio::TensorNd naive_maa(const cardio::TensorNd& latent, std::size_t grid_k) {
  const std::size_t t_len = latent.extent(0), h = latent.extent(1), w = latent.extent(2),
                    d = latent.extent(3);
  cardio::TensorNd out = latent;
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(grid_k / 2);
  for (std::size_t t = 1; t < t_len; ++t) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        std::vector<double> sc;
        std::vector<std::pair<std::size_t, std::size_t>> pos;
        const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(y) - r);
        const std::ptrdiff_t y1 =
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h) - 1,
                                     static_cast<std::ptrdiff_t>(y) + r);
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(x) - r);
        const std::ptrdiff_t x1 =
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w) - 1,
                                     static_cast<std::ptrdiff_t>(x) + r);
        for (std::ptrdiff_t ny = y0; ny <= y1; ++ny) {
          for (std::ptrdiff_t nx = x0; nx <= x1; ++nx) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              s += latent.at(t, y, x, c) *
                   latent.at(t - 1, static_cast<std::size_t>(ny), static_cast<std::size_t>(nx), c);
            }
            sc.push_back(s / std::sqrt(static_cast<double>(d)));
            pos.emplace_back(static_cast<std::size_t>(ny), static_cast<std::size_t>(nx));
          }
        }
        double mx = -1e300;
        for (double s : sc) mx = std::max(mx, s);
        double z = 0.0;
        for (double& s : sc) {
          s = std::exp(s - mx);
          z += s;
        }
        for (std::size_t c = 0; c < d; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < sc.size(); ++j) {
            acc += sc[j] * latent.at(t - 1, pos[j].first, pos[j].second, c);
          }
          out.at(t, y, x, c) = latent.at(t, y, x, c) + acc / z;
        }
      }
    }
  }
  return out;
}

/// Per-channel spectral reweighting via the O(n^2) DFT.
inline cardio::TensorNd naive_fab(const cardio::TensorNd& latent, std::span<const cplx> filter,
                                  std::size_t n_bins) {
  const std::size_t t_len = latent.extent(0), d = latent.extent(1);
  cardio::TensorNd out({t_len, d});
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<cplx> x(t_len);
    for (std::size_t t = 0; t < t_len; ++t) x[t] = {latent.at(t, c), 0.0};
    auto spec = naive_dft(x);
    for (std::size_t k = 0; k < t_len; ++k) {
      const cplx f = k < n_bins ? filter[c * n_bins + k] : std::conj(filter[c * n_bins + (t_len - k)]);
      spec[k] *= f;
    }
    auto back = naive_dft(spec, true);
    for (std::size_t t = 0; t < t_len; ++t) out.at(t, c) = back[t].real();
  }
  return out;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double max_rel_err(const cardio::TensorNd& got, const cardio::TensorNd& want) {
  double scale = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) scale = std::max(scale, std::abs(want[i]));
  scale = std::max(scale, 1e-30);
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  return worst;
}

}  // namespace oracle
