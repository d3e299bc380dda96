#include "cardio/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace cardio::fft {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative Cooley-Tukey, n must be a power of two.
void radix2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Bluestein chirp-z for arbitrary n, built on a padded radix-2 convolution.
void bluestein(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the phase argument small for large n.
    const std::size_t k2 = (k * k) % (2 * n);
    const double ang = sign * kPi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }
  const std::size_t m = next_pow2(2 * n - 1);
  std::vector<cplx> fa(m, cplx(0.0, 0.0)), fb(m, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * chirp[k];
  fb[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) fb[k] = fb[m - k] = std::conj(chirp[k]);
  radix2(fa, false);
  radix2(fb, false);
  for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
  radix2(fa, true);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * inv_m * chirp[k];
}

}  // namespace

void transform(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (is_pow2(n))
    radix2(a, inverse);
  else
    bluestein(a, inverse);
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv_n;
  }
}

std::vector<cplx> forward(std::span<const double> x) {
  std::vector<cplx> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = cplx(x[i], 0.0);
  transform(a, false);
  return a;
}

std::vector<cplx> forward_c(std::vector<cplx> x) {
  transform(x, false);
  return x;
}

std::vector<cplx> inverse_c(std::vector<cplx> x) {
  transform(x, true);
  return x;
}

std::vector<cplx> rfft(std::span<const double> x) {
  auto a = forward(x);
  a.resize(rfft_bins(x.size()));
  return a;
}

std::vector<double> irfft(std::span<const cplx> bins, std::size_t n, double* imag_residue) {
  if (bins.size() != rfft_bins(n)) throw std::invalid_argument("irfft: bin count does not match n");
  std::vector<cplx> full(n);
  for (std::size_t k = 0; k < bins.size(); ++k) full[k] = bins[k];
  for (std::size_t k = bins.size(); k < n; ++k) full[k] = std::conj(bins[n - k]);
  transform(full, true);
  std::vector<double> out(n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = full[i].real();
    worst = std::max(worst, std::abs(full[i].imag()));
  }
  if (imag_residue) *imag_residue = worst;
  return out;
}

}  // namespace cardio::fft
