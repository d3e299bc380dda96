#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cardio::fft {

using cplx = std::complex<double>;

/// In-place DFT, any length (radix-2 for powers of two, Bluestein otherwise).
/// Forward is unnormalized; inverse scales by 1/n.
void transform(std::vector<cplx>& a, bool inverse);

std::vector<cplx> forward(std::span<const double> x);
std::vector<cplx> forward_c(std::vector<cplx> x);
std::vector<cplx> inverse_c(std::vector<cplx> x);

/// Real-input forward transform; returns the n/2+1 non-redundant bins.
std::vector<cplx> rfft(std::span<const double> x);

/// Inverse of rfft for a length-n real signal. If imag_residue is given, it
/// receives the max |imag| of the reconstruction before it is dropped.
std::vector<double> irfft(std::span<const cplx> bins, std::size_t n, double* imag_residue = nullptr);

inline std::size_t rfft_bins(std::size_t n) { return n / 2 + 1; }

}  // namespace cardio::fft
