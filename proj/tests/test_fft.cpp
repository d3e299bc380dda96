#include <complex>
#include <vector>

#include "doctest.h"

#include "cardio/fft.hpp"
#include "cardio/rng.hpp"
#include "oracles.hpp"

using cardio::SplitMix64;
using cardio::fft::cplx;

namespace {

std::vector<cplx> random_signal(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<cplx> x(n);
  for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return x;
}

}  // namespace

TEST_SUITE("fft") {
  TEST_CASE("matches the quadratic dft on assorted sizes") {
    // Mixed powers of two and awkward primes (Bluestein path).
    for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 13u, 16u, 31u, 64u, 100u, 127u, 256u}) {
      auto x = random_signal(n, 7000 + n);
      auto want = oracle::naive_dft(x);
      auto got = cardio::fft::forward_c(x);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(got[i] - want[i]) < 1e-9 * static_cast<double>(n));
      }
    }
  }

  TEST_CASE("inverse undoes forward") {
    for (std::size_t n : {4u, 12u, 37u, 128u, 243u}) {
      auto x = random_signal(n, 9000 + n);
      auto back = cardio::fft::inverse_c(cardio::fft::forward_c(x));
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(back[i] - x[i]) < 1e-10);
    }
  }

  TEST_CASE("rfft keeps n/2+1 bins and matches the full transform") {
    SplitMix64 rng(41);
    for (std::size_t n : {8u, 30u, 64u, 120u}) {
      std::vector<double> x(n);
      for (auto& v : x) v = rng.gaussian();
      auto spec = cardio::fft::rfft(x);
      REQUIRE(spec.size() == n / 2 + 1);
      auto full = oracle::naive_dft_real(x);
      for (std::size_t k = 0; k < spec.size(); ++k) CHECK(std::abs(spec[k] - full[k]) < 1e-9);
    }
  }

  TEST_CASE("irfft round trip reports negligible residue") {
    SplitMix64 rng(43);
    std::vector<double> x(120);
    for (auto& v : x) v = rng.gaussian();
    double residue = -1.0;
    auto back = cardio::fft::irfft(cardio::fft::rfft(x), x.size(), &residue);
    REQUIRE(back.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-10));
    CHECK(residue >= 0.0);
    CHECK(residue < 1e-10);
  }

  TEST_CASE("linearity") {
    auto a = random_signal(50, 1);
    auto b = random_signal(50, 2);
    std::vector<cplx> sum(50);
    for (std::size_t i = 0; i < 50; ++i) sum[i] = 2.0 * a[i] + 3.0 * b[i];
    auto fa = cardio::fft::forward_c(a);
    auto fb = cardio::fft::forward_c(b);
    auto fs = cardio::fft::forward_c(sum);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(std::abs(fs[i] - (2.0 * fa[i] + 3.0 * fb[i])) < 1e-9);
    }
  }

  TEST_CASE("parseval energy balance") {
    auto x = random_signal(96, 77);
    auto spec = cardio::fft::forward_c(x);
    double time_e = 0.0, freq_e = 0.0;
    for (const auto& v : x) time_e += std::norm(v);
    for (const auto& v : spec) freq_e += std::norm(v);
    CHECK(freq_e / static_cast<double>(x.size()) == doctest::Approx(time_e).epsilon(1e-10));
  }
}
