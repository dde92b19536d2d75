#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cmos/kernels.hpp"

using namespace cmos;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n,
                               double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

// Sizes straddling the vector widths and remainder paths.
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 11, 16, 31, 64, 257, 1000};

}  // namespace

TEST_CASE("scalar kernels match a direct evaluation") {
  std::mt19937_64 rng(7);
  const auto& t = kern::scalar_table();
  for (std::size_t n : kSizes) {
    auto a = random_vec(rng, n, 3.0);
    auto b = random_vec(rng, n, 3.0);
    double dot = 0, sum = 0, sumsq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dot += a[i] * b[i];
      sum += a[i];
      sumsq += a[i] * a[i];
    }
    CHECK(t.dot(a.data(), b.data(), n) == doctest::Approx(dot).epsilon(1e-12));
    CHECK(t.sum(a.data(), n) == doctest::Approx(sum).epsilon(1e-12));
    CHECK(t.sumsq(a.data(), n) == doctest::Approx(sumsq).epsilon(1e-12));
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!kern::isa_supported(kern::Isa::Avx2)) {
    WARN_MESSAGE(true, "AVX2 not available; equivalence not exercised");
    return;
  }
  const auto& s = kern::scalar_table();
  const auto& v = kern::avx2_table();
  std::mt19937_64 rng(11);

  for (std::size_t n : kSizes) {
    for (int rep = 0; rep < 8; ++rep) {
      auto a = random_vec(rng, n, 100.0);
      auto b = random_vec(rng, n, 100.0);
      double tol = 1e-12 * (1.0 + static_cast<double>(n)) * 100.0;

      CHECK(std::abs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) <= tol);
      CHECK(std::abs(s.sum(a.data(), n) - v.sum(a.data(), n)) <= tol);
      CHECK(std::abs(s.sumsq(a.data(), n) - v.sumsq(a.data(), n)) <= tol * 100.0);

      auto acc_s = a, acc_v = a;
      s.add_inplace(acc_s.data(), b.data(), n);
      v.add_inplace(acc_v.data(), b.data(), n);
      CHECK(acc_s == acc_v);  // addition is elementwise, bitwise equal

      auto scale_s = a, scale_v = a;
      s.scale_inplace(scale_s.data(), 1.75, n);
      v.scale_inplace(scale_v.data(), 1.75, n);
      CHECK(scale_s == scale_v);

      std::vector<double> mul_s(n), mul_v(n);
      s.mul(a.data(), b.data(), mul_s.data(), n);
      v.mul(a.data(), b.data(), mul_v.data(), n);
      CHECK(mul_s == mul_v);
    }
  }
}

TEST_CASE("correlate_valid equals the nested-loop oracle on both ISAs") {
  std::mt19937_64 rng(23);
  for (std::size_t n : {11ul, 12ul, 15ul, 64ul, 301ul}) {
    for (std::size_t klen : {1ul, 3ul, 11ul}) {
      if (klen > n) continue;
      auto sig = random_vec(rng, n, 2.0);
      auto taps = random_vec(rng, klen, 1.0);
      std::size_t m = n - klen + 1;
      std::vector<double> expect(m, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < klen; ++j) expect[i] += sig[i + j] * taps[j];

      std::vector<double> out_s(m);
      kern::scalar_table().correlate_valid(sig.data(), n, taps.data(), klen,
                                           out_s.data());
      for (std::size_t i = 0; i < m; ++i)
        CHECK(out_s[i] == doctest::Approx(expect[i]).epsilon(1e-12));

      if (kern::isa_supported(kern::Isa::Avx2)) {
        std::vector<double> out_v(m);
        kern::avx2_table().correlate_valid(sig.data(), n, taps.data(), klen,
                                           out_v.data());
        for (std::size_t i = 0; i < m; ++i)
          CHECK(out_v[i] == doctest::Approx(expect[i]).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("runtime dispatch can be pinned and restored") {
  kern::force_isa(kern::Isa::Scalar);
  CHECK(kern::active_isa() == kern::Isa::Scalar);
  double a[4] = {1, 2, 3, 4};
  CHECK(kern::dot(a, a, 4) == doctest::Approx(30.0));
  kern::reset_isa();
  if (kern::isa_supported(kern::Isa::Avx2))
    CHECK(kern::active_isa() == kern::Isa::Avx2);
  CHECK(kern::dot(a, a, 4) == doctest::Approx(30.0));
}
