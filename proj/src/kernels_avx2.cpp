// AVX2 + FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; callers must check CPU support before routing here.

#include "cmos/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace cmos::kern {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double out = hsum(acc);
  for (; i < n; ++i) out += a[i];
  return out;
}

double sumsq_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += a[i] * a[i];
  return out;
}

void add_inplace_avx2(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i,
                     _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void scale_inplace_avx2(double* a, double s, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(a + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), sv));
  }
  for (; i < n; ++i) a[i] *= s;
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

// Tap-broadcast form: four output positions per iteration, one FMA per tap.
void correlate_valid_avx2(const double* sig, std::size_t n, const double* taps,
                          std::size_t klen, double* out) {
  const std::size_t m = n - klen + 1;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < klen; ++j) {
      acc = _mm256_fmadd_pd(_mm256_set1_pd(taps[j]),
                            _mm256_loadu_pd(sig + i + j), acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < klen; ++j) acc += sig[i + j] * taps[j];
    out[i] = acc;
  }
}

constexpr KernelTable kAvx2Table = {
    dot_avx2,          sum_avx2, sumsq_avx2,         add_inplace_avx2,
    scale_inplace_avx2, mul_avx2, correlate_valid_avx2,
};

}  // namespace

const KernelTable& avx2_table() { return kAvx2Table; }

}  // namespace cmos::kern

#endif  // x86_64
