#include "cmos/kernels.hpp"

#include <atomic>

#include "cmos/errors.hpp"

namespace cmos::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sumsq_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void add_inplace_scalar(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void scale_inplace_scalar(double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= s;
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void correlate_valid_scalar(const double* sig, std::size_t n,
                            const double* taps, std::size_t klen,
                            double* out) {
  const std::size_t m = n - klen + 1;
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < klen; ++j) acc += sig[i + j] * taps[j];
    out[i] = acc;
  }
}

constexpr KernelTable kScalarTable = {
    dot_scalar,          sum_scalar, sumsq_scalar,         add_inplace_scalar,
    scale_inplace_scalar, mul_scalar, correlate_valid_scalar,
};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<const KernelTable*> g_table{nullptr};
std::atomic<Isa> g_isa{Isa::Scalar};

void select(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::Avx2) {
    g_table.store(&avx2_table(), std::memory_order_relaxed);
    g_isa.store(Isa::Avx2, std::memory_order_relaxed);
    return;
  }
#endif
  g_table.store(&kScalarTable, std::memory_order_relaxed);
  g_isa.store(Isa::Scalar, std::memory_order_relaxed);
}

const KernelTable& table() {
  const KernelTable* t = g_table.load(std::memory_order_relaxed);
  if (!t) {
    select(cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar);
    t = g_table.load(std::memory_order_relaxed);
  }
  return *t;
}

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

Isa active_isa() {
  table();
  return g_isa.load(std::memory_order_relaxed);
}

bool isa_supported(Isa isa) {
  return isa == Isa::Scalar || cpu_has_avx2();
}

void force_isa(Isa isa) {
  if (!isa_supported(isa))
    throw Error(Err::ConfigError, "requested kernel ISA not supported on this CPU");
  select(isa);
}

void reset_isa() { select(cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar); }

double dot(const double* a, const double* b, std::size_t n) {
  return table().dot(a, b, n);
}
double sum(const double* a, std::size_t n) { return table().sum(a, n); }
double sumsq(const double* a, std::size_t n) { return table().sumsq(a, n); }
void add_inplace(double* acc, const double* x, std::size_t n) {
  table().add_inplace(acc, x, n);
}
void scale_inplace(double* a, double s, std::size_t n) {
  table().scale_inplace(a, s, n);
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
  table().mul(a, b, out, n);
}
void correlate_valid(const double* sig, std::size_t n, const double* taps,
                     std::size_t klen, double* out) {
  table().correlate_valid(sig, n, taps, klen, out);
}

}  // namespace cmos::kern
