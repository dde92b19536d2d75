#pragma once

#include <cstddef>

namespace cmos::kern {

// Data-parallel inner loops behind every similarity scan and the SSIM window
// moments. Scalar reference implementations always exist; an AVX2 variant is
// selected at runtime when the CPU supports it. All accumulation is double
// precision.
enum class Isa { Scalar, Avx2 };

// The ISA currently routed to by the free functions below.
Isa active_isa();

bool isa_supported(Isa isa);

// Test hook: pin dispatch to one ISA (throws cmos::Error(ConfigError) if the
// CPU lacks it). Not meant to be called while kernels are running on other
// threads.
void force_isa(Isa isa);

// Restore the auto-detected best ISA.
void reset_isa();

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);
void add_inplace(double* acc, const double* x, std::size_t n);
void scale_inplace(double* a, double s, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);

// Valid-mode sliding correlation: out[i] = sum_j sig[i+j] * taps[j] for
// i in [0, n - klen]. Requires n >= klen; out has n - klen + 1 elements.
void correlate_valid(const double* sig, std::size_t n, const double* taps,
                     std::size_t klen, double* out);

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*add_inplace)(double*, const double*, std::size_t);
  void (*scale_inplace)(double*, double, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*correlate_valid)(const double*, std::size_t, const double*,
                          std::size_t, double*);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

}  // namespace cmos::kern
