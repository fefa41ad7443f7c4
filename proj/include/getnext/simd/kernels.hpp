#pragma once

// Dense double-precision kernels used by every matrix product in the model.
//
// Each instruction set provides the same table of entry points. The scalar
// table is the reference; vector tables must agree with it to within a few
// ulps per accumulated term (summation order and FMA contraction differ).
// The active table is chosen once per process from the CPU's capabilities and
// can be pinned with GETNEXT_SIMD=scalar|avx2.

#include <cstddef>
#include <string_view>

namespace getnext::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C(m x n) += A(m x k) * B(k x n)
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  // C(m x n) += A^T * B with A stored (k x m), B stored (k x n)
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  // C(m x n) += A * B^T with A stored (m x k), B stored (n x k)
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
};

const KernelTable& scalar_table();

// Null when the build has no vector variant for this target.
const KernelTable* avx2_table();

bool cpu_supports(Isa isa);

const KernelTable& table(Isa isa);

// Process-wide selection. Resolved on first use.
const KernelTable& active();

// Overrides the process-wide selection; returns false if unavailable.
bool select(Isa isa);

Isa parse_isa(std::string_view name);

}  // namespace getnext::simd
