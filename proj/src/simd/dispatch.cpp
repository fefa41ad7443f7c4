#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "getnext/simd/kernels.hpp"

namespace getnext::simd {

#ifndef GETNEXT_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(GETNEXT_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      __builtin_cpu_init();
      return avx2_table() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!cpu_supports(isa)) {
    throw std::runtime_error("simd: instruction set not available on this CPU");
  }
  return isa == Isa::avx2 ? *avx2_table() : scalar_table();
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  throw std::invalid_argument("simd: unknown instruction set '" + std::string(name) +
                              "'");
}

namespace {

const KernelTable* resolve() {
  if (const char* env = std::getenv("GETNEXT_SIMD"); env != nullptr && *env != '\0') {
    const Isa want = parse_isa(env);
    if (cpu_supports(want)) return &table(want);
    return &scalar_table();
  }
  if (cpu_supports(Isa::avx2)) return avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> s{resolve()};
  return s;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) {
  if (!cpu_supports(isa)) return false;
  slot().store(&table(isa), std::memory_order_release);
  return true;
}

}  // namespace getnext::simd
