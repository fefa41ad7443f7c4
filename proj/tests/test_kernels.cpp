#include <doctest.h>

#include <cmath>
#include <vector>

#include "getnext/core/matrix.hpp"
#include "getnext/core/rng.hpp"
#include "getnext/simd/kernels.hpp"

using namespace getnext;

namespace {

std::vector<double> random_vec(std::size_t n, core::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Scale-aware comparison: vector kernels reorder sums and contract to FMA.
void check_close(const std::vector<double>& ref, const std::vector<double>& got,
                 std::size_t terms) {
  REQUIRE(ref.size() == got.size());
  const double tol = 1e-15 * static_cast<double>(terms + 1) * 4.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(std::abs(ref[i] - got[i]) <= tol * std::max(1.0, std::abs(ref[i])));
  }
}

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(simd::cpu_supports(simd::Isa::scalar));
  CHECK(simd::table(simd::Isa::scalar).isa == simd::Isa::scalar);
  CHECK_THROWS(simd::parse_isa("sse9"));
}

TEST_CASE("vector kernels agree with the scalar reference") {
  if (!simd::cpu_supports(simd::Isa::avx2)) {
    MESSAGE("avx2 not available; equivalence check skipped");
    return;
  }
  const auto& ref = simd::scalar_table();
  const auto& vec = simd::table(simd::Isa::avx2);
  core::Rng rng(42);

  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 17u, 64u, 129u}) {
    const auto x = random_vec(n, rng);
    const auto y = random_vec(n, rng);
    const double a = ref.dot(x.data(), y.data(), n);
    const double b = vec.dot(x.data(), y.data(), n);
    CHECK(std::abs(a - b) <= 1e-14 * static_cast<double>(n + 1));

    auto y1 = y, y2 = y;
    ref.axpy(0.37, x.data(), y1.data(), n);
    vec.axpy(0.37, x.data(), y2.data(), n);
    check_close(y1, y2, 1);
  }

  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 4, 4}, {9, 13, 6}, {16, 33, 17}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], k = s[1], n = s[2];
    const auto a = random_vec(m * k, rng);
    const auto at = random_vec(k * m, rng);
    const auto b = random_vec(k * n, rng);
    const auto bt = random_vec(n * k, rng);
    const auto c0 = random_vec(m * n, rng);

    auto c1 = c0, c2 = c0;
    ref.gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
    vec.gemm_nn(a.data(), b.data(), c2.data(), m, k, n);
    check_close(c1, c2, k);

    c1 = c0, c2 = c0;
    ref.gemm_tn(at.data(), b.data(), c1.data(), m, k, n);
    vec.gemm_tn(at.data(), b.data(), c2.data(), m, k, n);
    check_close(c1, c2, k);

    c1 = c0, c2 = c0;
    ref.gemm_nt(a.data(), bt.data(), c1.data(), m, k, n);
    vec.gemm_nt(a.data(), bt.data(), c2.data(), m, k, n);
    check_close(c1, c2, k);
  }
}

TEST_CASE("gemm variants match a naive triple loop") {
  core::Rng rng(3);
  core::Matrix a(5, 4), b(4, 6);
  for (double& v : a.values()) v = rng.uniform(-2, 2);
  for (double& v : b.values()) v = rng.uniform(-2, 2);
  core::Matrix naive(5, 6);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      for (std::size_t p = 0; p < 4; ++p) naive(i, j) += a(i, p) * b(p, j);

  CHECK(core::max_abs_diff(core::matmul(a, b), naive) < 1e-12);

  core::Matrix c(5, 6);
  core::gemm_accumulate(core::transpose(a), true, b, false, c);
  CHECK(core::max_abs_diff(c, naive) < 1e-12);

  core::Matrix d(5, 6);
  core::gemm_accumulate(a, false, core::transpose(b), true, d);
  CHECK(core::max_abs_diff(d, naive) < 1e-12);

  core::Matrix e(5, 6);
  core::gemm_accumulate(core::transpose(a), true, core::transpose(b), true, e);
  CHECK(core::max_abs_diff(e, naive) < 1e-12);
}

TEST_CASE("select pins the process-wide table") {
  const simd::Isa before = simd::active().isa;
  REQUIRE(simd::select(simd::Isa::scalar));
  CHECK(simd::active().isa == simd::Isa::scalar);
  simd::select(before);
}
