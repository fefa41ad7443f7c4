#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "getnext/core/error.hpp"
#include "getnext/core/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace getnext;
using core::Matrix;
using core::Tape;
using core::Tensor;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, core::Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// Runs `f` on a fresh tape, backprops, and checks every input's gradient
// against central differences.
double check_op(std::vector<Tensor> inputs,
                const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f) {
  for (Tensor& t : inputs) t.zero_grad();
  {
    Tape tape;
    Tensor loss = f(tape, inputs);
    tape.backward(loss);
  }
  std::vector<Matrix> analytic;
  for (const Tensor& t : inputs) analytic.push_back(t.grad());
  auto eval = [&] {
    Tape tape;
    return f(tape, inputs).item();
  };
  return testing::finite_difference_check(inputs, analytic, eval).worst_rel_error;
}

// Random weighting turns any tensor into a scalar with a nontrivial gradient.
Tensor weigh(Tape& t, const Tensor& x, std::uint64_t seed) {
  core::Rng rng(seed);
  Tensor w = t.constant(random_matrix(x.rows(), x.cols(), rng));
  return t.sum(t.mul(x, w));
}

}  // namespace

TEST_CASE("primitive examples") {
  Tape t;
  core::Rng rng(1);
  Matrix x = random_matrix(3, 4, rng);
  Tensor prod = t.matmul(t.constant(Matrix::identity(3)), t.constant(x));
  CHECK(prod.value() == x);

  Tensor sm = t.softmax_rows(t.constant(Matrix{{2.0, 2.0, 2.0, 2.0}}));
  for (double v : sm.value().values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  Tensor lr = t.leaky_relu(t.constant(Matrix{{-1.0, 2.0}}), 0.2);
  CHECK(lr.value()(0, 0) == doctest::Approx(-0.2));
  CHECK(lr.value()(0, 1) == 2.0);
}

TEST_CASE("shape mismatch names the op and both shapes") {
  Tape t;
  Tensor a = t.constant(Matrix(2, 3));
  Tensor b = t.constant(Matrix(2, 3));
  try {
    t.matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(t.add(a, t.constant(Matrix(3, 2))), ShapeError);
  CHECK_THROWS_AS(t.slice_rows(a, 1, 3), ShapeError);
  CHECK_THROWS_AS(t.gather_rows(a, std::vector<std::size_t>{2}), ShapeError);
}

TEST_CASE("backward examples") {
  SUBCASE("sum of W gives all ones") {
    Tensor w = core::make_parameter(Matrix{{1.0, -2.0}, {3.5, 0.0}}, "W");
    Tape t;
    t.backward(t.sum(w));
    CHECK(w.grad() == Matrix(2, 2, 1.0));
  }
  SUBCASE("mse at the target has zero gradient") {
    Matrix target{{0.3, -0.1}, {2.0, 1.0}};
    Tensor w = core::make_parameter(target, "W");
    Tape t;
    t.backward(t.mse(w, t.constant(target)));
    CHECK(w.grad() == Matrix(2, 2, 0.0));
  }
  SUBCASE("unreachable parameters keep a zero gradient") {
    Tensor used = core::make_parameter(Matrix(1, 2, 1.0), "used");
    Tensor unused = core::make_parameter(Matrix(1, 2, 1.0), "unused");
    Tape t;
    t.backward(t.sum(used));
    CHECK(unused.grad() == Matrix(1, 2, 0.0));
  }
  SUBCASE("non-scalar loss is rejected") {
    Tensor w = core::make_parameter(Matrix(2, 2, 1.0), "W");
    Tape t;
    CHECK_THROWS_AS(t.backward(t.scale(w, 2.0)), ShapeError);
  }
}

TEST_CASE("every primitive passes a finite-difference check") {
  core::Rng rng(2024);
  auto P = [&](std::size_t r, std::size_t c) {
    return core::make_parameter(random_matrix(r, c, rng), "p");
  };
  const double tol = 1e-4;

  CHECK(check_op({P(3, 4), P(4, 2)},
                 [](Tape& t, const auto& in) { return weigh(t, t.matmul(in[0], in[1]), 1); }) <
        tol);
  {
    const Matrix dense = random_matrix(4, 4, rng, 0.0, 1.0);
    const auto sp = core::SparseMatrix::from_dense(dense);
    CHECK(check_op({P(4, 3)}, [&sp](Tape& t, const auto& in) {
            return weigh(t, t.spmm(sp, in[0]), 2);
          }) < tol);
  }
  CHECK(check_op({P(3, 4), P(1, 4)},
                 [](Tape& t, const auto& in) { return weigh(t, t.add(in[0], in[1]), 3); }) <
        tol);
  CHECK(check_op({P(3, 4), P(3, 4)},
                 [](Tape& t, const auto& in) { return weigh(t, t.sub(in[0], in[1]), 4); }) <
        tol);
  CHECK(check_op({P(3, 4), P(1, 4)},
                 [](Tape& t, const auto& in) { return weigh(t, t.mul(in[0], in[1]), 5); }) <
        tol);
  CHECK(check_op({P(3, 4), P(3, 4)},
                 [](Tape& t, const auto& in) { return weigh(t, t.mul(in[0], in[1]), 6); }) <
        tol);
  CHECK(check_op({P(3, 2), P(3, 3)}, [](Tape& t, const auto& in) {
          return weigh(t, t.concat_cols({in[0], in[1]}), 7);
        }) < tol);
  CHECK(check_op({P(2, 3), P(1, 3)}, [](Tape& t, const auto& in) {
          std::vector<Tensor> parts{in[0], in[1]};
          return weigh(t, t.concat_rows(parts), 8);
        }) < tol);
  CHECK(check_op({P(5, 3)}, [](Tape& t, const auto& in) {
          return weigh(t, t.slice_rows(in[0], 1, 4), 9);
        }) < tol);
  CHECK(check_op({P(3, 5)}, [](Tape& t, const auto& in) {
          return weigh(t, t.slice_cols(in[0], 2, 5), 10);
        }) < tol);
  CHECK(check_op({P(4, 3)}, [](Tape& t, const auto& in) {
          const std::vector<std::size_t> idx{3, 0, 3, 1};
          return weigh(t, t.gather_rows(in[0], idx), 11);
        }) < tol);
  CHECK(check_op({P(3, 4)},
                 [](Tape& t, const auto& in) { return weigh(t, t.transpose(in[0]), 12); }) < tol);
  CHECK(check_op({P(3, 4)}, [](Tape& t, const auto& in) {
          return weigh(t, t.leaky_relu(in[0], 0.2), 13);
        }) < tol);
  CHECK(check_op({P(3, 4)},
                 [](Tape& t, const auto& in) { return weigh(t, t.relu(in[0]), 14); }) < tol);
  CHECK(check_op({P(3, 4)},
                 [](Tape& t, const auto& in) { return weigh(t, t.sin(in[0]), 15); }) < tol);
  CHECK(check_op({P(4, 4)}, [](Tape& t, const auto& in) {
          const auto mask = core::Mask::causal(4);
          return weigh(t, t.softmax_rows(in[0], &mask), 16);
        }) < tol);
  CHECK(check_op({P(3, 5)}, [](Tape& t, const auto& in) {
          return weigh(t, t.layer_norm_rows(in[0]), 17);
        }) < tol);
  CHECK(check_op({P(3, 4)}, [](Tape& t, const auto& in) {
          core::Rng r(99);
          return weigh(t, t.dropout(in[0], 0.3, r, true), 18);
        }) < tol);
  CHECK(check_op({P(3, 5)}, [](Tape& t, const auto& in) {
          const std::vector<std::size_t> tgt{4, 0, 2};
          return t.cross_entropy_rows(in[0], tgt);
        }) < tol);
  CHECK(check_op({P(3, 2), P(3, 2)},
                 [](Tape& t, const auto& in) { return t.mse(in[0], in[1]); }) < tol);
  CHECK(check_op({P(3, 2)}, [](Tape& t, const auto& in) {
          return t.mean(t.add_scalar(t.scale(in[0], -1.5), 0.25));
        }) < tol);
}

TEST_CASE("randomly composed five-op graphs pass a finite-difference check") {
  using Op = std::function<Tensor(Tape&, const Tensor&, const Tensor&)>;
  // Each op maps (x: 4x4, w: 4x4 parameter) -> 4x4.
  const std::vector<Op> ops = {
      [](Tape& t, const Tensor& x, const Tensor& w) { return t.matmul(x, w); },
      [](Tape& t, const Tensor& x, const Tensor& w) { return t.add(x, w); },
      [](Tape& t, const Tensor& x, const Tensor& w) { return t.mul(x, w); },
      [](Tape& t, const Tensor& x, const Tensor&) { return t.leaky_relu(x, 0.2); },
      [](Tape& t, const Tensor& x, const Tensor&) { return t.sin(x); },
      [](Tape& t, const Tensor& x, const Tensor&) { return t.softmax_rows(x); },
      [](Tape& t, const Tensor& x, const Tensor&) { return t.layer_norm_rows(x); },
      [](Tape& t, const Tensor& x, const Tensor&) { return t.transpose(x); },
  };
  core::Rng rng(777);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::size_t> chosen;
    for (int k = 0; k < 5; ++k) chosen.push_back(rng.below(ops.size()));
    std::vector<Tensor> params{core::make_parameter(random_matrix(4, 4, rng), "x0"),
                               core::make_parameter(random_matrix(4, 4, rng), "w")};
    const double err = check_op(params, [&](Tape& t, const auto& in) {
      Tensor h = in[0];
      for (std::size_t c : chosen) h = ops[c](t, h, in[1]);
      return weigh(t, h, 1000 + trial);
    });
    CHECK_MESSAGE(err < 1e-4, "trial " << trial);
  }
}

TEST_CASE("softmax rows sum to one and masked entries are exactly zero") {
  core::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    Tape t;
    const auto mask = core::Mask::causal(n);
    Tensor y = t.softmax_rows(t.constant(random_matrix(n, n, rng, -30, 30)), &mask);
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c > r) CHECK(y.value()(r, c) == 0.0);
        s += y.value()(r, c);
      }
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("dropout semantics") {
  core::Rng rng(11);
  Tape t;
  Tensor x = t.constant(random_matrix(4, 5, rng));
  CHECK(t.dropout(x, 0.3, rng, false).value() == x.value());

  Tensor ones = t.constant(Matrix(1, 10000, 1.0));
  Tensor y = t.dropout(ones, 0.3, rng, true);
  const double mean =
      std::accumulate(y.value().values().begin(), y.value().values().end(), 0.0) / 10000.0;
  CHECK(std::abs(mean - 1.0) < 0.02);
  CHECK_THROWS(t.dropout(x, 1.0, rng, true));
}

TEST_CASE("layer norm standardizes each row") {
  core::Rng rng(12);
  Tape t;
  Tensor y = t.layer_norm_rows(t.constant(random_matrix(6, 16, rng, -5, 5)));
  for (std::size_t r = 0; r < 6; ++r) {
    double mu = 0.0, var = 0.0;
    for (double v : y.value().row(r)) mu += v;
    mu /= 16.0;
    for (double v : y.value().row(r)) var += (v - mu) * (v - mu);
    var /= 16.0;
    CHECK(std::abs(mu) <= 1e-7);
    CHECK(std::abs(var - 1.0) <= 1e-5);
  }
}

TEST_CASE("cross entropy of uniform logits is ln N") {
  Tape t;
  const std::vector<std::size_t> tgt{0, 3, 6};
  Tensor ce = t.cross_entropy_rows(t.constant(Matrix(3, 7, 0.4)), tgt);
  CHECK(ce.item() == doctest::Approx(std::log(7.0)).epsilon(1e-12));
}
