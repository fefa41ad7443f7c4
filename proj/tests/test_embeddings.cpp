#include <doctest.h>

#include <cmath>

#include "getnext/core/error.hpp"
#include "getnext/model/embeddings.hpp"
#include "support/gradcheck.hpp"

using namespace getnext;
using core::Matrix;
using core::Tape;
using core::Tensor;

TEST_CASE("time inputs") {
  data::CheckIn q{"u", "p", "c", 0, 0, 1333238400 + 13 * 3600 + 45 * 60 + 10, 0};
  CHECK(model::slot_time(q) == 27.0 / 48.0);
  CHECK(model::day_fraction(q) == doctest::Approx((13 * 3600 + 45 * 60 + 10) / 86400.0));
  q.tz_offset_min = -240;  // 09:45 local
  CHECK(model::slot_time(q) == 19.0 / 48.0);
}

TEST_CASE("time2vec examples") {
  const std::vector<double> zeros(4, 0.0);
  for (double v : model::time2vec(0.3, zeros, zeros)) CHECK(v == 0.0);

  std::vector<double> w = {1, 0, 0}, p = {0, 0, 0};
  CHECK(model::time2vec(0.5, w, p)[0] == 0.5);

  w = {0.7, 20.0, 31.0};
  p = {0.1, -0.4, 2.0};
  for (std::size_t i = 1; i < 3; ++i) {
    const double t = 0.13;
    const double shifted = t + 2 * M_PI / w[i];
    REQUIRE(shifted < 1.0);
    CHECK(std::abs(model::time2vec(t, w, p)[i] - model::time2vec(shifted, w, p)[i]) < 1e-9);
  }
  CHECK_THROWS_AS(model::time2vec(1.0, w, p), InputError);
  CHECK_THROWS_AS(model::time2vec(-0.01, w, p), InputError);
}

TEST_CASE("time2vec tape form matches the plain form and is bounded") {
  core::ParameterStore store;
  core::Rng rng(3);
  model::Time2Vec t2v(store, 5, rng);
  const std::vector<double> ts = {0.0, 0.25, 0.999};
  Tape tape;
  Tensor out = model::time2vec(tape, ts, t2v);
  REQUIRE(out.rows() == 3);
  REQUIRE(out.cols() == 5);
  for (std::size_t r = 0; r < ts.size(); ++r) {
    const auto ref = model::time2vec(ts[r], t2v.omega.value().values(), t2v.phi.value().values());
    for (std::size_t i = 0; i < 5; ++i) CHECK(out.value()(r, i) == doctest::Approx(ref[i]));
    for (std::size_t i = 1; i < 5; ++i) CHECK(std::abs(out.value()(r, i)) <= 1.0);
  }
  Tape bad;
  const std::vector<double> outside = {1.5};
  CHECK_THROWS_AS(model::time2vec(bad, outside, t2v), InputError);
}

TEST_CASE("fuse examples") {
  core::ParameterStore store;
  core::Rng rng(1);
  model::FusionLayer layer(store, "f", 4, rng);
  layer.weight.mutable_value() = Matrix::identity(4);
  Tape tape;
  Tensor a = tape.constant(Matrix{{1, 2}});
  Tensor b = tape.constant(Matrix{{0, 3}});
  CHECK(model::fuse(tape, a, b, layer).value() == Matrix{{1, 2, 0, 3}});
  Tensor z = tape.constant(Matrix(1, 2));
  CHECK(model::fuse(tape, z, z, layer).value() == Matrix(1, 4));
  Tensor wide = tape.constant(Matrix(1, 3));
  CHECK_THROWS_AS(model::fuse(tape, wide, b, layer), ShapeError);
}

TEST_CASE("fuse gradient matches finite differences") {
  core::ParameterStore store;
  core::Rng rng(8);
  model::FusionLayer layer(store, "f", 6, rng);
  const Matrix a = core::init_embedding(3, 3, rng), b = core::init_embedding(3, 3, rng);
  auto run = [&](Tape& tape) {
    Tensor out = model::fuse(tape, tape.constant(a), tape.constant(b), layer);
    return tape.sum(tape.mul(out, tape.constant(Matrix(3, 6, 0.7))));
  };
  store.zero_grad();
  {
    Tape tape;
    tape.backward(run(tape));
  }
  std::vector<Matrix> analytic;
  for (const auto& p : store.all()) analytic.push_back(p.grad());
  const auto res = testing::finite_difference_check(store.all(), analytic, [&] {
    Tape tape;
    return run(tape).item();
  });
  CHECK(res.worst_rel_error < 1e-4);
}

TEST_CASE("embedding lookup gradient touches only looked-up rows") {
  core::ParameterStore store;
  core::Rng rng(2);
  model::EmbeddingTable table(store, "user_emb", 6, 3, rng);
  Tape tape;
  const std::vector<std::size_t> idx = {4, 1, 4};
  tape.backward(tape.sum(table.lookup(tape, idx)));
  const Matrix g = table.weights().grad();
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      const double expect = r == 4 ? 2.0 : r == 1 ? 1.0 : 0.0;
      CHECK(g(r, c) == expect);
    }
  Tape t2;
  const std::vector<std::size_t> bad = {6};
  CHECK_THROWS_AS(table.lookup(t2, bad), InputError);
}

TEST_CASE("checkin embedding shape and segment locality") {
  core::ParameterStore store;
  core::Rng rng(4);
  model::ContextOptions o;
  o.poi_dim = 4;
  o.time_dim = 2;
  model::ContextEmbedder ctx(store, o, 3, 2, rng);
  CHECK(ctx.output_dim() == 12);
  model::ContextOptions defaults;
  CHECK(2 * (defaults.poi_dim + defaults.time_dim) == 320);
  CHECK(store.contains("user_emb"));
  CHECK(store.contains("cat_emb"));
  CHECK(store.contains("t2v_omega"));
  CHECK(store.contains("t2v_phi"));
  CHECK(store.contains("fuse_pu_W"));
  CHECK(store.contains("fuse_ct_b"));

  const Matrix poi = core::init_embedding(1, 4, rng);
  const std::vector<std::size_t> cat = {1};
  auto embed = [&](double t) {
    Tape tape;
    const std::vector<double> ts = {t};
    return ctx.embed(tape, tape.constant(poi), 2, cat, ts).value();
  };
  const Matrix e1 = embed(10.0 / 48), e2 = embed(31.0 / 48), e3 = embed(10.0 / 48);
  REQUIRE(e1.cols() == 12);
  CHECK(e1 == e3);
  for (std::size_t i = 0; i < 8; ++i) CHECK(e1(0, i) == e2(0, i));
  bool differs = false;
  for (std::size_t i = 8; i < 12; ++i) differs = differs || e1(0, i) != e2(0, i);
  CHECK(differs);

  Tape tape;
  const std::vector<double> ts = {0.1};
  const std::vector<std::size_t> bad_cat = {2};
  CHECK_THROWS_AS(ctx.embed(tape, tape.constant(poi), 0, bad_cat, ts), InputError);
  CHECK_THROWS_AS(ctx.embed(tape, tape.constant(poi), 3, cat, ts), InputError);
}

TEST_CASE("disabled context parts create no parameters") {
  core::ParameterStore store;
  core::Rng rng(4);
  model::ContextOptions o;
  o.poi_dim = 4;
  o.time_dim = 2;
  o.use_fusion = false;
  o.use_time_category = false;
  model::ContextEmbedder ctx(store, o, 3, 2, rng);
  CHECK(store.count() == 1);
  Tape tape;
  const std::vector<double> ts = {0.1, 0.2};
  const std::vector<std::size_t> cat = {0, 1};
  const Matrix e = ctx.embed(tape, tape.constant(Matrix(2, 4, 1.0)), 0, cat, ts).value();
  CHECK(e.cols() == 12);
  for (std::size_t i = 8; i < 12; ++i) CHECK(e(1, i) == 0.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(e(1, i) == 1.0);
}
