#include <cmath>

#include "doctest.h"
#include "gam/autodiff.hpp"
#include "gam/demo.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using doctest::Approx;
using gam::Errc;
using gam::Matrix;
using gam::ad::Tape;
using gam::ad::Var;
using testing::error_of;

namespace {

Matrix filled(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  const Matrix flat = oracle::random_coords((rows * cols + 2) / 3, seed, -1.0, 1.0);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = flat.data()[i];
  return m;
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("sigmoid derivative at zero is one quarter") {
    Tape tape;
    const Var x = tape.scalar(0.0);
    const auto g = tape.backward(tape.sum(tape.sigmoid(x)));
    CHECK(g[x](0, 0) == Approx(0.25).epsilon(1e-12));
  }

  TEST_CASE("affine gradient of a sum is the column sum of inputs") {
    Tape tape;
    const Var x = tape.leaf(filled(5, 3, 1));
    const Var w = tape.leaf(filled(2, 3, 2));
    const Var b = tape.leaf(Matrix(1, 2));
    const auto g = tape.backward(tape.sum(tape.affine(x, w, b)));
    const Matrix& xv = tape.value(x);
    for (std::size_t o = 0; o < 2; ++o) {
      CHECK(g[b](0, o) == Approx(5.0));
      for (std::size_t i = 0; i < 3; ++i) {
        double col = 0.0;
        for (std::size_t r = 0; r < 5; ++r) col += xv(r, i);
        CHECK(g[w](o, i) == Approx(col).epsilon(1e-12));
      }
    }
    // d/dx of the sum is the column sum of w, the same for every row.
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t i = 0; i < 3; ++i) CHECK(g[x](r, i) == Approx(tape.value(w)(0, i) + tape.value(w)(1, i)));
    }
  }

  TEST_CASE("quadratic form gradient") {
    Tape tape;
    const Var x = tape.leaf(Matrix(1, 2, std::vector<double>{1.0, 2.0}));
    const auto g = tape.backward(tape.sum(tape.mul(x, x)));
    CHECK(g[x](0, 0) == Approx(2.0));
    CHECK(g[x](0, 1) == Approx(4.0));
  }

  TEST_CASE("parameters that do not touch the loss get zero gradient") {
    Tape tape;
    const Var used = tape.leaf(filled(2, 2, 3));
    const Var unused = tape.leaf(filled(3, 1, 4));
    const auto g = tape.backward(tape.mean(used));
    for (double v : g[unused].values()) CHECK(v == 0.0);
    for (double v : g[used].values()) CHECK(v == Approx(0.25));
  }

  TEST_CASE("backward needs a scalar loss") {
    Tape tape;
    const Var x = tape.leaf(filled(2, 2, 5));
    CHECK(error_of([&] { tape.backward(x); }) == Errc::kNonScalarLoss);
  }

  TEST_CASE("gradient is linear in the loss") {
    const auto grad_of = [](double scale) {
      Tape tape;
      const Var x = tape.leaf(filled(3, 2, 6));
      const Var loss = tape.mul_scalar(tape.sum(tape.relu(tape.add_scalar(x, 0.1))), scale);
      return tape.backward(loss)[x];
    };
    const Matrix one = grad_of(1.0);
    const Matrix three = grad_of(3.0);
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(three.data()[i] == Approx(3.0 * one.data()[i]));
  }

  TEST_CASE("reverse sweep visits every record once") {
    Tape tape;
    const Var x = tape.leaf(filled(2, 3, 7));
    const Var y = tape.relu(x);
    const Var loss = tape.div_scalar(tape.sum(y), 2.0);
    const auto g = tape.backward(loss);
    CHECK(g.visited() == tape.size());
  }

  TEST_CASE("max pool routes gradient to the lowest argmax") {
    Tape tape;
    const Var x = tape.leaf(Matrix(3, 1, std::vector<double>{1.0, 5.0, 5.0}));
    const auto g = tape.backward(tape.sum(tape.max_pool_rows(x, 3)));
    CHECK(g[x](0, 0) == 0.0);
    CHECK(g[x](1, 0) == 1.0);
    CHECK(g[x](2, 0) == 0.0);
  }

  TEST_CASE("softmax cross-entropy on uniform logits") {
    Tape tape;
    const Var logits = tape.leaf(Matrix(1, 3));
    const Var loss = tape.softmax_cross_entropy(logits, {1});
    CHECK(tape.value(loss)(0, 0) == Approx(std::log(3.0)));
    const auto g = tape.backward(loss);
    CHECK(g[logits](0, 0) == Approx(1.0 / 3.0));
    CHECK(g[logits](0, 1) == Approx(1.0 / 3.0 - 1.0));
  }

  TEST_CASE("attention MLP gradients agree with finite differences") {
    gam::GamConfig config;
    const auto p = gam::init_params(config, 2, 2, 3);
    Matrix b1 = filled(1, 16, 8);
    for (double& v : b1.values()) v *= 0.1;
    const Matrix inputs = filled(6, 2, 9);
    gam::ad::ParamSet set{{"w1", "b1", "w2", "b2"}, {p.attn_w1, b1, p.attn_w2, Matrix(1, 1, 0.05)}};
    const gam::ad::Objective objective = [&](Tape& tape, std::span<const Var> v) {
      const Var hidden = tape.relu(tape.affine(tape.leaf(inputs), v[0], v[1]));
      return tape.mean(tape.sigmoid(tape.affine(hidden, v[2], v[3])));
    };
    const auto report = gam::ad::finite_difference_check(objective, set, 1e-5);
    CHECK(report.n_scalars == 16 * 2 + 16 + 16 + 1);
    CHECK(report.max_rel_error < 1e-6);
  }

  TEST_CASE("scale rows and concat gradients agree with finite differences") {
    gam::ad::ParamSet set{{"x", "s", "y"}, {filled(4, 2, 10), filled(2, 2, 11), filled(4, 1, 12)}};
    const gam::ad::Objective objective = [](Tape& tape, std::span<const Var> v) {
      const Var joined = tape.concat_cols(tape.scale_rows(v[0], v[1]), v[2]);
      return tape.sum(tape.mul(joined, joined));
    };
    CHECK(gam::ad::finite_difference_check(objective, set, 1e-5).max_rel_error < 1e-6);
  }

  TEST_CASE("full GAM layer and classifier loss pass gradcheck") {
    gam::GamConfig config;
    config.n_centers = 2;
    config.k_neighbors = 4;
    config.radius = 10.0;
    const auto report = gam::demo::classifier_gradcheck(gam::demo::gradcheck_cloud(), config, 1, 0);
    CHECK(report.params.size() == 11);
    CHECK(report.max_rel_error < 1e-4);
    config.use_gradient = false;
    CHECK(gam::demo::classifier_gradcheck(gam::demo::gradcheck_cloud(), config, 2, 5).max_rel_error < 1e-4);
  }
}
