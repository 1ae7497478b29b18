#include <cmath>

#include "doctest.h"
#include "gam/attention.hpp"
#include "gam/demo.hpp"
#include "gam/kernels.hpp"
#include "test_util.hpp"

using doctest::Approx;
using gam::Errc;
using gam::Matrix;
using testing::error_of;
namespace demo = gam::demo;

namespace {

gam::GamConfig small_config() {
  gam::GamConfig config;
  config.n_centers = 8;
  config.k_neighbors = 8;
  config.radius = 0.4;
  return config;
}

Matrix record_pooled(const demo::ClassifierParams& params, const demo::SampleInputs& s, const gam::GamConfig& config,
                     bool attention) {
  gam::ad::Tape tape;
  std::vector<gam::ad::Var> leaves;
  for (const Matrix& m : demo::to_param_set(params).values) leaves.push_back(tape.leaf(m));
  const auto pooled = demo::record_gam_layer(tape, demo::ClassifierVars::bind(leaves), s, config, attention);
  return tape.value(pooled);
}

Matrix plain_pooled(const demo::ClassifierParams& params, const demo::SampleInputs& s, const gam::AttentionMatrix& a,
                    double lambda) {
  Matrix w(params.gam.phi_w.rows(), params.gam.phi_w.cols() * 2);
  for (std::size_t o = 0; o < w.rows(); ++o) {
    for (std::size_t i = 0; i < params.gam.phi_w.cols(); ++i) {
      w(o, i) = params.gam.phi_w(o, i);
      w(o, params.gam.phi_w.cols() + i) = params.gam.phi_w_diff(o, i);
    }
  }
  const Matrix phi = gam::kernels::relu(gam::kernels::affine(s.phi_input, w, params.gam.phi_b));
  return gam::aggregate(phi, a, params.gam, lambda).pooled;
}

}  // namespace

TEST_SUITE("demo") {
  TEST_CASE("noise-free spheres lie on the unit sphere") {
    for (const auto& s : demo::generate_shapes(3, 0.0, 1, 64)) {
      if (s.label != demo::ShapeClass::kSphere) continue;
      const Matrix& p = s.cloud.coords();
      for (std::size_t i = 0; i < p.rows(); ++i) {
        CHECK(std::fabs(std::sqrt(p(i, 0) * p(i, 0) + p(i, 1) * p(i, 1) + p(i, 2) * p(i, 2)) - 1.0) <= 1e-9);
      }
    }
  }

  TEST_CASE("noise-free cubes lie on the cube surface") {
    for (const auto& s : demo::generate_shapes(3, 0.0, 2, 64)) {
      if (s.label != demo::ShapeClass::kCube) continue;
      const Matrix& p = s.cloud.coords();
      for (std::size_t i = 0; i < p.rows(); ++i) {
        const double m = std::max({std::fabs(p(i, 0)), std::fabs(p(i, 1)), std::fabs(p(i, 2))});
        CHECK(m == Approx(0.5).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("noise-free planes satisfy one plane equation through the origin") {
    for (const auto& s : demo::generate_shapes(3, 0.0, 3, 64)) {
      if (s.label != demo::ShapeClass::kPlane) continue;
      const Matrix& p = s.cloud.coords();
      // Normal from two non-parallel points, then check every point.
      const double n[3] = {p(0, 1) * p(1, 2) - p(0, 2) * p(1, 1), p(0, 2) * p(1, 0) - p(0, 0) * p(1, 2),
                           p(0, 0) * p(1, 1) - p(0, 1) * p(1, 0)};
      const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
      REQUIRE(len > 1e-6);
      for (std::size_t i = 0; i < p.rows(); ++i) {
        CHECK(std::fabs((n[0] * p(i, 0) + n[1] * p(i, 1) + n[2] * p(i, 2)) / len) <= 1e-9);
        CHECK(p(i, 0) * p(i, 0) + p(i, 1) * p(i, 1) + p(i, 2) * p(i, 2) <= 1.0 + 1e-12);
      }
    }
  }

  TEST_CASE("generated datasets are deterministic and interleaved") {
    const auto a = demo::generate_shapes(4, 0.02, 9, 32);
    const auto b = demo::generate_shapes(4, 0.02, 9, 32);
    REQUIRE(a.size() == 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].cloud.coords() == b[i].cloud.coords());
      CHECK(static_cast<std::size_t>(a[i].label) == i % 3);
    }
    CHECK_FALSE(demo::generate_shapes(4, 0.02, 10, 32)[0].cloud.coords() == a[0].cloud.coords());
    CHECK(error_of([] { demo::generate_shapes(0, 0.0, 0); }) == Errc::kInvalidInput);
    CHECK(error_of([] { demo::generate_shapes(1, -0.1, 0); }) == Errc::kInvalidInput);
  }

  TEST_CASE("parameter set round trip") {
    const auto p = demo::init_classifier(small_config(), 3, 5, 4);
    const auto set = demo::to_param_set(p);
    CHECK(set.names.size() == 11);
    const auto back = demo::from_param_set(set);
    CHECK(back.gam == p.gam);
    CHECK(back.head_w == p.head_w);
  }

  TEST_CASE("recorded layer equals the plain forward bitwise") {
    const auto config = small_config();
    const auto shapes = demo::generate_shapes(1, 0.01, 5, 64);
    const auto s = demo::prepare_sample(shapes[0].cloud, config);
    const auto params = demo::init_classifier(config, 3, 6, 2);

    SUBCASE("attention on") {
      Matrix hidden =
          gam::kernels::relu(gam::kernels::affine(s.attention_input, params.gam.attn_w1, params.gam.attn_b1));
      const Matrix logits = gam::kernels::affine(hidden, params.gam.attn_w2, params.gam.attn_b2);
      gam::AttentionMatrix a{Matrix(s.n_centers, s.k)};
      for (std::size_t e = 0; e < logits.rows(); ++e) a.a.data()[e] = gam::kernels::sigmoid(logits.data()[e]);
      CHECK(record_pooled(params, s, config, true) == plain_pooled(params, s, a, config.lambda));
    }
    SUBCASE("attention off equals the a == 1 aggregate path") {
      const Matrix off = record_pooled(params, s, config, false);
      CHECK(off == plain_pooled(params, s, gam::AttentionMatrix::bypass(s.n_centers, s.k), config.lambda));
      CHECK(off == plain_pooled(params, s, gam::AttentionMatrix::bypass(s.n_centers, s.k), 0.0));
    }
  }

  TEST_CASE("zero epochs gives chance accuracy") {
    const auto data = demo::generate_shapes(20, 0.01, 0, 64);
    demo::TrainOptions options;
    options.epochs = 0;
    options.out_channels = 8;
    const auto report = demo::train_classifier(data, small_config(), options);
    CHECK(report.epochs.empty());
    CHECK(report.n_train == 48);
    CHECK(report.n_test == 12);
    CHECK(std::fabs(report.test_accuracy - 1.0 / 3.0) <= 0.15 + 1e-12);
  }

  TEST_CASE("training is deterministic and logs finite losses") {
    const auto data = demo::generate_shapes(5, 0.01, 1, 64);
    demo::TrainOptions options;
    options.epochs = 3;
    options.out_channels = 6;
    const auto a = demo::train_classifier(data, small_config(), options);
    const auto b = demo::train_classifier(data, small_config(), options);
    REQUIRE(a.epochs.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
      CHECK(std::isfinite(a.epochs[e].loss));
      CHECK(a.epochs[e].loss == b.epochs[e].loss);
      CHECK(a.epochs[e].test_accuracy == b.epochs[e].test_accuracy);
      CHECK(a.epochs[e].train_accuracy >= 0.0);
      CHECK(a.epochs[e].train_accuracy <= 1.0);
    }
    CHECK(demo::to_json(a).find("\"train_report\"") != std::string::npos);
    CHECK(demo::to_csv(a).rfind("# config:", 0) == 0);
  }

  TEST_CASE("full-batch and ablated training run") {
    const auto data = demo::generate_shapes(4, 0.01, 2, 48);
    demo::TrainOptions options;
    options.epochs = 2;
    options.out_channels = 4;
    options.batch_size = 0;
    CHECK(demo::train_classifier(data, small_config(), options).epochs.size() == 2);
    options.gam_enabled = false;
    CHECK(demo::train_classifier(data, small_config(), options).epochs.size() == 2);
  }

  TEST_CASE("divergence is reported") {
    const auto data = demo::generate_shapes(4, 0.01, 2, 48);
    demo::TrainOptions options;
    options.epochs = 20;
    options.out_channels = 4;
    options.learning_rate = 1e308;
    auto config = small_config();
    config.seed = 2;
    CHECK(error_of([&] { demo::train_classifier(data, config, options); }) == Errc::kDivergedLoss);
  }
}
