#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gam/geometry.hpp"
#include "gam/sampling.hpp"
#include "oracles.hpp"

using doctest::Approx;
using gam::Matrix;

namespace {

gam::PointCloud toy_pair() { return gam::validate_cloud(Matrix(2, 3, {0, 0, 0, 1, 1, std::sqrt(2.0)})); }

Matrix rel_rows(std::initializer_list<std::array<double, 3>> rows) {
  Matrix m(rows.size(), 3);
  std::size_t r = 0;
  for (const auto& v : rows) {
    for (std::size_t c = 0; c < 3; ++c) m(r, c) = v[c];
    ++r;
  }
  return m;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("edge gradient worked examples") {
    CHECK(gam::edge_gradient(1, 1, std::sqrt(2.0)) == Approx(1.0).epsilon(1e-12));
    CHECK(gam::edge_gradient(1, 0, 0) == 0.0);
    CHECK(gam::edge_gradient(0, 3, 4) == Approx(0.8).epsilon(1e-12));
    CHECK(gam::edge_gradient(-1, -1, std::sqrt(2.0)) == Approx(-1.0).epsilon(1e-12));
  }

  TEST_CASE("vertical and zero edges return exactly zero") {
    CHECK(gam::edge_gradient(0, 0, 1) == 0.0);
    CHECK(gam::edge_gradient(0, 0, 0) == 0.0);
    CHECK(gam::edge_gradient(1e-12, -1e-12, 5) == 0.0);
    CHECK(std::isfinite(gam::edge_gradient(1e-7, 0, 1)));
  }

  TEST_CASE("gradient is bounded by sqrt(2) and scale invariant") {
    const Matrix rel = oracle::random_coords(500, 77, -1.0, 1.0);
    for (std::size_t e = 0; e < rel.rows(); ++e) {
      const double g = gam::edge_gradient(rel(e, 0), rel(e, 1), rel(e, 2));
      CHECK(std::fabs(g) <= std::sqrt(2.0) + 1e-12);
      const double scaled = gam::edge_gradient(3.5 * rel(e, 0), 3.5 * rel(e, 1), 3.5 * rel(e, 2));
      CHECK(scaled == Approx(g).epsilon(1e-12));
    }
  }

  TEST_CASE("gradient matches the angle-based oracle") {
    const Matrix rel = oracle::random_coords(1000, 78, -2.0, 2.0);
    for (std::size_t e = 0; e < rel.rows(); ++e) {
      const double ours = gam::edge_gradient(rel(e, 0), rel(e, 1), rel(e, 2));
      const double ref = oracle::gradient_from_angles(rel(e, 0), rel(e, 1), rel(e, 2));
      CHECK(std::fabs(ours - ref) <= 1e-12);
    }
  }

  TEST_CASE("edge geometry on the two-point toy") {
    const auto cloud = toy_pair();
    const auto nbrs = gam::ball_query(cloud, {0}, 3.0, 2);
    const auto edges = gam::edge_geometry(cloud, nbrs);
    REQUIRE(edges.n_edges() == 2);
    CHECK(edges.dist[0] == 0.0);
    CHECK(edges.grad[0] == 0.0);
    CHECK(edges.dist[1] == Approx(2.0).epsilon(1e-12));
    CHECK(edges.grad[1] == Approx(1.0).epsilon(1e-12));
    CHECK(edges.rel(1, 2) == Approx(std::sqrt(2.0)));
  }

  TEST_CASE("edge geometry is independent of thread count and preallocation") {
    const auto cloud = gam::validate_cloud(oracle::random_coords(300, 79));
    const auto centers = gam::farthest_point_sample(cloud, 32, 0);
    const auto nbrs = gam::ball_query(cloud, centers, 0.25, 8);
    const auto one = gam::edge_geometry(cloud, nbrs, gam::kDefaultEpsilon, 1);
    const auto four = gam::edge_geometry(cloud, nbrs, gam::kDefaultEpsilon, 4);
    gam::EdgeGeometry into;
    gam::edge_geometry_into(cloud, nbrs, gam::kDefaultEpsilon, into);
    CHECK(one.rel == four.rel);
    CHECK(one.grad == four.grad);
    CHECK(one.dist == into.dist);
    CHECK(one.grad == into.grad);
  }

  TEST_CASE("gradient vector for a y-z edge") {
    const auto set = gam::gradient_vectors(rel_rows({{0, 3, 4}}), 1);
    CHECK(set.defined[0]);
    CHECK(set.g(0, 0) == Approx(0.0));
    CHECK(set.g(0, 1) == Approx(0.8).epsilon(1e-12));
    CHECK(set.g(0, 2) == Approx(0.6).epsilon(1e-12));
  }

  TEST_CASE("gradient vectors are unit length and agree with the scalar form") {
    const Matrix rel = oracle::random_coords(400, 80, -1.0, 1.0);
    const auto set = gam::gradient_vectors(rel, 4);
    for (std::size_t e = 0; e < rel.rows(); ++e) {
      REQUIRE(set.defined[e]);
      const double n2 = set.g(e, 0) * set.g(e, 0) + set.g(e, 1) * set.g(e, 1) + set.g(e, 2) * set.g(e, 2);
      CHECK(std::fabs(n2 - 1.0) <= 1e-9);
      // The scalar gradient is the sum of the two horizontal components.
      CHECK(set.g(e, 0) + set.g(e, 1) == Approx(gam::edge_gradient(rel(e, 0), rel(e, 1), rel(e, 2))).epsilon(1e-12));
    }
  }

  TEST_CASE("vertical edges are masked in vector form") {
    const auto set = gam::gradient_vectors(rel_rows({{0, 0, 1}, {0, 0, 0}, {1, 0, 0}}), 3);
    CHECK_FALSE(set.defined[0]);
    CHECK_FALSE(set.defined[1]);
    CHECK(set.defined[2]);
    for (std::size_t c = 0; c < 3; ++c) CHECK(set.g(0, c) == 0.0);
    CHECK(set.g(2, 0) == Approx(0.0));
    CHECK(set.g(2, 2) == Approx(1.0));
  }

  TEST_CASE("depth gradients worked examples") {
    const auto dg = gam::depth_gradients(rel_rows({{1, 0, 2}, {1, 1, 1}, {0, 0, 1}}), 3);
    CHECK(dg.dzdx[0] == Approx(2.0));
    CHECK(dg.dzdy[0] == Approx(0.0));
    CHECK(dg.dzdx[1] == Approx(0.5));
    CHECK(dg.dzdy[1] == Approx(0.5));
    CHECK_FALSE(dg.defined[2]);
  }

  TEST_CASE("normalizing (dz/dx, dz/dy, 1) reproduces the gradient vector") {
    const Matrix rel = oracle::random_coords(400, 81, -1.0, 1.0);
    const auto dg = gam::depth_gradients(rel, 4);
    const auto gv = gam::gradient_vectors(rel, 4);
    for (std::size_t e = 0; e < rel.rows(); ++e) {
      const double n = std::sqrt(dg.dzdx[e] * dg.dzdx[e] + dg.dzdy[e] * dg.dzdy[e] + 1.0);
      CHECK(std::fabs(dg.dzdx[e] / n - gv.g(e, 0)) <= 1e-9);
      CHECK(std::fabs(dg.dzdy[e] / n - gv.g(e, 1)) <= 1e-9);
      CHECK(std::fabs(1.0 / n - gv.g(e, 2)) <= 1e-9);
    }
  }

  TEST_CASE("symmetric 3x3 eigen solver") {
    SUBCASE("diagonal") {
      const auto eig = gam::eigen_symmetric3({3, 0, 0, 1, 0, 2});
      CHECK(eig.values[0] == Approx(1.0));
      CHECK(eig.values[1] == Approx(2.0));
      CHECK(eig.values[2] == Approx(3.0));
      CHECK(std::fabs(eig.vectors[0][1]) == Approx(1.0));
    }
    SUBCASE("reconstruction on random symmetric matrices") {
      const Matrix r = oracle::random_coords(200, 82, -1.0, 1.0);
      for (std::size_t t = 0; t + 1 < r.rows(); t += 2) {
        const std::array<double, 6> a{r(t, 0), r(t, 1), r(t, 2), r(t + 1, 0), r(t + 1, 1), r(t + 1, 2)};
        const auto eig = gam::eigen_symmetric3(a);
        const double full[3][3] = {{a[0], a[1], a[2]}, {a[1], a[3], a[4]}, {a[2], a[4], a[5]}};
        for (int i = 0; i < 3; ++i) {
          const auto& v = eig.vectors[i];
          for (int row = 0; row < 3; ++row) {
            const double av = full[row][0] * v[0] + full[row][1] * v[1] + full[row][2] * v[2];
            CHECK(std::fabs(av - eig.values[i] * v[row]) <= 1e-9);
          }
        }
        CHECK(eig.values[0] <= eig.values[1]);
        CHECK(eig.values[1] <= eig.values[2]);
      }
    }
  }

  TEST_CASE("pca normals recover planes") {
    SUBCASE("z = 0") {
      Matrix pts(25, 3);
      for (std::size_t i = 0; i < 25; ++i) {
        pts(i, 0) = 0.1 * static_cast<double>(i % 5);
        pts(i, 1) = 0.1 * static_cast<double>(i / 5);
      }
      const auto cloud = gam::validate_cloud(pts);
      const auto nbrs = gam::ball_query(cloud, {12}, 1.0, 16);
      const auto ns = gam::pca_normals(cloud, nbrs);
      for (std::size_t e = 0; e < 16; ++e) {
        REQUIRE(ns.defined[e]);
        CHECK(ns.normal(e, 2) == Approx(1.0).epsilon(1e-9));
      }
    }
    SUBCASE("z = x") {
      const Matrix uv = oracle::random_coords(40, 83);
      Matrix pts(40, 3);
      for (std::size_t i = 0; i < 40; ++i) {
        pts(i, 0) = uv(i, 0);
        pts(i, 1) = uv(i, 1);
        pts(i, 2) = uv(i, 0);
      }
      const auto cloud = gam::validate_cloud(pts);
      const auto nbrs = gam::ball_query(cloud, {0, 5}, 2.0, 12);
      const auto ns = gam::pca_normals(cloud, nbrs, 2);
      const double h = 1.0 / std::sqrt(2.0);
      for (std::size_t e = 0; e < 24; ++e) {
        REQUIRE(ns.defined[e]);
        CHECK(std::fabs(ns.normal(e, 0) + h) <= 1e-9);
        CHECK(std::fabs(ns.normal(e, 1)) <= 1e-9);
        CHECK(std::fabs(ns.normal(e, 2) - h) <= 1e-9);
      }
    }
  }

  TEST_CASE("collinear neighborhoods are masked") {
    Matrix pts(6, 3);
    for (std::size_t i = 0; i < 6; ++i) {
      pts(i, 0) = 0.1 * static_cast<double>(i);
      pts(i, 1) = 0.2 * static_cast<double>(i);
      pts(i, 2) = -0.05 * static_cast<double>(i);
    }
    const auto cloud = gam::validate_cloud(pts);
    const auto ns = gam::pca_normals(cloud, gam::ball_query(cloud, {2}, 1.0, 6));
    for (std::size_t e = 0; e < 6; ++e) CHECK_FALSE(ns.defined[e]);
  }
}
