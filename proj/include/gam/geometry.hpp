#pragma once

#include <array>
#include <vector>

#include "gam/core.hpp"

namespace gam {

inline constexpr double kDefaultEpsilon = 1e-8;

/// Unit gradient vector per edge built from the zenith and azimuth angles.
/// Entries where the azimuth is undefined are zero with defined == false.
struct GradientVectorSet {
  std::size_t n_centers = 0;
  std::size_t k = 0;
  Matrix g;                   // (N_s*K) x 3
  std::vector<bool> defined;  // N_s*K
};

/// Depth slopes along x and y in world coordinates.
struct DepthGradientSet {
  std::size_t n_centers = 0;
  std::size_t k = 0;
  std::vector<double> dzdx;
  std::vector<double> dzdy;
  std::vector<bool> defined;
};

struct NormalSet {
  std::size_t n_centers = 0;
  std::size_t k = 0;
  Matrix normal;              // (N_s*K) x 3, unit with z >= 0
  std::vector<bool> defined;  // false for rank-deficient neighborhoods
};

/// Scalar gradient of one relative vector: (z/d) * (x+y)/sqrt(x^2+y^2), or 0
/// when the horizontal length or d is at most eps.
double edge_gradient(double x, double y, double z, double eps = kDefaultEpsilon);

/// rel = q - p, dist = |rel|, grad = edge_gradient(rel) for every edge.
EdgeGeometry edge_geometry(const PointCloud& cloud, const NeighborhoodIndex& nbrs, double eps = kDefaultEpsilon,
                           unsigned threads = 1);

/// Same as edge_geometry but writes into preallocated storage (resized if
/// needed). Used by the benchmark so both methods time only arithmetic.
void edge_geometry_into(const PointCloud& cloud, const NeighborhoodIndex& nbrs, double eps, EdgeGeometry& out,
                        unsigned threads = 1);

/// Unit gradient vectors (g_x, g_y, g_z) from the relative vectors of `edges`.
GradientVectorSet gradient_vectors(const EdgeGeometry& edges, double eps = kDefaultEpsilon);

/// Overload for raw relative vectors ((N_s*K) x 3).
GradientVectorSet gradient_vectors(const Matrix& rel, std::size_t k, double eps = kDefaultEpsilon);

/// World depth gradients x*z/(x^2+y^2), y*z/(x^2+y^2); undefined where
/// x^2+y^2 <= eps^2.
DepthGradientSet depth_gradients(const Matrix& rel, std::size_t k, double eps = kDefaultEpsilon);

/// Eigen decomposition of a symmetric 3x3 matrix given as
/// {a00, a01, a02, a11, a12, a22}. Eigenvalues ascending.
struct SymmetricEigen3 {
  std::array<double, 3> values;
  std::array<std::array<double, 3>, 3> vectors;  // vectors[i] pairs with values[i]
};
SymmetricEigen3 eigen_symmetric3(const std::array<double, 6>& a);

/// Local plane fit normal at every neighborhood point. For edge (s, j) the
/// 3x3 scatter of the neighborhood points of s about q_{s,j} is formed and the
/// eigenvector of its smallest eigenvalue returned, oriented so z >= 0.
/// Neighborhoods whose scatter has rank < 2 are masked.
NormalSet pca_normals(const PointCloud& cloud, const NeighborhoodIndex& nbrs, unsigned threads = 1);

void pca_normals_into(const PointCloud& cloud, const NeighborhoodIndex& nbrs, NormalSet& out, unsigned threads = 1);

}  // namespace gam
