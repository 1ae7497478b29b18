#include "gam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gam/parallel.hpp"

namespace gam {
namespace {

using Vec3 = std::array<double, 3>;

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

void check_nbrs(const PointCloud& cloud, const NeighborhoodIndex& nbrs) {
  if (nbrs.k == 0 || nbrs.neighbor_ids.size() != nbrs.center_ids.size() * nbrs.k) {
    throw Error(Errc::kShapeMismatch, "neighborhood index is inconsistent");
  }
  const std::size_t n = cloud.size();
  const auto bad = [n](std::size_t i) { return i >= n; };
  if (std::any_of(nbrs.center_ids.begin(), nbrs.center_ids.end(), bad) ||
      std::any_of(nbrs.neighbor_ids.begin(), nbrs.neighbor_ids.end(), bad)) {
    throw Error(Errc::kInvalidInput, "neighborhood index out of range");
  }
}

void check_rel(const Matrix& rel, std::size_t k) {
  if (rel.cols() != 3 || k == 0 || rel.rows() % k != 0) {
    throw Error(Errc::kShapeMismatch, "relative vectors must be (N_s*K) x 3");
  }
}

// Unit null vector of the rank-2 matrix a - lambda*I. Falls back to e_x when
// the matrix vanishes.
Vec3 eigenvector_isolated(const std::array<double, 6>& a, double lambda) {
  const Vec3 r0{a[0] - lambda, a[1], a[2]};
  const Vec3 r1{a[1], a[3] - lambda, a[4]};
  const Vec3 r2{a[2], a[4], a[5] - lambda};
  const Vec3 c01 = cross(r0, r1);
  const Vec3 c02 = cross(r0, r2);
  const Vec3 c12 = cross(r1, r2);
  const double d01 = dot(c01, c01);
  const double d02 = dot(c02, c02);
  const double d12 = dot(c12, c12);
  const double dmax = std::max({d01, d02, d12});
  if (dmax <= 0.0) return {1.0, 0.0, 0.0};
  if (dmax == d01) return scale(c01, 1.0 / std::sqrt(d01));
  if (dmax == d02) return scale(c02, 1.0 / std::sqrt(d02));
  return scale(c12, 1.0 / std::sqrt(d12));
}

// Orthonormal u, w spanning the complement of unit vector v.
void complement_basis(const Vec3& v, Vec3& u, Vec3& w) {
  if (std::fabs(v[0]) > std::fabs(v[1])) {
    const double inv = 1.0 / std::sqrt(v[0] * v[0] + v[2] * v[2]);
    u = {-v[2] * inv, 0.0, v[0] * inv};
  } else {
    const double inv = 1.0 / std::sqrt(v[1] * v[1] + v[2] * v[2]);
    u = {0.0, v[2] * inv, -v[1] * inv};
  }
  w = cross(v, u);
}

Vec3 mat_vec(const std::array<double, 6>& a, const Vec3& x) {
  return {a[0] * x[0] + a[1] * x[1] + a[2] * x[2], a[1] * x[0] + a[3] * x[1] + a[4] * x[2],
          a[2] * x[0] + a[4] * x[1] + a[5] * x[2]};
}

// Eigenvector for lambda restricted to the plane orthogonal to v0.
Vec3 eigenvector_in_complement(const std::array<double, 6>& a, const Vec3& v0, double lambda) {
  Vec3 u, w;
  complement_basis(v0, u, w);
  const Vec3 au = mat_vec(a, u);
  const Vec3 aw = mat_vec(a, w);
  double m00 = dot(u, au) - lambda;
  double m01 = dot(u, aw);
  double m11 = dot(w, aw) - lambda;
  const double abs00 = std::fabs(m00);
  const double abs01 = std::fabs(m01);
  const double abs11 = std::fabs(m11);
  if (abs00 >= abs11) {
    const double mx = std::max(abs00, abs01);
    if (mx <= 0.0) return u;
    if (abs00 >= abs01) {
      m01 /= m00;
      m00 = 1.0 / std::sqrt(1.0 + m01 * m01);
      m01 *= m00;
    } else {
      m00 /= m01;
      m01 = 1.0 / std::sqrt(1.0 + m00 * m00);
      m00 *= m01;
    }
    return {m01 * u[0] - m00 * w[0], m01 * u[1] - m00 * w[1], m01 * u[2] - m00 * w[2]};
  }
  const double mx = std::max(abs11, abs01);
  if (mx <= 0.0) return u;
  if (abs11 >= abs01) {
    m01 /= m11;
    m11 = 1.0 / std::sqrt(1.0 + m01 * m01);
    m01 *= m11;
  } else {
    m11 /= m01;
    m01 = 1.0 / std::sqrt(1.0 + m11 * m11);
    m11 *= m01;
  }
  return {m11 * u[0] - m01 * w[0], m11 * u[1] - m01 * w[1], m11 * u[2] - m01 * w[2]};
}

// Relative threshold on lambda_mid / lambda_max below which a scatter is
// treated as rank < 2.
constexpr double kRankTolerance = 1e-10;

// Writes the plane normal for one scatter matrix; false when rank < 2.
bool plane_normal(const std::array<double, 6>& scatter, double* out) {
  const SymmetricEigen3 e = eigen_symmetric3(scatter);
  if (!(e.values[2] > 0.0) || e.values[1] <= kRankTolerance * e.values[2]) {
    out[0] = out[1] = out[2] = 0.0;
    return false;
  }
  Vec3 n = e.vectors[0];
  if (n[2] < 0.0) n = scale(n, -1.0);
  out[0] = n[0];
  out[1] = n[1];
  out[2] = n[2];
  return true;
}

}  // namespace

double edge_gradient(double x, double y, double z, double eps) {
  const double horizontal = std::sqrt(x * x + y * y);
  const double d = std::sqrt(x * x + y * y + z * z);
  if (horizontal <= eps || d <= eps) return 0.0;
  return (z / d) * ((x + y) / horizontal);
}

void edge_geometry_into(const PointCloud& cloud, const NeighborhoodIndex& nbrs, double eps, EdgeGeometry& out,
                        unsigned threads) {
  check_nbrs(cloud, nbrs);
  const std::size_t ns = nbrs.n_centers();
  const std::size_t k = nbrs.k;
  const std::size_t edges = ns * k;
  out.n_centers = ns;
  out.k = k;
  if (out.rel.rows() != edges || out.rel.cols() != 3) out.rel = Matrix(edges, 3);
  out.dist.resize(edges);
  out.grad.resize(edges);

  const double* xyz = cloud.coords().data();
  double* rel = out.rel.data();
  double* dist = out.dist.data();
  double* grad = out.grad.data();
  parallel_for(ns, threads, [&](std::size_t s) {
    const double* p = xyz + nbrs.center_ids[s] * 3;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t e = s * k + j;
      const double* q = xyz + nbrs.neighbor_ids[e] * 3;
      const double x = q[0] - p[0];
      const double y = q[1] - p[1];
      const double z = q[2] - p[2];
      rel[e * 3 + 0] = x;
      rel[e * 3 + 1] = y;
      rel[e * 3 + 2] = z;
      const double horizontal = std::sqrt(x * x + y * y);
      const double d = std::sqrt(x * x + y * y + z * z);
      dist[e] = d;
      grad[e] = (horizontal <= eps || d <= eps) ? 0.0 : (z / d) * ((x + y) / horizontal);
    }
  });
}

EdgeGeometry edge_geometry(const PointCloud& cloud, const NeighborhoodIndex& nbrs, double eps, unsigned threads) {
  EdgeGeometry out;
  edge_geometry_into(cloud, nbrs, eps, out, threads);
  return out;
}

GradientVectorSet gradient_vectors(const Matrix& rel, std::size_t k, double eps) {
  check_rel(rel, k);
  const std::size_t edges = rel.rows();
  GradientVectorSet out;
  out.k = k;
  out.n_centers = edges / k;
  out.g = Matrix(edges, 3);
  out.defined.assign(edges, false);
  for (std::size_t e = 0; e < edges; ++e) {
    const double x = rel(e, 0);
    const double y = rel(e, 1);
    const double z = rel(e, 2);
    const double horizontal = std::sqrt(x * x + y * y);
    const double d = std::sqrt(x * x + y * y + z * z);
    if (horizontal <= eps || d <= eps) continue;
    const double sin_zenith = z / d;
    out.g(e, 0) = sin_zenith * (x / horizontal);
    out.g(e, 1) = sin_zenith * (y / horizontal);
    out.g(e, 2) = horizontal / d;
    out.defined[e] = true;
  }
  return out;
}

GradientVectorSet gradient_vectors(const EdgeGeometry& edges, double eps) {
  return gradient_vectors(edges.rel, edges.k, eps);
}

DepthGradientSet depth_gradients(const Matrix& rel, std::size_t k, double eps) {
  check_rel(rel, k);
  const std::size_t edges = rel.rows();
  DepthGradientSet out;
  out.k = k;
  out.n_centers = edges / k;
  out.dzdx.assign(edges, 0.0);
  out.dzdy.assign(edges, 0.0);
  out.defined.assign(edges, false);
  for (std::size_t e = 0; e < edges; ++e) {
    const double x = rel(e, 0);
    const double y = rel(e, 1);
    const double z = rel(e, 2);
    const double h2 = x * x + y * y;
    if (h2 <= eps * eps) continue;
    out.dzdx[e] = x * z / h2;
    out.dzdy[e] = y * z / h2;
    out.defined[e] = true;
  }
  return out;
}

SymmetricEigen3 eigen_symmetric3(const std::array<double, 6>& in) {
  SymmetricEigen3 out{};
  // Scale to unit max entry so the characteristic polynomial stays in range.
  double max_abs = 0.0;
  for (double v : in) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0) {
    out.values = {0.0, 0.0, 0.0};
    out.vectors = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    return out;
  }
  std::array<double, 6> a;
  for (int i = 0; i < 6; ++i) a[i] = in[i] / max_abs;

  const double off = a[1] * a[1] + a[2] * a[2] + a[4] * a[4];
  const double q = (a[0] + a[3] + a[5]) / 3.0;
  const double b00 = a[0] - q;
  const double b11 = a[3] - q;
  const double b22 = a[5] - q;
  const double p = std::sqrt((b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off) / 6.0);
  if (p == 0.0) {
    out.values = {in[0], in[0], in[0]};
    out.vectors = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    return out;
  }
  const double c00 = b11 * b22 - a[4] * a[4];
  const double c01 = a[1] * b22 - a[4] * a[2];
  const double c02 = a[1] * a[4] - b11 * a[2];
  const double half_det = std::clamp((b00 * c00 - a[1] * c01 + a[2] * c02) / (2.0 * p * p * p), -1.0, 1.0);
  const double angle = std::acos(half_det) / 3.0;
  const double two_thirds_pi = 2.0 * std::numbers::pi / 3.0;
  const double beta_hi = 2.0 * std::cos(angle);
  const double beta_lo = 2.0 * std::cos(angle + two_thirds_pi);
  const double beta_mid = -(beta_hi + beta_lo);
  const double l0 = q + p * beta_lo;
  const double l1 = q + p * beta_mid;
  const double l2 = q + p * beta_hi;

  // Solve the better separated extreme eigenvalue first.
  Vec3 v0, v1, v2;
  if (half_det >= 0.0) {
    v2 = eigenvector_isolated(a, l2);
    v1 = eigenvector_in_complement(a, v2, l1);
    v0 = cross(v1, v2);
  } else {
    v0 = eigenvector_isolated(a, l0);
    v1 = eigenvector_in_complement(a, v0, l1);
    v2 = cross(v0, v1);
  }
  out.values = {l0 * max_abs, l1 * max_abs, l2 * max_abs};
  out.vectors = {v0, v1, v2};
  return out;
}

void pca_normals_into(const PointCloud& cloud, const NeighborhoodIndex& nbrs, NormalSet& out, unsigned threads) {
  check_nbrs(cloud, nbrs);
  const std::size_t ns = nbrs.n_centers();
  const std::size_t k = nbrs.k;
  const std::size_t edges = ns * k;
  out.n_centers = ns;
  out.k = k;
  if (out.normal.rows() != edges || out.normal.cols() != 3) out.normal = Matrix(edges, 3);
  out.defined.assign(edges, false);

  const double* xyz = cloud.coords().data();
  double* normal = out.normal.data();
  std::vector<char> defined(edges, 0);
  parallel_for(ns, threads, [&](std::size_t s) {
    const std::size_t* row = nbrs.neighbor_ids.data() + s * k;
    for (std::size_t j = 0; j < k; ++j) {
      const double* anchor = xyz + row[j] * 3;
      std::array<double, 6> scatter{};
      for (std::size_t m = 0; m < k; ++m) {
        const double* q = xyz + row[m] * 3;
        const double x = q[0] - anchor[0];
        const double y = q[1] - anchor[1];
        const double z = q[2] - anchor[2];
        scatter[0] += x * x;
        scatter[1] += x * y;
        scatter[2] += x * z;
        scatter[3] += y * y;
        scatter[4] += y * z;
        scatter[5] += z * z;
      }
      defined[s * k + j] = plane_normal(scatter, normal + (s * k + j) * 3) ? 1 : 0;
    }
  });
  for (std::size_t e = 0; e < edges; ++e) out.defined[e] = defined[e] != 0;
}

NormalSet pca_normals(const PointCloud& cloud, const NeighborhoodIndex& nbrs, unsigned threads) {
  NormalSet out;
  pca_normals_into(cloud, nbrs, out, threads);
  return out;
}

}  // namespace gam
