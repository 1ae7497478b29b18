#pragma once

// Elementary numeric kernels shared by the plain forward pass and the
// autodiff tape. Both paths must call these so that their outputs agree
// bit for bit.

#include <algorithm>
#include <cmath>

#include "gam/core.hpp"

namespace gam::kernels {

/// Logits are clamped to this magnitude so sigmoid stays inside (0, 1).
inline constexpr double kSigmoidClamp = 36.0;

inline double sigmoid(double x) {
  const double z = std::clamp(x, -kSigmoidClamp, kSigmoidClamp);
  return 1.0 / (1.0 + std::exp(-z));
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// out[r, o] = b[o] + sum_i x[r, i] * w[o, i]. w is out x in, b is 1 x out.
inline Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  const std::size_t rows = x.rows();
  const std::size_t in = x.cols();
  const std::size_t out = w.rows();
  Matrix y(rows, out);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * in;
    double* yr = y.data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data() + o * in;
      double acc = b.data()[o];
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      yr[o] = acc;
    }
  }
  return y;
}

inline Matrix relu(Matrix x) {
  for (double& v : x.values()) v = relu(v);
  return x;
}

/// Per-edge blend factor (lambda * a + 1) / (1 + lambda). Equals 1 exactly
/// when a == 1 or lambda == 0.
inline double blend_scale(double a, double lambda) { return (lambda * a + 1.0) / (1.0 + lambda); }

/// Channelwise max over consecutive groups of `group` rows; ties keep the
/// lowest row.
inline Matrix max_pool_rows(const Matrix& x, std::size_t group) {
  const std::size_t out_rows = x.rows() / group;
  Matrix y(out_rows, x.cols());
  for (std::size_t g = 0; g < out_rows; ++g) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double best = x(g * group, c);
      for (std::size_t j = 1; j < group; ++j) best = std::max(best, x(g * group + j, c));
      y(g, c) = best;
    }
  }
  return y;
}

}  // namespace gam::kernels
