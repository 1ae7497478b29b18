#include "gam/core.hpp"

#include <algorithm>
#include <cmath>

#include "gam/rng.hpp"

namespace gam {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidInput: return "InvalidInput";
    case Errc::kNonFinite: return "NonFinite";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kTooManyCenters: return "TooManyCenters";
    case Errc::kEmptyBall: return "EmptyBall";
    case Errc::kKTooLarge: return "KTooLarge";
    case Errc::kNonScalarLoss: return "NonScalarLoss";
    case Errc::kDivergedLoss: return "DivergedLoss";
    case Errc::kParseError: return "ParseError";
    case Errc::kInconsistentColumns: return "InconsistentColumns";
    case Errc::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(Errc::kShapeMismatch, "matrix data length " + std::to_string(data_.size()) +
                                          " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

PointCloud validate_cloud(Matrix coords, std::optional<Matrix> features) {
  if (coords.rows() == 0) throw Error(Errc::kInvalidInput, "point cloud must contain at least one point");
  if (coords.cols() != 3) {
    throw Error(Errc::kShapeMismatch, "coordinates must have 3 columns, got " + std::to_string(coords.cols()));
  }
  if (!coords.all_finite()) throw Error(Errc::kNonFinite, "coordinates contain NaN or Inf");
  if (features) {
    if (features->rows() != coords.rows()) {
      throw Error(Errc::kShapeMismatch, "feature rows " + std::to_string(features->rows()) +
                                            " != point count " + std::to_string(coords.rows()));
    }
    if (!features->all_finite()) throw Error(Errc::kNonFinite, "features contain NaN or Inf");
  }
  return PointCloud(std::move(coords), std::move(features));
}

void validate_config(const GamConfig& config) {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw Error(Errc::kInvalidInput, "lambda must be finite and >= 0");
  }
  if (!(config.epsilon > 0.0)) throw Error(Errc::kInvalidInput, "epsilon must be > 0");
  if (!(config.radius > 0.0) || !std::isfinite(config.radius)) {
    throw Error(Errc::kInvalidInput, "radius must be finite and > 0");
  }
  if (config.n_centers == 0) throw Error(Errc::kInvalidInput, "n_centers must be >= 1");
  if (config.k_neighbors == 0) throw Error(Errc::kInvalidInput, "k_neighbors must be >= 1");
  if (config.mlp_hidden == 0) throw Error(Errc::kInvalidInput, "mlp_hidden must be >= 1");
}

namespace {

Matrix uniform_weights(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  Matrix w(rows, cols);
  const double bound = fan_in > 0 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 0.0;
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  return w;
}

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(Errc::kShapeMismatch, std::string(name) + " is " + std::to_string(m.rows()) + "x" +
                                          std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                                          "x" + std::to_string(cols));
  }
}

}  // namespace

GamParams init_params(const GamConfig& config, std::size_t in_channels, std::size_t out_channels,
                      std::uint64_t seed) {
  if (in_channels == 0 || out_channels == 0) {
    throw Error(Errc::kInvalidInput, "channel counts must be >= 1");
  }
  const std::size_t d_in = config.attention_inputs();
  const std::size_t hidden = config.mlp_hidden;
  Rng rng(seed);
  GamParams p;
  p.attn_w1 = uniform_weights(rng, hidden, d_in, d_in);
  p.attn_b1 = Matrix(1, hidden);
  p.attn_w2 = uniform_weights(rng, 1, hidden, hidden);
  p.attn_b2 = Matrix(1, 1);
  // phi acts on the 2C-wide concatenation, so both blocks share that fan-in.
  p.phi_w = uniform_weights(rng, out_channels, in_channels, 2 * in_channels);
  p.phi_w_diff = uniform_weights(rng, out_channels, in_channels, 2 * in_channels);
  p.phi_b = Matrix(1, out_channels);
  p.out_w = uniform_weights(rng, out_channels, out_channels, out_channels);
  p.out_b = Matrix(1, out_channels);
  return p;
}

void check_params(const GamParams& p, const GamConfig& config, std::size_t in_channels) {
  const std::size_t hidden = config.mlp_hidden;
  const std::size_t c_out = p.phi_w.rows();
  expect_shape(p.attn_w1, hidden, config.attention_inputs(), "attn_w1");
  expect_shape(p.attn_b1, 1, hidden, "attn_b1");
  expect_shape(p.attn_w2, 1, hidden, "attn_w2");
  expect_shape(p.attn_b2, 1, 1, "attn_b2");
  expect_shape(p.phi_w, c_out, in_channels, "phi_w");
  expect_shape(p.phi_w_diff, c_out, in_channels, "phi_w_diff");
  expect_shape(p.phi_b, 1, c_out, "phi_b");
  expect_shape(p.out_w, c_out, c_out, "out_w");
  expect_shape(p.out_b, 1, c_out, "out_b");
  for (const Matrix* m : {&p.attn_w1, &p.attn_b1, &p.attn_w2, &p.attn_b2, &p.phi_w, &p.phi_w_diff, &p.phi_b,
                          &p.out_w, &p.out_b}) {
    if (!m->all_finite()) throw Error(Errc::kNonFinite, "parameters contain NaN or Inf");
  }
}

}  // namespace gam
