#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gam {

enum class Errc {
  kInvalidInput,
  kNonFinite,
  kShapeMismatch,
  kTooManyCenters,
  kEmptyBall,
  kKTooLarge,
  kNonScalarLoss,
  kDivergedLoss,
  kParseError,
  kInconsistentColumns,
  kIoError,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Points (N x 3) with optional per-point features (N x C). Immutable once
/// built; every value is finite and N >= 1.
class PointCloud {
 public:
  std::size_t size() const noexcept { return coords_.rows(); }
  std::size_t channels() const noexcept { return features_ ? features_->cols() : 0; }
  bool has_features() const noexcept { return features_.has_value(); }

  const Matrix& coords() const noexcept { return coords_; }
  const std::optional<Matrix>& features() const noexcept { return features_; }

  friend PointCloud validate_cloud(Matrix coords, std::optional<Matrix> features);

 private:
  PointCloud(Matrix coords, std::optional<Matrix> features)
      : coords_(std::move(coords)), features_(std::move(features)) {}

  Matrix coords_;
  std::optional<Matrix> features_;
};

/// Builds a PointCloud, rejecting empty input, non-finite values and
/// mismatched feature rows.
PointCloud validate_cloud(Matrix coords, std::optional<Matrix> features = std::nullopt);

/// Centers plus K neighbor ids per center; neighbor row s is
/// neighbor_ids[s*k .. s*k+k).
struct NeighborhoodIndex {
  std::vector<std::size_t> center_ids;
  std::vector<std::size_t> neighbor_ids;
  std::size_t k = 0;

  std::size_t n_centers() const noexcept { return center_ids.size(); }
  std::size_t neighbor(std::size_t s, std::size_t j) const { return neighbor_ids[s * k + j]; }
  std::span<const std::size_t> row(std::size_t s) const { return {neighbor_ids.data() + s * k, k}; }
};

/// Per-edge geometry for N_s x K directed edges center -> neighbor.
/// Edge (s, j) lives at flat index s*k + j.
struct EdgeGeometry {
  std::size_t n_centers = 0;
  std::size_t k = 0;
  Matrix rel;                 // (N_s*K) x 3
  std::vector<double> dist;   // N_s*K
  std::vector<double> grad;   // N_s*K, scalar zenith/azimuth gradient

  std::size_t n_edges() const noexcept { return dist.size(); }
};

struct GamConfig {
  double lambda = 1.0;
  double radius = 0.2;
  std::size_t n_centers = 64;
  std::size_t k_neighbors = 16;
  double epsilon = 1e-8;
  bool use_distance = true;
  bool use_gradient = true;
  std::size_t mlp_hidden = 16;
  std::uint64_t seed = 0;
  bool normalize_distance = false;

  /// Both signals off means the attention branch is bypassed (a == 1).
  bool attention_enabled() const noexcept { return use_distance || use_gradient; }
  std::size_t attention_inputs() const noexcept {
    return static_cast<std::size_t>(use_gradient) + static_cast<std::size_t>(use_distance);
  }
};

void validate_config(const GamConfig& config);

/// Trainable weights. Affine maps are stored output-major (out x in) and
/// biases as 1 x out rows. The default extractor's weight is split into the
/// block acting on f_nbr (phi_w) and the block acting on f_nbr - f_center
/// (phi_w_diff); together they form the C_out x 2C affine map.
struct GamParams {
  Matrix attn_w1;     // H x D_in
  Matrix attn_b1;     // 1 x H
  Matrix attn_w2;     // 1 x H
  Matrix attn_b2;     // 1 x 1
  Matrix phi_w;       // C_out x C
  Matrix phi_w_diff;  // C_out x C
  Matrix phi_b;       // 1 x C_out
  Matrix out_w;       // C_out x C_out
  Matrix out_b;       // 1 x C_out

  std::size_t in_channels() const noexcept { return phi_w.cols(); }
  std::size_t out_channels() const noexcept { return phi_w.rows(); }

  friend bool operator==(const GamParams&, const GamParams&) = default;
};

/// Uniform +-1/sqrt(fan_in) weights and zero biases, pure in its arguments.
GamParams init_params(const GamConfig& config, std::size_t in_channels, std::size_t out_channels,
                      std::uint64_t seed);

/// Throws ShapeMismatch unless params agree with config and the channel count.
void check_params(const GamParams& params, const GamConfig& config, std::size_t in_channels);

}  // namespace gam
