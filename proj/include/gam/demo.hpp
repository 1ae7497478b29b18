#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gam/autodiff.hpp"
#include "gam/core.hpp"

namespace gam::demo {

enum class ShapeClass : std::size_t { kSphere = 0, kCube = 1, kPlane = 2 };
inline constexpr std::size_t kNumClasses = 3;
const char* to_string(ShapeClass c);

struct ShapeSample {
  PointCloud cloud;
  ShapeClass label;
};

inline constexpr std::size_t kDefaultPointsPerShape = 256;

/// n_per_class samples of each class, interleaved sphere, cube, plane. Unit
/// sphere, surface of the cube [-0.5, 0.5]^3, and a unit disc through the
/// origin with a random normal. Gaussian jitter of noise_sigma per axis.
std::vector<ShapeSample> generate_shapes(std::size_t n_per_class, double noise_sigma, std::uint64_t seed,
                                         std::size_t points_per_shape = kDefaultPointsPerShape);

/// GAM layer parameters plus the linear head mapping pooled features to logits.
struct ClassifierParams {
  GamParams gam;
  Matrix head_w;  // classes x C_out
  Matrix head_b;  // 1 x classes
};

ClassifierParams init_classifier(const GamConfig& config, std::size_t in_channels, std::size_t out_channels,
                                 std::uint64_t seed);

ad::ParamSet to_param_set(const ClassifierParams& params);
ClassifierParams from_param_set(const ad::ParamSet& set);

/// Geometry-derived inputs of one sample. Geometry is fixed data for the
/// network, so it is computed once.
struct SampleInputs {
  std::size_t n_centers = 0;
  std::size_t k = 0;
  Matrix attention_input;  // (N_s*K) x D_in
  Matrix phi_input;        // (N_s*K) x 2C, rows [f_nbr ; f_nbr - f_center]
  std::size_t label = 0;
};

/// FPS + ball query + edge geometry for one cloud. Uses the cloud features,
/// or the coordinates when it has none.
SampleInputs prepare_sample(const PointCloud& cloud, const GamConfig& config, std::size_t label = 0);

/// Tape leaves bound to ClassifierParams, in to_param_set order.
struct ClassifierVars {
  ad::Var attn_w1, attn_b1, attn_w2, attn_b2, phi_w, phi_w_diff, phi_b, out_w, out_b, head_w, head_b;
  static ClassifierVars bind(std::span<const ad::Var> leaves);
};

/// Records one GAM layer and returns the pooled N_s x C_out features. With
/// attention off the blend is skipped, matching a == 1 exactly.
ad::Var record_gam_layer(ad::Tape& tape, const ClassifierVars& vars, const SampleInputs& sample,
                         const GamConfig& config, bool attention);

/// GAM layer -> max over centers -> affine -> softmax cross-entropy.
ad::Var record_classifier_loss(ad::Tape& tape, const ClassifierVars& vars, const SampleInputs& sample,
                               const GamConfig& config, bool attention);

/// Forward pass without a tape; identical arithmetic to the recorded one.
std::array<double, kNumClasses> classifier_logits(const ClassifierParams& params, const SampleInputs& sample,
                                                  const GamConfig& config, bool attention);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainOptions {
  std::size_t epochs = 30;
  double learning_rate = 0.01;
  bool gam_enabled = true;
  std::size_t out_channels = 64;
  double train_fraction = 0.8;
  /// Samples per update; 0 means the whole training split.
  std::size_t batch_size = 1;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double final_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double wall_seconds = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  GamConfig config;
  TrainOptions options;
};

/// Seeded 80/20 split, then plain gradient descent with a fixed step on the
/// mean loss of each batch. Batches follow a seeded reshuffle every epoch.
TrainReport train_classifier(const std::vector<ShapeSample>& dataset, const GamConfig& config,
                             const TrainOptions& options);

/// Analytic vs central-difference gradients of the classifier loss on one
/// cloud. Biases are drawn small and nonzero so no ReLU sits on its kink.
ad::GradReport classifier_gradcheck(const PointCloud& cloud, const GamConfig& config, std::size_t label,
                                    std::uint64_t seed, double h = 1e-5, std::size_t out_channels = 4);

/// A fixed six-point cloud with xyz features used by gradcheck runs.
PointCloud gradcheck_cloud();

std::string to_json(const TrainReport& report);
std::string to_csv(const TrainReport& report);

}  // namespace gam::demo
