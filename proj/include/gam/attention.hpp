#pragma once

#include <functional>

#include "gam/core.hpp"

namespace gam {

/// Per-edge attention weights, N_s x K. Produced weights lie strictly in
/// (0, 1); bypass() builds the all-ones matrix used when attention is off.
struct AttentionMatrix {
  Matrix a;

  static AttentionMatrix bypass(std::size_t n_centers, std::size_t k) { return {Matrix(n_centers, k, 1.0)}; }
};

/// Features gathered per edge; row s*k + j holds f of neighbor j of center s.
struct NeighborFeatures {
  std::size_t n_centers = 0;
  std::size_t k = 0;
  Matrix f;  // (N_s*K) x C
};

struct OutputFeatures {
  std::size_t n_centers = 0;
  std::size_t k = 0;
  Matrix f_out;   // (N_s*K) x C_out, before pooling
  Matrix pooled;  // N_s x C_out, channelwise max over K
};

/// Per-edge feature extractor. Must return a (N_s*K) x C_out matrix.
using FeatureExtractor =
    std::function<Matrix(const NeighborFeatures& nbr, const Matrix& center_features, const GamParams& params)>;

/// Builds the attention MLP input per edge: [g; d], or the enabled subset.
/// Distances are divided by the radius when normalize_distance is set.
Matrix attention_inputs(const EdgeGeometry& edges, const GamConfig& config);

/// a = sigmoid(W2 relu(W1 v + b1) + b2). Returns bypass() when both signals
/// are disabled.
AttentionMatrix attention_weights(const EdgeGeometry& edges, const GamParams& params, const GamConfig& config);

/// Gathers neighbor features and the matching center features.
NeighborFeatures gather_features(const Matrix& features, const NeighborhoodIndex& nbrs);
Matrix gather_centers(const Matrix& features, const NeighborhoodIndex& nbrs);

/// relu(phi_w f_nbr + phi_w_diff (f_nbr - f_center) + phi_b) per edge.
Matrix default_phi(const NeighborFeatures& nbr, const Matrix& center_features, const GamParams& params);

/// Balanced aggregation: relu(out_w * (phi * (lambda a + 1)/(1 + lambda)) + out_b)
/// per edge, then max over K.
OutputFeatures aggregate(const Matrix& phi_out, const AttentionMatrix& attn, const GamParams& params, double lambda);

/// One GAM layer over a precomputed neighborhood.
OutputFeatures gam_layer(const PointCloud& cloud, const NeighborhoodIndex& nbrs, const GamConfig& config,
                         const GamParams& params, const FeatureExtractor& phi = default_phi);

/// Full pipeline: FPS -> ball query -> edge geometry -> attention -> phi ->
/// aggregation. The cloud must carry features.
OutputFeatures gam_forward(const PointCloud& cloud, const GamConfig& config, const GamParams& params,
                           const FeatureExtractor& phi = default_phi);

}  // namespace gam
