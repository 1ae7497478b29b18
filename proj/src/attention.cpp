#include "gam/attention.hpp"

#include "gam/geometry.hpp"
#include "gam/kernels.hpp"
#include "gam/sampling.hpp"

namespace gam {

Matrix attention_inputs(const EdgeGeometry& edges, const GamConfig& config) {
  const std::size_t n = edges.n_edges();
  const std::size_t width = config.attention_inputs();
  Matrix v(n, width);
  const double dist_scale = config.normalize_distance ? 1.0 / config.radius : 1.0;
  for (std::size_t e = 0; e < n; ++e) {
    std::size_t c = 0;
    if (config.use_gradient) v(e, c++) = edges.grad[e];
    if (config.use_distance) v(e, c++) = config.normalize_distance ? edges.dist[e] * dist_scale : edges.dist[e];
  }
  return v;
}

AttentionMatrix attention_weights(const EdgeGeometry& edges, const GamParams& params, const GamConfig& config) {
  if (!config.attention_enabled()) return AttentionMatrix::bypass(edges.n_centers, edges.k);
  const std::size_t d_in = config.attention_inputs();
  if (params.attn_w1.cols() != d_in || params.attn_w1.rows() != params.attn_b1.cols() ||
      params.attn_w2.cols() != params.attn_w1.rows() || params.attn_w2.rows() != 1 || params.attn_b2.size() != 1) {
    throw Error(Errc::kShapeMismatch, "attention MLP weights do not match the enabled inputs");
  }
  if (edges.n_edges() != edges.n_centers * edges.k) {
    throw Error(Errc::kShapeMismatch, "edge geometry is inconsistent");
  }
  const Matrix hidden = kernels::relu(kernels::affine(attention_inputs(edges, config), params.attn_w1, params.attn_b1));
  const Matrix logits = kernels::affine(hidden, params.attn_w2, params.attn_b2);
  AttentionMatrix out{Matrix(edges.n_centers, edges.k)};
  for (std::size_t e = 0; e < logits.rows(); ++e) out.a.data()[e] = kernels::sigmoid(logits.data()[e]);
  return out;
}

NeighborFeatures gather_features(const Matrix& features, const NeighborhoodIndex& nbrs) {
  const std::size_t c = features.cols();
  NeighborFeatures out{nbrs.n_centers(), nbrs.k, Matrix(nbrs.neighbor_ids.size(), c)};
  for (std::size_t e = 0; e < nbrs.neighbor_ids.size(); ++e) {
    const auto src = features.row(nbrs.neighbor_ids[e]);
    std::copy(src.begin(), src.end(), out.f.row(e).begin());
  }
  return out;
}

Matrix gather_centers(const Matrix& features, const NeighborhoodIndex& nbrs) {
  Matrix out(nbrs.n_centers(), features.cols());
  for (std::size_t s = 0; s < nbrs.n_centers(); ++s) {
    const auto src = features.row(nbrs.center_ids[s]);
    std::copy(src.begin(), src.end(), out.row(s).begin());
  }
  return out;
}

Matrix default_phi(const NeighborFeatures& nbr, const Matrix& center_features, const GamParams& params) {
  const std::size_t c = nbr.f.cols();
  const std::size_t c_out = params.phi_w.rows();
  if (center_features.rows() != nbr.n_centers || center_features.cols() != c ||
      nbr.f.rows() != nbr.n_centers * nbr.k || params.phi_w.cols() != c || params.phi_w_diff.cols() != c ||
      params.phi_w_diff.rows() != c_out || params.phi_b.cols() != c_out) {
    throw Error(Errc::kShapeMismatch, "phi inputs and weights disagree");
  }
  Matrix input(nbr.f.rows(), 2 * c);
  for (std::size_t e = 0; e < nbr.f.rows(); ++e) {
    const auto f = nbr.f.row(e);
    const auto fc = center_features.row(e / nbr.k);
    for (std::size_t i = 0; i < c; ++i) {
      input(e, i) = f[i];
      input(e, c + i) = f[i] - fc[i];
    }
  }
  Matrix weight(c_out, 2 * c);
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t i = 0; i < c; ++i) {
      weight(o, i) = params.phi_w(o, i);
      weight(o, c + i) = params.phi_w_diff(o, i);
    }
  }
  return kernels::relu(kernels::affine(input, weight, params.phi_b));
}

OutputFeatures aggregate(const Matrix& phi_out, const AttentionMatrix& attn, const GamParams& params, double lambda) {
  const std::size_t ns = attn.a.rows();
  const std::size_t k = attn.a.cols();
  const std::size_t c_out = phi_out.cols();
  if (phi_out.rows() != ns * k || params.out_w.rows() != c_out || params.out_w.cols() != c_out ||
      params.out_b.cols() != c_out) {
    throw Error(Errc::kShapeMismatch, "aggregate inputs disagree");
  }
  if (!(lambda >= 0.0)) throw Error(Errc::kInvalidInput, "lambda must be >= 0");
  Matrix mixed(phi_out.rows(), c_out);
  for (std::size_t e = 0; e < phi_out.rows(); ++e) {
    const double w = kernels::blend_scale(attn.a.data()[e], lambda);
    for (std::size_t c = 0; c < c_out; ++c) mixed(e, c) = phi_out(e, c) * w;
  }
  OutputFeatures out;
  out.n_centers = ns;
  out.k = k;
  out.f_out = kernels::relu(kernels::affine(mixed, params.out_w, params.out_b));
  out.pooled = kernels::max_pool_rows(out.f_out, k);
  return out;
}

OutputFeatures gam_layer(const PointCloud& cloud, const NeighborhoodIndex& nbrs, const GamConfig& config,
                         const GamParams& params, const FeatureExtractor& phi) {
  validate_config(config);
  if (!cloud.has_features()) throw Error(Errc::kInvalidInput, "GAM requires per-point features");
  check_params(params, config, cloud.channels());
  const EdgeGeometry edges = edge_geometry(cloud, nbrs, config.epsilon);
  const AttentionMatrix attn = attention_weights(edges, params, config);
  const Matrix& features = *cloud.features();
  const Matrix phi_out = phi(gather_features(features, nbrs), gather_centers(features, nbrs), params);
  if (phi_out.rows() != nbrs.neighbor_ids.size()) {
    throw Error(Errc::kShapeMismatch, "feature extractor returned the wrong number of rows");
  }
  return aggregate(phi_out, attn, params, config.lambda);
}

OutputFeatures gam_forward(const PointCloud& cloud, const GamConfig& config, const GamParams& params,
                           const FeatureExtractor& phi) {
  validate_config(config);
  const auto centers = farthest_point_sample(cloud, config.n_centers, config.seed);
  const auto nbrs = ball_query(cloud, centers, config.radius, config.k_neighbors);
  return gam_layer(cloud, nbrs, config, params, phi);
}

}  // namespace gam
