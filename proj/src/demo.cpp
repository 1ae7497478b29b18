#include "gam/demo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "gam/attention.hpp"
#include "gam/geometry.hpp"
#include "gam/kernels.hpp"
#include "gam/rng.hpp"
#include "gam/sampling.hpp"
#include "gam/serialize.hpp"

namespace gam::demo {
namespace {

using Vec3 = std::array<double, 3>;

Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (n > 1e-12) return {v[0] / n, v[1] / n, v[2] / n};
  }
}

Vec3 sample_sphere(Rng& rng) { return random_unit(rng); }

Vec3 sample_cube(Rng& rng) {
  const auto face = rng.index(6);
  const double u = rng.uniform(-0.5, 0.5);
  const double v = rng.uniform(-0.5, 0.5);
  const double side = face % 2 == 0 ? 0.5 : -0.5;
  switch (face / 2) {
    case 0: return {side, u, v};
    case 1: return {u, side, v};
    default: return {u, v, side};
  }
}

struct Disc {
  Vec3 u, v;
};

Disc random_disc(Rng& rng) {
  const Vec3 n = random_unit(rng);
  // Any vector not parallel to n seeds the in-plane basis.
  const Vec3 seed_axis = std::fabs(n[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 u{n[1] * seed_axis[2] - n[2] * seed_axis[1], n[2] * seed_axis[0] - n[0] * seed_axis[2],
         n[0] * seed_axis[1] - n[1] * seed_axis[0]};
  const double len = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  u = {u[0] / len, u[1] / len, u[2] / len};
  const Vec3 v{n[1] * u[2] - n[2] * u[1], n[2] * u[0] - n[0] * u[2], n[0] * u[1] - n[1] * u[0]};
  return {u, v};
}

Vec3 sample_disc(Rng& rng, const Disc& disc) {
  const double r = std::sqrt(rng.uniform());
  const double t = 2.0 * std::numbers::pi * rng.uniform();
  const double a = r * std::cos(t);
  const double b = r * std::sin(t);
  return {a * disc.u[0] + b * disc.v[0], a * disc.u[1] + b * disc.v[1], a * disc.u[2] + b * disc.v[2]};
}

PointCloud make_shape(Rng& rng, ShapeClass label, double sigma, std::size_t n_points) {
  Matrix coords(n_points, 3);
  const Disc disc = label == ShapeClass::kPlane ? random_disc(rng) : Disc{};
  for (std::size_t i = 0; i < n_points; ++i) {
    Vec3 p;
    switch (label) {
      case ShapeClass::kSphere: p = sample_sphere(rng); break;
      case ShapeClass::kCube: p = sample_cube(rng); break;
      case ShapeClass::kPlane: p = sample_disc(rng, disc); break;
    }
    if (sigma > 0.0) {
      for (double& c : p) c += sigma * rng.normal();
    }
    for (int a = 0; a < 3; ++a) coords(i, a) = p[a];
  }
  return validate_cloud(std::move(coords));
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy(a.row(r).begin(), a.row(r).end(), out.row(r).begin());
    std::copy(b.row(r).begin(), b.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

std::size_t argmax(const std::array<double, kNumClasses>& logits) {
  return static_cast<std::size_t>(std::distance(logits.begin(), std::max_element(logits.begin(), logits.end())));
}

double accuracy(const ClassifierParams& params, const std::vector<SampleInputs>& samples, const GamConfig& config,
                bool attention) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) {
    if (argmax(classifier_logits(params, s, config, attention)) == s.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace

const char* to_string(ShapeClass c) {
  switch (c) {
    case ShapeClass::kSphere: return "sphere";
    case ShapeClass::kCube: return "cube";
    case ShapeClass::kPlane: return "plane";
  }
  return "unknown";
}

std::vector<ShapeSample> generate_shapes(std::size_t n_per_class, double noise_sigma, std::uint64_t seed,
                                         std::size_t points_per_shape) {
  if (n_per_class == 0) throw Error(Errc::kInvalidInput, "n_per_class must be >= 1");
  if (!(noise_sigma >= 0.0)) throw Error(Errc::kInvalidInput, "noise_sigma must be >= 0");
  if (points_per_shape == 0) throw Error(Errc::kInvalidInput, "points_per_shape must be >= 1");
  Rng rng(seed);
  std::vector<ShapeSample> out;
  out.reserve(n_per_class * kNumClasses);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (ShapeClass c : {ShapeClass::kSphere, ShapeClass::kCube, ShapeClass::kPlane}) {
      out.push_back({make_shape(rng, c, noise_sigma, points_per_shape), c});
    }
  }
  return out;
}

ClassifierParams init_classifier(const GamConfig& config, std::size_t in_channels, std::size_t out_channels,
                                 std::uint64_t seed) {
  ClassifierParams p;
  p.gam = init_params(config, in_channels, out_channels, seed);
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
  const double bound = 1.0 / std::sqrt(static_cast<double>(out_channels));
  p.head_w = Matrix(kNumClasses, out_channels);
  for (double& v : p.head_w.values()) v = rng.uniform(-bound, bound);
  p.head_b = Matrix(1, kNumClasses);
  return p;
}

ad::ParamSet to_param_set(const ClassifierParams& p) {
  return {{"attn_w1", "attn_b1", "attn_w2", "attn_b2", "phi_w", "phi_w_diff", "phi_b", "out_w", "out_b", "head_w",
           "head_b"},
          {p.gam.attn_w1, p.gam.attn_b1, p.gam.attn_w2, p.gam.attn_b2, p.gam.phi_w, p.gam.phi_w_diff, p.gam.phi_b,
           p.gam.out_w, p.gam.out_b, p.head_w, p.head_b}};
}

ClassifierParams from_param_set(const ad::ParamSet& set) {
  if (set.values.size() != 11) throw Error(Errc::kShapeMismatch, "classifier parameter set needs 11 entries");
  const auto& v = set.values;
  return {{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]}, v[9], v[10]};
}

ClassifierVars ClassifierVars::bind(std::span<const ad::Var> l) {
  if (l.size() != 11) throw Error(Errc::kShapeMismatch, "classifier needs 11 parameter leaves");
  return {l[0], l[1], l[2], l[3], l[4], l[5], l[6], l[7], l[8], l[9], l[10]};
}

SampleInputs prepare_sample(const PointCloud& cloud, const GamConfig& config, std::size_t label) {
  validate_config(config);
  const auto centers = farthest_point_sample(cloud, config.n_centers, config.seed);
  const auto nbrs = ball_query(cloud, centers, config.radius, config.k_neighbors);
  const EdgeGeometry edges = edge_geometry(cloud, nbrs, config.epsilon);
  const Matrix& features = cloud.has_features() ? *cloud.features() : cloud.coords();
  const NeighborFeatures nbr = gather_features(features, nbrs);
  const Matrix center = gather_centers(features, nbrs);

  SampleInputs s;
  s.n_centers = nbrs.n_centers();
  s.k = nbrs.k;
  s.label = label;
  s.attention_input = attention_inputs(edges, config);
  const std::size_t c = features.cols();
  s.phi_input = Matrix(nbr.f.rows(), 2 * c);
  for (std::size_t e = 0; e < nbr.f.rows(); ++e) {
    for (std::size_t i = 0; i < c; ++i) {
      s.phi_input(e, i) = nbr.f(e, i);
      s.phi_input(e, c + i) = nbr.f(e, i) - center(e / nbr.k, i);
    }
  }
  return s;
}

ad::Var record_gam_layer(ad::Tape& tape, const ClassifierVars& v, const SampleInputs& s, const GamConfig& config,
                         bool attention) {
  const ad::Var phi = tape.relu(tape.affine(tape.leaf(s.phi_input), tape.concat_cols(v.phi_w, v.phi_w_diff), v.phi_b));
  ad::Var mixed = phi;
  if (attention) {
    const ad::Var input = tape.leaf(s.attention_input);
    const ad::Var hidden = tape.relu(tape.affine(input, v.attn_w1, v.attn_b1));
    const ad::Var a = tape.sigmoid(tape.affine(hidden, v.attn_w2, v.attn_b2));
    const ad::Var scale =
        tape.div_scalar(tape.add_scalar(tape.mul_scalar(a, config.lambda), 1.0), 1.0 + config.lambda);
    mixed = tape.scale_rows(phi, scale);
  }
  const ad::Var out = tape.relu(tape.affine(mixed, v.out_w, v.out_b));
  return tape.max_pool_rows(out, s.k);
}

ad::Var record_classifier_loss(ad::Tape& tape, const ClassifierVars& v, const SampleInputs& s,
                               const GamConfig& config, bool attention) {
  const ad::Var pooled = record_gam_layer(tape, v, s, config, attention);
  const ad::Var global = tape.max_pool_rows(pooled, s.n_centers);
  const ad::Var logits = tape.affine(global, v.head_w, v.head_b);
  return tape.softmax_cross_entropy(logits, {s.label});
}

std::array<double, kNumClasses> classifier_logits(const ClassifierParams& p, const SampleInputs& s,
                                                  const GamConfig& config, bool attention) {
  const Matrix phi = kernels::relu(kernels::affine(s.phi_input, concat_cols(p.gam.phi_w, p.gam.phi_w_diff), p.gam.phi_b));
  AttentionMatrix attn = AttentionMatrix::bypass(s.n_centers, s.k);
  if (attention) {
    const Matrix hidden = kernels::relu(kernels::affine(s.attention_input, p.gam.attn_w1, p.gam.attn_b1));
    const Matrix logits = kernels::affine(hidden, p.gam.attn_w2, p.gam.attn_b2);
    for (std::size_t e = 0; e < logits.rows(); ++e) attn.a.data()[e] = kernels::sigmoid(logits.data()[e]);
  }
  const OutputFeatures out = aggregate(phi, attn, p.gam, config.lambda);
  const Matrix global = kernels::max_pool_rows(out.pooled, s.n_centers);
  const Matrix logits = kernels::affine(global, p.head_w, p.head_b);
  return {logits(0, 0), logits(0, 1), logits(0, 2)};
}

TrainReport train_classifier(const std::vector<ShapeSample>& dataset, const GamConfig& config,
                             const TrainOptions& options) {
  validate_config(config);
  if (dataset.size() < 2) throw Error(Errc::kInvalidInput, "need at least two samples to split");
  if (!(options.learning_rate > 0.0)) throw Error(Errc::kInvalidInput, "learning rate must be > 0");
  const auto start = std::chrono::steady_clock::now();
  const bool attention = options.gam_enabled && config.attention_enabled();

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(dataset.size()))), 1,
      dataset.size() - 1);

  std::vector<SampleInputs> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const ShapeSample& sample = dataset[order[i]];
    auto inputs = prepare_sample(sample.cloud, config, static_cast<std::size_t>(sample.label));
    (i < n_train ? train : test).push_back(std::move(inputs));
  }
  const std::size_t in_channels = train.front().phi_input.cols() / 2;

  ClassifierParams params = init_classifier(config, in_channels, options.out_channels, config.seed);
  ad::ParamSet set = to_param_set(params);

  TrainReport report;
  report.config = config;
  report.options = options;
  report.n_train = train.size();
  report.n_test = test.size();

  const std::size_t batch = options.batch_size == 0 ? train.size() : std::min(options.batch_size, train.size());
  std::vector<std::size_t> visit(train.size());
  std::iota(visit.begin(), visit.end(), std::size_t{0});
  std::vector<Matrix> grads;
  for (const Matrix& m : set.values) grads.emplace_back(m.rows(), m.cols());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (batch < train.size()) {
      for (std::size_t i = visit.size() - 1; i > 0; --i) std::swap(visit[i], visit[rng.index(i + 1)]);
    }
    double loss = 0.0;
    for (std::size_t first = 0; first < visit.size(); first += batch) {
      const std::size_t last = std::min(first + batch, visit.size());
      const double inv_b = 1.0 / static_cast<double>(last - first);
      for (Matrix& g : grads) std::fill(g.values().begin(), g.values().end(), 0.0);
      for (std::size_t v = first; v < last; ++v) {
        ad::Tape tape;
        std::vector<ad::Var> leaves;
        for (const Matrix& m : set.values) leaves.push_back(tape.leaf(m));
        const ad::Var l =
            record_classifier_loss(tape, ClassifierVars::bind(leaves), train[visit[v]], config, attention);
        loss += tape.value(l)(0, 0) / static_cast<double>(train.size());
        const ad::Gradients g = tape.backward(l, inv_b);
        for (std::size_t p = 0; p < grads.size(); ++p) {
          const Matrix& gp = g[leaves[p]];
          for (std::size_t i = 0; i < gp.size(); ++i) grads[p].data()[i] += gp.data()[i];
        }
      }
      if (!std::isfinite(loss)) {
        throw Error(Errc::kDivergedLoss, "loss became non-finite at epoch " + std::to_string(epoch + 1));
      }
      for (std::size_t p = 0; p < grads.size(); ++p) {
        for (std::size_t i = 0; i < grads[p].size(); ++i) {
          set.values[p].data()[i] -= options.learning_rate * grads[p].data()[i];
        }
      }
    }
    params = from_param_set(set);
    report.epochs.push_back({epoch + 1, loss, accuracy(params, train, config, attention),
                             accuracy(params, test, config, attention)});
  }

  report.final_loss = report.epochs.empty() ? 0.0 : report.epochs.back().loss;
  report.train_accuracy = accuracy(params, train, config, attention);
  report.test_accuracy = accuracy(params, test, config, attention);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

PointCloud gradcheck_cloud() {
  Matrix coords(6, 3,
                {0.0, 0.0, 0.0, 0.3, 0.1, 0.2, -0.2, 0.4, 0.1, 0.1, -0.3, 0.35, 0.5, 0.45, -0.1, -0.4, -0.2, -0.3});
  Matrix features = coords;
  return validate_cloud(std::move(coords), std::move(features));
}

ad::GradReport classifier_gradcheck(const PointCloud& cloud, const GamConfig& config, std::size_t label,
                                    std::uint64_t seed, double h, std::size_t out_channels) {
  const SampleInputs sample = prepare_sample(cloud, config, label);
  ClassifierParams params = init_classifier(config, sample.phi_input.cols() / 2, out_channels, seed);
  Rng rng(seed + 17);
  for (Matrix* b : {&params.gam.attn_b1, &params.gam.attn_b2, &params.gam.phi_b, &params.gam.out_b, &params.head_b}) {
    for (double& v : b->values()) v = rng.uniform(-0.1, 0.1);
  }
  const bool attention = config.attention_enabled();
  const ad::Objective objective = [&](ad::Tape& tape, std::span<const ad::Var> leaves) {
    return record_classifier_loss(tape, ClassifierVars::bind(leaves), sample, config, attention);
  };
  return ad::finite_difference_check(objective, to_param_set(params), h);
}

std::string to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"loss", e.loss},
                      {"train_accuracy", e.train_accuracy},
                      {"test_accuracy", e.test_accuracy}});
  }
  nlohmann::json doc = {
      {"schema_version", 1},
      {"kind", "train_report"},
      {"config", config_to_json(r.config)},
      {"options",
       {{"epochs", r.options.epochs},
        {"learning_rate", r.options.learning_rate},
        {"batch_size", r.options.batch_size},
        {"gam_enabled", r.options.gam_enabled},
        {"out_channels", r.options.out_channels},
        {"train_fraction", r.options.train_fraction}}},
      {"n_train", r.n_train},
      {"n_test", r.n_test},
      {"final_loss", r.final_loss},
      {"train_accuracy", r.train_accuracy},
      {"test_accuracy", r.test_accuracy},
      {"wall_seconds", r.wall_seconds},
      {"epochs", epochs},
  };
  return doc.dump(2);
}

std::string to_csv(const TrainReport& r) {
  std::ostringstream os;
  os.precision(9);
  os << "# config: " << config_to_json(r.config).dump() << "\n";
  os << "epoch,loss,train_accuracy,test_accuracy\n";
  for (const auto& e : r.epochs) {
    os << e.epoch << ',' << e.loss << ',' << e.train_accuracy << ',' << e.test_accuracy << '\n';
  }
  return os.str();
}

}  // namespace gam::demo
