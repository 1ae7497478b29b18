#include "gam/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "gam/attention.hpp"
#include "gam/bench.hpp"
#include "gam/demo.hpp"
#include "gam/geometry.hpp"
#include "gam/io.hpp"
#include "gam/sampling.hpp"
#include "gam/serialize.hpp"

namespace gam::cli {
namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double lambda = 1.0;
  double radius = 0.2;
  std::size_t k = 16;
  std::size_t n_centers = 64;
  double epsilon = 1e-8;
  bool no_distance = false;
  bool no_gradient = false;
  bool normalize_distance = false;

  CLI::Option* radius_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* centers_opt = nullptr;
};

// Per-subcommand defaults for the neighborhood shape, overridden by any flag
// the user passed explicitly.
struct ShapeDefaults {
  double radius;
  std::size_t k;
  std::size_t n_centers;
};

GamConfig make_config(const GlobalOptions& g, std::optional<ShapeDefaults> defaults = std::nullopt) {
  GamConfig c;
  c.seed = g.seed;
  c.lambda = g.lambda;
  c.epsilon = g.epsilon;
  c.use_distance = !g.no_distance;
  c.use_gradient = !g.no_gradient;
  c.normalize_distance = g.normalize_distance;
  c.radius = g.radius;
  c.k_neighbors = g.k;
  c.n_centers = g.n_centers;
  if (defaults) {
    if (!g.radius_opt->count()) c.radius = defaults->radius;
    if (!g.k_opt->count()) c.k_neighbors = defaults->k;
    if (!g.centers_opt->count()) c.n_centers = defaults->n_centers;
  }
  validate_config(c);
  return c;
}

std::string config_line(const GamConfig& c, const std::string& command, unsigned threads) {
  nlohmann::json echo = config_to_json(c);
  echo["command"] = command;
  echo["threads"] = threads;
  echo["schema_version"] = kSchemaVersion;
  return "# config: " + echo.dump() + "\n";
}

// Sends text to `path`, or to `out` when the path is empty.
void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::kIoError, "cannot open " + path + " for writing");
  f << text;
  if (!f) throw Error(Errc::kIoError, "write failed for " + path);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

NeighborhoodIndex search(const PointCloud& cloud, const GamConfig& config, const std::string& method, bool grid,
                         unsigned threads) {
  const auto centers = farthest_point_sample(cloud, std::min(config.n_centers, cloud.size()), config.seed);
  if (method == "knn") return knn(cloud, centers, config.k_neighbors, threads);
  return ball_query(cloud, centers, config.radius, config.k_neighbors,
                    grid ? SearchBackend::kGrid : SearchBackend::kBruteForce, threads);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient attention for point-cloud local feature aggregation", "gam"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for sampling and parameter init");
  app.add_option("--threads", g.threads, "Worker threads (1 = benchmark mode)")->check(CLI::PositiveNumber);
  app.add_option("--lambda", g.lambda, "Balance weight between attended and plain features");
  g.radius_opt = app.add_option("--radius", g.radius, "Ball query radius");
  g.k_opt = app.add_option("--k", g.k, "Neighbors per center");
  g.centers_opt = app.add_option("--n-centers", g.n_centers, "Number of FPS centers");
  app.add_option("--epsilon", g.epsilon, "Singularity guard for vertical edges");
  app.add_flag("--no-distance", g.no_distance, "Drop distance from the attention input");
  app.add_flag("--no-gradient", g.no_gradient, "Drop the gradient from the attention input");
  app.add_flag("--normalize-distance", g.normalize_distance, "Divide distances by the radius");

  std::string input, output, method = "ball";
  bool grid = false;

  auto* sample = app.add_subcommand("sample", "Farthest point sampling; prints center indices");
  sample->add_option("input", input, "Point cloud file")->required();
  sample->add_option("-o,--out", output, "Output CSV (default stdout)");

  auto* neighbors = app.add_subcommand("neighbors", "Neighborhood search around FPS centers");
  neighbors->add_option("input", input, "Point cloud file")->required();
  neighbors->add_option("-o,--out", output, "Output CSV (default stdout)");
  neighbors->add_option("--method", method, "ball or knn")->check(CLI::IsMember({"ball", "knn"}));
  neighbors->add_flag("--grid", grid, "Use the uniform grid for ball queries");

  auto* gradients = app.add_subcommand("gradients", "Per-edge relative vector, distance and gradient");
  gradients->add_option("input", input, "Point cloud file")->required();
  gradients->add_option("-o,--out", output, "Output CSV (default stdout)");
  gradients->add_option("--method", method, "ball or knn")->check(CLI::IsMember({"ball", "knn"}));

  std::size_t c_out = 16;
  auto* attend = app.add_subcommand("attend", "Full GAM forward pass with seeded parameters");
  attend->add_option("input", input, "Point cloud file (xyz used as features when it has none)")->required();
  attend->add_option("-o,--out", output, "Output CSV of pooled features (default stdout)");
  attend->add_option("--c-out", c_out, "Output channels")->check(CLI::PositiveNumber);

  std::size_t reps = 50, n_points = 8192;
  std::string csv_path, json_path;
  auto* bench = app.add_subcommand("bench", "Zenith/azimuth gradient vs PCA normal timing");
  bench->add_option("--input", input, "Point cloud file (default: synthetic unit cube)");
  bench->add_option("--n-points", n_points, "Synthetic cloud size")->check(CLI::PositiveNumber);
  bench->add_option("--reps", reps, "Timed repetitions per method")->check(CLI::Range(std::size_t{10}, std::size_t{1000000}));
  bench->add_option("--csv", csv_path, "Per-rep timings CSV (default stdout)");
  bench->add_option("--json", json_path, "Summary JSON (default stderr)");

  std::size_t n_per_class = 60, epochs = 30, points = demo::kDefaultPointsPerShape;
  std::size_t batch_size = demo::TrainOptions{}.batch_size;
  std::size_t demo_c_out = demo::TrainOptions{}.out_channels;
  double lr = 0.01, noise = 0.01;
  bool no_gam = false;
  auto* demo_cmd = app.add_subcommand("demo", "Train the synthetic shape classifier");
  demo_cmd->add_option("--n-per-class", n_per_class, "Samples per class")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--epochs", epochs, "Gradient descent epochs");
  demo_cmd->add_option("--lr", lr, "Learning rate")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--batch-size", batch_size, "Samples per update (0 = full batch)");
  demo_cmd->add_option("--noise", noise, "Gaussian jitter sigma")->check(CLI::NonNegativeNumber);
  demo_cmd->add_option("--points", points, "Points per shape")->check(CLI::PositiveNumber);
  demo_cmd->add_option("--c-out", demo_c_out, "GAM output channels")->check(CLI::PositiveNumber);
  demo_cmd->add_flag("--no-gam", no_gam, "Bypass attention (a = 1)");
  demo_cmd->add_option("-o,--out", output, "TrainReport JSON (default stdout)");
  demo_cmd->add_option("--csv", csv_path, "Per-epoch curve CSV");

  double tol = 1e-4, step = 1e-5;
  std::size_t label = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare backprop against finite differences");
  gradcheck->add_option("--input", input, "Point cloud file (default: built-in 6-point cloud)");
  gradcheck->add_option("--tol", tol, "Maximum allowed relative error");
  gradcheck->add_option("--step", step, "Central difference step h")->check(CLI::PositiveNumber);
  gradcheck->add_option("--label", label, "Class label for the loss")->check(CLI::Range(0, 2));
  gradcheck->add_option("-o,--out", output, "GradReport JSON (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*sample) {
      const GamConfig config = make_config(g);
      const PointCloud cloud = io::read_cloud(input);
      const auto ids = farthest_point_sample(cloud, config.n_centers, config.seed);
      std::string text = config_line(config, "sample", g.threads) + "rank,index\n";
      for (std::size_t i = 0; i < ids.size(); ++i) text += std::to_string(i) + "," + std::to_string(ids[i]) + "\n";
      emit(text, output, out);
    } else if (*neighbors) {
      const GamConfig config = make_config(g);
      const PointCloud cloud = io::read_cloud(input);
      const NeighborhoodIndex nbrs = search(cloud, config, method, grid, g.threads);
      std::string text = config_line(config, "neighbors:" + method, g.threads) + "s,center,j,neighbor\n";
      for (std::size_t s = 0; s < nbrs.n_centers(); ++s) {
        for (std::size_t j = 0; j < nbrs.k; ++j) {
          text += std::to_string(s) + "," + std::to_string(nbrs.center_ids[s]) + "," + std::to_string(j) + "," +
                  std::to_string(nbrs.neighbor(s, j)) + "\n";
        }
      }
      emit(text, output, out);
    } else if (*gradients) {
      const GamConfig config = make_config(g);
      const PointCloud cloud = io::read_cloud(input);
      const NeighborhoodIndex nbrs = search(cloud, config, method, false, g.threads);
      const EdgeGeometry edges = edge_geometry(cloud, nbrs, config.epsilon, g.threads);
      std::string text = config_line(config, "gradients:" + method, g.threads) + "s,j,dx,dy,dz,d,g\n";
      for (std::size_t e = 0; e < edges.n_edges(); ++e) {
        text += std::to_string(e / edges.k) + "," + std::to_string(e % edges.k) + "," + fmt(edges.rel(e, 0)) + "," +
                fmt(edges.rel(e, 1)) + "," + fmt(edges.rel(e, 2)) + "," + fmt(edges.dist[e]) + "," +
                fmt(edges.grad[e]) + "\n";
      }
      emit(text, output, out);
    } else if (*attend) {
      GamConfig config = make_config(g);
      PointCloud cloud = io::read_cloud(input);
      if (!cloud.has_features()) cloud = validate_cloud(cloud.coords(), cloud.coords());
      config.n_centers = std::min(config.n_centers, cloud.size());
      const GamParams params = init_params(config, cloud.channels(), c_out, config.seed);
      const auto centers = farthest_point_sample(cloud, config.n_centers, config.seed);
      const NeighborhoodIndex nbrs = ball_query(cloud, centers, config.radius, config.k_neighbors);
      const OutputFeatures result = gam_layer(cloud, nbrs, config, params);
      std::string text = config_line(config, "attend", g.threads) + "s,center";
      for (std::size_t c = 0; c < c_out; ++c) text += ",f" + std::to_string(c);
      text += "\n";
      for (std::size_t s = 0; s < result.pooled.rows(); ++s) {
        text += std::to_string(s) + "," + std::to_string(nbrs.center_ids[s]);
        for (double v : result.pooled.row(s)) text += "," + fmt(v);
        text += "\n";
      }
      emit(text, output, out);
    } else if (*bench) {
      GamConfig config = make_config(g, ShapeDefaults{0.2, 32, 1024});
      if (g.threads != 1) err << "note: bench always runs single threaded\n";
      const PointCloud cloud = input.empty() ? bench::synthetic_cloud(n_points, config.seed) : io::read_cloud(input);
      if (!g.centers_opt->count()) config.n_centers = std::min(config.n_centers, cloud.size());
      const bench::BenchPair pair = bench::bench_gradient_methods(cloud, config, reps);
      emit(bench::to_csv(pair), csv_path, out);
      const std::string summary = bench::to_json(pair, config) + "\n";
      if (json_path.empty()) {
        err << summary;
      } else {
        emit(summary, json_path, out);
      }
    } else if (*demo_cmd) {
      const GamConfig config = make_config(g, ShapeDefaults{0.4, 16, 32});
      const auto data = demo::generate_shapes(n_per_class, noise, config.seed, points);
      demo::TrainOptions options;
      options.epochs = epochs;
      options.learning_rate = lr;
      options.batch_size = batch_size;
      options.gam_enabled = !no_gam;
      options.out_channels = demo_c_out;
      const demo::TrainReport report = demo::train_classifier(data, config, options);
      emit(demo::to_json(report) + "\n", output, out);
      if (!csv_path.empty()) emit(demo::to_csv(report), csv_path, out);
    } else if (*gradcheck) {
      GamConfig config = make_config(g, ShapeDefaults{10.0, 4, 2});
      const PointCloud cloud = input.empty() ? demo::gradcheck_cloud() : io::read_cloud(input);
      config.n_centers = std::min(config.n_centers, cloud.size());
      const ad::GradReport report = demo::classifier_gradcheck(cloud, config, label, config.seed, step);
      nlohmann::json params = nlohmann::json::array();
      for (const auto& p : report.params) {
        params.push_back({{"name", p.name}, {"max_abs_error", p.max_abs_error}, {"max_rel_error", p.max_rel_error}});
      }
      const bool pass = report.max_rel_error < tol;
      nlohmann::json doc = {{"schema_version", kSchemaVersion},
                            {"kind", "grad_report"},
                            {"config", config_to_json(config)},
                            {"h", step},
                            {"tolerance", tol},
                            {"n_scalars", report.n_scalars},
                            {"max_abs_error", report.max_abs_error},
                            {"max_rel_error", report.max_rel_error},
                            {"pass", pass},
                            {"params", params}};
      emit(doc.dump(2) + "\n", output, out);
      if (!pass) {
        err << "gradcheck failed: max relative error " << report.max_rel_error << " >= " << tol << "\n";
        return kNumericalFailure;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::kDivergedLoss ? kNumericalFailure : kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

}  // namespace gam::cli
