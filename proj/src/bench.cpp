#include "gam/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gam/geometry.hpp"
#include "gam/rng.hpp"
#include "gam/sampling.hpp"
#include "gam/serialize.hpp"

namespace gam::bench {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

nlohmann::json report_json(const BenchReport& r) {
  return {{"method", r.method},
          {"reps", r.reps},
          {"mean_ms", r.mean_ms},
          {"median_ms", r.median_ms},
          {"stddev_ms", r.stddev_ms},
          {"speedup", r.speedup},
          {"median_speedup", r.median_speedup}};
}

}  // namespace

void summarize(BenchReport& r) {
  r.reps = r.times_ms.size();
  if (r.times_ms.empty()) return;
  const double n = static_cast<double>(r.times_ms.size());
  r.mean_ms = std::accumulate(r.times_ms.begin(), r.times_ms.end(), 0.0) / n;
  std::vector<double> sorted = r.times_ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  r.median_ms = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  double ss = 0.0;
  for (double t : r.times_ms) ss += (t - r.mean_ms) * (t - r.mean_ms);
  r.stddev_ms = r.times_ms.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

PointCloud synthetic_cloud(std::size_t n_points, std::uint64_t seed) {
  Rng rng(seed);
  Matrix coords(n_points, 3);
  for (double& v : coords.values()) v = rng.uniform();
  return validate_cloud(std::move(coords));
}

BenchPair bench_gradient_methods(const PointCloud& cloud, const GamConfig& config, std::size_t reps) {
  validate_config(config);
  if (reps < kMinReps) throw Error(Errc::kInvalidInput, "benchmark needs at least " + std::to_string(kMinReps) + " reps");

  const auto centers = farthest_point_sample(cloud, config.n_centers, config.seed);
  const NeighborhoodIndex nbrs = ball_query(cloud, centers, config.radius, config.k_neighbors);

  EdgeGeometry edges;
  NormalSet normals;
  BenchPair out;
  const BenchEnvironment env{1, cloud.size(), nbrs.n_centers(), nbrs.k};
  out.zenith_azimuth.method = "zenith_azimuth";
  out.normal.method = "normal";
  out.zenith_azimuth.env = env;
  out.normal.env = env;

  for (std::size_t i = 0; i < kWarmupRuns; ++i) {
    edge_geometry_into(cloud, nbrs, config.epsilon, edges, 1);
    pca_normals_into(cloud, nbrs, normals, 1);
  }
  for (std::size_t rep = 0; rep < reps; ++rep) {
    auto start = Clock::now();
    edge_geometry_into(cloud, nbrs, config.epsilon, edges, 1);
    out.zenith_azimuth.times_ms.push_back(elapsed_ms(start));
    out.checksum += edges.grad.front() + edges.grad.back();

    start = Clock::now();
    pca_normals_into(cloud, nbrs, normals, 1);
    out.normal.times_ms.push_back(elapsed_ms(start));
    out.checksum += normals.normal.data()[0] + normals.normal.data()[normals.normal.size() - 1];
  }

  summarize(out.zenith_azimuth);
  summarize(out.normal);
  out.normal.speedup = 1.0;
  out.normal.median_speedup = 1.0;
  out.zenith_azimuth.speedup = out.normal.mean_ms / out.zenith_azimuth.mean_ms;
  out.zenith_azimuth.median_speedup = out.normal.median_ms / out.zenith_azimuth.median_ms;
  return out;
}

std::string to_csv(const BenchPair& pair) {
  std::ostringstream os;
  os.precision(9);
  os << "method,rep,ms\n";
  for (const BenchReport* r : {&pair.zenith_azimuth, &pair.normal}) {
    for (std::size_t i = 0; i < r->times_ms.size(); ++i) os << r->method << ',' << i << ',' << r->times_ms[i] << '\n';
  }
  return os.str();
}

std::string to_json(const BenchPair& pair, const GamConfig& config) {
  const BenchEnvironment& env = pair.zenith_azimuth.env;
  nlohmann::json doc = {
      {"schema_version", kSchemaVersion},
      {"kind", "bench_report"},
      {"config", config_to_json(config)},
      {"environment",
       {{"threads", env.threads}, {"n_points", env.n_points}, {"n_centers", env.n_centers}, {"k", env.k}}},
      {"methods", {report_json(pair.zenith_azimuth), report_json(pair.normal)}},
      {"speedup", pair.zenith_azimuth.speedup},
      {"median_speedup", pair.zenith_azimuth.median_speedup},
  };
  return doc.dump(2);
}

}  // namespace gam::bench
