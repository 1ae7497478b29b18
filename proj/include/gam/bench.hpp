#pragma once

#include <string>
#include <vector>

#include "gam/core.hpp"

namespace gam::bench {

struct BenchEnvironment {
  unsigned threads = 1;
  std::size_t n_points = 0;
  std::size_t n_centers = 0;
  std::size_t k = 0;
};

struct BenchReport {
  std::string method;
  std::size_t reps = 0;
  std::vector<double> times_ms;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double stddev_ms = 0.0;
  double speedup = 1.0;         // baseline mean / method mean
  double median_speedup = 1.0;  // baseline median / method median
  BenchEnvironment env;
};

struct BenchPair {
  BenchReport zenith_azimuth;  // edge geometry with the scalar gradient
  BenchReport normal;          // PCA plane-fit normal per neighborhood point
  double checksum = 0.0;       // keeps the timed work observable
};

inline constexpr std::size_t kMinReps = 10;
inline constexpr std::size_t kWarmupRuns = 3;

/// Times both gradient methods over one shared ball-query neighborhood
/// (FPS with config.n_centers, radius config.radius, K config.k_neighbors),
/// single threaded, after kWarmupRuns untimed runs each. Reps alternate
/// between the methods.
BenchPair bench_gradient_methods(const PointCloud& cloud, const GamConfig& config, std::size_t reps);

/// Fills mean, median and sample standard deviation from times_ms.
void summarize(BenchReport& report);

/// Uniform random points in the unit cube, the default benchmark input.
PointCloud synthetic_cloud(std::size_t n_points, std::uint64_t seed);

/// "method,rep,ms" rows for both methods.
std::string to_csv(const BenchPair& pair);
std::string to_json(const BenchPair& pair, const GamConfig& config);

}  // namespace gam::bench
