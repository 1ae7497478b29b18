#pragma once

#include <cstdint>
#include <vector>

#include "gam/core.hpp"

namespace gam {

/// Farthest point sampling. The first center is seed mod N; each following
/// center maximizes the minimum squared distance to the centers already
/// chosen, ties going to the lowest index.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t n_centers,
                                               std::uint64_t seed);

enum class SearchBackend {
  kBruteForce,  // reference scan over all points
  kGrid,        // uniform grid with cell size r; identical results
};

/// Ball query around cloud members. Up to k ids with |q - p|^2 <= r^2 in
/// ascending id order, padded by repeating the first hit.
NeighborhoodIndex ball_query(const PointCloud& cloud, const std::vector<std::size_t>& centers, double radius,
                             std::size_t k, SearchBackend backend = SearchBackend::kBruteForce,
                             unsigned threads = 1);

/// Ball query around arbitrary query positions (m x 3). center_ids of the
/// result are the query row numbers. Throws EmptyBall if some query has no
/// point inside the radius.
NeighborhoodIndex ball_query_points(const PointCloud& cloud, const Matrix& queries, double radius, std::size_t k,
                                    SearchBackend backend = SearchBackend::kBruteForce, unsigned threads = 1);

/// k nearest neighbors by squared distance, ties to the lowest index.
NeighborhoodIndex knn(const PointCloud& cloud, const std::vector<std::size_t>& centers, std::size_t k,
                      unsigned threads = 1);

}  // namespace gam
