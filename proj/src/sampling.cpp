#include "gam/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "gam/parallel.hpp"

namespace gam {
namespace {

inline double squared_distance(const double* a, const double* b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

void check_centers(const PointCloud& cloud, const std::vector<std::size_t>& centers) {
  if (centers.empty()) throw Error(Errc::kInvalidInput, "at least one center is required");
  for (std::size_t c : centers) {
    if (c >= cloud.size()) {
      throw Error(Errc::kInvalidInput, "center index " + std::to_string(c) + " out of range");
    }
  }
}

Matrix gather_rows(const Matrix& coords, const std::vector<std::size_t>& ids) {
  Matrix out(ids.size(), 3);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(coords.data() + ids[i] * 3, 3, out.data() + i * 3);
  }
  return out;
}

// Writes the ascending hit list into `row`, padding with the first hit.
// Returns false when no hit exists.
bool fill_row(std::span<std::size_t> row, const std::vector<std::size_t>& hits) {
  if (hits.empty()) return false;
  const std::size_t n = std::min(hits.size(), row.size());
  std::copy_n(hits.begin(), n, row.begin());
  std::fill(row.begin() + static_cast<std::ptrdiff_t>(n), row.end(), hits.front());
  return true;
}

class UniformGrid {
 public:
  static constexpr std::int64_t kMaxCellsPerAxis = 1 << 20;

  // Cells are made marginally wider than r so that any point within r of a
  // query sits at most one cell away per axis despite rounding.
  UniformGrid(const Matrix& coords, double radius) : cell_(radius * (1.0 + 1e-9)) {
    for (int a = 0; a < 3; ++a) {
      lo_[a] = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < coords.rows(); ++i) {
        lo_[a] = std::min(lo_[a], coords(i, a));
        hi = std::max(hi, coords(i, a));
      }
      const double extent = (hi - lo_[a]) / cell_;
      if (!(extent < static_cast<double>(kMaxCellsPerAxis - 2))) {
        usable_ = false;
        return;
      }
      dims_[a] = static_cast<std::int64_t>(std::floor(extent)) + 1;
    }
    for (std::size_t i = 0; i < coords.rows(); ++i) {
      const auto c = cell_of(coords.data() + i * 3);
      cells_[key(c)].push_back(i);
    }
  }

  bool usable() const noexcept { return usable_; }

  template <class Visit>
  void for_each_candidate(const double* q, Visit&& visit) const {
    const auto c = cell_of(q);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const std::array<std::int64_t, 3> n{c[0] + dx, c[1] + dy, c[2] + dz};
          if (!in_range(n)) continue;
          const auto it = cells_.find(key(n));
          if (it == cells_.end()) continue;
          for (std::size_t id : it->second) visit(id);
        }
      }
    }
  }

 private:
  std::array<std::int64_t, 3> cell_of(const double* p) const {
    std::array<std::int64_t, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double t = std::floor((p[a] - lo_[a]) / cell_);
      c[a] = static_cast<std::int64_t>(std::clamp(t, -2.0, static_cast<double>(kMaxCellsPerAxis)));
    }
    return c;
  }

  bool in_range(const std::array<std::int64_t, 3>& c) const {
    for (int a = 0; a < 3; ++a) {
      if (c[a] < 0 || c[a] >= dims_[a]) return false;
    }
    return true;
  }

  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    return (static_cast<std::uint64_t>(c[0]) << 42) | (static_cast<std::uint64_t>(c[1]) << 21) |
           static_cast<std::uint64_t>(c[2]);
  }

  double cell_;
  std::array<double, 3> lo_{};
  std::array<std::int64_t, 3> dims_{};
  bool usable_ = true;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t n_centers,
                                               std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (n_centers == 0) throw Error(Errc::kInvalidInput, "n_centers must be >= 1");
  if (n_centers > n) {
    throw Error(Errc::kTooManyCenters,
                "requested " + std::to_string(n_centers) + " centers from " + std::to_string(n) + " points");
  }
  const double* xyz = cloud.coords().data();
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  std::vector<std::size_t> out;
  out.reserve(n_centers);

  std::size_t current = static_cast<std::size_t>(seed % n);
  for (std::size_t step = 0;; ++step) {
    out.push_back(current);
    taken[current] = 1;
    if (step + 1 == n_centers) break;
    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double d = squared_distance(xyz + i * 3, xyz + current * 3);
      if (d < min_dist[i]) min_dist[i] = d;
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    current = best;
  }
  return out;
}

NeighborhoodIndex ball_query_points(const PointCloud& cloud, const Matrix& queries, double radius, std::size_t k,
                                    SearchBackend backend, unsigned threads) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw Error(Errc::kInvalidInput, "radius must be > 0");
  if (k == 0) throw Error(Errc::kInvalidInput, "k must be >= 1");
  if (queries.cols() != 3 || queries.rows() == 0) {
    throw Error(Errc::kShapeMismatch, "queries must be a non-empty m x 3 matrix");
  }
  const std::size_t m = queries.rows();
  const std::size_t n = cloud.size();
  const double r2 = radius * radius;
  const double* xyz = cloud.coords().data();

  NeighborhoodIndex out;
  out.k = k;
  out.center_ids.resize(m);
  std::iota(out.center_ids.begin(), out.center_ids.end(), std::size_t{0});
  out.neighbor_ids.assign(m * k, 0);

  std::optional<UniformGrid> grid;
  if (backend == SearchBackend::kGrid) {
    grid.emplace(cloud.coords(), radius);
    if (!grid->usable()) grid.reset();
  }

  std::vector<char> empty(m, 0);
  parallel_for(m, threads, [&](std::size_t s) {
    const double* q = queries.data() + s * 3;
    std::vector<std::size_t> hits;
    if (grid) {
      grid->for_each_candidate(q, [&](std::size_t i) {
        if (squared_distance(xyz + i * 3, q) <= r2) hits.push_back(i);
      });
      std::sort(hits.begin(), hits.end());
      if (hits.size() > k) hits.resize(k);
    } else {
      hits.reserve(k);
      for (std::size_t i = 0; i < n && hits.size() < k; ++i) {
        if (squared_distance(xyz + i * 3, q) <= r2) hits.push_back(i);
      }
    }
    if (!fill_row({out.neighbor_ids.data() + s * k, k}, hits)) empty[s] = 1;
  });

  const auto first_empty = std::find(empty.begin(), empty.end(), 1);
  if (first_empty != empty.end()) {
    throw Error(Errc::kEmptyBall, "no point within radius of query " +
                                      std::to_string(std::distance(empty.begin(), first_empty)));
  }
  return out;
}

NeighborhoodIndex ball_query(const PointCloud& cloud, const std::vector<std::size_t>& centers, double radius,
                             std::size_t k, SearchBackend backend, unsigned threads) {
  check_centers(cloud, centers);
  NeighborhoodIndex out =
      ball_query_points(cloud, gather_rows(cloud.coords(), centers), radius, k, backend, threads);
  out.center_ids = centers;
  return out;
}

NeighborhoodIndex knn(const PointCloud& cloud, const std::vector<std::size_t>& centers, std::size_t k,
                      unsigned threads) {
  check_centers(cloud, centers);
  const std::size_t n = cloud.size();
  if (k == 0) throw Error(Errc::kInvalidInput, "k must be >= 1");
  if (k > n) throw Error(Errc::kKTooLarge, "k=" + std::to_string(k) + " exceeds N=" + std::to_string(n));
  const double* xyz = cloud.coords().data();

  NeighborhoodIndex out;
  out.k = k;
  out.center_ids = centers;
  out.neighbor_ids.assign(centers.size() * k, 0);
  parallel_for(centers.size(), threads, [&](std::size_t s) {
    const double* c = xyz + centers[s] * 3;
    std::vector<std::pair<double, std::size_t>> cand(n);
    for (std::size_t i = 0; i < n; ++i) cand[i] = {squared_distance(xyz + i * 3, c), i};
    // Pair ordering breaks distance ties by index.
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t j = 0; j < k; ++j) out.neighbor_ids[s * k + j] = cand[j].second;
  });
  return out;
}

}  // namespace gam
