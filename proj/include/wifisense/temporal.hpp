#pragma once

// Device-count grids over the daily window, clusters of days (k-means with
// Silhouette selection) and per-node count curves for shape clustering.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "wifisense/cluster.hpp"
#include "wifisense/core.hpp"
#include "wifisense/preprocess.hpp"
#include "wifisense/random.hpp"
#include "wifisense/shape.hpp"

namespace wifisense {

inline constexpr int kDefaultRestarts = 50;
inline constexpr int kDefaultIntervalMinutes = 15;

/// Unique-MAC counts per (day, interval, node) and per (day, interval).
struct CountGrid {
  std::vector<DayNumber> days;
  std::size_t intervals = 0;
  std::int64_t interval_seconds = 0;
  std::vector<std::string> nodes;
  std::vector<std::int64_t> per_node;  // [day][interval][node]
  std::vector<std::int64_t> overall;   // [day][interval]

  std::int64_t node_count(std::size_t d, std::size_t t, std::size_t n) const {
    return per_node[(d * intervals + t) * nodes.size() + n];
  }
  std::int64_t overall_count(std::size_t d, std::size_t t) const { return overall[d * intervals + t]; }

  /// One feature vector per day: overall counts over the intervals.
  std::vector<Vector> day_curves() const {
    std::vector<Vector> out(days.size(), Vector(intervals));
    for (std::size_t d = 0; d < days.size(); ++d)
      for (std::size_t t = 0; t < intervals; ++t) out[d][t] = static_cast<double>(overall_count(d, t));
    return out;
  }
};

/// A MAC counts in every interval that its [t_first, t_last] overlaps. Days
/// are those with at least one record.
inline CountGrid build_count_grid(const DatasetA& ds, const EventConfig& config) {
  CountGrid g;
  g.interval_seconds = config.interval_seconds();
  g.intervals = static_cast<std::size_t>(config.intervals_per_day());
  g.nodes = config.node_ids();
  const auto T = static_cast<std::int64_t>(g.intervals);

  for (const auto& r : ds.records) g.days.push_back(config.day_of(r.t_first));
  std::sort(g.days.begin(), g.days.end());
  g.days.erase(std::unique(g.days.begin(), g.days.end()), g.days.end());

  // (day index, interval, node index or -1 for overall, mac)
  using Key = std::tuple<std::size_t, std::int64_t, std::int64_t, std::uint64_t>;
  std::vector<Key> keys;
  keys.reserve(ds.records.size() * 4);
  for (const auto& r : ds.records) {
    DayNumber day = config.day_of(r.t_first);
    auto d = static_cast<std::size_t>(std::lower_bound(g.days.begin(), g.days.end(), day) - g.days.begin());
    Timestamp ws = config.window_start(day);
    std::int64_t s = r.t_first - ws, e = r.t_last - ws;
    if (e < 0 || s >= T * g.interval_seconds) continue;
    std::int64_t lo = std::max<std::int64_t>(0, floor_div(s, g.interval_seconds));
    std::int64_t hi = std::min<std::int64_t>(T - 1, floor_div(e, g.interval_seconds));
    auto node = config.node_index(r.source);
    if (!node) throw Error(Errc::UnknownNode, "record source '" + r.source + "' is not a node id");
    for (std::int64_t t = lo; t <= hi; ++t) {
      keys.emplace_back(d, t, static_cast<std::int64_t>(*node), r.mac.to_u64());
      keys.emplace_back(d, t, -1, r.mac.to_u64());
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  g.per_node.assign(g.days.size() * g.intervals * g.nodes.size(), 0);
  g.overall.assign(g.days.size() * g.intervals, 0);
  for (const auto& [d, t, n, mac] : keys) {
    auto ti = static_cast<std::size_t>(t);
    if (n < 0)
      ++g.overall[d * g.intervals + ti];
    else
      ++g.per_node[(d * g.intervals + ti) * g.nodes.size() + static_cast<std::size_t>(n)];
  }
  return g;
}

/// Scales every cell by the global minimum and maximum over all rows.
inline std::vector<Vector> minmax_normalize(std::span<const Vector> grid) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : grid)
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) throw Error(Errc::ConstantGrid, "all cells are equal");
  std::vector<Vector> out(grid.begin(), grid.end());
  for (auto& row : out)
    for (double& v : row) v = (v - lo) / (hi - lo);
  return out;
}

// ---------------------------------------------------------------------------
// Silhouette

struct Silhouette {
  double mean = 0.0;
  Vector values;
};

/// s(i) = (d_ex - d_in) / max(d_in, d_ex), 0 for singleton clusters, where
/// d_in is the mean distance to the rest of i's cluster and d_ex the smallest
/// mean distance to another cluster.
inline Silhouette silhouette(const DistanceMatrix& dist, std::span<const int> labels) {
  const std::size_t n = labels.size();
  if (dist.n != n) throw Error(Errc::InvalidArgument, "distance matrix and labels disagree in size");
  std::vector<int> ids(labels.begin(), labels.end());
  const int k = canonicalize_labels(ids);
  if (k < 2) throw Error(Errc::SingleCluster, "silhouette needs at least 2 clusters");
  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (int l : ids) ++size[static_cast<std::size_t>(l)];

  Silhouette out;
  out.values.assign(n, 0.0);
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(ids[i]);
    if (size[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[static_cast<std::size_t>(ids[j])] += dist(i, j);
    double d_in = sums[own] / static_cast<double>(size[own] - 1);
    double d_ex = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (c != own) d_ex = std::min(d_ex, sums[c] / static_cast<double>(size[c]));
    double denom = std::max(d_in, d_ex);
    out.values[i] = denom > 0.0 ? (d_ex - d_in) / denom : 0.0;
  }
  double s = 0.0;
  for (double v : out.values) s += v;
  out.mean = s / static_cast<double>(n);
  return out;
}

inline Silhouette silhouette(std::span<const Vector> points, std::span<const int> labels) {
  check_same_dimension(points);
  if (points.size() != labels.size()) throw Error(Errc::InvalidArgument, "one label per point expected");
  return silhouette(euclidean_distances(points), labels);
}

// ---------------------------------------------------------------------------
// k-means

struct LloydRun {
  std::vector<int> labels;
  std::vector<Vector> centroids;
  std::vector<double> objective;  // within-cluster sum of squares after each iteration
};

inline double within_cluster_ss(std::span<const Vector> points, std::span<const int> labels,
                                std::span<const Vector> centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    s += squared_distance(points[i], centroids[static_cast<std::size_t>(labels[i])]);
  return s;
}

/// Lloyd iterations from the given centroids until the assignment is stable.
/// A cluster left empty takes over the point farthest from its centroid.
inline LloydRun lloyd(std::span<const Vector> points, std::vector<Vector> centroids, int max_iter = 300) {
  const std::size_t n = points.size();
  const std::size_t k = centroids.size();
  const std::size_t dim = points.front().size();
  LloydRun run;
  run.labels.assign(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<int> labels(n);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double d = squared_distance(points[i], centroids[c]);
        if (d < best) {
          best = d;
          labels[i] = static_cast<int>(c);
        }
      }
      dist[i] = best;
    }
    std::vector<std::size_t> size(k, 0);
    for (int l : labels) ++size[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (size[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (size[static_cast<std::size_t>(labels[i])] > 1 && (far == n || dist[i] > dist[far])) far = i;
      if (far == n) break;
      --size[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      size[c] = 1;
      dist[far] = 0.0;
    }
    for (std::size_t c = 0; c < k; ++c)
      if (size[c] > 0) std::fill(centroids[c].begin(), centroids[c].end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = centroids[static_cast<std::size_t>(labels[i])];
      for (std::size_t j = 0; j < dim; ++j) c[j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (size[c] > 0)
        for (double& v : centroids[c]) v /= static_cast<double>(size[c]);
    run.objective.push_back(within_cluster_ss(points, labels, centroids));
    bool stable = labels == run.labels;
    run.labels = std::move(labels);
    if (stable) break;
  }
  run.centroids = std::move(centroids);
  return run;
}

/// k-means with `restarts` seeded initialisations (uniformly drawn distinct
/// points); the restart with the best mean Silhouette is kept, the earliest on ties.
inline ClusterAssignment kmeans(std::span<const Vector> points, int k, int restarts = kDefaultRestarts,
                                std::uint64_t seed = 0) {
  if (points.empty()) throw Error(Errc::EmptyInput, "kmeans: no points");
  check_same_dimension(points);
  if (k < 1 || static_cast<std::size_t>(k) > points.size())
    throw Error(Errc::InvalidK, "k=" + std::to_string(k) + " outside [1, " + std::to_string(points.size()) + "]");
  if (restarts < 1) throw Error(Errc::InvalidArgument, "restarts must be positive");
  DistanceMatrix dist = euclidean_distances(points);

  std::optional<LloydRun> best;
  double best_quality = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<Vector> init;
    for (std::size_t idx : rng.sample_distinct(points.size(), static_cast<std::size_t>(k))) init.push_back(points[idx]);
    LloydRun run = lloyd(points, std::move(init));
    double q = k >= 2 ? silhouette(dist, run.labels).mean : 0.0;
    if (!best || q > best_quality) {
      best_quality = q;
      best = std::move(run);
    }
    if (k == 1) break;
  }

  ClusterAssignment out;
  std::map<int, int> remap;
  out.labels = best->labels;
  out.k = canonicalize_labels(out.labels, &remap);
  out.centroids.assign(static_cast<std::size_t>(out.k), Vector{});
  for (auto [old_id, new_id] : remap)
    out.centroids[static_cast<std::size_t>(new_id)] = best->centroids[static_cast<std::size_t>(old_id)];
  out.quality = k >= 2 ? best_quality : std::numeric_limits<double>::quiet_NaN();
  return out;
}

struct KSelection {
  std::vector<std::pair<int, double>> curve;  // (k, mean Silhouette)
  int best_k = 0;                             // argmax of the curve (smallest k on ties)
  int chosen_k = 0;                           // best_k unless overridden
  std::map<int, ClusterAssignment> runs;
};

/// Runs k-means for every k in [k_min, k_max] and reports the Silhouette curve.
inline KSelection select_k(std::span<const Vector> points, int k_min, int k_max, int restarts = kDefaultRestarts,
                           std::uint64_t seed = 0, std::optional<int> k_override = std::nullopt) {
  const int n = static_cast<int>(points.size());
  if (k_min < 2 || k_max > n - 1 || k_min > k_max)
    throw Error(Errc::InvalidK, "k range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                                    "] must lie within [2, " + std::to_string(n - 1) + "]");
  KSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    auto run = kmeans(points, k, restarts, derive_seed(seed, static_cast<std::uint64_t>(k)));
    sel.curve.emplace_back(k, run.quality);
    if (run.quality > best) {
      best = run.quality;
      sel.best_k = k;
    }
    sel.runs.emplace(k, std::move(run));
  }
  sel.chosen_k = sel.best_k;
  if (k_override) {
    if (!sel.runs.count(*k_override))
      sel.runs.emplace(*k_override, kmeans(points, *k_override, restarts,
                                           derive_seed(seed, static_cast<std::uint64_t>(*k_override))));
    sel.chosen_k = *k_override;
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Per-node count curves

/// Interval index range [first, last) covered by a clock range inside the daily window.
inline std::pair<std::size_t, std::size_t> interval_slice(const EventConfig& config, ClockRange range) {
  std::int64_t begin = config.clock_offset(range.begin);
  std::int64_t end = begin + range.length();
  std::int64_t I = config.interval_seconds();
  if (begin % I != 0 || end % I != 0 || end > config.daily_window.length())
    throw Error(Errc::InvalidArgument, "slice " + range.to_string() + " is not aligned to intervals inside the window");
  return {static_cast<std::size_t>(begin / I), static_cast<std::size_t>(end / I)};
}

/// Per node: mean count over the given days, z-normalized over the whole
/// window, sliced to [first, last), z-normalized again.
inline std::vector<Vector> node_count_curves(const CountGrid& grid, std::span<const DayNumber> day_cluster,
                                             std::size_t first, std::size_t last) {
  if (day_cluster.empty()) throw Error(Errc::InvalidArgument, "day cluster is empty");
  if (first >= last || last > grid.intervals) throw Error(Errc::InvalidArgument, "invalid interval slice");
  std::vector<std::size_t> rows;
  for (DayNumber d : day_cluster) {
    auto it = std::lower_bound(grid.days.begin(), grid.days.end(), d);
    if (it == grid.days.end() || *it != d) throw Error(Errc::InvalidArgument, "day " + format_day(d) + " not in grid");
    rows.push_back(static_cast<std::size_t>(it - grid.days.begin()));
  }
  std::vector<Vector> out;
  for (std::size_t n = 0; n < grid.nodes.size(); ++n) {
    Vector avg(grid.intervals, 0.0);
    for (std::size_t d : rows)
      for (std::size_t t = 0; t < grid.intervals; ++t) avg[t] += static_cast<double>(grid.node_count(d, t, n));
    for (double& v : avg) v /= static_cast<double>(rows.size());
    try {
      Vector full = znormalize(avg);
      out.push_back(znormalize(std::span<const double>(full).subspan(first, last - first)));
    } catch (const Error& e) {
      throw Error(Errc::ZeroVariance, "node '" + grid.nodes[n] + "': " + e.what());
    }
  }
  return out;
}

}  // namespace wifisense
