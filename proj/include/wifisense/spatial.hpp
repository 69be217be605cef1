#pragma once

// Coverage statistics, node popularity, POI correlation, transition
// probabilities and node interconnections over Dataset B.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wifisense/cluster.hpp"
#include "wifisense/core.hpp"
#include "wifisense/hac.hpp"
#include "wifisense/preprocess.hpp"
#include "wifisense/random.hpp"

namespace wifisense {

namespace detail {

class NodeIndex {
 public:
  explicit NodeIndex(std::span<const std::string> nodes) {
    for (std::size_t i = 0; i < nodes.size(); ++i) index_.emplace(nodes[i], i);
  }

  std::size_t operator()(const std::string& node) const {
    auto it = index_.find(node);
    if (it == index_.end()) throw Error(Errc::UnknownNode, "'" + node + "'");
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

inline void require_nonempty(const DatasetB& ds) {
  if (ds.trajectories.empty()) throw Error(Errc::EmptyDataset, "Dataset B has no trajectories");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trajectory split by length and round-trip status

struct SplitBucket {
  std::string length;              // "1".."5", "6+"
  std::optional<bool> round_trip;  // empty for lengths below 3
  std::size_t count = 0;
  double share = 0.0;
};

inline std::vector<SplitBucket> trajectory_split_table(const DatasetB& ds) {
  detail::require_nonempty(ds);
  std::vector<SplitBucket> table{{"1", std::nullopt}, {"2", std::nullopt}};
  for (const char* len : {"3", "4", "5", "6+"}) {
    table.push_back({len, true});
    table.push_back({len, false});
  }
  for (const auto& t : ds.trajectories) {
    std::size_t len = t.length();
    if (len == 0) continue;
    std::size_t slot;
    if (len <= 2) {
      slot = len - 1;
    } else {
      std::size_t group = std::min<std::size_t>(len, 6) - 3;
      slot = 2 + group * 2 + (t.is_round_trip() ? 0 : 1);
    }
    ++table[slot].count;
  }
  double total = static_cast<double>(ds.trajectories.size());
  for (auto& b : table) b.share = static_cast<double>(b.count) / total;
  return table;
}

// ---------------------------------------------------------------------------
// Node popularity

struct NodePopularity {
  std::string node;
  std::size_t passing = 0;      // trajectories visiting the node at least once
  std::size_t single_node = 0;  // length-1 trajectories at the node
  double pass_ratio = 0.0;
  double single_node_ratio = 0.0;
};

inline std::vector<NodePopularity> node_popularity(const DatasetB& ds, std::span<const std::string> nodes) {
  detail::require_nonempty(ds);
  detail::NodeIndex index(nodes);
  std::vector<NodePopularity> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out[i].node = nodes[i];
  std::vector<char> seen(nodes.size());
  for (const auto& t : ds.trajectories) {
    std::fill(seen.begin(), seen.end(), 0);
    for (const auto& v : t.visits) seen[index(v.node)] = 1;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (seen[i]) {
        ++out[i].passing;
        if (t.length() == 1) ++out[i].single_node;
      }
  }
  std::size_t total = 0;
  for (const auto& p : out) total += p.passing;
  for (auto& p : out) {
    p.pass_ratio = total ? static_cast<double>(p.passing) / static_cast<double>(total) : 0.0;
    p.single_node_ratio = p.passing ? static_cast<double>(p.single_node) / static_cast<double>(p.passing) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distance to POIs and correlation

inline constexpr double kEarthRadiusM = 6371008.8;

/// Great-circle distance in metres.
inline double haversine_m(GeoPoint a, GeoPoint b) {
  constexpr double rad = M_PI / 180.0;
  double dlat = (b.lat - a.lat) * rad;
  double dlon = (b.lon - a.lon) * rad;
  double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
             std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

inline double distance_to_nearest_poi(GeoPoint p, std::span<const Poi> pois) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& poi : pois) best = std::min(best, haversine_m(p, poi.location));
  return best;
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Pearson correlation via centred sums; returns NaN when either input has no spread.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(Errc::InvalidArgument, "pearson: need two equal-length series of size >= 2");
  double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

struct PoiCorrelation {
  std::vector<double> distance_m;  // per node, nearest POI
  double r = 0.0;
  double p_value = 1.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t permutations = 0;
};

inline constexpr std::size_t kDefaultPermutations = 10000;

/// Two-sided permutation p-value for a Pearson coefficient: share of label
/// shuffles (plus the observed one) reaching at least |r|.
inline double permutation_p_value(std::span<const double> x, std::span<const double> y, double r,
                                  std::size_t permutations, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> shuffled(y.begin(), y.end());
  std::size_t hits = 0;
  const double bar = std::abs(r) - 1e-12;
  for (std::size_t p = 0; p < permutations; ++p) {
    rng.shuffle(shuffled);
    if (std::abs(pearson(x, shuffled)) >= bar) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
}

/// Correlates per-node pass ratios (ordered like `config.nodes`) with each
/// node's distance to its nearest POI.
inline PoiCorrelation poi_correlation(std::span<const double> pass_ratios, const EventConfig& config,
                                      std::size_t permutations = kDefaultPermutations,
                                      std::uint64_t seed = 0x5eed) {
  if (config.nodes.size() < 3) throw Error(Errc::InvalidArgument, "poi_correlation needs at least 3 nodes");
  if (config.pois.empty()) throw Error(Errc::InvalidArgument, "poi_correlation needs at least one POI");
  if (pass_ratios.size() != config.nodes.size())
    throw Error(Errc::InvalidArgument, "one pass ratio per configured node expected");
  PoiCorrelation out;
  for (const auto& n : config.nodes) out.distance_m.push_back(distance_to_nearest_poi(n.location, config.pois));
  out.r = pearson(out.distance_m, pass_ratios);
  if (std::isnan(out.r)) throw Error(Errc::DegenerateVariance, "distances or pass ratios are all equal");
  auto fit = least_squares(out.distance_m, pass_ratios);
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.permutations = permutations;
  out.p_value = permutation_p_value(out.distance_m, pass_ratios, out.r, permutations, seed);
  return out;
}

// ---------------------------------------------------------------------------
// Transition matrix

struct TransitionMatrix {
  std::vector<std::string> nodes;
  std::vector<std::int64_t> counts;  // N, row-major
  std::vector<double> probs;         // T, row-major, diagonal = 1
  std::vector<bool> no_outgoing;     // rows whose off-diagonal counts are all zero

  std::size_t size() const { return nodes.size(); }
  std::int64_t N(std::size_t i, std::size_t j) const { return counts[i * size() + j]; }
  double T(std::size_t i, std::size_t j) const { return probs[i * size() + j]; }

  std::vector<Vector> rows() const {
    std::vector<Vector> out(size());
    for (std::size_t i = 0; i < size(); ++i)
      out[i].assign(probs.begin() + static_cast<std::ptrdiff_t>(i * size()),
                    probs.begin() + static_cast<std::ptrdiff_t>((i + 1) * size()));
    return out;
  }
};

/// Row-normalises a count matrix over off-diagonal entries and sets T(i,i) = 1.
inline TransitionMatrix transition_from_counts(std::vector<std::string> nodes, std::vector<std::int64_t> counts) {
  TransitionMatrix tm;
  const std::size_t n = nodes.size();
  tm.nodes = std::move(nodes);
  tm.counts = std::move(counts);
  tm.probs.assign(n * n, 0.0);
  tm.no_outgoing.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t out = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) out += tm.counts[i * n + k];
    tm.no_outgoing[i] = out == 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && out > 0) tm.probs[i * n + j] = static_cast<double>(tm.counts[i * n + j]) / static_cast<double>(out);
    tm.probs[i * n + i] = 1.0;
  }
  return tm;
}

/// Counts consecutive visit pairs i -> j over all trajectories.
inline std::vector<std::int64_t> transition_counts(const DatasetB& ds, std::span<const std::string> nodes) {
  detail::NodeIndex index(nodes);
  const std::size_t n = nodes.size();
  std::vector<std::int64_t> counts(n * n, 0);
  for (const auto& t : ds.trajectories)
    for (std::size_t v = 1; v < t.visits.size(); ++v)
      ++counts[index(t.visits[v - 1].node) * n + index(t.visits[v].node)];
  return counts;
}

inline TransitionMatrix transition_matrix(const DatasetB& ds, std::span<const std::string> nodes) {
  return transition_from_counts(std::vector<std::string>(nodes.begin(), nodes.end()), transition_counts(ds, nodes));
}

/// Average-linkage tree over the rows of T (diagonal included).
inline Dendrogram hac_interconnections(const TransitionMatrix& tm) {
  if (tm.size() < 2) throw Error(Errc::InvalidArgument, "need at least 2 nodes");
  auto rows = tm.rows();
  return hierarchical_cluster(rows);
}

// ---------------------------------------------------------------------------
// Zone ratio distribution

struct ZoneRatioHistogram {
  static constexpr std::size_t kLevels = 11;
  // [0] short (length <= 3), [1] long (length > 3)
  std::array<std::array<std::size_t, kLevels>, 2> counts{};
  std::array<std::array<double, kLevels>, 2> shares{};
  std::size_t total = 0;
};

/// Share of Zone-I visits per trajectory rounded to the nearest tenth (halves
/// round up), split by short and long trajectories. Shares sum to one over all bars.
inline ZoneRatioHistogram zone_ratio_distribution(const DatasetB& ds, const std::map<std::string, std::string>& zones,
                                                  const std::string& zone_one = "I") {
  ZoneRatioHistogram h;
  for (const auto& t : ds.trajectories) {
    if (t.visits.empty()) continue;
    std::int64_t in_one = 0;
    for (const auto& v : t.visits) {
      auto it = zones.find(v.node);
      if (it == zones.end()) throw Error(Errc::UnknownNode, "no zone for node '" + v.node + "'");
      if (it->second == zone_one) ++in_one;
    }
    auto len = static_cast<std::int64_t>(t.length());
    auto level = static_cast<std::size_t>((20 * in_one + len) / (2 * len));
    ++h.counts[len > 3 ? 1 : 0][level];
    ++h.total;
  }
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t l = 0; l < ZoneRatioHistogram::kLevels; ++l)
      h.shares[b][l] = h.total ? static_cast<double>(h.counts[b][l]) / static_cast<double>(h.total) : 0.0;
  return h;
}

}  // namespace wifisense
