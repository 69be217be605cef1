#include <gtest/gtest.h>

#include <map>
#include <set>

#include "test_util.hpp"

using namespace wifisense;
using testutil::visit;

namespace {

DatasetB make_ds(std::vector<std::vector<std::string>> paths) {
  DatasetB ds;
  std::uint64_t m = 1;
  for (const auto& p : paths) {
    std::vector<NodeVisit> vs;
    Timestamp t = 0;
    for (const auto& n : p) {
      vs.push_back(visit(n, t, t + 60));
      t += 100;
    }
    ds.trajectories.push_back(testutil::trajectory(vs, m++));
  }
  return ds;
}

DatasetB random_ds(Rng& rng, std::size_t n_nodes, std::size_t count) {
  std::vector<std::vector<std::string>> paths;
  auto names = testutil::node_names(n_nodes);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t len = 1 + rng.index(8);
    std::vector<std::string> p;
    while (p.size() < len) {
      auto n = names[rng.index(n_nodes)];
      if (p.empty() || p.back() != n) p.push_back(n);
    }
    paths.push_back(p);
  }
  return make_ds(paths);
}

}  // namespace

TEST(SplitTable, SingleTrajectory) {
  auto table = trajectory_split_table(make_ds({{"A"}}));
  ASSERT_EQ(table.size(), 10u);
  EXPECT_EQ(table[0].length, "1");
  EXPECT_DOUBLE_EQ(table[0].share, 1.0);
  EXPECT_THROW(trajectory_split_table(DatasetB{}), Error);
}

TEST(SplitTable, MatchesDirectCounter) {
  Rng rng(5);
  auto ds = random_ds(rng, 5, 500);
  std::map<std::pair<std::string, std::string>, std::size_t> want;
  for (const auto& t : ds.trajectories) {
    std::size_t len = t.visits.size();
    std::string bucket = len >= 6 ? "6+" : std::to_string(len);
    std::string rt = len < 3 ? "" : (t.visits.front().node == t.visits.back().node ? "Y" : "N");
    ++want[{bucket, rt}];
  }
  double total = 0;
  for (const auto& b : trajectory_split_table(ds)) {
    std::string rt = b.round_trip ? (*b.round_trip ? "Y" : "N") : "";
    EXPECT_EQ(b.count, (want[{b.length, rt}])) << b.length << rt;
    EXPECT_DOUBLE_EQ(b.share, static_cast<double>(b.count) / 500.0);
    total += b.share;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Popularity, Examples) {
  auto nodes = testutil::node_names(2);
  auto p = node_popularity(make_ds({{"A", "B"}}), nodes);
  EXPECT_DOUBLE_EQ(p[0].pass_ratio, 0.5);
  EXPECT_DOUBLE_EQ(p[1].pass_ratio, 0.5);
  EXPECT_DOUBLE_EQ(p[0].single_node_ratio, 0.0);
  p = node_popularity(make_ds({{"A"}}), nodes);
  EXPECT_DOUBLE_EQ(p[0].pass_ratio, 1.0);
  EXPECT_DOUBLE_EQ(p[0].single_node_ratio, 1.0);
  EXPECT_DOUBLE_EQ(p[1].pass_ratio, 0.0);
}

TEST(Popularity, RatiosSumToOneAndRoundTripsCountOnce) {
  Rng rng(6);
  auto nodes = testutil::node_names(6);
  auto ds = random_ds(rng, 6, 300);
  double s = 0;
  for (const auto& p : node_popularity(ds, nodes)) s += p.pass_ratio;
  EXPECT_NEAR(s, 1.0, 1e-9);
  auto rt = node_popularity(make_ds({{"A", "B", "A"}}), nodes);
  EXPECT_EQ(rt[0].passing, 1u);
}

TEST(Geo, HaversineKnownDistance) {
  // One degree of latitude on the mean sphere.
  EXPECT_NEAR(haversine_m({0, 0}, {1, 0}), 6371008.8 * M_PI / 180.0, 1e-6);
  EXPECT_DOUBLE_EQ(haversine_m({52, 4}, {52, 4}), 0.0);
  EXPECT_NEAR(haversine_m({52.37, 4.89}, {48.8566, 2.3522}), 430000, 5000);
}

TEST(Pearson, MatchesTextbookFormula) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 3 + rng.index(40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-5, 5);
      y[i] = 0.3 * x[i] + rng.uniform(-5, 5);
    }
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      syy += y[i] * y[i];
      sxy += x[i] * y[i];
    }
    double dn = static_cast<double>(n);
    double want = (dn * sxy - sx * sy) / std::sqrt((dn * sxx - sx * sx) * (dn * syy - sy * sy));
    EXPECT_NEAR(pearson(x, y), want, 1e-12);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = -2.5 * x[i] + 7.0;
    EXPECT_NEAR(pearson(scaled, y), -pearson(x, y), 1e-12);
  }
}

TEST(PoiCorrelation, PerfectlyLinearDecreasing) {
  auto cfg = testutil::make_config(5);
  cfg.pois = {{"p", {52.0, 4.0}}};
  std::vector<double> ratios;
  for (const auto& n : cfg.nodes) ratios.push_back(0.5 - 1e-4 * haversine_m(n.location, cfg.pois[0].location));
  auto c = poi_correlation(ratios, cfg, 1000, 1);
  EXPECT_NEAR(c.r, -1.0, 1e-9);
  EXPECT_NEAR(c.slope, -1e-4, 1e-12);
  EXPECT_GE(c.p_value, 0.0);
  EXPECT_LE(c.p_value, 1.0);
  std::vector<double> flat(5, 0.2);
  try {
    poi_correlation(flat, cfg, 100, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateVariance);
  }
}

TEST(PoiCorrelation, PermutationPValueIsSeededAndBounded) {
  std::vector<double> x{1, 2, 3, 4, 5, 6}, y{2, 1, 4, 3, 6, 5};
  double r = pearson(x, y);
  double p1 = permutation_p_value(x, y, r, 5000, 3);
  EXPECT_EQ(p1, permutation_p_value(x, y, r, 5000, 3));
  EXPECT_GT(p1, 0.0);
  EXPECT_LT(p1, 0.1);
}

// ---------------------------------------------------------------------------
// Transition matrix

TEST(Transitions, ToyExample) {
  auto nodes = testutil::node_names(3);
  auto tm = transition_matrix(make_ds({{"A", "B"}, {"A", "C"}}), nodes);
  EXPECT_DOUBLE_EQ(tm.T(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(tm.T(0, 2), 0.5);
  EXPECT_DOUBLE_EQ(tm.T(0, 0), 1.0);
  EXPECT_TRUE(tm.no_outgoing[1]);
  EXPECT_DOUBLE_EQ(tm.T(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(tm.T(1, 1), 1.0);
}

TEST(Transitions, NoMultiNodeTrajectories) {
  auto nodes = testutil::node_names(3);
  auto tm = transition_matrix(make_ds({{"A"}, {"B"}}), nodes);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_TRUE(tm.no_outgoing[i]);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(tm.T(i, j), i == j ? 1.0 : 0.0);
  }
}

TEST(Transitions, MatchesBigramCounterAndIsRowStochastic) {
  Rng rng(12);
  auto nodes = testutil::node_names(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto ds = random_ds(rng, 7, 200);
    std::map<std::pair<std::string, std::string>, std::int64_t> bigrams;
    for (const auto& t : ds.trajectories)
      for (std::size_t v = 0; v + 1 < t.visits.size(); ++v) ++bigrams[{t.visits[v].node, t.visits[v + 1].node}];
    auto tm = transition_matrix(ds, nodes);
    for (std::size_t i = 0; i < 7; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < 7; ++j) {
        EXPECT_EQ(tm.N(i, j), (bigrams[{nodes[i], nodes[j]}]));
        EXPECT_GE(tm.T(i, j), 0.0);
        EXPECT_LE(tm.T(i, j), 1.0);
        if (i != j) row += tm.T(i, j);
      }
      EXPECT_DOUBLE_EQ(tm.T(i, i), 1.0);
      if (!tm.no_outgoing[i]) {
        EXPECT_NEAR(row, 1.0, 1e-9);
      }
    }
  }
}

TEST(Transitions, UnknownNodeIsAnError) {
  auto nodes = testutil::node_names(2);
  EXPECT_THROW(transition_matrix(make_ds({{"A", "Q"}}), nodes), Error);
}

// ---------------------------------------------------------------------------
// Hierarchical clustering

namespace {

struct NaiveMerge {
  int a, b;
  double height;
};

// Recomputes every cluster-pair average linkage from member lists at every step.
std::vector<NaiveMerge> naive_average_linkage(const DistanceMatrix& d) {
  const int n = static_cast<int>(d.n);
  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters[i] = {i};
  std::vector<NaiveMerge> out;
  for (int step = 0; step < n - 1; ++step) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (auto x = clusters.begin(); x != clusters.end(); ++x)
      for (auto y = std::next(x); y != clusters.end(); ++y) {
        double s = 0;
        for (int p : x->second)
          for (int q : y->second) s += d(p, q);
        s /= static_cast<double>(x->second.size() * y->second.size());
        if (s < best) {
          best = s;
          ba = x->first;
          bb = y->first;
        }
      }
    auto merged = clusters[ba];
    merged.insert(merged.end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(ba);
    clusters.erase(bb);
    clusters[n + step] = merged;
    out.push_back({ba, bb, best});
  }
  return out;
}

// Every leaf order reachable by flipping subtrees.
std::vector<std::vector<int>> tree_orders(const Dendrogram& d, int v) {
  if (v < d.n) return {{v}};
  const auto& m = d.merges[static_cast<std::size_t>(v - d.n)];
  auto left = tree_orders(d, m.a), right = tree_orders(d, m.b);
  std::vector<std::vector<int>> out;
  for (const auto& l : left)
    for (const auto& r : right) {
      auto lr = l;
      lr.insert(lr.end(), r.begin(), r.end());
      out.push_back(lr);
      auto rl = r;
      rl.insert(rl.end(), l.begin(), l.end());
      out.push_back(rl);
    }
  return out;
}

std::vector<Vector> random_points(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<Vector> pts(n, Vector(dim));
  for (auto& p : pts)
    for (double& x : p) x = rng.uniform();
  return pts;
}

}  // namespace

TEST(Hac, IdenticalRowsMergeFirstAtZero) {
  std::vector<Vector> pts{{0, 0}, {5, 5}, {0, 0}, {9, 1}};
  auto d = hierarchical_cluster(pts);
  EXPECT_EQ(d.merges[0].a, 0);
  EXPECT_EQ(d.merges[0].b, 2);
  EXPECT_DOUBLE_EQ(d.merges[0].height, 0.0);
}

TEST(Hac, TwoTightGroups) {
  std::vector<Vector> pts{{0, 0}, {10, 10}, {0.1, 0}, {10, 10.1}};
  auto cut = cut_dendrogram(hierarchical_cluster(pts), 2);
  EXPECT_EQ(cut.labels, (std::vector<int>{0, 1, 0, 1}));
}

TEST(Hac, MatchesNaiveOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = random_points(rng, 7, 4);
    auto dist = euclidean_distances(pts);
    auto got = average_linkage(dist);
    auto want = naive_average_linkage(dist);
    ASSERT_EQ(got.merges.size(), want.size());
    for (std::size_t s = 0; s < want.size(); ++s) {
      EXPECT_EQ(got.merges[s].a, want[s].a);
      EXPECT_EQ(got.merges[s].b, want[s].b);
      EXPECT_NEAR(got.merges[s].height, want[s].height, 1e-9);
    }
  }
}

TEST(Hac, HeightsAreMonotone) {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = hierarchical_cluster(random_points(rng, 12, 3));
    for (std::size_t s = 1; s < d.merges.size(); ++s) EXPECT_GE(d.merges[s].height, d.merges[s - 1].height - 1e-12);
  }
}

TEST(Hac, LeafOrderIsOptimalAmongTreeOrders) {
  Rng rng(33);
  for (int n = 2; n <= 8; ++n)
    for (int trial = 0; trial < 15; ++trial) {
      auto pts = random_points(rng, static_cast<std::size_t>(n), 3);
      auto dist = euclidean_distances(pts);
      auto d = hierarchical_cluster(pts);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& o : tree_orders(d, 2 * n - 2)) best = std::min(best, leaf_order_cost(o, dist));
      ASSERT_EQ(d.leaf_order.size(), static_cast<std::size_t>(n));
      EXPECT_EQ(std::set<int>(d.leaf_order.begin(), d.leaf_order.end()).size(), static_cast<std::size_t>(n));
      EXPECT_NEAR(leaf_order_cost(d.leaf_order, dist), best, 1e-9);
      auto orders = tree_orders(d, 2 * n - 2);
      EXPECT_NE(std::find(orders.begin(), orders.end(), d.leaf_order), orders.end());
    }
}

TEST(Hac, PermutationInvariantPartitions) {
  Rng rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_points(rng, 9, 3);
    std::vector<std::size_t> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<Vector> shuffled(9);
    for (std::size_t i = 0; i < 9; ++i) shuffled[i] = pts[perm[i]];
    auto a = hierarchical_cluster(pts), b = hierarchical_cluster(shuffled);
    for (std::size_t s = 0; s < a.merges.size(); ++s) EXPECT_NEAR(a.merges[s].height, b.merges[s].height, 1e-12);
    for (int k = 1; k <= 9; ++k) {
      auto ca = cut_dendrogram(a, k), cb = cut_dendrogram(b, k);
      for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j)
          EXPECT_EQ(ca.labels[perm[i]] == ca.labels[perm[j]], cb.labels[i] == cb.labels[j]);
    }
  }
}

TEST(Hac, CutExtremes) {
  Rng rng(35);
  auto d = hierarchical_cluster(random_points(rng, 6, 2));
  EXPECT_EQ(cut_dendrogram(d, 6).labels, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(cut_dendrogram(d, 1).labels, std::vector<int>(6, 0));
  EXPECT_EQ(cut_dendrogram(d, 3).k, 3);
  EXPECT_THROW(cut_dendrogram(d, 0), Error);
  EXPECT_THROW(cut_dendrogram(d, 7), Error);
}

TEST(Hac, InterconnectionsUseTransitionRows) {
  auto nodes = testutil::node_names(4);
  auto tm = transition_matrix(make_ds({{"A", "B", "A", "B"}, {"C", "D", "C"}, {"B", "A"}, {"D", "C", "D"}}), nodes);
  auto cut = cut_dendrogram(hac_interconnections(tm), 2);
  EXPECT_EQ(cut.labels, (std::vector<int>{0, 0, 1, 1}));
}

// ---------------------------------------------------------------------------
// Zone ratio

TEST(ZoneRatio, Examples) {
  std::map<std::string, std::string> zones{{"A", "I"}, {"B", "I"}, {"C", "II"}, {"D", "II"}};
  auto h = zone_ratio_distribution(make_ds({{"A", "B"}}), zones);
  EXPECT_EQ(h.counts[0][10], 1u);
  h = zone_ratio_distribution(make_ds({{"A", "C", "B", "D"}}), zones);
  EXPECT_EQ(h.counts[1][5], 1u);
}

TEST(ZoneRatio, MatchesEnumerationOracle) {
  Rng rng(40);
  std::map<std::string, std::string> zones;
  for (const auto& n : testutil::node_names(6)) zones[n] = n < "D" ? "I" : "II";
  auto ds = random_ds(rng, 6, 1000);
  std::array<std::array<std::size_t, 11>, 2> want{};
  for (const auto& t : ds.trajectories) {
    int in_one = 0;
    for (const auto& v : t.visits) in_one += zones[v.node] == "I";
    double ratio = static_cast<double>(in_one) / static_cast<double>(t.length());
    // nearest tenth, halves upward; the small offset absorbs binary representation error
    auto level = static_cast<std::size_t>(std::floor(ratio * 10.0 + 0.5 + 1e-9));
    ++want[t.length() > 3][level];
  }
  auto h = zone_ratio_distribution(ds, zones);
  double total = 0;
  for (int g = 0; g < 2; ++g)
    for (int l = 0; l < 11; ++l) {
      EXPECT_EQ(h.counts[g][l], want[g][l]);
      total += h.shares[g][l];
    }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(ZoneRatio, MissingZoneIsAnError) {
  std::map<std::string, std::string> zones{{"A", "I"}};
  EXPECT_THROW(zone_ratio_distribution(make_ds({{"A", "B"}}), zones), Error);
}
