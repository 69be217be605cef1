#include <gtest/gtest.h>

#include <set>
#include <tuple>

#include "test_util.hpp"

using namespace wifisense;

namespace {

DatasetA random_dataset_a(Rng& rng, const EventConfig& cfg, DayNumber day0, int days, int records) {
  DatasetA ds;
  for (int i = 0; i < records; ++i) {
    DayNumber d = day0 + static_cast<DayNumber>(rng.index(static_cast<std::size_t>(days)));
    Timestamp ws = cfg.window_start(d);
    Timestamp a = ws + rng.between(-600, cfg.daily_window.length() - 1);
    if (a < ws) a = ws;
    Timestamp b = a + rng.between(0, 2400);
    auto node = cfg.nodes[rng.index(cfg.nodes.size())].id;
    ds.records.push_back({testutil::mac(1 + rng.index(40)), a, b, -70.0, node});
  }
  return ds;
}

}  // namespace

TEST(CountGrid, CountsUniqueMacsPerInterval) {
  auto cfg = testutil::make_config(2);
  DayNumber d = parse_day("2026-07-03");
  Timestamp ws = cfg.window_start(d);
  DatasetA ds;
  ds.records.push_back({testutil::mac(1), ws + 100, ws + 1000, -70, "A"});  // intervals 0 and 1
  ds.records.push_back({testutil::mac(1), ws + 200, ws + 300, -70, "A"});   // same MAC, interval 0
  ds.records.push_back({testutil::mac(1), ws + 950, ws + 960, -70, "B"});   // interval 1
  ds.records.push_back({testutil::mac(2), ws + 900, ws + 900, -70, "B"});   // boundary belongs to interval 1
  auto g = build_count_grid(ds, cfg);
  ASSERT_EQ(g.days, std::vector<DayNumber>{d});
  EXPECT_EQ(g.intervals, 20u);
  EXPECT_EQ(g.node_count(0, 0, 0), 1);
  EXPECT_EQ(g.node_count(0, 1, 0), 1);
  EXPECT_EQ(g.node_count(0, 1, 1), 2);
  EXPECT_EQ(g.overall_count(0, 0), 1);
  EXPECT_EQ(g.overall_count(0, 1), 2);
  EXPECT_EQ(g.overall_count(0, 2), 0);
}

TEST(CountGrid, MatchesSetOracle) {
  auto cfg = testutil::make_config(3);
  Rng rng(71);
  DayNumber day0 = parse_day("2026-07-01");
  auto ds = random_dataset_a(rng, cfg, day0, 4, 3000);
  auto g = build_count_grid(ds, cfg);
  const std::int64_t I = cfg.interval_seconds();
  std::map<std::tuple<DayNumber, std::int64_t, std::string>, std::set<std::uint64_t>> per_node;
  std::map<std::pair<DayNumber, std::int64_t>, std::set<std::uint64_t>> overall;
  for (const auto& r : ds.records) {
    DayNumber d = cfg.day_of(r.t_first);
    Timestamp ws = cfg.window_start(d);
    for (std::int64_t t = 0; t < cfg.intervals_per_day(); ++t) {
      Timestamp lo = ws + t * I, hi = lo + I;  // [lo, hi)
      if (r.t_first < hi && r.t_last >= lo) {
        per_node[{d, t, r.source}].insert(r.mac.to_u64());
        overall[{d, t}].insert(r.mac.to_u64());
      }
    }
  }
  for (std::size_t di = 0; di < g.days.size(); ++di)
    for (std::size_t t = 0; t < g.intervals; ++t) {
      auto T = static_cast<std::int64_t>(t);
      EXPECT_EQ(g.overall_count(di, t), static_cast<std::int64_t>(overall[{g.days[di], T}].size()));
      for (std::size_t n = 0; n < g.nodes.size(); ++n)
        EXPECT_EQ(g.node_count(di, t, n), static_cast<std::int64_t>(per_node[{g.days[di], T, g.nodes[n]}].size()));
    }
}

TEST(MinMax, Examples) {
  std::vector<Vector> grid{{0, 5}, {10, 5}};
  auto out = minmax_normalize(grid);
  EXPECT_EQ(out, (std::vector<Vector>{{0, 0.5}, {1, 0.5}}));
  std::vector<Vector> flat{{3, 3}, {3, 3}};
  try {
    minmax_normalize(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConstantGrid);
  }
}

TEST(Silhouette, MatchesDoubleLoop) {
  Rng rng(72);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 5 + rng.index(20);
    int k = 2 + static_cast<int>(rng.index(3));
    std::vector<Vector> pts(n, Vector(3));
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % static_cast<std::size_t>(k));
      for (double& x : pts[i]) x = rng.uniform() + labels[i];
    }
    rng.shuffle(labels);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::map<int, std::pair<double, int>> per;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        auto& [s, c] = per[labels[j]];
        s += euclidean(pts[i], pts[j]);
        ++c;
      }
      if (!per.count(labels[i])) continue;  // singleton contributes zero
      double a = per[labels[i]].first / per[labels[i]].second;
      double b = std::numeric_limits<double>::infinity();
      for (const auto& [l, sc] : per)
        if (l != labels[i]) b = std::min(b, sc.first / sc.second);
      total += (b - a) / std::max(a, b);
    }
    EXPECT_NEAR(silhouette(pts, labels).mean, total / static_cast<double>(n), 1e-12);
  }
}

TEST(KMeans, SeparatesObviousGroupsAndIsDeterministic) {
  std::vector<Vector> pts{{0, 0}, {0.1, 0}, {0, 0.1}, {5, 5}, {5.1, 5}, {5, 5.1}};
  auto a = kmeans(pts, 2, 10, 3);
  EXPECT_EQ(a.labels, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_GT(a.quality, 0.9);
  auto b = kmeans(pts, 2, 10, 3);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_THROW(kmeans(pts, 0, 10, 3), Error);
  EXPECT_THROW(kmeans(pts, 7, 10, 3), Error);
}

TEST(KMeans, LloydObjectiveNeverIncreases) {
  Rng rng(73);
  std::vector<Vector> pts(60, Vector(4));
  for (auto& p : pts)
    for (double& x : p) x = rng.uniform();
  std::vector<Vector> init{pts[0], pts[1], pts[2]};
  auto run = lloyd(pts, init);
  for (std::size_t i = 1; i < run.objective.size(); ++i) EXPECT_LE(run.objective[i], run.objective[i - 1] + 1e-12);
}

TEST(SelectK, RecoversPlantedClusterCount) {
  for (int planted : {2, 4}) {
    Rng rng(74 + static_cast<std::uint64_t>(planted));
    std::vector<Vector> pts;
    for (int c = 0; c < planted; ++c)
      for (int i = 0; i < 8; ++i) {
        Vector p(6, 0.0);
        p[static_cast<std::size_t>(c)] = 1.0;
        for (double& x : p) x += rng.normal(0.0, 0.03);
        pts.push_back(p);
      }
    auto sel = select_k(pts, 2, 8, 20, 5);
    EXPECT_EQ(sel.best_k, planted);
    EXPECT_EQ(sel.chosen_k, planted);
    EXPECT_EQ(sel.curve.size(), 7u);
    auto forced = select_k(pts, 2, 8, 20, 5, 3);
    EXPECT_EQ(forced.best_k, planted);
    EXPECT_EQ(forced.chosen_k, 3);
  }
}

TEST(SelectK, RejectsRangeOutsideData) {
  std::vector<Vector> pts(5, Vector{0.0});
  EXPECT_THROW(select_k(pts, 2, 5), Error);
  EXPECT_THROW(select_k(pts, 1, 3), Error);
}

TEST(NodeCurves, SliceAndNormalization) {
  auto cfg = testutil::make_config(2);
  DayNumber d = parse_day("2026-07-03");
  Timestamp ws = cfg.window_start(d);
  DatasetA ds;
  for (int t = 0; t < 20; ++t)
    for (int m = 0; m <= t; ++m) {
      ds.records.push_back({testutil::mac(static_cast<std::uint64_t>(m + 1)), ws + t * 900, ws + t * 900, -70, "A"});
      if (m <= (t % 4)) ds.records.push_back({testutil::mac(static_cast<std::uint64_t>(m + 1)), ws + t * 900, ws + t * 900, -70, "B"});
    }
  auto g = build_count_grid(ds, cfg);
  auto [first, last] = interval_slice(cfg, ClockRange::parse("19:00-22:00"));
  EXPECT_EQ(first, 0u);
  EXPECT_EQ(last, 12u);
  std::vector<DayNumber> days{d};
  auto curves = node_count_curves(g, days, first, last);
  ASSERT_EQ(curves.size(), 2u);
  for (const auto& c : curves) {
    ASSERT_EQ(c.size(), 12u);
    double s = 0, ss = 0;
    for (double v : c) {
      s += v;
      ss += v * v;
    }
    EXPECT_NEAR(s / 12, 0.0, 1e-12);
    EXPECT_NEAR(ss / 12, 1.0, 1e-12);
  }
  for (std::size_t i = 1; i < 12; ++i) EXPECT_GT(curves[0][i], curves[0][i - 1]);
  EXPECT_THROW(interval_slice(cfg, ClockRange::parse("19:10-20:00")), Error);
}
