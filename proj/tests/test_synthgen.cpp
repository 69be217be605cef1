#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace wifisense;

namespace {

SynthSpec clean_spec(std::uint64_t seed) {
  auto s = testutil::small_spec(seed);
  s.detection.dropout = 0.0;
  s.detection.leak_prob = 0.0;
  s.behavior.wander_prob = 0.0;
  s.nuisance.static_devices = 0;
  s.nuisance.vehicles_per_day = 0;
  return s;
}

std::string invalid_path(const SynthSpec& s) {
  try {
    validate(s);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidSpec);
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Synthgen, SameSeedSameBytes) {
  auto a = generate(testutil::small_spec(3));
  auto b = generate(testutil::small_spec(3));
  EXPECT_EQ(io::format_records_csv(a.records, "x"), io::format_records_csv(b.records, "x"));
  EXPECT_EQ(io::to_json(a.truth).dump(), io::to_json(b.truth).dump());
  auto c = generate(testutil::small_spec(4));
  EXPECT_NE(io::format_records_csv(a.records, "x"), io::format_records_csv(c.records, "x"));
}

TEST(Synthgen, RecordsReferenceKnownSniffersInsideTheirDay) {
  auto spec = testutil::small_spec(5);
  auto cfg = to_event_config(spec);
  auto corpus = generate(spec);
  ASSERT_FALSE(corpus.records.empty());
  for (const auto& r : corpus.records) {
    ASSERT_TRUE(cfg.node_for_source(r.source)) << r.source;
    ASSERT_LE(r.t_first, r.t_last);
    DayNumber d = cfg.day_of(r.t_first);
    ASSERT_GE(d, spec.start_day);
    ASSERT_LT(d, spec.start_day + spec.days);
  }
}

TEST(Synthgen, StaticDevicesOnlyLeaveDatasetAEmpty) {
  auto s = testutil::small_spec(6);
  s.days = 27;
  s.visitors_per_day = 0;
  s.nuisance.static_devices = 5;
  s.nuisance.vehicles_per_day = 0;
  auto corpus = generate(s);
  EXPECT_FALSE(corpus.records.empty());
  auto res = preprocess(corpus.records, to_event_config(s));
  EXPECT_TRUE(res.dataset_a.records.empty());
  EXPECT_EQ(res.removed_frequent_macs, 5u);
  EXPECT_TRUE(res.dataset_b.trajectories.empty());
}

TEST(Synthgen, VehiclesAreAllRemovedAsNonPedestrians) {
  auto s = testutil::small_spec(7);
  s.visitors_per_day = 0;
  s.nuisance.static_devices = 0;
  s.nuisance.vehicles_per_day = 300;
  s.local_share = 0.0;
  auto corpus = generate(s);
  auto res = preprocess(corpus.records, to_event_config(s));
  EXPECT_GT(res.raw_trajectories, 0u);
  EXPECT_TRUE(res.dataset_b.trajectories.empty());
}

TEST(Synthgen, SingleVendorMix) {
  auto s = testutil::small_spec(8);
  s.vendors = {{"X", 1.0, {Oui::parse("00:16:3e")}}};
  auto corpus = generate(s);
  auto res = preprocess(corpus.records, to_event_config(s));
  ASSERT_TRUE(res.vendors);
  EXPECT_DOUBLE_EQ(res.vendors->fractions.at("X"), 1.0);
  EXPECT_EQ(res.vendors->fractions.count(kOtherVendor), 0u);
}

TEST(Synthgen, TruthCoversEveryMacOnce) {
  auto s = testutil::small_spec(9);
  auto corpus = generate(s);
  std::set<MacAddress> macs;
  for (const auto& r : corpus.records) macs.insert(r.mac);
  std::set<MacAddress> truth_macs;
  for (const auto& d : corpus.truth.devices) EXPECT_TRUE(truth_macs.insert(d.mac).second);
  for (const auto& m : macs) EXPECT_TRUE(truth_macs.count(m)) << m.to_string();
  for (const auto& d : corpus.truth.devices)
    for (const auto& t : d.trajectories) {
      ASSERT_FALSE(t.visits.empty());
      for (std::size_t v = 0; v < t.visits.size(); ++v) {
        EXPECT_LE(t.visits[v].t_start, t.visits[v].t_end);
        if (v) {
          EXPECT_LT(t.visits[v - 1].t_end, t.visits[v].t_start);
        }
      }
    }
  EXPECT_EQ(corpus.truth.day_types.size(), 3u);
  EXPECT_EQ(corpus.truth.zones.at("A"), "I");
}

TEST(Synthgen, CleanDetectionReproducesTruthSequences) {
  auto s = clean_spec(10);
  auto cfg = to_event_config(s);
  auto corpus = generate(s);
  auto res = preprocess(corpus.records, cfg);
  std::size_t expected = 0;
  for (const auto& d : corpus.truth.devices)
    if (!d.mac.is_local()) expected += d.trajectories.size();
  EXPECT_EQ(res.dataset_b.trajectories.size(), expected);
  for (const auto& t : res.dataset_b.trajectories) {
    const auto* dev = corpus.truth.find(t.mac);
    ASSERT_NE(dev, nullptr);
    const TruthTrajectory* tt = nullptr;
    for (const auto& x : dev->trajectories)
      if (x.day == t.day) tt = &x;
    ASSERT_NE(tt, nullptr);
    std::vector<std::string> want;
    for (const auto& v : tt->visits)
      if (want.empty() || want.back() != v.node) want.push_back(v.node);
    std::vector<std::string> got;
    for (const auto& v : t.visits) got.push_back(v.node);
    EXPECT_EQ(got, want);
  }
}

TEST(Synthgen, PopularityAndVendorSharesConverge) {
  auto s = clean_spec(11);
  s.days = 1;
  s.visitors_per_day = 100000;
  s.behavior.length_weights = {1.0};
  s.local_share = 0.2;
  s.vendors = {{"X", 0.3, {Oui::parse("00:16:3e")}}, {"Y", 0.2, {Oui::parse("8c:77:12")}}, {"other", 0.5, {}}};
  for (std::size_t i = 0; i < s.nodes.size(); ++i) s.nodes[i].popularity = 1.0 + static_cast<double>(i % 4);
  auto cfg = to_event_config(s);
  auto res = preprocess(generate(s).records, cfg);
  double total = 0;
  for (const auto& n : s.nodes) total += n.popularity;
  auto pop = node_popularity(res.dataset_b, cfg.node_ids());
  for (std::size_t i = 0; i < s.nodes.size(); ++i) EXPECT_NEAR(pop[i].pass_ratio, s.nodes[i].popularity / total, 0.02);
  ASSERT_TRUE(res.vendors);
  EXPECT_NEAR(res.vendors->fractions.at("X"), 0.3, 0.01);
  EXPECT_NEAR(res.vendors->fractions.at("Y"), 0.2, 0.01);
  EXPECT_NEAR(res.vendors->fractions.at(kOtherVendor), 0.5, 0.01);
}

TEST(Synthgen, ValidationNamesTheField) {
  auto s = testutil::small_spec();
  EXPECT_EQ(invalid_path(s), "");
  s.behavior.length_weights = {0.5, 0.4};
  EXPECT_NE(invalid_path(s).find("behavior.length_weights"), std::string::npos);
  s = testutil::small_spec();
  s.vendors[0].share = 0.7;
  EXPECT_NE(invalid_path(s).find("vendors[].share"), std::string::npos);
  s = testutil::small_spec();
  s.day_types[0].curve.pop_back();
  EXPECT_NE(invalid_path(s).find("day_types[0].curve"), std::string::npos);
  s = testutil::small_spec();
  s.nodes[3].id = "A";
  EXPECT_NE(invalid_path(s).find("nodes[3].id"), std::string::npos);
  s = testutil::small_spec();
  s.schedule = {"flat", "holiday", "flat"};
  EXPECT_NE(invalid_path(s).find("schedule[1]"), std::string::npos);
  s = testutil::small_spec();
  s.detection.dropout = 1.5;
  EXPECT_NE(invalid_path(s).find("detection.dropout"), std::string::npos);
  EXPECT_THROW(generate(s), Error);
}
