#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace wifisense;

namespace {

const Artifact* find(const StageOutput& out, const std::string& name) {
  for (const auto& a : out.artifacts)
    if (a.name == name) return &a;
  return nullptr;
}

RunManifest manifest_for(const std::string& records_digest, std::uint64_t seed) {
  RunManifest m;
  m.command = "run";
  m.config_hash = "cfg";
  m.input_digests["records"] = records_digest;
  m.seed = seed;
  m.parameters = to_json(PipelineOptions{});
  return m;
}

}  // namespace

TEST(Manifest, HashDependsOnInputsOnly) {
  auto a = manifest_for("d1", 1), b = manifest_for("d1", 1);
  b.outputs.push_back({"x.csv", 3, "abc"});
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), manifest_for("d2", 1).hash());
  EXPECT_NE(a.hash(), manifest_for("d1", 2).hash());
  EXPECT_EQ(b.to_json()["manifest_hash"], a.hash());
  EXPECT_EQ(b.to_json()["outputs"].size(), 1u);
}

TEST(Pipeline, EmptyInputWarnsAndWritesEmptyDatasets) {
  auto cfg = testutil::make_config(3);
  std::vector<ProbeRecord> none;
  auto out = run_pipeline(none, cfg, {}, "m");
  ASSERT_NE(find(out, "dataset_a.ndjson"), nullptr);
  EXPECT_EQ(find(out, "dataset_a.ndjson")->rows, 0u);
  EXPECT_EQ(find(out, "dataset_b.ndjson")->rows, 0u);
  EXPECT_EQ(find(out, "transition_matrix.csv"), nullptr);
  bool warned = false;
  for (const auto& w : out.warnings) warned = warned || w.find("no records") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(Pipeline, ToyTransitionReport) {
  auto cfg = testutil::make_config(3);
  DatasetB ds;
  ds.trajectories.push_back(testutil::trajectory({testutil::visit("A", 0, 60), testutil::visit("B", 100, 160)}, 1));
  ds.trajectories.push_back(testutil::trajectory({testutil::visit("A", 0, 60), testutil::visit("C", 100, 160)}, 2));
  auto out = spatial_stage(ds, cfg, {}, 1, "m");
  const auto* t = find(out, "transition_matrix.csv");
  ASSERT_NE(t, nullptr);
  auto rows = io::parse_csv(t->content);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0].fields, (std::vector<std::string>{"from", "to", "count", "probability"}));
  EXPECT_EQ(rows[1].fields, (std::vector<std::string>{"A", "A", "0", "1"}));
  EXPECT_EQ(rows[2].fields, (std::vector<std::string>{"A", "B", "1", "0.5"}));
  EXPECT_EQ(rows[3].fields, (std::vector<std::string>{"A", "C", "1", "0.5"}));
  EXPECT_EQ(rows[4].fields, (std::vector<std::string>{"B", "A", "0", "0"}));
  EXPECT_EQ(t->content.rfind("# manifest=m\n", 0), 0u);
  bool flagged = false;
  for (const auto& w : out.warnings) flagged = flagged || w == "node B has no outgoing transitions";
  EXPECT_TRUE(flagged);
}

TEST(Pipeline, SameInputsSameBytes) {
  auto spec = testutil::small_spec(21);
  auto cfg = to_event_config(spec);
  auto recs = generate(spec).records;
  PipelineOptions opts;
  opts.seed = 5;
  opts.spatial.permutations = 500;
  opts.temporal.restarts = 5;
  auto a = run_pipeline(recs, cfg, opts, "m");
  auto b = run_pipeline(recs, cfg, opts, "m");
  ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
  for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
    EXPECT_EQ(a.artifacts[i].name, b.artifacts[i].name);
    EXPECT_EQ(a.artifacts[i].content, b.artifacts[i].content) << a.artifacts[i].name;
  }
}

TEST(Pipeline, DatasetBCountMatchesTruthUnderCleanDetection) {
  auto spec = testutil::small_spec(22);
  spec.detection.dropout = 0.0;
  spec.detection.leak_prob = 0.0;
  spec.behavior.wander_prob = 0.0;
  spec.nuisance.static_devices = 0;
  auto cfg = to_event_config(spec);
  auto corpus = generate(spec);
  auto out = run_pipeline(corpus.records, cfg, {}, "m");
  std::size_t pedestrians = 0;
  for (const auto& d : corpus.truth.devices)
    if (d.device_class == DeviceClass::Pedestrian && !d.mac.is_local()) pedestrians += d.trajectories.size();
  EXPECT_EQ(find(out, "dataset_b.ndjson")->rows, pedestrians);
  auto ds = io::parse_dataset_b(find(out, "dataset_b.ndjson")->content);
  EXPECT_EQ(ds.trajectories.size(), pedestrians);
}

TEST(Pipeline, PlantedDayTypesGiveSilhouettePeakAtFour) {
  auto spec = testutil::small_spec(23);
  spec.days = 16;
  spec.visitors_per_day = 600;
  spec.nuisance.static_devices = 0;
  spec.nuisance.vehicles_per_day = 0;
  spec.day_types.clear();
  for (int q = 0; q < 4; ++q) {
    std::vector<double> curve(20, 0.02);
    for (int t = 5 * q; t < 5 * q + 5; ++t) curve[static_cast<std::size_t>(t)] = 1.0;
    spec.day_types.push_back({"type" + std::to_string(q), 1.0, curve});
  }
  for (int d = 0; d < 16; ++d) spec.schedule.push_back("type" + std::to_string(d % 4));
  auto cfg = to_event_config(spec);
  auto recs = generate(spec).records;
  PipelineOptions opts;
  opts.temporal.restarts = 20;
  auto out = run_pipeline(recs, cfg, opts, "m");
  const auto* dc = find(out, "day_clusters.json");
  ASSERT_NE(dc, nullptr);
  auto j = io::json::parse(dc->content);
  EXPECT_EQ(j["best_k"], 4);
  auto labels = j["labels"].get<std::vector<int>>();
  ASSERT_EQ(labels.size(), 16u);
  for (int d = 0; d < 16; ++d) EXPECT_EQ(labels[static_cast<std::size_t>(d)], labels[static_cast<std::size_t>(d % 4)]);
}

TEST(Pipeline, OutputsAreWrittenWithManifest) {
  auto dir = std::filesystem::temp_directory_path() / "wifisense_pipeline_test";
  std::filesystem::remove_all(dir);
  StageOutput out;
  out.artifacts.push_back({"a.csv", "# manifest=m\nx\n1\n", 1});
  auto m = manifest_for("d", 1);
  write_outputs(dir.string(), out, m, "manifest_run.json");
  auto j = io::json::parse(io::read_file((dir / "manifest_run.json").string()));
  EXPECT_EQ(j["outputs"][0]["path"], "a.csv");
  EXPECT_EQ(j["outputs"][0]["digest"], io::digest("# manifest=m\nx\n1\n"));
  EXPECT_EQ(io::read_file((dir / "a.csv").string()), "# manifest=m\nx\n1\n");
  std::filesystem::remove_all(dir);
}
