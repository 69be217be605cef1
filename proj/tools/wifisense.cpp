// wifisense: probe-record crowd analytics from the command line.
//
//   wifisense synth          --spec spec.json --out DIR
//   wifisense preprocess     --records records.csv --config config.json --out DIR
//   wifisense spatial        --dataset-b DIR/dataset_b.ndjson --config config.json --out DIR
//   wifisense temporal       --dataset-a DIR/dataset_a.ndjson --config config.json --out DIR
//   wifisense spatiotemporal --dataset-b DIR/dataset_b.ndjson --config config.json --out DIR
//   wifisense run            --records records.csv --config config.json --out DIR
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <chrono>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "wifisense/wifisense.hpp"

namespace ws = wifisense;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string records, config, spec, dataset_a, dataset_b, out = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string k_range = "2..8";
  int k_override = 0;
  int restarts = ws::kDefaultRestarts;
  int interval_min = 0;
  double threshold = ws::kDefaultDominanceThreshold;
  std::string periods;
  int kshape_k = 4;
  std::string kshape_slice;
  std::size_t permutations = ws::kDefaultPermutations;
  std::string zone_one = "I";
  double frequent_threshold = ws::kDefaultFrequentThreshold;
};

std::pair<int, int> parse_k_range(const std::string& text) {
  auto dots = text.find("..");
  if (dots == std::string::npos) throw UsageError("--k-range expects MIN..MAX, got '" + text + "'");
  std::int64_t lo = 0, hi = 0;
  if (!ws::io::parse_int(text.substr(0, dots), lo) || !ws::io::parse_int(text.substr(dots + 2), hi) || lo < 2 || hi < lo)
    throw UsageError("--k-range expects 2 <= MIN <= MAX, got '" + text + "'");
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

std::vector<ws::ClockRange> parse_periods(const std::string& text) {
  std::vector<ws::ClockRange> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(ws::ClockRange::parse(item));
  return out;
}

// Config with flag overrides applied; problems are usage errors.
ws::EventConfig load_config(const Flags& f) {
  auto cfg = ws::io::read_event_config(f.config);
  if (f.interval_min > 0) {
    cfg.interval_minutes = f.interval_min;
    try {
      cfg.finalize();
    } catch (const ws::Error& e) {
      throw UsageError(std::string("--interval-min: ") + e.what());
    }
  }
  return cfg;
}

ws::PipelineOptions pipeline_options(const Flags& f) {
  ws::PipelineOptions o;
  o.seed = f.seed;
  o.preprocess.frequent_threshold_per_week = f.frequent_threshold;
  o.spatial.permutations = f.permutations;
  o.spatial.zone_one = f.zone_one;
  std::tie(o.temporal.k_min, o.temporal.k_max) = parse_k_range(f.k_range);
  if (f.restarts < 1) throw UsageError("--restarts must be at least 1");
  o.temporal.restarts = f.restarts;
  if (f.k_override > 0) o.temporal.k_override = f.k_override;
  if (f.kshape_k < 1) throw UsageError("--kshape-k must be at least 1");
  o.temporal.kshape_k = f.kshape_k;
  try {
    if (!f.kshape_slice.empty()) o.temporal.kshape_slice = ws::ClockRange::parse(f.kshape_slice);
    o.flow.periods = parse_periods(f.periods);
  } catch (const ws::Error& e) {
    throw UsageError(e.what());
  }
  if (!(f.threshold >= 0.0 && f.threshold <= 1.0)) throw UsageError("--dominance-threshold must lie in [0, 1]");
  o.flow.threshold = f.threshold;
  return o;
}

ws::RunManifest make_manifest(const std::string& command, const ws::EventConfig& cfg, const ws::PipelineOptions& o) {
  ws::RunManifest m;
  m.command = command;
  m.config_hash = ws::config_hash(cfg);
  m.seed = o.seed;
  m.parameters = ws::to_json(o);
  return m;
}

std::string load_input(ws::RunManifest& m, const std::string& role, const std::string& path) {
  if (path.empty()) throw UsageError("missing --" + role);
  auto text = ws::io::read_file(path);
  m.input_digests[role] = ws::io::digest(text);
  return text;
}

void report(const ws::StageOutput& out, const std::string& dir, const ws::RunManifest& m) {
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& [k, v] : out.summary) std::cout << k << ": " << v << "\n";
  std::cout << "manifest: " << m.hash() << "\n";
  std::cout << "wrote " << out.artifacts.size() << " file(s) to " << dir << "\n";
}

int cmd_synth(const Flags& f) {
  if (f.spec.empty()) throw UsageError("missing --spec");
  auto text = ws::io::read_file(f.spec);
  auto spec = ws::io::parse_synth_spec(std::string_view(text));
  if (f.seed_given) spec.seed = f.seed;
  ws::RunManifest m;
  m.command = "synth";
  m.config_hash = ws::io::digest(ws::io::json::parse(text).dump());
  m.input_digests["spec"] = ws::io::digest(text);
  m.seed = spec.seed;
  auto out = ws::synth_stage(spec, m.hash());
  ws::write_outputs(f.out, out, m, "manifest_synth.json");
  report(out, f.out, m);
  return 0;
}

int cmd_preprocess(const Flags& f) {
  auto cfg = load_config(f);
  auto opts = pipeline_options(f);
  auto m = make_manifest("preprocess", cfg, opts);
  auto records = ws::io::parse_records_csv(load_input(m, "records", f.records));
  auto res = ws::preprocess(records, cfg, opts.preprocess);
  auto out = ws::preprocess_stage(res, m.hash());
  ws::write_outputs(f.out, out, m, "manifest_preprocess.json");
  report(out, f.out, m);
  return 0;
}

int cmd_spatial(const Flags& f) {
  auto cfg = load_config(f);
  auto opts = pipeline_options(f);
  auto m = make_manifest("spatial", cfg, opts);
  auto ds = ws::io::parse_dataset_b(load_input(m, "dataset-b", f.dataset_b));
  auto out = ws::spatial_stage(ds, cfg, opts.spatial, ws::stage_seed(opts.seed, "spatial"), m.hash());
  ws::write_outputs(f.out, out, m, "manifest_spatial.json");
  report(out, f.out, m);
  return 0;
}

int cmd_temporal(const Flags& f) {
  auto cfg = load_config(f);
  auto opts = pipeline_options(f);
  auto m = make_manifest("temporal", cfg, opts);
  auto ds = ws::io::parse_dataset_a(load_input(m, "dataset-a", f.dataset_a));
  auto out = ws::temporal_stage(ds, cfg, opts.temporal, ws::stage_seed(opts.seed, "temporal"), m.hash());
  ws::write_outputs(f.out, out, m, "manifest_temporal.json");
  report(out, f.out, m);
  return 0;
}

int cmd_spatiotemporal(const Flags& f) {
  auto cfg = load_config(f);
  auto opts = pipeline_options(f);
  auto m = make_manifest("spatiotemporal", cfg, opts);
  auto ds = ws::io::parse_dataset_b(load_input(m, "dataset-b", f.dataset_b));
  auto out = ws::spatiotemporal_stage(ds, cfg, opts.flow, m.hash());
  ws::write_outputs(f.out, out, m, "manifest_spatiotemporal.json");
  report(out, f.out, m);
  return 0;
}

int cmd_run(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  auto cfg = load_config(f);
  auto opts = pipeline_options(f);
  auto m = make_manifest("run", cfg, opts);
  auto records = ws::io::parse_records_csv(load_input(m, "records", f.records));
  auto out = ws::run_pipeline(records, cfg, opts, m.hash());
  ws::write_outputs(f.out, out, m, "manifest_run.json");
  report(out, f.out, m);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "elapsed: " << secs << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowd analytics from passive WiFi probe records"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ws::kToolVersion);
  Flags f;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--out", f.out, "Output directory")->capture_default_str();
    c->add_option("--seed", f.seed, "Root seed for every randomised step")->capture_default_str();
  };
  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", f.config, "Event configuration JSON")->required();
    c->add_option("--interval-min", f.interval_min, "Count-grid interval in minutes (default: from config, 15)");
  };
  auto add_spatial = [&](CLI::App* c) {
    c->add_option("--permutations", f.permutations, "Permutations for the POI correlation p-value")->capture_default_str();
    c->add_option("--zone-one", f.zone_one, "Zone label counted by the zone-ratio histogram")->capture_default_str();
  };
  auto add_temporal = [&](CLI::App* c) {
    c->add_option("--k-range", f.k_range, "k-means k range MIN..MAX")->capture_default_str();
    c->add_option("--k-override", f.k_override, "Use this k instead of the Silhouette argmax");
    c->add_option("--restarts", f.restarts, "k-means restarts per k")->capture_default_str();
    c->add_option("--kshape-k", f.kshape_k, "k-shape clusters of node curves")->capture_default_str();
    c->add_option("--kshape-slice", f.kshape_slice, "Clock range for node curves, e.g. 19:00-22:00");
  };
  auto add_flow = [&](CLI::App* c) {
    c->add_option("--periods", f.periods, "Comma-separated periods, e.g. 19:00-20:00,20:00-24:00");
    c->add_option("--dominance-threshold", f.threshold, "Dominant-direction threshold")->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  synth->add_option("--spec", f.spec, "Synth spec JSON")->required();
  add_common(synth);

  auto* pre = app.add_subcommand("preprocess", "Records CSV to datasets A and B");
  pre->add_option("--records", f.records, "Probe-record CSV")->required();
  pre->add_option("--frequent-threshold", f.frequent_threshold, "Visit days per week above which a MAC is dropped")
      ->capture_default_str();
  add_config(pre);
  add_common(pre);

  auto* spatial = app.add_subcommand("spatial", "Popularity, transitions, interconnections, zones");
  spatial->add_option("--dataset-b", f.dataset_b, "Dataset B NDJSON")->required();
  add_config(spatial);
  add_common(spatial);
  add_spatial(spatial);

  auto* temporal = app.add_subcommand("temporal", "Count grids, day clusters, node shape clusters");
  temporal->add_option("--dataset-a", f.dataset_a, "Dataset A NDJSON")->required();
  add_config(temporal);
  add_common(temporal);
  add_temporal(temporal);

  auto* st = app.add_subcommand("spatiotemporal", "Duration against length, link direction ratios");
  st->add_option("--dataset-b", f.dataset_b, "Dataset B NDJSON")->required();
  add_config(st);
  add_common(st);
  add_flow(st);

  auto* run = app.add_subcommand("run", "Every stage from a records CSV");
  run->add_option("--records", f.records, "Probe-record CSV")->required();
  run->add_option("--frequent-threshold", f.frequent_threshold, "Visit days per week above which a MAC is dropped")
      ->capture_default_str();
  add_config(run);
  add_common(run);
  add_spatial(run);
  add_temporal(run);
  add_flow(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  for (auto* c : {synth})
    if (c->parsed()) f.seed_given = c->count("--seed") > 0;

  try {
    if (synth->parsed()) return cmd_synth(f);
    if (pre->parsed()) return cmd_preprocess(f);
    if (spatial->parsed()) return cmd_spatial(f);
    if (temporal->parsed()) return cmd_temporal(f);
    if (st->parsed()) return cmd_spatiotemporal(f);
    if (run->parsed()) return cmd_run(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ws::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
