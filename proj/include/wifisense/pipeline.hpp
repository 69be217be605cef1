#pragma once

// Stage orchestration: run manifest, per-stage report artifacts, output files.
//
// Artifacts are built in memory as strings so that their digests and row
// counts go into the manifest exactly as written.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wifisense/flow.hpp"
#include "wifisense/io.hpp"
#include "wifisense/preprocess.hpp"
#include "wifisense/shape.hpp"
#include "wifisense/spatial.hpp"
#include "wifisense/synthgen.hpp"
#include "wifisense/temporal.hpp"

namespace wifisense {

inline constexpr const char* kToolVersion = "1.0.0";

struct Artifact {
  std::string name;  // file name inside the output directory
  std::string content;
  std::size_t rows = 0;
};

struct StageOutput {
  std::vector<Artifact> artifacts;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, std::string>> summary;  // printed as "key: value"
};

struct ManifestOutput {
  std::string path;
  std::size_t rows = 0;
  std::string digest;
};

/// Inputs that determine a run, plus what it wrote. `hash()` covers only the
/// inputs, so identical inputs give an identical hash in every output file.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> input_digests;  // role -> digest
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  io::json parameters = io::json::object();
  std::vector<ManifestOutput> outputs;

  io::json inputs_json() const {
    return {{"command", command},
            {"config_hash", config_hash},
            {"input_digests", input_digests},
            {"seed", seed},
            {"tool_version", tool_version},
            {"parameters", parameters}};
  }

  std::string hash() const { return io::digest(inputs_json().dump()); }

  io::json to_json() const {
    auto j = inputs_json();
    j["manifest_hash"] = hash();
    j["outputs"] = io::json::array();
    for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"rows", o.rows}, {"digest", o.digest}});
    return j;
  }
};

/// Stage sub-seed from the root seed and the stage name.
inline std::uint64_t stage_seed(std::uint64_t root, std::string_view stage) { return derive_seed(root, stage); }

inline std::string config_hash(const EventConfig& cfg) { return io::digest(io::to_json(cfg).dump()); }

// ---------------------------------------------------------------------------
// Options

struct SpatialOptions {
  std::size_t permutations = kDefaultPermutations;
  std::string zone_one = "I";
};

struct TemporalOptions {
  int k_min = 2;
  int k_max = 8;
  int restarts = kDefaultRestarts;
  std::optional<int> k_override;
  int kshape_k = 4;
  std::optional<ClockRange> kshape_slice;  // whole window when absent
};

struct FlowOptions {
  std::vector<ClockRange> periods;  // config periods, then the defaults, when empty
  double threshold = kDefaultDominanceThreshold;
};

struct PipelineOptions {
  std::uint64_t seed = 0;
  PreprocessOptions preprocess;
  SpatialOptions spatial;
  TemporalOptions temporal;
  FlowOptions flow;
};

inline io::json to_json(const PipelineOptions& o) {
  io::json j;
  j["frequent_threshold_per_week"] = o.preprocess.frequent_threshold_per_week;
  j["combine_gap_s"] = o.preprocess.combine_gap_s;
  j["permutations"] = o.spatial.permutations;
  j["zone_one"] = o.spatial.zone_one;
  j["k_range"] = {o.temporal.k_min, o.temporal.k_max};
  j["restarts"] = o.temporal.restarts;
  j["k_override"] = o.temporal.k_override ? io::json(*o.temporal.k_override) : io::json();
  j["kshape_k"] = o.temporal.kshape_k;
  j["kshape_slice"] = o.temporal.kshape_slice ? io::json(o.temporal.kshape_slice->to_string()) : io::json();
  j["periods"] = io::json::array();
  for (const auto& p : o.flow.periods) j["periods"].push_back(p.to_string());
  j["dominance_threshold"] = o.flow.threshold;
  return j;
}

// ---------------------------------------------------------------------------
// Preprocessing

inline StageOutput preprocess_stage(const PreprocessResult& res, const std::string& manifest) {
  StageOutput out;
  out.artifacts.push_back({"dataset_a.ndjson", io::format_dataset_a(res.dataset_a, manifest), res.dataset_a.records.size()});
  out.artifacts.push_back({"dataset_b.ndjson", io::format_dataset_b(res.dataset_b, manifest), res.dataset_b.trajectories.size()});

  std::vector<std::pair<std::string, std::size_t>> counts{
      {"input_records", res.input_records},
      {"rssi_out_of_range", res.rssi_out_of_range},
      {"aggregated_records", res.aggregated_records},
      {"removed_frequent_macs", res.removed_frequent_macs},
      {"dataset_a_records", res.dataset_a.records.size()},
      {"dataset_a_macs", res.dataset_a.macs.size()},
      {"global_macs", res.global.macs.size()},
      {"local_macs", res.local.macs.size()},
      {"raw_trajectories", res.raw_trajectories},
      {"dataset_b_trajectories", res.dataset_b.trajectories.size()},
  };
  io::CsvBuilder csv(manifest, {"metric", "value"});
  for (const auto& [k, v] : counts) {
    csv.cell(k).cell(v);
    csv.end_row();
    out.summary.emplace_back(k, std::to_string(v));
  }
  out.artifacts.push_back({"preprocess_summary.csv", csv.str(), csv.rows()});

  if (res.vendors) {
    io::CsvBuilder v(manifest, {"vendor", "macs", "fraction"});
    for (const auto& [name, n] : res.vendors->counts) {
      v.cell(name).cell(n).cell(res.vendors->fractions.at(name));
      v.end_row();
    }
    out.artifacts.push_back({"vendor_share.csv", v.str(), v.rows()});
  }
  if (res.input_records == 0) out.warnings.push_back("input holds no records; outputs are empty");
  if (res.rssi_out_of_range) out.warnings.push_back(std::to_string(res.rssi_out_of_range) + " record(s) with RSSI outside [-100, 0] dBm");
  return out;
}

// ---------------------------------------------------------------------------
// Spatial

inline StageOutput spatial_stage(const DatasetB& ds, const EventConfig& cfg, const SpatialOptions& opts,
                                 std::uint64_t seed, const std::string& manifest) {
  StageOutput out;
  if (ds.trajectories.empty()) {
    out.warnings.push_back("dataset B is empty; spatial reports skipped");
    return out;
  }
  const auto nodes = cfg.node_ids();

  io::CsvBuilder split(manifest, {"length", "round_trip", "count", "share"});
  for (const auto& b : trajectory_split_table(ds)) {
    split.cell(b.length).cell(b.round_trip ? (*b.round_trip ? "Y" : "N") : "").cell(b.count).cell(b.share);
    split.end_row();
  }
  out.artifacts.push_back({"trajectory_split.csv", split.str(), split.rows()});

  auto pop = node_popularity(ds, nodes);
  std::optional<PoiCorrelation> corr;
  if (!cfg.pois.empty() && nodes.size() >= 3) {
    std::vector<double> ratios;
    for (const auto& p : pop) ratios.push_back(p.pass_ratio);
    try {
      corr = poi_correlation(ratios, cfg, opts.permutations, stage_seed(seed, "poi_permutation"));
    } catch (const Error& e) {
      out.warnings.push_back(std::string("POI correlation skipped: ") + e.what());
    }
  } else {
    out.warnings.push_back("POI correlation skipped: needs POIs and at least 3 nodes");
  }
  io::CsvBuilder popc(manifest, {"node", "passing", "pass_ratio", "single_node", "single_node_ratio", "poi_distance_m"});
  for (std::size_t i = 0; i < pop.size(); ++i) {
    popc.cell(pop[i].node).cell(pop[i].passing).cell(pop[i].pass_ratio).cell(pop[i].single_node).cell(pop[i].single_node_ratio);
    popc.cell(corr ? corr->distance_m[i] : std::numeric_limits<double>::quiet_NaN());
    popc.end_row();
  }
  out.artifacts.push_back({"node_popularity.csv", popc.str(), popc.rows()});
  if (corr) {
    io::CsvBuilder c(manifest, {"r", "p_value", "slope", "intercept", "nodes", "permutations"});
    c.cell(corr->r).cell(corr->p_value).cell(corr->slope).cell(corr->intercept).cell(nodes.size()).cell(corr->permutations);
    c.end_row();
    out.artifacts.push_back({"poi_correlation.csv", c.str(), c.rows()});
    out.summary.emplace_back("poi_r", io::format_number(corr->r));
  }

  auto tm = transition_matrix(ds, nodes);
  io::CsvBuilder tcsv(manifest, {"from", "to", "count", "probability"});
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      tcsv.cell(nodes[i]).cell(nodes[j]).cell(tm.N(i, j)).cell(tm.T(i, j));
      tcsv.end_row();
    }
  out.artifacts.push_back({"transition_matrix.csv", tcsv.str(), tcsv.rows()});
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (tm.no_outgoing[i]) out.warnings.push_back("node " + nodes[i] + " has no outgoing transitions");

  if (nodes.size() >= 2) {
    auto dend = hac_interconnections(tm);
    io::json j{{"manifest", manifest}, {"nodes", nodes}, {"merges", io::json::array()}, {"leaf_order", io::json::array()}};
    for (const auto& m : dend.merges) j["merges"].push_back({{"a", m.a}, {"b", m.b}, {"height", m.height}, {"size", m.size}});
    for (int leaf : dend.leaf_order) j["leaf_order"].push_back(nodes[static_cast<std::size_t>(leaf)]);
    out.artifacts.push_back({"dendrogram.json", j.dump(2) + "\n", dend.merges.size()});
  }

  if (!cfg.zones.empty()) {
    std::string zone_one = opts.zone_one;
    bool known = false;
    for (const auto& [n, z] : cfg.zones) known = known || z == zone_one;
    if (!known) zone_one = cfg.zones.begin()->second;
    try {
      auto h = zone_ratio_distribution(ds, cfg.zones, zone_one);
      io::CsvBuilder z(manifest, {"group", "zone_share", "count", "share"});
      for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t l = 0; l < ZoneRatioHistogram::kLevels; ++l) {
          z.cell(g == 0 ? "short" : "long").cell(static_cast<double>(l) / 10.0).cell(h.counts[g][l]).cell(h.shares[g][l]);
          z.end_row();
        }
      out.artifacts.push_back({"zone_ratio.csv", z.str(), z.rows()});
    } catch (const Error& e) {
      out.warnings.push_back(std::string("zone ratio skipped: ") + e.what());
    }
  }
  out.summary.emplace_back("trajectories", std::to_string(ds.trajectories.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Temporal

inline StageOutput temporal_stage(const DatasetA& ds, const EventConfig& cfg, const TemporalOptions& opts,
                                  std::uint64_t seed, const std::string& manifest) {
  StageOutput out;
  if (ds.records.empty()) {
    out.warnings.push_back("dataset A is empty; temporal reports skipped");
    return out;
  }
  auto grid = build_count_grid(ds, cfg);
  const auto& nodes = grid.nodes;
  io::CsvBuilder gcsv(manifest, {"day", "interval", "start", "node", "count"});
  for (std::size_t d = 0; d < grid.days.size(); ++d) {
    std::string day = format_day(grid.days[d]);
    for (std::size_t t = 0; t < grid.intervals; ++t) {
      std::string start = ClockTime{(cfg.daily_window.begin.seconds + static_cast<std::int64_t>(t) * grid.interval_seconds) %
                                    kSecondsPerDay}
                              .to_string();
      for (std::size_t n = 0; n < nodes.size(); ++n) {
        gcsv.cell(day).cell(t).cell(start).cell(nodes[n]).cell(grid.node_count(d, t, n));
        gcsv.end_row();
      }
      gcsv.cell(day).cell(t).cell(start).cell("all").cell(grid.overall_count(d, t));
      gcsv.end_row();
    }
  }
  out.artifacts.push_back({"count_grid.csv", gcsv.str(), gcsv.rows()});

  const int n_days = static_cast<int>(grid.days.size());
  if (n_days < 3) {
    out.warnings.push_back("fewer than 3 days; day clustering skipped");
    return out;
  }
  std::vector<Vector> curves;
  try {
    curves = minmax_normalize(grid.day_curves());
  } catch (const Error& e) {
    out.warnings.push_back(std::string("day clustering skipped: ") + e.what());
    return out;
  }
  int k_max = std::min(opts.k_max, n_days - 1);
  int k_min = std::min(opts.k_min, k_max);
  if (k_max < opts.k_max) out.warnings.push_back("k range clipped to " + std::to_string(k_min) + ".." + std::to_string(k_max));
  auto sel = select_k(curves, k_min, k_max, opts.restarts, stage_seed(seed, "kmeans"), opts.k_override);
  const auto& chosen = sel.runs.at(sel.chosen_k);

  io::json dj{{"manifest", manifest}, {"days", io::json::array()}, {"labels", chosen.labels}, {"k", chosen.k},
              {"best_k", sel.best_k}, {"chosen_k", sel.chosen_k}, {"silhouette", chosen.quality},
              {"silhouette_curve", io::json::array()}, {"centroids", chosen.centroids}};
  for (DayNumber d : grid.days) dj["days"].push_back(format_day(d));
  for (const auto& [k, s] : sel.curve) dj["silhouette_curve"].push_back({{"k", k}, {"silhouette", s}});
  out.artifacts.push_back({"day_clusters.json", dj.dump(2) + "\n", grid.days.size()});
  out.summary.emplace_back("days", std::to_string(n_days));
  out.summary.emplace_back("best_k", std::to_string(sel.best_k));

  std::size_t first = 0, last = grid.intervals;
  if (opts.kshape_slice) std::tie(first, last) = interval_slice(cfg, *opts.kshape_slice);
  io::CsvBuilder ncsv(manifest, {"day_cluster", "node", "cluster", "sbd_to_centroid"});
  io::json nj{{"manifest", manifest}, {"slice", {first, last}}, {"day_clusters", io::json::array()}};
  for (int c = 0; c < chosen.k; ++c) {
    std::vector<DayNumber> members;
    for (std::size_t d = 0; d < grid.days.size(); ++d)
      if (chosen.labels[d] == c) members.push_back(grid.days[d]);
    std::vector<Vector> node_curves;
    try {
      node_curves = node_count_curves(grid, members, first, last);
    } catch (const Error& e) {
      out.warnings.push_back("day cluster " + std::to_string(c) + ": node shapes skipped: " + e.what());
      continue;
    }
    int k = std::min<int>(opts.kshape_k, static_cast<int>(nodes.size()));
    auto ks = kshape(node_curves, k, stage_seed(seed, "kshape:" + std::to_string(c)));
    io::json cj{{"day_cluster", c}, {"labels", ks.labels}, {"centroids", ks.centroids}};
    nj["day_clusters"].push_back(std::move(cj));
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      int l = ks.labels[n];
      ncsv.cell(c).cell(nodes[n]).cell(l).cell(sbd(node_curves[n], ks.centroids[static_cast<std::size_t>(l)]).distance);
      ncsv.end_row();
    }
  }
  out.artifacts.push_back({"node_clusters.csv", ncsv.str(), ncsv.rows()});
  out.artifacts.push_back({"node_shapes.json", nj.dump(2) + "\n", nj["day_clusters"].size()});
  return out;
}

// ---------------------------------------------------------------------------
// Spatiotemporal

inline std::vector<ClockRange> effective_periods(const EventConfig& cfg, const FlowOptions& opts) {
  if (!opts.periods.empty()) return opts.periods;
  if (!cfg.periods.empty()) return cfg.periods;
  return default_periods();
}

inline StageOutput spatiotemporal_stage(const DatasetB& ds, const EventConfig& cfg, const FlowOptions& opts,
                                        const std::string& manifest) {
  StageOutput out;
  if (ds.trajectories.empty()) {
    out.warnings.push_back("dataset B is empty; spatiotemporal reports skipped");
    return out;
  }
  io::CsvBuilder lcsv(manifest, {"length", "samples", "median_duration_s", "sd_duration_s", "median_missing_s", "sd_missing_s"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : duration_vs_length(ds)) {
    lcsv.cell(s.length).cell(s.samples).cell(s.median_duration_s).cell(s.sd_duration_s.value_or(nan));
    lcsv.cell(s.median_missing_s).cell(s.sd_missing_s.value_or(nan));
    lcsv.end_row();
  }
  out.artifacts.push_back({"duration_by_length.csv", lcsv.str(), lcsv.rows()});

  const auto nodes = cfg.node_ids();
  auto periods = effective_periods(cfg, opts);
  auto per_period = period_transition_counts(ds, nodes, periods, cfg);
  std::map<std::pair<std::string, std::string>, Orientation> orient;
  io::CsvBuilder fcsv(manifest, {"period", "i", "j", "n_ij", "n_ji", "r_ij", "r_ji", "class", "from", "to", "orientation"});
  std::size_t dominant = 0;
  for (const auto& pc : per_period) {
    auto snap = direction_ratios(pc, nodes, opts.threshold);
    orient.clear();
    if (!cfg.ring_order.empty())
      for (const auto& o : flow_orientation(snap, cfg.ring_order)) orient[{o.from, o.to}] = o.orientation;
    for (const auto& l : snap.links) {
      fcsv.cell(pc.period.to_string()).cell(nodes[l.i]).cell(nodes[l.j]).cell(l.n_ij).cell(l.n_ji).cell(l.r_ij).cell(l.r_ji);
      fcsv.cell(l.dominant ? "dominant" : "mutual");
      if (l.dominant) {
        fcsv.cell(nodes[l.from]).cell(nodes[l.to]);
        auto it = orient.find({nodes[l.from], nodes[l.to]});
        fcsv.cell(it == orient.end() ? "" : to_string(it->second));
        ++dominant;
      } else {
        fcsv.cell("").cell("").cell("");
      }
      fcsv.end_row();
    }
  }
  out.artifacts.push_back({"link_flows.csv", fcsv.str(), fcsv.rows()});
  out.summary.emplace_back("dominant_links", std::to_string(dominant));
  return out;
}

// ---------------------------------------------------------------------------
// Synthesis

inline StageOutput synth_stage(const SynthSpec& spec, const std::string& manifest) {
  auto corpus = generate(spec);
  StageOutput out;
  out.artifacts.push_back({"records.csv", io::format_records_csv(corpus.records, manifest), corpus.records.size()});
  auto truth = io::to_json(corpus.truth);
  truth["manifest"] = manifest;
  out.artifacts.push_back({"truth.json", truth.dump() + "\n", corpus.truth.devices.size()});
  out.artifacts.push_back({"config.json", io::to_json(to_event_config(spec)).dump(2) + "\n", spec.nodes.size()});
  std::size_t peds = 0;
  for (const auto& d : corpus.truth.devices) peds += d.device_class == DeviceClass::Pedestrian;
  out.summary.emplace_back("records", std::to_string(corpus.records.size()));
  out.summary.emplace_back("devices", std::to_string(corpus.truth.devices.size()));
  out.summary.emplace_back("pedestrians", std::to_string(peds));
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline

/// preprocess -> spatial -> temporal -> spatiotemporal, all in memory.
inline StageOutput run_pipeline(std::span<const ProbeRecord> records, const EventConfig& cfg,
                                const PipelineOptions& opts, const std::string& manifest) {
  StageOutput all;
  auto merge = [&](StageOutput&& s) {
    for (auto& a : s.artifacts) all.artifacts.push_back(std::move(a));
    for (auto& w : s.warnings) all.warnings.push_back(std::move(w));
    for (auto& kv : s.summary) all.summary.push_back(std::move(kv));
  };
  auto pre = preprocess(records, cfg, opts.preprocess);
  merge(preprocess_stage(pre, manifest));
  merge(spatial_stage(pre.dataset_b, cfg, opts.spatial, stage_seed(opts.seed, "spatial"), manifest));
  merge(temporal_stage(pre.dataset_a, cfg, opts.temporal, stage_seed(opts.seed, "temporal"), manifest));
  merge(spatiotemporal_stage(pre.dataset_b, cfg, opts.flow, manifest));
  return all;
}

/// Writes every artifact into `dir` and records it in the manifest, then
/// writes `<manifest_name>`.
inline void write_outputs(const std::string& dir, const StageOutput& out, RunManifest& manifest,
                          const std::string& manifest_name = "manifest.json") {
  std::filesystem::create_directories(dir);
  for (const auto& a : out.artifacts) {
    io::write_file((std::filesystem::path(dir) / a.name).string(), a.content);
    manifest.outputs.push_back({a.name, a.rows, io::digest(a.content)});
  }
  io::write_file((std::filesystem::path(dir) / manifest_name).string(), manifest.to_json().dump(2) + "\n");
}

}  // namespace wifisense
