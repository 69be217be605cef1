#pragma once

// Synthetic probe-record corpora with planted, machine-readable ground truth.
//
// Pedestrians walk between nodes following a zone / ring movement model,
// dwell at each node and are sensed by both sniffers of the node in
// fixed-length combined records with independent dropout. Static devices sit
// at one node every day; vehicles cross a few nodes with instantaneous
// detections only. Locally administered addresses are redrawn every day.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "wifisense/core.hpp"
#include "wifisense/flow.hpp"
#include "wifisense/random.hpp"

namespace wifisense {

struct SynthNode {
  std::string id;
  GeoPoint location;
  std::string zone;
  double popularity = 1.0;
};

struct DayType {
  std::string name;
  double magnitude = 1.0;     // multiplier on visitors_per_day
  std::vector<double> curve;  // arrival intensity per interval of the daily window
};

struct VendorMix {
  std::string name;
  double share = 0.0;
  std::vector<Oui> prefixes;  // empty: addresses get OUIs outside every listed prefix
};

struct FlowBias {
  ClockRange period;
  double clockwise = 0.5;  // probability that a ring step goes to the next node
};

struct BehaviorMix {
  std::vector<double> length_weights{0.6, 0.2, 0.1, 0.05, 0.05};  // P(length = 1, 2, ...)
  double round_trip_prob = 0.3;
  double cross_zone_prob = 0.05;
  double ring_step_prob = 0.5;
  std::int64_t dwell_min_s = 180, dwell_max_s = 1200;
  std::int64_t walk_min_s = 60, walk_max_s = 600;
  double wander_prob = 0.1;  // chance of an undetected stretch inside a dwell
  std::int64_t wander_min_s = 360, wander_max_s = 900;
};

struct DetectionModel {
  std::int64_t record_span_s = 180;
  double dropout = 0.1;
  double rssi_mean = -70.0;
  double rssi_sd = 6.0;
  double leak_prob = 0.05;  // per record chunk: also heard by a ring neighbour
  double leak_rssi_drop = 12.0;
};

struct NuisanceModel {
  int static_devices = 5;
  int vehicles_per_day = 100;
  std::int64_t vehicle_step_s = 20;
};

struct SynthSpec {
  std::uint64_t seed = 1;
  int days = 7;
  DayNumber start_day = 0;
  std::int64_t utc_offset_s = 0;
  ClockRange daily_window{ClockTime{19 * 3600}, ClockTime{24 * 3600}};
  int interval_minutes = 15;
  std::vector<SynthNode> nodes;  // listed in ring order
  bool ring_closed = true;
  std::vector<Poi> pois;
  std::vector<DayType> day_types;
  std::vector<std::string> schedule;  // day-type name per day; empty cycles through day_types
  std::int64_t visitors_per_day = 1000;
  double local_share = 0.4;
  std::vector<VendorMix> vendors;
  BehaviorMix behavior;
  DetectionModel detection;
  NuisanceModel nuisance;
  std::vector<FlowBias> flow_biases;
};

enum class DeviceClass { Pedestrian, Static, Vehicle };

inline const char* to_string(DeviceClass c) {
  switch (c) {
    case DeviceClass::Pedestrian: return "pedestrian";
    case DeviceClass::Static: return "static";
    case DeviceClass::Vehicle: return "vehicle";
  }
  return "unknown";
}

struct TruthVisit {
  std::string node;
  Timestamp t_start = 0;
  Timestamp t_end = 0;
};

struct TruthTrajectory {
  DayNumber day = 0;
  std::vector<TruthVisit> visits;
};

struct TruthDevice {
  MacAddress mac;
  DeviceClass device_class = DeviceClass::Pedestrian;
  std::string vendor;
  std::vector<TruthTrajectory> trajectories;  // one per day the device is present
};

struct GroundTruth {
  std::vector<TruthDevice> devices;  // sorted by mac
  std::map<std::string, std::string> zones;
  std::vector<std::pair<DayNumber, std::string>> day_types;
  std::map<std::string, double> vendor_shares;
  std::vector<FlowBias> flow_biases;

  const TruthDevice* find(const MacAddress& mac) const {
    auto it = std::lower_bound(devices.begin(), devices.end(), mac,
                               [](const TruthDevice& d, const MacAddress& m) { return d.mac < m; });
    return it != devices.end() && it->mac == mac ? &*it : nullptr;
  }
};

struct SynthCorpus {
  std::vector<ProbeRecord> records;  // ordered by (day, t_first, mac, source)
  GroundTruth truth;
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

[[noreturn]] inline void bad_spec(const std::string& path, const std::string& why) {
  throw Error(Errc::InvalidSpec, path + ": " + why);
}

inline void check_prob(double p, const std::string& path) {
  if (!(p >= 0.0 && p <= 1.0)) bad_spec(path, "probability must lie in [0, 1]");
}

inline void check_mixture(const std::vector<double>& w, const std::string& path) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    check_prob(w[i], path + "[" + std::to_string(i) + "]");
    s += w[i];
  }
  if (w.empty() || std::abs(s - 1.0) > 1e-9) bad_spec(path, "weights must sum to 1");
}

inline void check_range(std::int64_t lo, std::int64_t hi, const std::string& path) {
  if (lo < 0 || hi < lo) bad_spec(path, "expected 0 <= min <= max");
}

}  // namespace detail

inline std::int64_t intervals_per_day(const SynthSpec& spec) {
  return spec.daily_window.length() / (static_cast<std::int64_t>(spec.interval_minutes) * 60);
}

inline void validate(const SynthSpec& spec) {
  using detail::bad_spec;
  if (spec.days < 1) bad_spec("days", "must be at least 1");
  if (spec.interval_minutes <= 0) bad_spec("interval_minutes", "must be positive");
  if (spec.daily_window.length() % (spec.interval_minutes * 60) != 0)
    bad_spec("interval_minutes", "must divide the daily window");
  if (spec.nodes.size() < 2) bad_spec("nodes", "at least 2 nodes required");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const auto& n = spec.nodes[i];
    std::string p = "nodes[" + std::to_string(i) + "]";
    if (n.id.empty() || !ids.insert(n.id).second) bad_spec(p + ".id", "missing or duplicate id");
    if (!(n.popularity >= 0.0)) bad_spec(p + ".popularity", "must be non-negative");
  }
  if (spec.day_types.empty()) bad_spec("day_types", "at least one day type required");
  const auto T = static_cast<std::size_t>(intervals_per_day(spec));
  std::set<std::string> type_names;
  for (std::size_t i = 0; i < spec.day_types.size(); ++i) {
    const auto& d = spec.day_types[i];
    std::string p = "day_types[" + std::to_string(i) + "]";
    if (!type_names.insert(d.name).second) bad_spec(p + ".name", "duplicate day type");
    if (d.curve.size() != T) bad_spec(p + ".curve", "needs one value per interval (" + std::to_string(T) + ")");
    double s = 0.0;
    for (double v : d.curve) {
      if (!(v >= 0.0)) bad_spec(p + ".curve", "values must be non-negative");
      s += v;
    }
    if (!(s > 0.0)) bad_spec(p + ".curve", "must have positive mass");
    if (!(d.magnitude >= 0.0)) bad_spec(p + ".magnitude", "must be non-negative");
  }
  for (std::size_t i = 0; i < spec.schedule.size(); ++i)
    if (!type_names.count(spec.schedule[i]))
      bad_spec("schedule[" + std::to_string(i) + "]", "unknown day type '" + spec.schedule[i] + "'");
  if (!spec.schedule.empty() && spec.schedule.size() != static_cast<std::size_t>(spec.days))
    bad_spec("schedule", "needs one entry per day");
  if (spec.visitors_per_day < 0) bad_spec("visitors_per_day", "must be non-negative");
  detail::check_prob(spec.local_share, "local_share");
  std::vector<double> shares;
  for (const auto& v : spec.vendors) shares.push_back(v.share);
  if (!spec.vendors.empty()) detail::check_mixture(shares, "vendors[].share");
  const auto& b = spec.behavior;
  detail::check_mixture(b.length_weights, "behavior.length_weights");
  detail::check_prob(b.round_trip_prob, "behavior.round_trip_prob");
  detail::check_prob(b.cross_zone_prob, "behavior.cross_zone_prob");
  detail::check_prob(b.ring_step_prob, "behavior.ring_step_prob");
  detail::check_prob(b.wander_prob, "behavior.wander_prob");
  detail::check_range(b.dwell_min_s, b.dwell_max_s, "behavior.dwell_s");
  if (b.dwell_min_s < 1) bad_spec("behavior.dwell_s", "minimum dwell must be at least 1 s");
  detail::check_range(b.walk_min_s, b.walk_max_s, "behavior.walk_s");
  detail::check_range(b.wander_min_s, b.wander_max_s, "behavior.wander_s");
  const auto& d = spec.detection;
  if (d.record_span_s < 1) bad_spec("detection.record_span_s", "must be positive");
  detail::check_prob(d.dropout, "detection.dropout");
  detail::check_prob(d.leak_prob, "detection.leak_prob");
  if (!(d.rssi_sd >= 0.0)) bad_spec("detection.rssi_sd", "must be non-negative");
  if (spec.nuisance.static_devices < 0) bad_spec("nuisance.static_devices", "must be non-negative");
  if (spec.nuisance.vehicles_per_day < 0) bad_spec("nuisance.vehicles_per_day", "must be non-negative");
  if (spec.nuisance.vehicle_step_s < 1) bad_spec("nuisance.vehicle_step_s", "must be positive");
  for (std::size_t i = 0; i < spec.flow_biases.size(); ++i)
    detail::check_prob(spec.flow_biases[i].clockwise, "flow_biases[" + std::to_string(i) + "].clockwise");
}

// ---------------------------------------------------------------------------
// Event configuration matching a spec

inline std::string sniffer_id(const std::string& node, int k) { return node + "-" + std::to_string(k); }

inline std::vector<ClockRange> spec_periods(const SynthSpec& spec) {
  std::vector<ClockRange> periods;
  for (const auto& f : spec.flow_biases) periods.push_back(f.period);
  return periods;
}

/// Event configuration describing the generated corpus: two sniffers per
/// node, zones, ring order, periods and an OUI table built from the vendor mix.
inline EventConfig to_event_config(const SynthSpec& spec) {
  EventConfig cfg;
  for (const auto& n : spec.nodes) {
    cfg.nodes.push_back({n.id, {sniffer_id(n.id, 1), sniffer_id(n.id, 2)}, n.location});
    if (!n.zone.empty()) cfg.zones[n.id] = n.zone;
    cfg.ring_order.push_back(n.id);
  }
  cfg.pois = spec.pois;
  cfg.daily_window = spec.daily_window;
  cfg.interval_minutes = spec.interval_minutes;
  cfg.utc_offset_s = spec.utc_offset_s;
  for (const auto& v : spec.vendors)
    for (const auto& p : v.prefixes) cfg.oui_table[p] = v.name;
  cfg.finalize();
  auto periods = spec_periods(spec);
  try {
    if (!periods.empty()) period_offsets(cfg, periods);
  } catch (const Error&) {
    periods.clear();
  }
  if (periods.empty()) {
    try {
      periods = default_periods();
      period_offsets(cfg, periods);
    } catch (const Error&) {
      periods = {spec.daily_window};
    }
  }
  cfg.periods = periods;
  return cfg;
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

class CorpusBuilder {
 public:
  explicit CorpusBuilder(const SynthSpec& spec) : spec_(spec), cfg_(to_event_config(spec)) {
    for (const auto& v : spec.vendors)
      for (const auto& p : v.prefixes) listed_.insert(p);
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) zone_members_[spec.nodes[i].zone].push_back(i);
    for (const auto& n : spec.nodes) popularity_.push_back(n.popularity);
    for (const auto& v : spec.vendors) vendor_weights_.push_back(v.share);
  }

  SynthCorpus build() {
    const auto& nz = spec_.nuisance;
    Rng static_rng(derive_seed(spec_.seed, "static"));
    for (int s = 0; s < nz.static_devices; ++s) {
      TruthDevice dev;
      dev.device_class = DeviceClass::Static;
      dev.mac = draw_global_mac(static_rng, dev.vendor);
      std::size_t node = static_rng.index(spec_.nodes.size());
      statics_.push_back({devices_.size(), node});
      devices_.push_back(std::move(dev));
    }

    for (int d = 0; d < spec_.days; ++d) {
      Rng rng(derive_seed(spec_.seed, static_cast<std::uint64_t>(d)));
      DayNumber day = spec_.start_day + d;
      const DayType& type = day_type(d);
      truth_.day_types.emplace_back(day, type.name);
      Timestamp ws = cfg_.window_start(day);
      Timestamp we = ws + spec_.daily_window.length();

      for (auto [dev, node] : statics_) {
        TruthTrajectory tt{day, {{spec_.nodes[node].id, ws, we}}};
        emit_dwell(rng, devices_[dev].mac, node, ws, we, false);
        devices_[dev].trajectories.push_back(std::move(tt));
      }

      auto visitors = static_cast<std::int64_t>(std::llround(static_cast<double>(spec_.visitors_per_day) * type.magnitude));
      for (std::int64_t v = 0; v < visitors; ++v) generate_visitor(rng, day, type, ws, we);
      for (int v = 0; v < nz.vehicles_per_day; ++v) generate_vehicle(rng, day, ws, we);
    }

    SynthCorpus out;
    std::sort(records_.begin(), records_.end(), [&](const ProbeRecord& a, const ProbeRecord& b) {
      return std::make_tuple(cfg_.day_of(a.t_first), a.t_first, a.mac, a.source, a.t_last, a.rssi) <
             std::make_tuple(cfg_.day_of(b.t_first), b.t_first, b.mac, b.source, b.t_last, b.rssi);
    });
    out.records = std::move(records_);
    std::sort(devices_.begin(), devices_.end(), [](const TruthDevice& a, const TruthDevice& b) { return a.mac < b.mac; });
    truth_.devices = std::move(devices_);
    for (const auto& n : spec_.nodes)
      if (!n.zone.empty()) truth_.zones[n.id] = n.zone;
    for (const auto& v : spec_.vendors) truth_.vendor_shares[v.name] = v.share;
    truth_.flow_biases = spec_.flow_biases;
    out.truth = std::move(truth_);
    return out;
  }

 private:
  const DayType& day_type(int d) const {
    if (!spec_.schedule.empty()) {
      for (const auto& t : spec_.day_types)
        if (t.name == spec_.schedule[static_cast<std::size_t>(d)]) return t;
    }
    return spec_.day_types[static_cast<std::size_t>(d) % spec_.day_types.size()];
  }

  MacAddress unique_mac(Rng& rng, std::array<std::uint8_t, 3> prefix, bool random_prefix, bool local) {
    for (;;) {
      std::uint64_t bits = rng.next();
      std::array<std::uint8_t, 6> o{};
      for (int i = 0; i < 6; ++i) o[i] = static_cast<std::uint8_t>(bits >> (8 * i));
      if (!random_prefix) std::copy(prefix.begin(), prefix.end(), o.begin());
      o[0] &= static_cast<std::uint8_t>(~MacAddress::kMulticastBit);
      if (local)
        o[0] |= MacAddress::kLocalBit;
      else
        o[0] &= static_cast<std::uint8_t>(~MacAddress::kLocalBit);
      MacAddress mac(o);
      if (random_prefix && !local && listed_.count(mac.oui_prefix())) continue;
      if (used_.insert(mac.to_u64()).second) return mac;
    }
  }

  MacAddress draw_global_mac(Rng& rng, std::string& vendor) {
    if (spec_.vendors.empty()) {
      vendor = kOtherVendor;
      return unique_mac(rng, {}, true, false);
    }
    const auto& v = spec_.vendors[rng.weighted(vendor_weights_)];
    vendor = v.name;
    if (v.prefixes.empty()) return unique_mac(rng, {}, true, false);
    return unique_mac(rng, v.prefixes[rng.index(v.prefixes.size())].octets, false, false);
  }

  double clockwise_prob(Timestamp t, Timestamp ws) const {
    std::int64_t off = t - ws;
    for (const auto& f : spec_.flow_biases) {
      std::int64_t b = cfg_.clock_offset(f.period.begin);
      if (off >= b && off < b + f.period.length()) return f.clockwise;
    }
    return 0.5;
  }

  std::size_t ring_step(std::size_t i, bool clockwise) const {
    const std::size_t n = spec_.nodes.size();
    if (spec_.ring_closed) return clockwise ? (i + 1) % n : (i + n - 1) % n;
    if (clockwise) return i + 1 < n ? i + 1 : i - 1;
    return i > 0 ? i - 1 : i + 1;
  }

  std::size_t next_node(Rng& rng, std::size_t i, double cw) const {
    const auto& b = spec_.behavior;
    const std::string& zone = spec_.nodes[i].zone;
    if (zone_members_.size() > 1 && rng.bernoulli(b.cross_zone_prob)) {
      std::vector<std::size_t> other;
      for (std::size_t j = 0; j < spec_.nodes.size(); ++j)
        if (spec_.nodes[j].zone != zone) other.push_back(j);
      return other[rng.index(other.size())];
    }
    if (!rng.bernoulli(b.ring_step_prob)) {
      std::vector<std::size_t> same;
      for (std::size_t j : zone_members_.at(zone))
        if (j != i) same.push_back(j);
      if (!same.empty()) return same[rng.index(same.size())];
    }
    return ring_step(i, rng.bernoulli(cw));
  }

  void emit(Rng& rng, const MacAddress& mac, std::size_t node, int sniffer, Timestamp a, Timestamp b, double rssi_shift) {
    const auto& det = spec_.detection;
    double rssi = std::round(rng.normal(det.rssi_mean - rssi_shift, det.rssi_sd) * 100.0) / 100.0;
    records_.push_back({mac, a, b, rssi, sniffer_id(spec_.nodes[node].id, sniffer)});
  }

  // Presence at `node` over [a, b]: one record chunk per record_span_s from
  // each sniffer unless dropped, optionally a leaked point detection at a
  // ring neighbour, and optionally an undetected wander stretch.
  void emit_dwell(Rng& rng, const MacAddress& mac, std::size_t node, Timestamp a, Timestamp b, bool may_wander) {
    const auto& det = spec_.detection;
    const auto& beh = spec_.behavior;
    Timestamp hole_lo = 0, hole_hi = 0;
    if (may_wander && rng.bernoulli(beh.wander_prob)) {
      std::int64_t len = rng.between(beh.wander_min_s, beh.wander_max_s);
      if (b - a > len + 2 * det.record_span_s) {
        hole_lo = rng.between(a + det.record_span_s, b - det.record_span_s - len);
        hole_hi = hole_lo + len;
      }
    }
    for (Timestamp c = a; c < b || (c == a && a == b); c += det.record_span_s) {
      Timestamp e = std::min(b, c + det.record_span_s);
      if (hole_hi > hole_lo && e > hole_lo && c < hole_hi) {
        // chunks overlapping the wander stretch are shortened to its edges
        if (c < hole_lo) e = hole_lo;
        else if (e > hole_hi) c = hole_hi;
        else continue;
      }
      for (int s = 1; s <= 2; ++s)
        if (!rng.bernoulli(det.dropout)) emit(rng, mac, node, s, c, e, 0.0);
      if (rng.bernoulli(det.leak_prob)) {
        std::size_t other = ring_step(node, rng.bernoulli(0.5));
        if (other != node) {
          Timestamp t = rng.between(c, e);
          emit(rng, mac, other, 1 + static_cast<int>(rng.index(2)), t, t, det.leak_rssi_drop);
        }
      }
      if (a == b) break;
    }
  }

  void generate_visitor(Rng& rng, DayNumber day, const DayType& type, Timestamp ws, Timestamp we) {
    const auto& beh = spec_.behavior;
    TruthDevice dev;
    dev.device_class = DeviceClass::Pedestrian;
    bool local = rng.bernoulli(spec_.local_share);
    if (local) {
      dev.mac = unique_mac(rng, {}, true, true);
      dev.vendor = "local";
    } else {
      dev.mac = draw_global_mac(rng, dev.vendor);
    }

    const std::int64_t I = static_cast<std::int64_t>(spec_.interval_minutes) * 60;
    std::size_t slot = rng.weighted(type.curve);
    Timestamp t = ws + static_cast<std::int64_t>(slot) * I + rng.between(0, I - 1);
    std::size_t length = rng.weighted(beh.length_weights) + 1;
    std::size_t node = rng.weighted(popularity_);
    std::size_t first = node;
    bool round_trip = length >= 3 && rng.bernoulli(beh.round_trip_prob);

    TruthTrajectory tt{day, {}};
    for (std::size_t k = 0; k < length && (k == 0 || t < we - 60); ++k) {
      Timestamp leave = std::min(we, t + rng.between(beh.dwell_min_s, beh.dwell_max_s));
      tt.visits.push_back({spec_.nodes[node].id, t, leave});
      emit_dwell(rng, dev.mac, node, t, leave, true);
      double cw = clockwise_prob(leave, ws);
      t = leave + rng.between(beh.walk_min_s, beh.walk_max_s);
      std::size_t next = next_node(rng, node, cw);
      if (round_trip && k + 2 == length && next != first && node != first) next = first;
      node = next;
    }
    dev.trajectories.push_back(std::move(tt));
    devices_.push_back(std::move(dev));
  }

  void generate_vehicle(Rng& rng, DayNumber day, Timestamp ws, Timestamp we) {
    TruthDevice dev;
    dev.device_class = DeviceClass::Vehicle;
    if (rng.bernoulli(spec_.local_share)) {
      dev.mac = unique_mac(rng, {}, true, true);
      dev.vendor = "local";
    } else {
      dev.mac = draw_global_mac(rng, dev.vendor);
    }
    const auto& nz = spec_.nuisance;
    std::size_t node = rng.index(spec_.nodes.size());
    bool cw = rng.bernoulli(0.5);
    std::size_t passes = 2 + rng.index(3);
    Timestamp t = rng.between(ws, we - static_cast<std::int64_t>(passes) * nz.vehicle_step_s - 1);
    TruthTrajectory tt{day, {}};
    for (std::size_t k = 0; k < passes; ++k) {
      tt.visits.push_back({spec_.nodes[node].id, t, t});
      emit(rng, dev.mac, node, 1 + static_cast<int>(rng.index(2)), t, t, 0.0);
      t += nz.vehicle_step_s;
      std::size_t next = ring_step(node, cw);
      if (next == node) break;
      node = next;
    }
    dev.trajectories.push_back(std::move(tt));
    devices_.push_back(std::move(dev));
  }

  const SynthSpec& spec_;
  EventConfig cfg_;
  std::set<Oui> listed_;
  std::set<std::uint64_t> used_;
  std::map<std::string, std::vector<std::size_t>> zone_members_;
  std::vector<double> popularity_;
  std::vector<double> vendor_weights_;
  std::vector<std::pair<std::size_t, std::size_t>> statics_;  // (device index, node)
  std::vector<TruthDevice> devices_;
  std::vector<ProbeRecord> records_;
  GroundTruth truth_;
};

}  // namespace detail

/// Deterministic for a given spec (including its seed).
inline SynthCorpus generate(const SynthSpec& spec) {
  validate(spec);
  return detail::CorpusBuilder(spec).build();
}

}  // namespace wifisense
