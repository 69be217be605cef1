#pragma once

#include <string>
#include <vector>

#include "wifisense/wifisense.hpp"

namespace testutil {

using namespace wifisense;

// Nodes A..(A+n-1), each with sniffers "X-1" and "X-2", window 19:00-24:00 UTC.
inline EventConfig make_config(int n = 5) {
  EventConfig cfg;
  for (int i = 0; i < n; ++i) {
    std::string id(1, static_cast<char>('A' + i));
    cfg.nodes.push_back({id, {id + "-1", id + "-2"}, {52.0 + 0.001 * i, 4.0}});
    cfg.ring_order.push_back(id);
  }
  cfg.finalize();
  return cfg;
}

inline MacAddress mac(std::uint64_t v) { return MacAddress::from_u64(v); }

inline ProbeRecord rec(std::uint64_t m, Timestamp a, Timestamp b, double rssi, std::string source) {
  return {mac(m), a, b, rssi, std::move(source)};
}

// Visit without missing time.
inline NodeVisit visit(std::string node, Timestamp a, Timestamp b, double rssi = -70.0) {
  return {std::move(node), a, b, b - a, 0, rssi, {}, 1};
}

inline Trajectory trajectory(std::vector<NodeVisit> visits, std::uint64_t m = 1) {
  Trajectory t;
  t.mac = mac(m);
  t.visits = std::move(visits);
  return t;
}

inline std::vector<std::string> node_names(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.emplace_back(1, static_cast<char>('A' + i));
  return v;
}

// Small synth spec on a 10-node ring with two zones.
inline SynthSpec small_spec(std::uint64_t seed = 1) {
  SynthSpec s;
  s.seed = seed;
  s.days = 3;
  s.start_day = parse_day("2026-07-03");
  for (int i = 0; i < 10; ++i) {
    std::string id(1, static_cast<char>('A' + i));
    s.nodes.push_back({id, {52.0 + 0.002 * i, 4.0 + 0.001 * (i % 3)}, i < 5 ? "I" : "II", 1.0});
  }
  s.pois.push_back({"stage", {52.0, 4.0}});
  s.day_types.push_back({"flat", 1.0, std::vector<double>(20, 1.0)});
  s.visitors_per_day = 200;
  s.nuisance.static_devices = 2;
  s.nuisance.vehicles_per_day = 10;
  s.vendors = {{"X", 0.5, {Oui::parse("00:16:3e")}}, {"other", 0.5, {}}};
  return s;
}

}  // namespace testutil
