#pragma once

// Turns raw probe records into Dataset A (filtered records of every device)
// and Dataset B (pedestrian trajectories of globally unique MACs).

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wifisense/core.hpp"

namespace wifisense {

inline constexpr std::int64_t kDefaultCombineGapS = 300;
inline constexpr double kDefaultFrequentThreshold = 4.0;

struct DatasetA {
  std::vector<ProbeRecord> records;  // source = node id
  std::vector<MacAddress> macs;      // sorted, unique

  bool contains(const MacAddress& m) const {
    return std::binary_search(macs.begin(), macs.end(), m);
  }
};

struct DatasetB {
  std::vector<Trajectory> trajectories;  // sorted by (mac, day)
};

namespace detail {

inline std::vector<MacAddress> unique_macs(std::span<const ProbeRecord> records) {
  std::vector<MacAddress> macs;
  macs.reserve(records.size());
  for (const auto& r : records) macs.push_back(r.mac);
  std::sort(macs.begin(), macs.end());
  macs.erase(std::unique(macs.begin(), macs.end()), macs.end());
  return macs;
}

inline void check_record(const ProbeRecord& r) {
  if (r.t_first > r.t_last)
    throw Error(Errc::InvalidArgument, "record for " + r.mac.to_string() + " has t_first > t_last");
  if (!std::isfinite(r.rssi))
    throw Error(Errc::InvalidArgument, "record for " + r.mac.to_string() + " has non-finite rssi");
}

}  // namespace detail

inline std::size_t count_rssi_out_of_range(std::span<const ProbeRecord> records) {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const ProbeRecord& r) { return !rssi_in_typical_range(r.rssi); }));
}

/// OR-merges records of the same MAC seen by any sniffer of one node when their
/// spans overlap or touch. The merged RSSI is the duration-weighted mean of the
/// inputs (plain mean when every input is instantaneous). Output is sorted by
/// (mac, node, t_first) and carries node ids as source.
inline std::vector<ProbeRecord> aggregate_by_node(std::span<const ProbeRecord> records,
                                                  const EventConfig& config) {
  struct Keyed {
    std::uint64_t mac;
    std::size_t node;
    Timestamp t_first, t_last;
    double rssi;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(records.size());
  for (const auto& r : records) {
    detail::check_record(r);
    auto node = config.node_for_source(r.source);
    if (!node) throw Error(Errc::UnknownSniffer, "'" + r.source + "'");
    keyed.push_back({r.mac.to_u64(), *node, r.t_first, r.t_last, r.rssi});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.mac, a.node, a.t_first, a.t_last, a.rssi) <
           std::tie(b.mac, b.node, b.t_first, b.t_last, b.rssi);
  });

  std::vector<ProbeRecord> out;
  std::size_t i = 0;
  while (i < keyed.size()) {
    const Keyed& head = keyed[i];
    Timestamp lo = head.t_first, hi = head.t_last;
    double wsum = 0, wrssi = 0, plain = 0;
    std::size_t n = 0;
    std::size_t j = i;
    while (j < keyed.size() && keyed[j].mac == head.mac && keyed[j].node == head.node &&
           keyed[j].t_first <= hi) {
      double w = static_cast<double>(keyed[j].t_last - keyed[j].t_first);
      wsum += w;
      wrssi += w * keyed[j].rssi;
      plain += keyed[j].rssi;
      ++n;
      hi = std::max(hi, keyed[j].t_last);
      ++j;
    }
    double rssi = n == 1 ? head.rssi : wsum > 0 ? wrssi / wsum : plain / static_cast<double>(n);
    out.push_back({MacAddress::from_u64(head.mac), lo, hi, rssi, config.nodes[head.node].id});
    i = j;
  }
  return out;
}

/// Number of distinct event-local days each MAC was seen on.
inline std::map<MacAddress, std::int64_t> visit_days_per_mac(std::span<const ProbeRecord> records,
                                                             const EventConfig& config) {
  std::vector<std::pair<MacAddress, DayNumber>> seen;
  seen.reserve(records.size());
  for (const auto& r : records) seen.emplace_back(r.mac, config.day_of(r.t_first));
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  std::map<MacAddress, std::int64_t> days;
  for (const auto& [mac, day] : seen) ++days[mac];
  return days;
}

/// Removes every record of a MAC seen on more than `threshold_per_week` days
/// per week on average, where the week count is ceil(span-days / 7) over the
/// whole record set.
inline DatasetA filter_frequent_devices(std::span<const ProbeRecord> records, const EventConfig& config,
                                        double threshold_per_week = kDefaultFrequentThreshold) {
  DatasetA out;
  if (records.empty()) return out;
  DayNumber first = config.day_of(records.front().t_first), last = first;
  for (const auto& r : records) {
    DayNumber d = config.day_of(r.t_first);
    first = std::min(first, d);
    last = std::max(last, d);
  }
  std::int64_t span_days = last - first + 1;
  std::int64_t span_weeks = (span_days + 6) / 7;

  auto days = visit_days_per_mac(records, config);
  std::vector<MacAddress> dropped;
  for (const auto& [mac, n] : days)
    if (static_cast<double>(n) / static_cast<double>(span_weeks) > threshold_per_week)
      dropped.push_back(mac);  // map iteration is sorted

  out.records.reserve(records.size());
  for (const auto& r : records)
    if (!std::binary_search(dropped.begin(), dropped.end(), r.mac)) out.records.push_back(r);
  out.macs = detail::unique_macs(out.records);
  return out;
}

/// Partitions a dataset by the U/L bit: first = global, second = local.
inline std::pair<DatasetA, DatasetA> split_global_local(const DatasetA& dataset) {
  std::pair<DatasetA, DatasetA> parts;
  for (const auto& r : dataset.records)
    (classify_mac(r.mac) == MacKind::Global ? parts.first : parts.second).records.push_back(r);
  for (const auto& m : dataset.macs)
    (classify_mac(m) == MacKind::Global ? parts.first : parts.second).macs.push_back(m);
  return parts;
}

struct VendorShare {
  std::map<std::string, double> fractions;
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  bool empty_input = false;
};

inline constexpr const char* kOtherVendor = "other";

inline VendorShare vendor_share(std::span<const MacAddress> macs, const std::map<Oui, std::string>& oui_table) {
  if (oui_table.empty()) throw Error(Errc::InvalidArgument, "vendor_share: OUI table is empty");
  VendorShare out;
  std::vector<MacAddress> unique(macs.begin(), macs.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  out.total = unique.size();
  if (unique.empty()) {
    out.empty_input = true;
    return out;
  }
  for (const auto& m : unique) {
    auto it = oui_table.find(m.oui_prefix());
    ++out.counts[it == oui_table.end() ? std::string(kOtherVendor) : it->second];
  }
  for (const auto& [vendor, n] : out.counts)
    out.fractions[vendor] = static_cast<double>(n) / static_cast<double>(out.total);
  return out;
}

namespace detail {

inline void refresh_times(NodeVisit& v) {
  v.missing_s = 0;
  for (const auto& g : v.gaps) v.missing_s += g.length();
  v.staying_s = v.span() - v.missing_s;
}

// Appends `b` to `a` (same node, b starts at or after a's end) under the
// combining rule: a hole shorter than the combining gap counts as staying time.
inline NodeVisit union_visits(const NodeVisit& a, const NodeVisit& b);

inline void append_visit(NodeVisit& a, const NodeVisit& b, std::int64_t combine_gap_s) {
  if (b.t_start < a.t_end) {
    a = union_visits(a, b);
    return;
  }
  Timestamp hole = b.t_start - a.t_end;
  if (hole >= combine_gap_s) a.gaps.push_back({a.t_end, b.t_start});
  a.gaps.insert(a.gaps.end(), b.gaps.begin(), b.gaps.end());
  double total = static_cast<double>(a.n_records + b.n_records);
  a.rssi = (a.rssi * static_cast<double>(a.n_records) + b.rssi * static_cast<double>(b.n_records)) / total;
  a.n_records += b.n_records;
  a.t_end = std::max(a.t_end, b.t_end);
  refresh_times(a);
}

using Span = std::pair<Timestamp, Timestamp>;

// Parts of [lo, hi) not covered by any of `covered` (sorted, possibly overlapping).
inline std::vector<Span> complement(Timestamp lo, Timestamp hi, std::vector<Span> covered) {
  std::sort(covered.begin(), covered.end());
  std::vector<Span> out;
  Timestamp cur = lo;
  for (const auto& [s, e] : covered) {
    if (e <= cur) continue;
    if (s > cur) out.emplace_back(cur, std::min(s, hi));
    cur = std::max(cur, e);
    if (cur >= hi) break;
  }
  if (cur < hi) out.emplace_back(cur, hi);
  return out;
}

inline std::vector<Span> detected_parts(const NodeVisit& v) {
  std::vector<Span> gaps;
  for (const auto& g : v.gaps) gaps.emplace_back(g.begin, g.end);
  return complement(v.t_start, v.t_end, gaps);
}

// Union of two overlapping visits at the same node. Undetected stretches of
// the result are those not detected by either input.
inline NodeVisit union_visits(const NodeVisit& a, const NodeVisit& b) {
  NodeVisit u = a;
  u.t_start = std::min(a.t_start, b.t_start);
  u.t_end = std::max(a.t_end, b.t_end);
  auto covered = detected_parts(a);
  auto cb = detected_parts(b);
  covered.insert(covered.end(), cb.begin(), cb.end());
  u.gaps.clear();
  for (const auto& [s, e] : complement(u.t_start, u.t_end, covered)) u.gaps.push_back({s, e});
  double total = static_cast<double>(a.n_records + b.n_records);
  u.rssi = (a.rssi * static_cast<double>(a.n_records) + b.rssi * static_cast<double>(b.n_records)) / total;
  u.n_records = a.n_records + b.n_records;
  refresh_times(u);
  return u;
}

inline void truncate_visit(NodeVisit& v, Timestamp lo, Timestamp hi) {
  v.t_start = lo;
  v.t_end = hi;
  std::vector<MissingGap> kept;
  for (auto g : v.gaps) {
    g.begin = std::max(g.begin, lo);
    g.end = std::min(g.end, hi);
    if (g.begin < g.end) kept.push_back(g);
  }
  v.gaps = std::move(kept);
  refresh_times(v);
}

inline bool visit_order(const NodeVisit& a, const NodeVisit& b) {
  return std::tie(a.t_start, a.t_end, a.node) < std::tie(b.t_start, b.t_end, b.node);
}

}  // namespace detail

/// Groups global records per (MAC, day) and combines consecutive same-node
/// records into node visits. A hole shorter than `combine_gap_s` between two
/// records is staying time; a longer hole is booked as missing time of that
/// visit. A change of node closes the current visit. Conflicts between nodes
/// are left in place for `resolve_conflicts`.
inline std::vector<Trajectory> extract_trajectories(std::span<const ProbeRecord> records,
                                                    const EventConfig& config,
                                                    std::int64_t combine_gap_s = kDefaultCombineGapS) {
  std::vector<std::pair<DayNumber, const ProbeRecord*>> order;
  order.reserve(records.size());
  for (const auto& r : records) {
    detail::check_record(r);
    order.emplace_back(config.day_of(r.t_first), &r);
  }
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    const ProbeRecord& a = *x.second;
    const ProbeRecord& b = *y.second;
    return std::tie(a.mac, x.first, a.t_first, a.t_last, a.source, a.rssi) <
           std::tie(b.mac, y.first, b.t_first, b.t_last, b.source, b.rssi);
  });

  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < order.size();) {
    Trajectory traj;
    traj.mac = order[i].second->mac;
    traj.day = order[i].first;
    std::size_t j = i;
    for (; j < order.size() && order[j].second->mac == traj.mac && order[j].first == traj.day; ++j) {
      const ProbeRecord& r = *order[j].second;
      NodeVisit next{r.source, r.t_first, r.t_last, r.duration(), 0, r.rssi, {}, 1};
      if (!traj.visits.empty() && traj.visits.back().node == r.source)
        detail::append_visit(traj.visits.back(), next, combine_gap_s);
      else
        traj.visits.push_back(std::move(next));
    }
    out.push_back(std::move(traj));
    i = j;
  }
  return out;
}

/// Removes temporal conflicts between visits at different nodes, repeatedly
/// taking the earliest conflicting pair:
///  1. exactly one visit has zero staying time: drop it;
///  2. both have zero staying time: keep the larger mean RSSI (tie: earlier start);
///  3. one span covers the other: drop the covered visit (identical spans: keep the larger RSSI);
///  4. partial overlap: the overlap goes to the larger-RSSI visit and the other
///     is truncated at the boundary (tie: the earlier visit wins).
/// Afterwards adjacent visits at one node are recombined with the combining rule.
inline Trajectory resolve_conflicts(Trajectory trajectory, std::int64_t combine_gap_s = kDefaultCombineGapS) {
  auto& visits = trajectory.visits;
  std::sort(visits.begin(), visits.end(), detail::visit_order);

  auto resolve_pair = [&](std::size_t i, std::size_t j) {
    NodeVisit& a = visits[i];
    NodeVisit& b = visits[j];
    if (a.node == b.node) {
      a = detail::union_visits(a, b);
      visits.erase(visits.begin() + static_cast<std::ptrdiff_t>(j));
      return;
    }
    bool a_stays = a.staying_s > 0;
    bool b_stays = b.staying_s > 0;
    std::size_t drop;
    if (a_stays != b_stays) {
      drop = a_stays ? j : i;
    } else if (!a_stays) {
      drop = (b.rssi > a.rssi) ? i : j;  // sorted order already puts the earlier start first
    } else {
      bool a_covers = a.t_start <= b.t_start && b.t_end <= a.t_end;
      bool b_covers = b.t_start <= a.t_start && a.t_end <= b.t_end;
      if (a_covers && b_covers) {
        drop = (b.rssi > a.rssi) ? i : j;
      } else if (a_covers) {
        drop = j;
      } else if (b_covers) {
        drop = i;
      } else {
        if (b.rssi > a.rssi)
          detail::truncate_visit(a, a.t_start, b.t_start);
        else
          detail::truncate_visit(b, a.t_end, b.t_end);
        return;
      }
    }
    visits.erase(visits.begin() + static_cast<std::ptrdiff_t>(drop));
  };

  for (;;) {
    bool changed = false;
    for (std::size_t i = 0; i < visits.size() && !changed; ++i)
      for (std::size_t j = i + 1; j < visits.size() && !changed; ++j)
        if (visits_conflict(visits[i], visits[j])) {
          resolve_pair(i, j);
          std::sort(visits.begin(), visits.end(), detail::visit_order);
          changed = true;
        }
    if (changed) continue;

    for (std::size_t i = 1; i < visits.size(); ++i)
      if (visits[i - 1].node == visits[i].node) {
        detail::append_visit(visits[i - 1], visits[i], combine_gap_s);
        visits.erase(visits.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    if (!changed) break;
  }
  return trajectory;
}

/// Keeps trajectories whose total staying time is positive; drive-by devices
/// in vehicles only ever produce instantaneous detections.
inline DatasetB filter_non_pedestrians(std::vector<Trajectory> trajectories) {
  DatasetB out;
  for (auto& t : trajectories)
    if (!t.visits.empty() && t.total_staying() > 0) out.trajectories.push_back(std::move(t));
  std::sort(out.trajectories.begin(), out.trajectories.end(),
            [](const Trajectory& a, const Trajectory& b) { return std::tie(a.mac, a.day) < std::tie(b.mac, b.day); });
  return out;
}

struct PreprocessOptions {
  double frequent_threshold_per_week = kDefaultFrequentThreshold;
  std::int64_t combine_gap_s = kDefaultCombineGapS;
};

struct PreprocessResult {
  std::size_t input_records = 0;
  std::size_t aggregated_records = 0;
  std::size_t rssi_out_of_range = 0;
  std::size_t removed_frequent_macs = 0;
  DatasetA dataset_a;
  DatasetA global;
  DatasetA local;
  std::size_t raw_trajectories = 0;
  DatasetB dataset_b;
  std::optional<VendorShare> vendors;  // present when the config carries an OUI table
};

/// aggregate -> frequent-device filter -> global/local split -> trajectory
/// extraction -> conflict resolution -> pedestrian filter.
inline PreprocessResult preprocess(std::span<const ProbeRecord> records, const EventConfig& config,
                                   const PreprocessOptions& opts = {}) {
  PreprocessResult res;
  res.input_records = records.size();
  res.rssi_out_of_range = count_rssi_out_of_range(records);
  auto aggregated = aggregate_by_node(records, config);
  res.aggregated_records = aggregated.size();
  std::size_t before = detail::unique_macs(aggregated).size();
  res.dataset_a = filter_frequent_devices(aggregated, config, opts.frequent_threshold_per_week);
  res.removed_frequent_macs = before - res.dataset_a.macs.size();
  std::tie(res.global, res.local) = split_global_local(res.dataset_a);
  auto raw = extract_trajectories(res.global.records, config, opts.combine_gap_s);
  res.raw_trajectories = raw.size();
  for (auto& t : raw) t = resolve_conflicts(std::move(t), opts.combine_gap_s);
  res.dataset_b = filter_non_pedestrians(std::move(raw));
  if (!config.oui_table.empty()) res.vendors = vendor_share(res.global.macs, config.oui_table);
  return res;
}

}  // namespace wifisense
