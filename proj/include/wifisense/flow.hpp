#pragma once

// Duration against trajectory length, and time-resolved link direction ratios.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wifisense/core.hpp"
#include "wifisense/preprocess.hpp"
#include "wifisense/spatial.hpp"

namespace wifisense {

inline constexpr double kDefaultDominanceThreshold = 0.10;

struct LengthStats {
  std::size_t length = 0;
  std::size_t samples = 0;
  double median_duration_s = 0.0;
  std::optional<double> sd_duration_s;  // absent for a single sample
  double median_missing_s = 0.0;
  std::optional<double> sd_missing_s;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Sample standard deviation (n - 1).
inline std::optional<double> sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return std::nullopt;
  double mu = 0.0;
  for (double x : v) mu += x;
  mu /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Per trajectory length: median and sample standard deviation of duration
/// (first visit start to last visit end) and of total missing time.
inline std::vector<LengthStats> duration_vs_length(const DatasetB& ds) {
  detail::require_nonempty(ds);
  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& t : ds.trajectories) {
    if (t.visits.empty()) continue;
    auto& g = groups[t.length()];
    g.first.push_back(static_cast<double>(t.duration()));
    g.second.push_back(static_cast<double>(t.total_missing()));
  }
  std::vector<LengthStats> out;
  for (const auto& [len, g] : groups) {
    LengthStats s;
    s.length = len;
    s.samples = g.first.size();
    s.median_duration_s = detail::median(g.first);
    s.sd_duration_s = detail::sample_sd(g.first);
    s.median_missing_s = detail::median(g.second);
    s.sd_missing_s = detail::sample_sd(g.second);
    out.push_back(s);
  }
  return out;
}

/// Default periods: 19-20, 20-21, 21-22, 22-24.
inline std::vector<ClockRange> default_periods() {
  return {ClockRange::parse("19:00-20:00"), ClockRange::parse("20:00-21:00"), ClockRange::parse("21:00-22:00"),
          ClockRange::parse("22:00-24:00")};
}

struct PeriodCounts {
  ClockRange period;
  std::vector<std::int64_t> counts;  // n x n, row-major
};

/// Checks that periods tile the daily window without overlap; returns their
/// window-relative [begin, end) offsets.
inline std::vector<std::pair<std::int64_t, std::int64_t>> period_offsets(const EventConfig& config,
                                                                         std::span<const ClockRange> periods) {
  if (periods.empty()) throw Error(Errc::InvalidArgument, "no periods given");
  std::vector<std::pair<std::int64_t, std::int64_t>> spans;
  for (const auto& p : periods) {
    std::int64_t b = config.clock_offset(p.begin);
    spans.emplace_back(b, b + p.length());
  }
  auto sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  std::int64_t cursor = 0;
  for (const auto& [b, e] : sorted) {
    if (b != cursor) throw Error(Errc::InvalidArgument, "periods must tile the daily window without gaps or overlap");
    cursor = e;
  }
  if (cursor != config.daily_window.length())
    throw Error(Errc::InvalidArgument, "periods must cover the daily window exactly");
  return spans;
}

/// Transition counts per period; a transition belongs to the period holding
/// the departure time (end of the visit being left). Departures outside the
/// window are clamped to its first or last period.
inline std::vector<PeriodCounts> period_transition_counts(const DatasetB& ds, std::span<const std::string> nodes,
                                                          std::span<const ClockRange> periods,
                                                          const EventConfig& config) {
  auto spans = period_offsets(config, periods);
  detail::NodeIndex index(nodes);
  const std::size_t n = nodes.size();
  std::vector<PeriodCounts> out;
  for (const auto& p : periods) out.push_back({p, std::vector<std::int64_t>(n * n, 0)});
  const std::int64_t window = config.daily_window.length();
  for (const auto& t : ds.trajectories) {
    for (std::size_t v = 1; v < t.visits.size(); ++v) {
      std::int64_t off = t.visits[v - 1].t_end - config.window_start(t.day);
      off = std::clamp<std::int64_t>(off, 0, window - 1);
      std::size_t slot = 0;
      for (std::size_t p = 0; p < spans.size(); ++p)
        if (off >= spans[p].first && off < spans[p].second) slot = p;
      ++out[slot].counts[index(t.visits[v - 1].node) * n + index(t.visits[v].node)];
    }
  }
  return out;
}

struct LinkFlow {
  std::size_t i = 0, j = 0;  // i < j
  std::int64_t n_ij = 0, n_ji = 0;
  double r_ij = 0.0, r_ji = 0.0;
  bool dominant = false;
  std::size_t from = 0, to = 0;  // dominant direction (from i to j when equal)
};

struct FlowSnapshot {
  ClockRange period;
  std::vector<std::string> nodes;
  std::vector<LinkFlow> links;  // links with traffic only, ordered by (i, j)
  double threshold = kDefaultDominanceThreshold;
};

/// Direction ratios per link with traffic. A link is dominant when
/// |R(i,j) - R(j,i)| >= threshold, otherwise mutual.
inline FlowSnapshot direction_ratios(const PeriodCounts& pc, std::span<const std::string> nodes,
                                     double threshold = kDefaultDominanceThreshold) {
  const std::size_t n = nodes.size();
  if (pc.counts.size() != n * n) throw Error(Errc::InvalidArgument, "count matrix does not match node list");
  FlowSnapshot snap{pc.period, std::vector<std::string>(nodes.begin(), nodes.end()), {}, threshold};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      std::int64_t a = pc.counts[i * n + j], b = pc.counts[j * n + i];
      if (a + b == 0) continue;
      LinkFlow l;
      l.i = i;
      l.j = j;
      l.n_ij = a;
      l.n_ji = b;
      double total = static_cast<double>(a + b);
      l.r_ij = static_cast<double>(a) / total;
      l.r_ji = static_cast<double>(b) / total;
      // |R(i,j) - R(j,i)| from the integer difference; exact under scaling of both counts.
      double gap = static_cast<double>(a > b ? a - b : b - a) / total;
      l.dominant = gap >= threshold;
      l.from = a >= b ? i : j;
      l.to = a >= b ? j : i;
      snap.links.push_back(l);
    }
  return snap;
}

enum class Orientation { Clockwise, Anticlockwise };

inline const char* to_string(Orientation o) { return o == Orientation::Clockwise ? "clockwise" : "anticlockwise"; }

struct OrientedLink {
  std::string from;
  std::string to;
  Orientation orientation;
};

/// Orientation of every dominant link: clockwise when the destination comes
/// later than the origin in `ring_order`.
inline std::vector<OrientedLink> flow_orientation(const FlowSnapshot& snap, std::span<const std::string> ring_order) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < ring_order.size(); ++i) pos.emplace(ring_order[i], i);
  auto at = [&](const std::string& node) {
    auto it = pos.find(node);
    if (it == pos.end()) throw Error(Errc::UnknownNode, "'" + node + "' is not on the ring");
    return it->second;
  };
  std::vector<OrientedLink> out;
  for (const auto& l : snap.links) {
    if (!l.dominant) continue;
    const auto& from = snap.nodes[l.from];
    const auto& to = snap.nodes[l.to];
    out.push_back({from, to, at(to) > at(from) ? Orientation::Clockwise : Orientation::Anticlockwise});
  }
  return out;
}

}  // namespace wifisense
