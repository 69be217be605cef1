#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wifisense/error.hpp"

namespace wifisense {

using Timestamp = std::int64_t;  // seconds, UTC
using DayNumber = std::int64_t;  // days since 1970-01-01 (event-local calendar)

inline constexpr std::int64_t kSecondsPerDay = 86400;

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// ---------------------------------------------------------------------------
// MAC addresses

/// First three octets of a MAC address.
struct Oui {
  std::array<std::uint8_t, 3> octets{};

  std::string to_string() const {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x", octets[0], octets[1], octets[2]);
    return buf;
  }

  static Oui parse(std::string_view text);

  auto operator<=>(const Oui&) const = default;
};

enum class MacKind { Global, Local };

inline const char* to_string(MacKind k) { return k == MacKind::Global ? "global" : "local"; }

namespace detail {

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Parses `count` hex octets separated by ':' or '-' (one separator style per string).
template <std::size_t N>
bool parse_octets(std::string_view text, std::array<std::uint8_t, N>& out) {
  if (text.size() != N * 3 - 1) return false;
  char sep = N > 1 ? text[2] : ':';
  if (sep != ':' && sep != '-') return false;
  for (std::size_t i = 0; i < N; ++i) {
    int hi = hex_value(text[i * 3]);
    int lo = hex_value(text[i * 3 + 1]);
    if (hi < 0 || lo < 0) return false;
    if (i + 1 < N && text[i * 3 + 2] != sep) return false;
    out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return true;
}

}  // namespace detail

inline Oui Oui::parse(std::string_view text) {
  Oui o;
  if (!detail::parse_octets(text, o.octets))
    throw Error(Errc::ParseError, "invalid OUI prefix '" + std::string(text) + "'");
  return o;
}

class MacAddress {
 public:
  static constexpr std::uint8_t kLocalBit = 0x02;
  static constexpr std::uint8_t kMulticastBit = 0x01;

  MacAddress() = default;
  explicit MacAddress(std::array<std::uint8_t, 6> octets) : octets_(octets) {}

  static std::optional<MacAddress> try_parse(std::string_view text) {
    std::array<std::uint8_t, 6> o{};
    if (!detail::parse_octets(text, o)) return std::nullopt;
    return MacAddress(o);
  }

  static MacAddress parse(std::string_view text) {
    auto m = try_parse(text);
    if (!m) throw Error(Errc::ParseError, "invalid MAC address '" + std::string(text) + "'");
    return *m;
  }

  static MacAddress from_u64(std::uint64_t v) {
    std::array<std::uint8_t, 6> o{};
    for (int i = 5; i >= 0; --i) {
      o[i] = static_cast<std::uint8_t>(v & 0xff);
      v >>= 8;
    }
    return MacAddress(o);
  }

  std::uint64_t to_u64() const {
    std::uint64_t v = 0;
    for (auto b : octets_) v = (v << 8) | b;
    return v;
  }

  std::string to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets_[0], octets_[1],
                  octets_[2], octets_[3], octets_[4], octets_[5]);
    return buf;
  }

  const std::array<std::uint8_t, 6>& octets() const { return octets_; }

  /// U/L bit: second-least-significant bit of the first octet.
  bool is_local() const { return (octets_[0] & kLocalBit) != 0; }

  Oui oui_prefix() const { return Oui{{octets_[0], octets_[1], octets_[2]}}; }

  auto operator<=>(const MacAddress&) const = default;

 private:
  std::array<std::uint8_t, 6> octets_{};
};

inline MacKind classify_mac(const MacAddress& mac) {
  return mac.is_local() ? MacKind::Local : MacKind::Global;
}

struct MacHash {
  std::size_t operator()(const MacAddress& m) const noexcept {
    return std::hash<std::uint64_t>{}(m.to_u64());
  }
};

// ---------------------------------------------------------------------------
// Clock handling

/// Seconds after local midnight; 24:00 is allowed as a window end.
struct ClockTime {
  std::int64_t seconds = 0;

  static ClockTime parse(std::string_view text) {
    int h = 0, m = 0, s = 0;
    std::string str(text);
    int n = std::sscanf(str.c_str(), "%d:%d:%d", &h, &m, &s);
    if (n < 2 || h < 0 || h > 24 || m < 0 || m > 59 || s < 0 || s > 59 ||
        (h == 24 && (m != 0 || s != 0)))
      throw Error(Errc::ParseError, "invalid clock time '" + str + "' (expected HH:MM)");
    return ClockTime{h * 3600 + m * 60 + s};
  }

  std::string to_string() const {
    char buf[16];
    std::int64_t s = seconds;
    if (s % 60 == 0)
      std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(s / 3600),
                    static_cast<int>((s / 60) % 60));
    else
      std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", static_cast<int>(s / 3600),
                    static_cast<int>((s / 60) % 60), static_cast<int>(s % 60));
    return buf;
  }

  auto operator<=>(const ClockTime&) const = default;
};

/// Half-open clock range [begin, end). An end at or before begin wraps past midnight.
struct ClockRange {
  ClockTime begin;
  ClockTime end;

  std::int64_t length() const {
    std::int64_t len = end.seconds - begin.seconds;
    return len <= 0 ? len + kSecondsPerDay : len;
  }

  /// "HH:MM-HH:MM"
  static ClockRange parse(std::string_view text) {
    auto dash = text.find('-');
    if (dash == std::string_view::npos)
      throw Error(Errc::ParseError, "invalid clock range '" + std::string(text) + "'");
    return {ClockTime::parse(text.substr(0, dash)), ClockTime::parse(text.substr(dash + 1))};
  }

  std::string to_string() const { return begin.to_string() + "-" + end.to_string(); }

  bool operator==(const ClockRange&) const = default;
};

inline std::string format_day(DayNumber day) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline DayNumber parse_day(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  std::string s(text);
  if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) != 3)
    throw Error(Errc::ParseError, "invalid date '" + s + "' (expected YYYY-MM-DD)");
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw Error(Errc::ParseError, "invalid date '" + s + "'");
  return sys_days{ymd}.time_since_epoch().count();
}

// ---------------------------------------------------------------------------
// Records, visits, trajectories

struct ProbeRecord {
  MacAddress mac;
  Timestamp t_first = 0;
  Timestamp t_last = 0;
  double rssi = 0.0;
  std::string source;  // sniffer id before aggregation, node id after

  Timestamp duration() const { return t_last - t_first; }

  bool operator==(const ProbeRecord&) const = default;
};

inline constexpr double kRssiMin = -100.0;
inline constexpr double kRssiMax = 0.0;

inline bool rssi_in_typical_range(double rssi) { return rssi >= kRssiMin && rssi <= kRssiMax; }

/// A stretch of a visit during which the device went undetected for at least
/// the combining gap. Half-open [begin, end).
struct MissingGap {
  Timestamp begin = 0;
  Timestamp end = 0;

  Timestamp length() const { return end - begin; }
  bool operator==(const MissingGap&) const = default;
};

struct NodeVisit {
  std::string node;
  Timestamp t_start = 0;
  Timestamp t_end = 0;
  std::int64_t staying_s = 0;
  std::int64_t missing_s = 0;
  double rssi = 0.0;
  std::vector<MissingGap> gaps;  // sorted, inside [t_start, t_end]; lengths sum to missing_s
  std::int64_t n_records = 1;

  Timestamp span() const { return t_end - t_start; }

  bool operator==(const NodeVisit&) const = default;
};

struct Trajectory {
  MacAddress mac;
  DayNumber day = 0;
  std::vector<NodeVisit> visits;

  std::size_t length() const { return visits.size(); }

  bool is_round_trip() const {
    return visits.size() >= 3 && visits.front().node == visits.back().node;
  }

  std::int64_t total_staying() const {
    std::int64_t s = 0;
    for (const auto& v : visits) s += v.staying_s;
    return s;
  }

  std::int64_t total_missing() const {
    std::int64_t s = 0;
    for (const auto& v : visits) s += v.missing_s;
    return s;
  }

  /// Start of the first visit to end of the last visit.
  std::int64_t duration() const {
    return visits.empty() ? 0 : visits.back().t_end - visits.front().t_start;
  }

  bool operator==(const Trajectory&) const = default;
};

/// Two visits conflict when their spans share a stretch of positive length, or
/// when one is an instant lying inside (or on the boundary of) the other.
/// Positive-length spans that merely touch are a hand-over, not a conflict.
inline bool visits_conflict(const NodeVisit& a, const NodeVisit& b) {
  Timestamp lo = std::max(a.t_start, b.t_start);
  Timestamp hi = std::min(a.t_end, b.t_end);
  if (lo < hi) return true;
  bool a_point = a.t_start == a.t_end;
  bool b_point = b.t_start == b.t_end;
  if ((a_point || b_point) && lo == hi) return true;
  return false;
}

/// Returns a description of the first violated trajectory invariant, if any.
inline std::optional<std::string> check_trajectory(const Trajectory& t) {
  for (std::size_t i = 0; i < t.visits.size(); ++i) {
    const auto& v = t.visits[i];
    if (v.t_start > v.t_end) return "visit " + std::to_string(i) + " has t_start > t_end";
    if (v.staying_s < 0 || v.missing_s < 0) return "visit " + std::to_string(i) + " negative time";
    if (v.staying_s + v.missing_s != v.span())
      return "visit " + std::to_string(i) + " staying + missing != span";
    std::int64_t gap_sum = 0;
    for (const auto& g : v.gaps) {
      if (g.begin < v.t_start || g.end > v.t_end || g.begin >= g.end)
        return "visit " + std::to_string(i) + " has a gap outside its span";
      gap_sum += g.length();
    }
    if (gap_sum != v.missing_s) return "visit " + std::to_string(i) + " gap sum != missing_s";
    if (i > 0) {
      const auto& p = t.visits[i - 1];
      if (p.t_start > v.t_start) return "visits not sorted at " + std::to_string(i);
      if (p.node == v.node) return "consecutive visits share node at " + std::to_string(i);
    }
    for (std::size_t j = 0; j < i; ++j)
      if (visits_conflict(t.visits[j], v))
        return "visits " + std::to_string(j) + " and " + std::to_string(i) + " overlap";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Event configuration

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

struct NodeSpec {
  std::string id;
  std::vector<std::string> sniffers;
  GeoPoint location;
};

struct Poi {
  std::string name;
  GeoPoint location;
};

struct EventConfig {
  std::vector<NodeSpec> nodes;
  std::vector<Poi> pois;
  ClockRange daily_window{ClockTime{19 * 3600}, ClockTime{24 * 3600}};
  int interval_minutes = 15;
  std::int64_t utc_offset_s = 0;
  std::map<std::string, std::string> zones;  // node id -> zone label
  std::vector<std::string> ring_order;
  std::vector<ClockRange> periods;
  std::map<Oui, std::string> oui_table;

  /// Validates invariants and builds lookup tables. Call after populating fields.
  void finalize() {
    sniffer_to_node_.clear();
    node_index_.clear();
    if (nodes.empty()) throw Error(Errc::InvalidConfig, "nodes: at least one node required");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.id.empty()) throw Error(Errc::InvalidConfig, "nodes[" + std::to_string(i) + "].id empty");
      if (!node_index_.emplace(n.id, i).second)
        throw Error(Errc::InvalidConfig, "nodes: duplicate node id '" + n.id + "'");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (const auto& s : nodes[i].sniffers) {
        if (node_index_.count(s) && s != nodes[i].id)
          throw Error(Errc::InvalidConfig, "sniffer id '" + s + "' collides with a node id");
        if (!sniffer_to_node_.emplace(s, i).second)
          throw Error(Errc::InvalidConfig, "sniffer id '" + s + "' is not unique across nodes");
      }
    }
    if (daily_window.begin == daily_window.end)
      throw Error(Errc::InvalidConfig, "daily_window is empty");
    if (interval_minutes <= 0)
      throw Error(Errc::InvalidConfig, "interval_minutes must be positive");
    if (daily_window.length() % (static_cast<std::int64_t>(interval_minutes) * 60) != 0)
      throw Error(Errc::InvalidConfig, "interval_minutes does not divide the daily window");
    for (const auto& [node, zone] : zones)
      if (!node_index_.count(node))
        throw Error(Errc::InvalidConfig, "zones: unknown node '" + node + "'");
    for (const auto& node : ring_order)
      if (!node_index_.count(node))
        throw Error(Errc::InvalidConfig, "ring_order: unknown node '" + node + "'");
  }

  std::optional<std::size_t> node_index(std::string_view id) const {
    auto it = node_index_.find(std::string(id));
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Node that owns a sniffer id. A node id maps to itself so that already
  /// aggregated records pass through unchanged.
  std::optional<std::size_t> node_for_source(std::string_view source) const {
    auto it = sniffer_to_node_.find(std::string(source));
    if (it != sniffer_to_node_.end()) return it->second;
    return node_index(source);
  }

  std::vector<std::string> node_ids() const {
    std::vector<std::string> ids;
    ids.reserve(nodes.size());
    for (const auto& n : nodes) ids.push_back(n.id);
    return ids;
  }

  std::int64_t interval_seconds() const { return static_cast<std::int64_t>(interval_minutes) * 60; }

  std::int64_t intervals_per_day() const { return daily_window.length() / interval_seconds(); }

  /// Event-local day the timestamp belongs to. Days are anchored at the start
  /// of the daily window, so a window running past midnight keeps its start day.
  DayNumber day_of(Timestamp t) const {
    return floor_div(t + utc_offset_s - daily_window.begin.seconds, kSecondsPerDay);
  }

  /// Seconds since the start of the daily window on the timestamp's day.
  std::int64_t offset_in_window(Timestamp t) const {
    std::int64_t local = t + utc_offset_s - daily_window.begin.seconds;
    return local - floor_div(local, kSecondsPerDay) * kSecondsPerDay;
  }

  /// UTC timestamp of the window start on a given day.
  Timestamp window_start(DayNumber day) const {
    return day * kSecondsPerDay + daily_window.begin.seconds - utc_offset_s;
  }

  /// Window-relative offset of a clock time (wrapping past midnight).
  std::int64_t clock_offset(ClockTime c) const {
    std::int64_t off = c.seconds - daily_window.begin.seconds;
    return ((off % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  }

 private:
  std::unordered_map<std::string, std::size_t> sniffer_to_node_;
  std::unordered_map<std::string, std::size_t> node_index_;
};

}  // namespace wifisense
