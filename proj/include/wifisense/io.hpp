#pragma once

// Text formats: probe-record CSV, dataset NDJSON, event config and synth spec
// JSON, ground-truth JSON.
//
// Every written CSV starts with a "# manifest=<hash>" line followed by the
// column header; NDJSON files start with a header object naming the dataset,
// its fields and the manifest hash. Readers skip the comment line.

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wifisense/core.hpp"
#include "wifisense/preprocess.hpp"
#include "wifisense/synthgen.hpp"

namespace wifisense::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::Io, "write failed for '" + path + "'");
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string digest(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

// ---------------------------------------------------------------------------
// Numbers

/// Shortest round-trip decimal; NaN and infinities become an empty string.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return {};
  if (v == 0.0) return "0";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty() && std::isfinite(out);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Builds a CSV document: manifest comment, header row, data rows (CRLF-free).
class CsvBuilder {
 public:
  CsvBuilder(std::string_view manifest, std::initializer_list<std::string_view> columns) {
    text_ = "# manifest=" + std::string(manifest) + "\n";
    bool first = true;
    for (auto c : columns) {
      if (!first) text_ += ',';
      text_ += csv_escape(c);
      first = false;
    }
    text_ += '\n';
    columns_ = columns.size();
  }

  CsvBuilder& cell(std::string_view s) {
    sep();
    text_ += csv_escape(s);
    return *this;
  }
  CsvBuilder& cell(const char* s) { return cell(std::string_view(s)); }
  CsvBuilder& cell(const std::string& s) { return cell(std::string_view(s)); }
  CsvBuilder& cell(double v) {
    sep();
    text_ += format_number(v);
    return *this;
  }
  template <class I>
    requires std::is_integral_v<I>
  CsvBuilder& cell(I v) {
    sep();
    text_ += std::to_string(v);
    return *this;
  }

  void end_row() {
    if (cells_ != columns_)
      throw Error(Errc::InvalidArgument, "CSV row has " + std::to_string(cells_) + " cells, expected " +
                                             std::to_string(columns_));
    text_ += '\n';
    cells_ = 0;
    ++rows_;
  }

  std::size_t rows() const { return rows_; }
  const std::string& str() const { return text_; }
  std::string take() { return std::move(text_); }

 private:
  void sep() {
    if (cells_++ > 0) text_ += ',';
  }

  std::string text_;
  std::size_t columns_ = 0;
  std::size_t cells_ = 0;
  std::size_t rows_ = 0;
};

struct CsvRow {
  std::size_t line = 0;  // 1-based line number of the row start
  std::vector<std::string> fields;
};

/// RFC-4180 parser (quoted fields may hold separators, quotes and newlines).
/// Blank lines and lines starting with '#' outside quotes are skipped.
inline std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t i = 0, line = 1;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < text.size()) {
    if (text[i] == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      ++i;
      ++line;
      continue;
    }
    if (text[i] == '\n' || text[i] == '\r') {
      if (text[i] == '\n') ++line;
      ++i;
      continue;
    }
    CsvRow row;
    row.line = line;
    std::string field;
    bool done = false;
    while (!done) {
      field.clear();
      if (i < text.size() && text[i] == '"') {
        ++i;
        for (;;) {
          if (i >= text.size()) throw Error(Errc::ParseError, "line " + std::to_string(row.line) + ": unterminated quote");
          char c = text[i++];
          if (c == '"') {
            if (i < text.size() && text[i] == '"') {
              field += '"';
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field += c;
          }
        }
        while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') field += text[i++];
      } else {
        while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') field += text[i++];
      }
      row.fields.push_back(field);
      if (i < text.size() && text[i] == ',') {
        ++i;
      } else {
        if (i < text.size() && text[i] == '\r') ++i;
        if (i < text.size() && text[i] == '\n') {
          ++i;
          ++line;
        }
        done = true;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline constexpr std::size_t kMaxReportedRowErrors = 20;

/// Reads probe records. Required columns (any order): mac, t_first, t_last,
/// rssi, sniffer_id. Timestamps are integer Unix seconds. Every malformed row
/// is reported with its line number and column; the first 20 are listed.
inline std::vector<ProbeRecord> parse_records_csv(std::string_view text) {
  auto rows = parse_csv(text);
  std::vector<ProbeRecord> out;
  if (rows.empty()) return out;
  const auto& header = rows.front().fields;
  const std::vector<std::string> need{"mac", "t_first", "t_last", "rssi", "sniffer_id"};
  std::vector<std::size_t> col(need.size(), header.size());
  for (std::size_t c = 0; c < header.size(); ++c)
    for (std::size_t k = 0; k < need.size(); ++k)
      if (header[c] == need[k]) col[k] = c;
  for (std::size_t k = 0; k < need.size(); ++k)
    if (col[k] == header.size())
      throw Error(Errc::ParseError, "line " + std::to_string(rows.front().line) + ": header lacks column '" + need[k] + "'");

  std::vector<std::string> errors;
  std::size_t bad_rows = 0;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::string problem;
    auto fail = [&](std::size_t k, const std::string& why) {
      if (problem.empty()) problem = "line " + std::to_string(row.line) + ", column '" + need[k] + "': " + why;
    };
    ProbeRecord rec;
    if (row.fields.size() != header.size()) {
      problem = "line " + std::to_string(row.line) + ": expected " + std::to_string(header.size()) + " fields, found " +
                std::to_string(row.fields.size());
    } else {
      auto mac = MacAddress::try_parse(row.fields[col[0]]);
      if (!mac)
        fail(0, "invalid MAC address '" + row.fields[col[0]] + "'");
      else
        rec.mac = *mac;
      if (!parse_int(row.fields[col[1]], rec.t_first)) fail(1, "invalid timestamp '" + row.fields[col[1]] + "'");
      if (!parse_int(row.fields[col[2]], rec.t_last)) fail(2, "invalid timestamp '" + row.fields[col[2]] + "'");
      if (problem.empty() && rec.t_last < rec.t_first) fail(2, "t_last precedes t_first");
      if (!parse_double(row.fields[col[3]], rec.rssi)) fail(3, "invalid number '" + row.fields[col[3]] + "'");
      rec.source = row.fields[col[4]];
      if (rec.source.empty()) fail(4, "empty sniffer id");
    }
    if (!problem.empty()) {
      if (errors.size() < kMaxReportedRowErrors) errors.push_back(problem);
      ++bad_rows;
      continue;
    }
    out.push_back(std::move(rec));
  }
  if (bad_rows) {
    std::string msg = std::to_string(bad_rows) + " malformed row(s)";
    for (const auto& e : errors) msg += "\n  " + e;
    if (bad_rows > errors.size()) msg += "\n  ... and " + std::to_string(bad_rows - errors.size()) + " more";
    throw Error(Errc::ParseError, msg);
  }
  return out;
}

inline std::vector<ProbeRecord> read_records_csv(const std::string& path) { return parse_records_csv(read_file(path)); }

inline std::string format_records_csv(std::span<const ProbeRecord> records, std::string_view manifest) {
  CsvBuilder csv(manifest, {"mac", "t_first", "t_last", "rssi", "sniffer_id"});
  for (const auto& r : records) {
    csv.cell(r.mac.to_string()).cell(r.t_first).cell(r.t_last).cell(r.rssi).cell(r.source);
    csv.end_row();
  }
  return csv.take();
}

// ---------------------------------------------------------------------------
// JSON helpers with field paths

namespace detail {

inline std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

class JsonFields {
 public:
  JsonFields(const json& j, std::string path, Errc errc) : j_(j), path_(std::move(path)), errc_(errc) {
    if (!j_.is_object()) fail(path_.empty() ? "(root)" : path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& path, const std::string& why) const { throw Error(errc_, path + ": " + why); }

  std::string path(const std::string& key) const { return join_path(path_, key); }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& at(const char* key) const {
    if (!j_.contains(key)) fail(path(key), "required field missing");
    return j_.at(key);
  }

  template <class T>
  T get(const char* key) const {
    return convert<T>(at(key), path(key));
  }

  template <class T>
  T get_or(const char* key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  template <class T>
  T convert(const json& v, const std::string& p) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(p, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(p, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(p, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(p, "expected a string");
    }
    return v.get<T>();
  }

  template <class T>
  std::vector<T> list(const char* key) const {
    std::vector<T> out;
    if (!has(key)) return out;
    const auto& arr = at(key);
    if (!arr.is_array()) fail(path(key), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(convert<T>(arr[i], index_path(path(key), i)));
    return out;
  }

  void only(std::initializer_list<const char*> allowed) const {
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(path(k), "unknown field");
    }
  }

  template <class F>
  auto guarded(const std::string& p, F&& f) const {
    try {
      return f();
    } catch (const Error& e) {
      if (e.code() == errc_) throw;
      fail(p, e.what());
    }
  }

  const json& raw() const { return j_; }

 private:
  const json& j_;
  std::string path_;
  Errc errc_;
};

inline json parse_json(std::string_view text, Errc errc) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(errc, std::string("malformed JSON: ") + e.what());
  }
}

inline GeoPoint read_point(const JsonFields& f) { return {f.get<double>("lat"), f.get<double>("lon")}; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Event configuration

/// {
///   "utc_offset_minutes": 120, "daily_window": "19:00-24:00", "interval_minutes": 15,
///   "nodes": [{"id": "A", "sniffers": ["A-1", "A-2"], "lat": .., "lon": ..}],
///   "pois": [{"name": "stage", "lat": .., "lon": ..}],
///   "zones": {"A": "I"}, "ring_order": ["A", ...],
///   "periods": ["19:00-20:00", ...], "oui_table": {"8c:77:12": "Samsung"}
/// }
inline EventConfig parse_event_config(const json& j) {
  constexpr Errc E = Errc::InvalidConfig;
  detail::JsonFields f(j, "", E);
  f.only({"utc_offset_minutes", "daily_window", "interval_minutes", "nodes", "pois", "zones", "ring_order", "periods",
          "oui_table"});
  EventConfig cfg;
  cfg.utc_offset_s = f.get_or<std::int64_t>("utc_offset_minutes", 0) * 60;
  if (f.has("daily_window"))
    cfg.daily_window = f.guarded(f.path("daily_window"), [&] { return ClockRange::parse(f.get<std::string>("daily_window")); });
  cfg.interval_minutes = f.get_or<int>("interval_minutes", 15);
  const auto& nodes = f.at("nodes");
  if (!nodes.is_array()) f.fail("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    detail::JsonFields n(nodes[i], detail::index_path("nodes", i), E);
    n.only({"id", "sniffers", "lat", "lon"});
    NodeSpec spec;
    spec.id = n.get<std::string>("id");
    spec.sniffers = n.list<std::string>("sniffers");
    if (n.has("lat") || n.has("lon")) spec.location = detail::read_point(n);
    cfg.nodes.push_back(std::move(spec));
  }
  if (f.has("pois")) {
    const auto& pois = f.at("pois");
    if (!pois.is_array()) f.fail("pois", "expected an array");
    for (std::size_t i = 0; i < pois.size(); ++i) {
      detail::JsonFields p(pois[i], detail::index_path("pois", i), E);
      p.only({"name", "lat", "lon"});
      cfg.pois.push_back({p.get_or<std::string>("name", ""), detail::read_point(p)});
    }
  }
  if (f.has("zones")) {
    detail::JsonFields z(f.at("zones"), "zones", E);
    for (const auto& [node, zone] : z.raw().items()) cfg.zones[node] = z.convert<std::string>(zone, z.path(node));
  }
  cfg.ring_order = f.list<std::string>("ring_order");
  auto periods = f.list<std::string>("periods");
  for (std::size_t i = 0; i < periods.size(); ++i)
    cfg.periods.push_back(f.guarded(detail::index_path("periods", i), [&] { return ClockRange::parse(periods[i]); }));
  if (f.has("oui_table")) {
    detail::JsonFields o(f.at("oui_table"), "oui_table", E);
    for (const auto& [prefix, vendor] : o.raw().items()) {
      Oui oui = o.guarded(o.path(prefix), [&] { return Oui::parse(prefix); });
      cfg.oui_table[oui] = o.convert<std::string>(vendor, o.path(prefix));
    }
  }
  cfg.finalize();
  return cfg;
}

inline EventConfig parse_event_config(std::string_view text) {
  return parse_event_config(detail::parse_json(text, Errc::InvalidConfig));
}

inline EventConfig read_event_config(const std::string& path) { return parse_event_config(std::string_view(read_file(path))); }

inline json to_json(const EventConfig& cfg) {
  json j;
  j["utc_offset_minutes"] = cfg.utc_offset_s / 60;
  j["daily_window"] = cfg.daily_window.to_string();
  j["interval_minutes"] = cfg.interval_minutes;
  j["nodes"] = json::array();
  for (const auto& n : cfg.nodes)
    j["nodes"].push_back({{"id", n.id}, {"sniffers", n.sniffers}, {"lat", n.location.lat}, {"lon", n.location.lon}});
  j["pois"] = json::array();
  for (const auto& p : cfg.pois) j["pois"].push_back({{"name", p.name}, {"lat", p.location.lat}, {"lon", p.location.lon}});
  j["zones"] = cfg.zones;
  j["ring_order"] = cfg.ring_order;
  j["periods"] = json::array();
  for (const auto& p : cfg.periods) j["periods"].push_back(p.to_string());
  j["oui_table"] = json::object();
  for (const auto& [oui, vendor] : cfg.oui_table) j["oui_table"][oui.to_string()] = vendor;
  return j;
}

// ---------------------------------------------------------------------------
// Synth spec

inline SynthSpec parse_synth_spec(const json& j) {
  constexpr Errc E = Errc::InvalidSpec;
  detail::JsonFields f(j, "", E);
  f.only({"seed", "days", "start_date", "utc_offset_minutes", "daily_window", "interval_minutes", "nodes", "ring_closed",
          "pois", "day_types", "schedule", "visitors_per_day", "local_share", "vendors", "behavior", "detection",
          "nuisance", "flow_biases"});
  SynthSpec s;
  s.seed = f.get_or<std::uint64_t>("seed", 1);
  s.days = f.get_or<int>("days", 7);
  if (f.has("start_date"))
    s.start_day = f.guarded(f.path("start_date"), [&] { return parse_day(f.get<std::string>("start_date")); });
  s.utc_offset_s = f.get_or<std::int64_t>("utc_offset_minutes", 0) * 60;
  if (f.has("daily_window"))
    s.daily_window = f.guarded(f.path("daily_window"), [&] { return ClockRange::parse(f.get<std::string>("daily_window")); });
  s.interval_minutes = f.get_or<int>("interval_minutes", 15);
  s.ring_closed = f.get_or<bool>("ring_closed", true);

  const auto& nodes = f.at("nodes");
  if (!nodes.is_array()) f.fail("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    detail::JsonFields n(nodes[i], detail::index_path("nodes", i), E);
    n.only({"id", "lat", "lon", "zone", "popularity"});
    SynthNode node;
    node.id = n.get<std::string>("id");
    if (n.has("lat") || n.has("lon")) node.location = detail::read_point(n);
    node.zone = n.get_or<std::string>("zone", "");
    node.popularity = n.get_or<double>("popularity", 1.0);
    s.nodes.push_back(std::move(node));
  }
  if (f.has("pois")) {
    const auto& pois = f.at("pois");
    if (!pois.is_array()) f.fail("pois", "expected an array");
    for (std::size_t i = 0; i < pois.size(); ++i) {
      detail::JsonFields p(pois[i], detail::index_path("pois", i), E);
      p.only({"name", "lat", "lon"});
      s.pois.push_back({p.get_or<std::string>("name", ""), detail::read_point(p)});
    }
  }
  const auto& types = f.at("day_types");
  if (!types.is_array()) f.fail("day_types", "expected an array");
  for (std::size_t i = 0; i < types.size(); ++i) {
    detail::JsonFields t(types[i], detail::index_path("day_types", i), E);
    t.only({"name", "magnitude", "curve"});
    s.day_types.push_back({t.get<std::string>("name"), t.get_or<double>("magnitude", 1.0), t.list<double>("curve")});
  }
  s.schedule = f.list<std::string>("schedule");
  s.visitors_per_day = f.get_or<std::int64_t>("visitors_per_day", s.visitors_per_day);
  s.local_share = f.get_or<double>("local_share", s.local_share);
  if (f.has("vendors")) {
    const auto& vendors = f.at("vendors");
    if (!vendors.is_array()) f.fail("vendors", "expected an array");
    for (std::size_t i = 0; i < vendors.size(); ++i) {
      detail::JsonFields v(vendors[i], detail::index_path("vendors", i), E);
      v.only({"name", "share", "prefixes"});
      VendorMix mix{v.get<std::string>("name"), v.get<double>("share"), {}};
      auto prefixes = v.list<std::string>("prefixes");
      for (std::size_t k = 0; k < prefixes.size(); ++k)
        mix.prefixes.push_back(
            v.guarded(detail::index_path(v.path("prefixes"), k), [&] { return Oui::parse(prefixes[k]); }));
      s.vendors.push_back(std::move(mix));
    }
  }
  auto range = [&](const detail::JsonFields& g, const char* key, std::int64_t& lo, std::int64_t& hi) {
    if (!g.has(key)) return;
    auto v = g.list<std::int64_t>(key);
    if (v.size() != 2) g.fail(g.path(key), "expected [min, max]");
    lo = v[0];
    hi = v[1];
  };
  if (f.has("behavior")) {
    detail::JsonFields b(f.at("behavior"), "behavior", E);
    b.only({"length_weights", "round_trip_prob", "cross_zone_prob", "ring_step_prob", "dwell_s", "walk_s",
            "wander_prob", "wander_s"});
    auto& x = s.behavior;
    if (b.has("length_weights")) x.length_weights = b.list<double>("length_weights");
    x.round_trip_prob = b.get_or<double>("round_trip_prob", x.round_trip_prob);
    x.cross_zone_prob = b.get_or<double>("cross_zone_prob", x.cross_zone_prob);
    x.ring_step_prob = b.get_or<double>("ring_step_prob", x.ring_step_prob);
    x.wander_prob = b.get_or<double>("wander_prob", x.wander_prob);
    range(b, "dwell_s", x.dwell_min_s, x.dwell_max_s);
    range(b, "walk_s", x.walk_min_s, x.walk_max_s);
    range(b, "wander_s", x.wander_min_s, x.wander_max_s);
  }
  if (f.has("detection")) {
    detail::JsonFields d(f.at("detection"), "detection", E);
    d.only({"record_span_s", "dropout", "rssi_mean", "rssi_sd", "leak_prob", "leak_rssi_drop"});
    auto& x = s.detection;
    x.record_span_s = d.get_or<std::int64_t>("record_span_s", x.record_span_s);
    x.dropout = d.get_or<double>("dropout", x.dropout);
    x.rssi_mean = d.get_or<double>("rssi_mean", x.rssi_mean);
    x.rssi_sd = d.get_or<double>("rssi_sd", x.rssi_sd);
    x.leak_prob = d.get_or<double>("leak_prob", x.leak_prob);
    x.leak_rssi_drop = d.get_or<double>("leak_rssi_drop", x.leak_rssi_drop);
  }
  if (f.has("nuisance")) {
    detail::JsonFields n(f.at("nuisance"), "nuisance", E);
    n.only({"static_devices", "vehicles_per_day", "vehicle_step_s"});
    auto& x = s.nuisance;
    x.static_devices = n.get_or<int>("static_devices", x.static_devices);
    x.vehicles_per_day = n.get_or<int>("vehicles_per_day", x.vehicles_per_day);
    x.vehicle_step_s = n.get_or<std::int64_t>("vehicle_step_s", x.vehicle_step_s);
  }
  if (f.has("flow_biases")) {
    const auto& biases = f.at("flow_biases");
    if (!biases.is_array()) f.fail("flow_biases", "expected an array");
    for (std::size_t i = 0; i < biases.size(); ++i) {
      detail::JsonFields b(biases[i], detail::index_path("flow_biases", i), E);
      b.only({"period", "clockwise"});
      FlowBias fb;
      fb.period = b.guarded(b.path("period"), [&] { return ClockRange::parse(b.get<std::string>("period")); });
      fb.clockwise = b.get<double>("clockwise");
      s.flow_biases.push_back(fb);
    }
  }
  validate(s);
  return s;
}

inline SynthSpec parse_synth_spec(std::string_view text) {
  return parse_synth_spec(detail::parse_json(text, Errc::InvalidSpec));
}

inline SynthSpec read_synth_spec(const std::string& path) { return parse_synth_spec(std::string_view(read_file(path))); }

// ---------------------------------------------------------------------------
// Ground truth

inline json to_json(const GroundTruth& truth) {
  json j;
  j["devices"] = json::array();
  for (const auto& d : truth.devices) {
    json dev{{"mac", d.mac.to_string()}, {"class", to_string(d.device_class)},
             {"kind", to_string(classify_mac(d.mac))}, {"vendor", d.vendor}};
    dev["trajectories"] = json::array();
    for (const auto& t : d.trajectories) {
      json tj{{"day", format_day(t.day)}, {"visits", json::array()}};
      for (const auto& v : t.visits) tj["visits"].push_back({{"node", v.node}, {"t_start", v.t_start}, {"t_end", v.t_end}});
      dev["trajectories"].push_back(std::move(tj));
    }
    j["devices"].push_back(std::move(dev));
  }
  j["zones"] = truth.zones;
  j["day_types"] = json::array();
  for (const auto& [day, type] : truth.day_types) j["day_types"].push_back({{"day", format_day(day)}, {"type", type}});
  j["vendor_shares"] = truth.vendor_shares;
  j["flow_biases"] = json::array();
  for (const auto& f : truth.flow_biases)
    j["flow_biases"].push_back({{"period", f.period.to_string()}, {"clockwise", f.clockwise}});
  return j;
}

// ---------------------------------------------------------------------------
// Datasets as NDJSON

inline json ndjson_header(std::string_view dataset, std::string_view manifest, std::size_t rows,
                          std::initializer_list<const char*> fields) {
  json h{{"dataset", dataset}, {"manifest", manifest}, {"rows", rows}, {"fields", json::array()}};
  for (const char* f : fields) h["fields"].push_back(f);
  return h;
}

/// Dataset A: one node-level record per line.
inline std::string format_dataset_a(const DatasetA& ds, std::string_view manifest, std::string_view name = "A") {
  std::string out = ndjson_header(name, manifest, ds.records.size(), {"mac", "node", "t_first", "t_last", "rssi"}).dump();
  out += '\n';
  for (const auto& r : ds.records) {
    out += "{\"mac\":\"" + r.mac.to_string() + "\",\"node\":" + json(r.source).dump() + ",\"t_first\":" +
           std::to_string(r.t_first) + ",\"t_last\":" + std::to_string(r.t_last) + ",\"rssi\":" + json(r.rssi).dump() +
           "}\n";
  }
  return out;
}

inline json to_json(const NodeVisit& v) {
  json gaps = json::array();
  for (const auto& g : v.gaps) gaps.push_back({g.begin, g.end});
  return {{"node", v.node},         {"t_start", v.t_start},     {"t_end", v.t_end},
          {"staying_s", v.staying_s}, {"missing_s", v.missing_s}, {"rssi", v.rssi},
          {"n_records", v.n_records}, {"gaps", std::move(gaps)}};
}

/// Dataset B: one trajectory per line.
inline std::string format_dataset_b(const DatasetB& ds, std::string_view manifest) {
  std::string out = ndjson_header("B", manifest, ds.trajectories.size(), {"mac", "day", "visits"}).dump();
  out += '\n';
  for (const auto& t : ds.trajectories) {
    json j{{"mac", t.mac.to_string()}, {"day", format_day(t.day)}, {"visits", json::array()}};
    for (const auto& v : t.visits) j["visits"].push_back(to_json(v));
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace detail {

template <class F>
void for_each_ndjson(std::string_view text, std::string_view dataset, F&& f) {
  std::size_t pos = 0, line = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view s = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line;
    if (s.empty() || s == "\r") continue;
    json j;
    try {
      j = json::parse(s);
    } catch (const json::parse_error& e) {
      throw Error(Errc::ParseError, "line " + std::to_string(line) + ": malformed JSON");
    }
    if (header) {
      header = false;
      if (j.contains("dataset")) {
        if (!j["dataset"].is_string() || j["dataset"].get<std::string>().rfind(dataset, 0) != 0)
          throw Error(Errc::ParseError, "line 1: expected a dataset " + std::string(dataset) + " file");
        continue;
      }
    }
    try {
      f(j, line);
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + e.what());
    }
  }
}

}  // namespace detail

inline DatasetA parse_dataset_a(std::string_view text) {
  DatasetA ds;
  detail::for_each_ndjson(text, "A", [&](const json& j, std::size_t) {
    ds.records.push_back({MacAddress::parse(j.at("mac").get<std::string>()), j.at("t_first").get<Timestamp>(),
                          j.at("t_last").get<Timestamp>(), j.at("rssi").get<double>(), j.at("node").get<std::string>()});
  });
  ds.macs = wifisense::detail::unique_macs(ds.records);
  return ds;
}

inline DatasetB parse_dataset_b(std::string_view text) {
  DatasetB ds;
  detail::for_each_ndjson(text, "B", [&](const json& j, std::size_t) {
    Trajectory t;
    t.mac = MacAddress::parse(j.at("mac").get<std::string>());
    t.day = parse_day(j.at("day").get<std::string>());
    for (const auto& v : j.at("visits")) {
      NodeVisit nv;
      nv.node = v.at("node").get<std::string>();
      nv.t_start = v.at("t_start").get<Timestamp>();
      nv.t_end = v.at("t_end").get<Timestamp>();
      nv.staying_s = v.at("staying_s").get<std::int64_t>();
      nv.missing_s = v.at("missing_s").get<std::int64_t>();
      nv.rssi = v.at("rssi").get<double>();
      nv.n_records = v.value("n_records", std::int64_t{1});
      if (v.contains("gaps"))
        for (const auto& g : v.at("gaps")) nv.gaps.push_back({g.at(0).get<Timestamp>(), g.at(1).get<Timestamp>()});
      t.visits.push_back(std::move(nv));
    }
    if (auto bad = check_trajectory(t)) throw Error(Errc::ParseError, *bad);
    ds.trajectories.push_back(std::move(t));
  });
  std::sort(ds.trajectories.begin(), ds.trajectories.end(),
            [](const Trajectory& a, const Trajectory& b) { return std::tie(a.mac, a.day) < std::tie(b.mac, b.day); });
  return ds;
}

inline DatasetA read_dataset_a(const std::string& path) { return parse_dataset_a(read_file(path)); }
inline DatasetB read_dataset_b(const std::string& path) { return parse_dataset_b(read_file(path)); }

}  // namespace wifisense::io
