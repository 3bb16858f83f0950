#pragma once

// File formats (CSV in, CSV/JSON out), trip-log ingestion, conservative networks and distance
// covariates.

#include "netgof/bandwidth.hpp"
#include "netgof/distance.hpp"
#include "netgof/goftest.hpp"
#include "netgof/partition.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace netgof::io {

/// Shortest decimal form that parses back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  long long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Splits one CSV record; double quotes may wrap fields and "" escapes a quote.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  int column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return static_cast<int>(k);
    return -1;
  }
  int require(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw DataError("missing CSV column '" + name + "'");
    return c;
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      t.header = split_csv(line);
      if (!t.header.empty() && t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) t.header[0].erase(0, 3);
      have_header = true;
      continue;
    }
    t.rows.push_back(split_csv(line));
    t.line_numbers.push_back(no);
  }
  if (!have_header) throw DataError("CSV input is empty");
  return t;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

inline double field_double(const CsvTable& t, std::size_t r, int c) {
  if (c >= static_cast<int>(t.rows[r].size())) throw DataError("line " + std::to_string(t.line_numbers[r]) + ": too few fields");
  auto v = parse_double(t.rows[r][c]);
  if (!v) throw DataError("line " + std::to_string(t.line_numbers[r]) + ": not a number: '" + t.rows[r][c] + "'");
  return *v;
}

inline int field_int(const CsvTable& t, std::size_t r, int c) {
  if (c >= static_cast<int>(t.rows[r].size())) throw DataError("line " + std::to_string(t.line_numbers[r]) + ": too few fields");
  auto v = parse_int(t.rows[r][c]);
  if (!v) throw DataError("line " + std::to_string(t.line_numbers[r]) + ": not an integer: '" + t.rows[r][c] + "'");
  return static_cast<int>(*v);
}

// ---- network: i,j,start,end

inline void write_network_csv(std::ostream& out, const DynamicNetwork& net) {
  out << "i,j,start,end\n";
  for (const auto& [p, list] : net.activity())
    for (const auto& iv : list) out << p.i << ',' << p.j << ',' << fmt(iv.start) << ',' << fmt(iv.end) << '\n';
}

/// n <= 0 infers the vertex count from the largest index.
inline DynamicNetwork read_network_csv(std::istream& in, double horizon, int n = 0, bool directed = false) {
  const auto t = read_csv(in);
  const int ci = t.require("i"), cj = t.require("j"), cs = t.require("start"), ce = t.require("end");
  std::vector<DynamicNetwork::Record> recs;
  int maxv = -1;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int i = field_int(t, r, ci), j = field_int(t, r, cj);
    if (i < 0 || j < 0) throw DataError("line " + std::to_string(t.line_numbers[r]) + ": negative vertex index");
    if (i == j) throw DataError("line " + std::to_string(t.line_numbers[r]) + ": loop pair");
    maxv = std::max({maxv, i, j});
    recs.push_back({Pair{i, j}, Interval{field_double(t, r, cs), field_double(t, r, ce)}});
  }
  if (n <= 0) n = maxv + 1;
  return DynamicNetwork(n, horizon, recs, directed);
}

// ---- events: time,i,j sorted by time

inline void write_events_csv(std::ostream& out, const EventLog& log) {
  out << "time,i,j\n";
  for (const auto& e : log.sorted()) out << fmt(e.time) << ',' << e.pair.i << ',' << e.pair.j << '\n';
}

inline EventLog read_events_csv(std::istream& in, double horizon, bool directed = false) {
  const auto t = read_csv(in);
  const int ct = t.require("time"), ci = t.require("i"), cj = t.require("j");
  std::map<Pair, std::vector<double>> ev;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int i = field_int(t, r, ci), j = field_int(t, r, cj);
    if (i == j) throw DataError("line " + std::to_string(t.line_numbers[r]) + ": loop pair");
    const Pair p = directed ? Pair{i, j} : make_undirected(i, j);
    ev[p].push_back(field_double(t, r, ct));
  }
  return EventLog(horizon, std::move(ev));
}

// ---- static covariates: i,j,x_1..x_q

inline void write_static_covariates_csv(std::ostream& out, const CovariateField& cov, const std::vector<Pair>& pairs) {
  out << "i,j";
  for (int a = 1; a <= cov.dim(); ++a) out << ",x_" << a;
  out << '\n';
  for (const auto& p : pairs) {
    const Vec x = cov.eval(p, 0.0);
    out << p.i << ',' << p.j;
    for (int a = 0; a < x.size(); ++a) out << ',' << fmt(x[a]);
    out << '\n';
  }
}

inline CovariateField read_static_covariates_csv(std::istream& in, bool directed = false) {
  const auto t = read_csv(in);
  const int ci = t.require("i"), cj = t.require("j");
  std::vector<int> cols;
  for (int a = 1;; ++a) {
    const int c = t.column("x_" + std::to_string(a));
    if (c < 0) break;
    cols.push_back(c);
  }
  if (cols.empty()) throw DataError("covariate CSV needs columns x_1..x_q");
  std::map<Pair, Vec> values;
  double bound = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int i = field_int(t, r, ci), j = field_int(t, r, cj);
    Vec x(cols.size());
    for (std::size_t a = 0; a < cols.size(); ++a) x[a] = field_double(t, r, cols[a]);
    bound = std::max(bound, x.cwiseAbs().maxCoeff());
    values[directed ? Pair{i, j} : make_undirected(i, j)] = x;
  }
  return CovariateField::static_field(static_cast<int>(cols.size()), std::move(values), std::max(bound, 1e-12));
}

// ---- durations: i,j,minutes

inline std::map<Pair, double> read_durations_csv(std::istream& in, bool directed = false) {
  const auto t = read_csv(in);
  const int ci = t.require("i"), cj = t.require("j"), cm = t.require("minutes");
  std::map<Pair, double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int i = field_int(t, r, ci), j = field_int(t, r, cj);
    out[directed ? Pair{i, j} : make_undirected(i, j)] = field_double(t, r, cm);
  }
  return out;
}

inline void write_durations_csv(std::ostream& out, const std::map<Pair, double>& d) {
  out << "i,j,minutes\n";
  for (const auto& [p, m] : d) out << p.i << ',' << p.j << ',' << fmt(m) << '\n';
}

// ---- partition: i,j,k,m

inline void write_partition_csv(std::ostream& out, const PartitionAssignment& p) {
  out << "i,j,k,m\n";
  for (const auto& [pair, c] : p.assign) out << pair.i << ',' << pair.j << ',' << c.k << ',' << c.m << '\n';
}

// ---- bandwidth curve: h,error

inline void write_curve_csv(std::ostream& out, const BandwidthCurve& c) {
  out << "h,error\n";
  for (std::size_t k = 0; k < c.h.size(); ++k) out << fmt(c.h[k]) << ',' << fmt(c.error[k]) << '\n';
}

// ---- estimated path: t0,theta_1..theta_q,converged,iters (plus weight and p-bar for plotting)

inline void write_path_csv(std::ostream& out, const StatisticPath& path, int q) {
  out << "t0";
  for (int a = 1; a <= q; ++a) out << ",theta_" << a;
  out << ",converged,iters,w,pbar\n";
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    out << fmt(path.grid[k]);
    for (int a = 0; a < q; ++a) out << ',' << fmt(path.theta[k][a]);
    out << ',' << int(path.converged[k]) << ',' << path.iterations[k] << ',' << fmt(path.weight[k]) << ','
        << fmt(path.pbar[k]) << '\n';
  }
}

// ---- trip-log ingestion

struct VertexRegistry {
  std::map<std::string, int> id;
  std::vector<std::string> names;

  int get_or_add(const std::string& name) {
    auto [it, inserted] = id.emplace(name, static_cast<int>(names.size()));
    if (inserted) names.push_back(name);
    return it->second;
  }
  int size() const { return static_cast<int>(names.size()); }
};

enum class TimeFormat { Hours, EpochSeconds, Iso };

inline TimeFormat time_format_from(const std::string& s) {
  if (s == "hours") return TimeFormat::Hours;
  if (s == "epoch" || s == "epoch_seconds") return TimeFormat::EpochSeconds;
  if (s == "iso") return TimeFormat::Iso;
  throw ConfigError("unknown time format '" + s + "'");
}

/// "YYYY-MM-DD HH:MM[:SS[.fff]]" (or with 'T') as seconds since 1970-01-01, no time zone.
inline std::optional<double> parse_iso_seconds(std::string_view s) {
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    if (pos + len > s.size()) return std::nullopt;
    int v = 0;
    auto r = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (r.ec != std::errc() || r.ptr != s.data() + pos + len) return std::nullopt;
    return v;
  };
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':') return std::nullopt;
  auto y = num(0, 4), mo = num(5, 2), d = num(8, 2), hh = num(11, 2), mi = num(14, 2);
  if (!y || !mo || !d || !hh || !mi) return std::nullopt;
  double sec = 0.0;
  if (s.size() > 16) {
    if (s[16] != ':') return std::nullopt;
    auto v = parse_double(s.substr(17));
    if (!v) return std::nullopt;
    sec = *v;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *hh > 23 || *mi > 59 || sec < 0.0 || sec >= 61.0) return std::nullopt;
  const double days = static_cast<double>(sys_days(ymd).time_since_epoch().count());
  return days * 86400.0 + *hh * 3600.0 + *mi * 60.0 + sec;
}

/// Time value in hours on an absolute scale.
inline std::optional<double> parse_time_hours(std::string_view s, TimeFormat f) {
  switch (f) {
    case TimeFormat::Hours: return parse_double(s);
    case TimeFormat::EpochSeconds: {
      auto v = parse_double(s);
      if (!v) return std::nullopt;
      return *v / 3600.0;
    }
    case TimeFormat::Iso: {
      auto v = parse_iso_seconds(s);
      if (!v) return std::nullopt;
      return *v / 3600.0;
    }
  }
  return std::nullopt;
}

struct IngestOptions {
  std::string time_column = "Start date";
  std::string origin_column = "Start station number";
  std::string dest_column = "End station number";
  std::string duration_column;  // optional, values in seconds
  TimeFormat format = TimeFormat::Iso;
  std::string window_begin;     // same format as the time column
  std::string window_end;
  bool directed = false;
  double max_skip_fraction = 0.01;
  double tie_nudge = 1e-7;      // hours added to repeated times of the same pair
};

struct IngestResult {
  EventLog log;
  double horizon = 0.0;
  std::size_t rows = 0;
  std::size_t skipped = 0;      // unparseable
  std::size_t outside = 0;      // outside the window
  std::size_t loops = 0;
  std::size_t nudged = 0;
  std::map<Pair, std::vector<double>> durations_minutes;
};

/// Events with times in hours since the window start; vertices are registered by first appearance
/// among the rows inside the window.
inline IngestResult ingest_events(std::istream& in, const IngestOptions& opt, VertexRegistry& registry) {
  const auto b = parse_time_hours(opt.window_begin, opt.format);
  const auto e = parse_time_hours(opt.window_end, opt.format);
  if (!b || !e || !(*b < *e)) throw ConfigError("invalid ingestion window");
  const auto t = read_csv(in);
  const int ct = t.require(opt.time_column), co = t.require(opt.origin_column), cd = t.require(opt.dest_column);
  const int cdur = opt.duration_column.empty() ? -1 : t.require(opt.duration_column);
  IngestResult res;
  res.horizon = *e - *b;
  res.rows = t.rows.size();
  std::map<Pair, std::vector<double>> ev;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int need = std::max({ct, co, cd, cdur});
    if (static_cast<int>(row.size()) <= need || row[co].empty() || row[cd].empty()) {
      ++res.skipped;
      continue;
    }
    const auto th = parse_time_hours(row[ct], opt.format);
    std::optional<double> dur;
    if (cdur >= 0) dur = parse_double(row[cdur]);
    if (!th || (cdur >= 0 && (!dur || !(*dur > 0.0)))) {
      ++res.skipped;
      continue;
    }
    if (*th < *b || *th >= *e) {
      ++res.outside;
      continue;
    }
    const int u = registry.get_or_add(row[co]);
    const int v = registry.get_or_add(row[cd]);
    if (u == v) {
      ++res.loops;
      continue;
    }
    const Pair p = opt.directed ? Pair{u, v} : make_undirected(u, v);
    ev[p].push_back(*th - *b);
    if (dur) res.durations_minutes[p].push_back(*dur / 60.0);
  }
  if (res.rows > 0 && static_cast<double>(res.skipped) > opt.max_skip_fraction * static_cast<double>(res.rows))
    throw DataError(std::to_string(res.skipped) + " of " + std::to_string(res.rows) + " rows could not be parsed");
  for (auto& [p, times] : ev) {
    std::sort(times.begin(), times.end());
    for (std::size_t k = 1; k < times.size(); ++k)
      if (times[k] <= times[k - 1]) {
        times[k] = times[k - 1] + opt.tie_nudge;
        ++res.nudged;
      }
    times.erase(std::remove_if(times.begin(), times.end(), [&](double x) { return x > res.horizon; }), times.end());
  }
  res.log = EventLog(res.horizon, std::move(ev));
  return res;
}

inline IngestResult ingest_events(const std::string& path, const IngestOptions& opt, VertexRegistry& registry) {
  auto in = open_in(path);
  return ingest_events(in, opt, registry);
}

/// Static network on [0, horizon] of the pairs with at least `threshold` prior events.
inline DynamicNetwork build_conservative_network(const EventLog& prior, int threshold, int n, double horizon,
                                                 bool directed = false) {
  if (threshold < 1) throw ConfigError("threshold must be at least 1");
  std::vector<Pair> pairs;
  for (const auto& [p, times] : prior.events())
    if (static_cast<int>(times.size()) >= threshold) pairs.push_back(p);
  return DynamicNetwork::static_network(n, horizon, pairs, directed);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw DataError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// X = (1, max(log d, 0), max(log d, 0)^2) with d in minutes, for every pair of the network.
inline CovariateField distance_covariates(const std::map<Pair, double>& minutes, const DynamicNetwork& net) {
  std::map<Pair, Vec> values;
  double bound = 1.0;
  for (const auto& [p, list] : net.activity()) {
    auto it = minutes.find(p);
    if (it == minutes.end()) throw ConfigError("missing duration for pair " + to_string(p));
    if (!(it->second > 0.0)) throw ConfigError("duration must be positive for pair " + to_string(p));
    const double l = std::max(std::log(it->second), 0.0);
    values[p] = (Vec(3) << 1.0, l, l * l).finished();
    bound = std::max(bound, l * l);
  }
  return CovariateField::static_field(3, std::move(values), bound);
}

// ---- JSON

inline nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

inline nlohmann::json to_json(const TestResult& r) {
  nlohmann::json j;
  j["Tn"] = r.Tn;
  j["An"] = r.An;
  j["Bhat"] = r.Bhat;
  j["z"] = r.z;
  j["pValue"] = r.p_value;
  j["h"] = r.h;
  j["r_n"] = r.r_n;
  j["thetaBar"] = vec_json(r.theta_bar);
  j["gridUsed"] = r.grid_used;
  j["gridExcluded"] = r.grid_excluded;
  j["diagnostics"] = {{"minExposure", r.min_exposure}, {"maxSigmaCondition", r.max_condition}};
  if (r.Bhat_martingale) j["BhatMartingale"] = *r.Bhat_martingale;
  return j;
}

inline nlohmann::json to_json(const PartitionReport& r) {
  nlohmann::json j;
  j["ok"] = r.ok;
  j["disjoint"] = r.disjoint;
  j["separated"] = r.separated;
  j["covered"] = r.covered;
  j["worstViolation"] = r.worst_violation ? nlohmann::json(*r.worst_violation) : nlohmann::json(nullptr);
  j["minSameTypeDistance"] = std::isfinite(r.min_same_type_distance) ? nlohmann::json(r.min_same_type_distance)
                                                                     : nlohmann::json("inf");
  j["violations"] = r.violations;
  j["uncovered"] = r.uncovered;
  j["inactiveAssigned"] = r.inactive_assigned;
  j["assigned"] = r.assigned;
  j["blocks"] = r.blocks;
  return j;
}

inline nlohmann::json to_json(const HubReport& r) {
  nlohmann::json j;
  j["m"] = r.m;
  j["F"] = r.F;
  j["window"] = {r.window.start, r.window.end};
  j["maxCount"] = r.max_count;
  j["hubCount"] = r.hub_count;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [p, c] : r.per_pair) per.push_back({{"i", p.i}, {"j", p.j}, {"count", c}, {"hub", r.hub_flags.at(p)}});
  j["perPair"] = per;
  return j;
}

inline nlohmann::json to_json(const BandwidthCurve& c) {
  return {{"h", c.h}, {"error", c.error}, {"hStar", c.h_star}, {"hConverted", c.h_converted}, {"rho", kBandwidthRho}};
}

/// 64-bit FNV-1a, used to fingerprint configurations.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace netgof::io
