#pragma once

// Plain-text CSV artifacts. Numbers use the shortest round-trip decimal form,
// so equal values always produce equal bytes.

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "occrisk/error.hpp"
#include "occrisk/metrics.hpp"
#include "occrisk/scene.hpp"
#include "occrisk/simulator.hpp"

namespace occrisk {

inline std::string fmt_num(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string fmt_opt(const std::optional<double>& x) { return x ? fmt_num(*x) : std::string(); }

inline constexpr const char* kSummaryHeader =
    "name,mode,n,collisions,collision_rate_pct,discomfort_median,discomfort_p95,timeout_count,"
    "failed_scenarios,origin_lat,origin_lon";

inline void write_summary_header(std::ostream& os) { os << kSummaryHeader << '\n'; }

inline void write_summary_rows(std::ostream& os, std::span<const SummaryRow> rows, const MapMeta& meta) {
    for (const auto& r : rows)
        os << r.name << ',' << r.mode << ',' << r.n << ',' << r.collisions << ',' << fmt_num(r.collision_rate_pct)
           << ',' << fmt_num(r.discomfort_median) << ',' << fmt_num(r.discomfort_p95) << ',' << r.timeout_count
           << ',' << r.failed_scenarios << ',' << fmt_opt(meta.origin_lat) << ',' << fmt_opt(meta.origin_lon)
           << '\n';
}

inline void write_cdf_header(std::ostream& os) { os << "name,mode,discomfort,fraction\n"; }

inline void write_cdf_rows(std::ostream& os, const SummaryRow& row) {
    if (row.discomfort.empty()) return;
    for (const auto& [x, f] : cdf(row.discomfort))
        os << row.name << ',' << row.mode << ',' << fmt_num(x) << ',' << fmt_num(f) << '\n';
}

inline void write_profile_header(std::ostream& os) {
    os << "name,mode,t,count";
    for (const char* q : {"v", "a"})
        for (double p : kBandPercentiles) os << ',' << q << "_p" << static_cast<int>(p);
    os << '\n';
}

inline void write_profile_rows(std::ostream& os, const std::string& name, const std::string& mode,
                               std::span<const ProfileRow> rows) {
    for (const auto& r : rows) {
        os << name << ',' << mode << ',' << fmt_num(r.t) << ',' << r.count;
        for (double x : r.v) os << ',' << fmt_num(x);
        for (double x : r.a) os << ',' << fmt_num(x);
        os << '\n';
    }
}

inline void write_trace(std::ostream& os, const EpisodeResult& r) {
    os << "t,s_ego,v_ego,a_ego,x,y,outcome\n";
    const auto outcome = to_string(r.outcome);
    for (const auto& rec : r.trace)
        os << fmt_num(rec.t) << ',' << fmt_num(rec.s) << ',' << fmt_num(rec.v) << ',' << fmt_num(rec.a) << ','
           << fmt_num(rec.x) << ',' << fmt_num(rec.y) << ',' << outcome << '\n';
}

inline void write_particles(std::ostream& os, const EpisodeResult& r, const IntersectionMap& map) {
    os << "t,lane_id,x,y\n";
    for (const auto& p : r.particles)
        os << fmt_num(p.t) << ',' << map.lanes()[p.lane].id << ',' << fmt_num(p.x) << ',' << fmt_num(p.y) << '\n';
}

// ---------------------------------------------------------------------------
// Overlay: merge summaries into one row per intersection.

struct OverlayRow {
    std::string name;
    std::optional<double> origin_lat, origin_lon;
    std::map<std::string, double> rates;  // mode -> collision rate, %
    friend bool operator==(const OverlayRow&, const OverlayRow&) = default;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') { out.push_back(cur); cur.clear(); }
        else if (c != '\r') cur.push_back(c);
    }
    out.push_back(cur);
    return out;
}

inline double parse_num(const std::string& s, const std::string& where) {
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw LoadError("summary: bad number '" + s + "' in " + where, where);
    return x;
}

/// Reads a summary CSV into per-intersection rows (one per name, in order).
inline std::vector<OverlayRow> read_summary(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) throw LoadError("summary: empty file " + source, source);
    const auto header = split_csv_line(line);
    auto col = [&](const char* name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw LoadError(std::string("summary: missing column ") + name + " in " + source, source);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_name = col("name"), c_mode = col("mode"), c_rate = col("collision_rate_pct"),
                      c_lat = col("origin_lat"), c_lon = col("origin_lon");
    std::vector<OverlayRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) throw LoadError("summary: ragged row in " + source, source);
        auto it = std::find_if(rows.begin(), rows.end(), [&](const OverlayRow& r) { return r.name == f[c_name]; });
        if (it == rows.end()) {
            rows.push_back({f[c_name], {}, {}, {}});
            it = rows.end() - 1;
        }
        if (!f[c_lat].empty()) it->origin_lat = parse_num(f[c_lat], source);
        if (!f[c_lon].empty()) it->origin_lon = parse_num(f[c_lon], source);
        it->rates[f[c_mode]] = parse_num(f[c_rate], source);
    }
    return rows;
}

/// Union of the inputs sorted by name. Equal duplicates collapse; a name
/// carrying different data in two inputs is a MergeError.
inline std::vector<OverlayRow> merge_overlay(std::span<const std::vector<OverlayRow>> inputs) {
    std::map<std::string, OverlayRow> by_name;
    for (const auto& rows : inputs)
        for (const auto& r : rows) {
            const auto [it, inserted] = by_name.emplace(r.name, r);
            if (!inserted && !(it->second == r)) throw MergeError("conflicting entries for intersection '" + r.name + "'");
        }
    std::vector<OverlayRow> out;
    for (auto& [name, row] : by_name) out.push_back(std::move(row));
    return out;
}

inline void write_overlay(std::ostream& os, std::span<const OverlayRow> rows) {
    std::vector<std::string> modes;
    for (const auto& r : rows)
        for (const auto& [m, rate] : r.rates)
            if (std::find(modes.begin(), modes.end(), m) == modes.end()) modes.push_back(m);
    std::sort(modes.begin(), modes.end());
    os << "name,origin_lat,origin_lon";
    for (const auto& m : modes) os << ",rate_" << m;
    os << '\n';
    for (const auto& r : rows) {
        os << r.name << ',' << fmt_opt(r.origin_lat) << ',' << fmt_opt(r.origin_lon);
        for (const auto& m : modes) {
            const auto it = r.rates.find(m);
            os << ',' << (it == r.rates.end() ? std::string() : fmt_num(it->second));
        }
        os << '\n';
    }
}

}  // namespace occrisk
