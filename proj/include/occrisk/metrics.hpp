#pragma once

// Collision rates, discomfort scores, percentile bands and empirical CDFs.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "occrisk/error.hpp"
#include "occrisk/simulator.hpp"

namespace occrisk {

/// Percent of episodes that ended in a collision. Timeouts only add to the
/// denominator.
inline double collision_rate(std::size_t collisions, std::size_t total) {
    if (total == 0) throw ArityError("collision rate of an empty batch");
    return 100.0 * static_cast<double>(collisions) / static_cast<double>(total);
}

inline double collision_rate(std::span<const EpisodeResult> results) {
    const auto n = static_cast<std::size_t>(std::count_if(
        results.begin(), results.end(), [](const EpisodeResult& r) { return r.outcome == Outcome::collision; }));
    return collision_rate(n, results.size());
}

/// (1/T) * integral_0^T max(0, |a(t)| - a_thresh) dt, trapezoidal on the
/// sample grid. Samples past T are ignored.
inline double discomfort(std::span<const double> t, std::span<const double> a, double a_thresh, double T) {
    if (!(T > 0.0)) throw DomainError("discomfort horizon must be positive");
    if (t.size() != a.size()) throw ArityError("time and acceleration series differ in length");
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < t.size() && t[i] < T; ++i) {
        const double t1 = std::min(t[i + 1], T);
        const double e0 = std::max(0.0, std::abs(a[i]) - a_thresh);
        const double e1 = std::max(0.0, std::abs(a[i + 1]) - a_thresh);
        integral += 0.5 * (e0 + e1) * (t1 - t[i]);
    }
    return integral / T;
}

/// Discomfort over a whole episode; collision episodes stop at the collision.
inline double discomfort(const EpisodeResult& r, double a_thresh) {
    std::vector<double> t, a;
    t.reserve(r.trace.size());
    a.reserve(r.trace.size());
    for (const auto& rec : r.trace) { t.push_back(rec.t); a.push_back(rec.a); }
    const double T = r.collision_time.value_or(r.end_time());
    return discomfort(t, a, a_thresh, T);
}

/// Linear interpolation between closest ranks; q in [0, 100].
inline double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ArityError("percentile of an empty sample");
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, q);
}

inline double median(std::vector<double> values) { return percentile(std::move(values), 50.0); }

/// Empirical CDF: sorted values with cumulative fraction (i + 1) / n.
inline std::vector<std::pair<double, double>> cdf(std::vector<double> values) {
    if (values.empty()) throw ArityError("cdf of an empty sample");
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(values.size());
    const auto n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out.emplace_back(values[i], i + 1 == values.size() ? 1.0 : static_cast<double>(i + 1) / n);
    return out;
}

inline constexpr std::array<double, 7> kBandPercentiles{5, 20, 35, 50, 65, 80, 95};

struct ProfileRow {
    double t = 0.0;     // bin start
    std::size_t count = 0;  // episodes active in the bin
    std::array<double, 7> v{};
    std::array<double, 7> a{};
};

/// Per time bin, percentiles across episodes still running in that bin of
/// each episode's mean speed and mean acceleration within the bin.
inline std::vector<ProfileRow> profile_bands(std::span<const EpisodeResult> results, double bin) {
    if (!(bin > 0.0)) throw DomainError("profile bin must be positive");
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> bins;
    for (const auto& r : results) {
        std::map<std::size_t, std::array<double, 3>> acc;  // sum v, sum a, count
        for (const auto& rec : r.trace) {
            const auto b = static_cast<std::size_t>(std::floor(rec.t / bin + 1e-9));
            auto& e = acc[b];
            e[0] += rec.v;
            e[1] += rec.a;
            e[2] += 1.0;
        }
        for (const auto& [b, e] : acc) {
            bins[b].first.push_back(e[0] / e[2]);
            bins[b].second.push_back(e[1] / e[2]);
        }
    }
    std::vector<ProfileRow> out;
    for (auto& [b, va] : bins) {
        ProfileRow row;
        row.t = static_cast<double>(b) * bin;
        row.count = va.first.size();
        std::sort(va.first.begin(), va.first.end());
        std::sort(va.second.begin(), va.second.end());
        for (std::size_t i = 0; i < kBandPercentiles.size(); ++i) {
            row.v[i] = percentile_sorted(va.first, kBandPercentiles[i]);
            row.a[i] = percentile_sorted(va.second, kBandPercentiles[i]);
        }
        out.push_back(row);
    }
    return out;
}

struct SummaryRow {
    std::string name;
    std::string mode;
    std::size_t n = 0;           // episodes that ran
    std::size_t collisions = 0;
    double collision_rate_pct = 0.0;
    double discomfort_median = 0.0;
    double discomfort_p95 = 0.0;
    std::size_t timeout_count = 0;
    std::size_t failed_scenarios = 0;  // scenario generation saturated
    std::vector<double> discomfort;    // per episode, timeouts excluded
};

/// One row per mode, in the order the modes first appear in `entries`.
inline std::vector<SummaryRow> summarize(std::span<const BatchEntry> entries, const std::string& name,
                                         double a_thresh) {
    std::vector<SummaryRow> rows;
    auto row_for = [&](RiskMode m) -> SummaryRow& {
        for (auto& r : rows)
            if (r.mode == to_string(m)) return r;
        rows.push_back({});
        rows.back().name = name;
        rows.back().mode = std::string(to_string(m));
        return rows.back();
    };
    for (const auto& e : entries) {
        SummaryRow& row = row_for(e.mode);
        if (!e.result) { ++row.failed_scenarios; continue; }
        ++row.n;
        switch (e.result->outcome) {
            case Outcome::collision: ++row.collisions; break;
            case Outcome::timeout: ++row.timeout_count; break;
            case Outcome::goal_reached: break;
        }
        if (e.result->outcome != Outcome::timeout) row.discomfort.push_back(discomfort(*e.result, a_thresh));
    }
    for (auto& r : rows) {
        r.collision_rate_pct = r.n ? collision_rate(r.collisions, r.n) : 0.0;
        if (!r.discomfort.empty()) {
            r.discomfort_median = percentile(r.discomfort, 50.0);
            r.discomfort_p95 = percentile(r.discomfort, 95.0);
        }
    }
    return rows;
}

}  // namespace occrisk
