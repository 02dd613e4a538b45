#pragma once

// Particle-based risk over Cartesian space.
//
// Hypothetical vehicles are sampled uniformly over every lane interval that
// the ego cannot see (plus the footprints of vehicles it can see), moved
// forward at constant speed for the forecast horizon, and offset laterally
// from the centerline. The union over lanes is the risk distribution the
// planner consumes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occrisk/error.hpp"
#include "occrisk/geometry.hpp"
#include "occrisk/rng.hpp"
#include "occrisk/scene.hpp"
#include "occrisk/spline.hpp"
#include "occrisk/visibility.hpp"

namespace occrisk {

enum class RiskMode { occlusion_aware, observed_only };

inline std::string_view to_string(RiskMode m) {
    return m == RiskMode::occlusion_aware ? "occlusion_aware" : "observed_only";
}

inline RiskMode parse_risk_mode(std::string_view s) {
    if (s == "occlusion_aware") return RiskMode::occlusion_aware;
    if (s == "observed_only") return RiskMode::observed_only;
    throw ConfigurationError("unknown risk mode '" + std::string(s) + "'");
}

struct RiskConfig {
    double forecast_horizon = 1.5;             // T_f, s
    double density = 32768.0;                  // particles per 100 m of interval
    std::size_t max_particles_per_lane = 32768;
    double max_offset = 0.75 * 1.86;           // b_bar, m
    RiskMode mode = RiskMode::occlusion_aware;

    void validate() const {
        if (!(forecast_horizon > 0.0)) throw ConfigurationError("T_f must be positive");
        if (!(density > 0.0)) throw ConfigurationError("particle density must be positive");
        if (max_particles_per_lane < 1) throw ConfigurationError("particle cap must be >= 1");
        if (!(max_offset > 0.0)) throw ConfigurationError("b_bar must be positive");
    }
};

struct SpeedBounds {
    double lo = 0.0;
    double hi = 12.0;
};

struct Particle {
    std::uint32_t lane = 0;
    double s = 0.0;
    double v = 0.0;
    double b = 0.0;
    double pick = 0.0;  // uniform draw used to choose a successor lane
};

struct PropagatedParticle {
    std::uint32_t lane = 0;
    double s_hat = 0.0;
    double b = 0.0;
};

struct RiskPoint {
    Vec2 p;
    std::uint32_t lane = 0;  // lane the point ended up on
    double s_hat = 0.0;      // arc length on that lane
    double b = 0.0;
};

struct RiskDistribution {
    std::vector<RiskPoint> points;
    double forecast_horizon = 0.0;
    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// N_k = min(cap, round(density * length / 100)).
inline std::size_t particle_count(double interval_length, const RiskConfig& cfg) {
    const double n = std::round(cfg.density * interval_length / 100.0);
    if (!(n > 0.0)) return 0;
    return std::min(cfg.max_particles_per_lane, static_cast<std::size_t>(n));
}

/// Uniform draw over the union of disjoint intervals: an interval is chosen
/// with probability proportional to its length.
inline std::vector<Particle> sample_particles(std::uint32_t lane, SpeedBounds speed,
                                              std::span<const Interval> intervals,
                                              const RiskConfig& cfg, Rng& rng) {
    if (intervals.empty()) return {};
    if (!(speed.lo <= speed.hi)) throw DomainError("lane speed bounds are inverted");
    std::vector<double> cum;
    cum.reserve(intervals.size());
    double total = 0.0;
    for (const auto& iv : intervals) {
        if (iv.hi < iv.lo) throw DomainError("interval bounds are inverted");
        total += iv.length();
        cum.push_back(total);
    }
    const std::size_t n = particle_count(total, cfg);
    std::vector<Particle> out(n);
    for (auto& p : out) {
        const double x = rng.uniform() * total;
        auto j = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), x) - cum.begin());
        j = std::min(j, intervals.size() - 1);
        const double start = j == 0 ? 0.0 : cum[j - 1];
        p.lane = lane;
        p.s = std::clamp(intervals[j].lo + (x - start), intervals[j].lo, intervals[j].hi);
        p.v = rng.uniform(speed.lo, speed.hi);
        p.b = rng.uniform(-cfg.max_offset, cfg.max_offset);
        p.pick = rng.uniform();
    }
    return out;
}

/// Constant-speed forecast: s_hat = s + v * T_f.
inline std::vector<PropagatedParticle> propagate(std::span<const Particle> particles, double horizon) {
    if (!(horizon >= 0.0)) throw DomainError("forecast horizon must be non-negative");
    std::vector<PropagatedParticle> out;
    out.reserve(particles.size());
    for (const auto& p : particles) out.push_back({p.lane, p.s + p.v * horizon, p.b});
    return out;
}

/// Centerline point at s_hat pushed b metres along the unit left normal.
/// Positions past the lane end are clamped to the end.
inline Vec2 to_cartesian(const LaneSpline& lane, double s_hat, double b) {
    if (!(s_hat >= 0.0)) throw DomainError("propagated position must be non-negative");
    const auto [c, n] = lane.frame(std::min(s_hat, lane.length()));
    return c + b * n;
}

/// Per-lane intervals whose centerline samples fall inside the vehicle's rectangle.
inline std::vector<std::vector<Interval>> observed_vehicle_intervals(const OrientedBox& vehicle,
                                                                     std::span<const LaneSpline> lanes,
                                                                     double step) {
    if (!(step > 0.0)) throw DomainError("sampling step must be positive");
    std::vector<std::vector<Interval>> out(lanes.size());
    Aabb vb;
    for (Vec2 c : vehicle.corners()) vb.expand(c);
    for (std::size_t k = 0; k < lanes.size(); ++k) {
        if (!lanes[k].bounds().overlaps(vb)) continue;
        const auto smp = sample_spline(lanes[k], step);
        std::vector<bool> inside(smp.s.size());
        for (std::size_t i = 0; i < smp.s.size(); ++i) inside[i] = vehicle.contains(smp.p[i]);
        out[k] = intervals_from_mask(smp.s, inside, lanes[k].length(), step);
    }
    return out;
}

/// Same as above against a map's cached lane samples.
inline std::vector<std::vector<Interval>> observed_vehicle_intervals(const OrientedBox& vehicle,
                                                                     const IntersectionMap& map) {
    const auto& lanes = map.lanes();
    std::vector<std::vector<Interval>> out(lanes.size());
    Aabb vb;
    for (Vec2 c : vehicle.corners()) vb.expand(c);
    for (std::size_t k = 0; k < lanes.size(); ++k) {
        if (!lanes[k].spline.bounds().overlaps(vb)) continue;
        const auto& smp = map.lane_samples(k);
        std::vector<bool> inside(smp.s.size());
        bool any = false;
        for (std::size_t i = 0; i < smp.s.size(); ++i) any |= (inside[i] = vehicle.contains(smp.p[i]));
        if (any)
            out[k] = intervals_from_mask(smp.s, inside, lanes[k].spline.length(),
                                         IntersectionMap::kSampleStep);
    }
    return out;
}

struct EgoView {
    Vec2 position;
    double heading = 0.0;
    SensorModel sensor;
};

/// Everything `assess` computed, for diagnostics and tests.
struct RiskAssessment {
    RiskDistribution risk;
    VisibilityPolygon visible;
    std::vector<std::vector<Interval>> intervals;  // per lane, the sampled support
    std::vector<bool> observed;                    // per other vehicle: hit by at least one ray
    std::vector<std::size_t> particles_per_lane;
};

/// Full pipeline. Occluders are the buildings plus the other vehicles; a
/// vehicle counts as observed when at least one sensor ray stops on it.
/// `stream_seed` keys the random streams (one per lane).
inline RiskAssessment assess_detailed(const IntersectionMap& map, const EgoView& ego,
                                      std::span<const OrientedBox> others, const RiskConfig& cfg,
                                      std::uint64_t stream_seed) {
    cfg.validate();
    const auto& lanes = map.lanes();
    std::vector<Polygon> occluders = map.building_polygons();
    const std::size_t n_buildings = occluders.size();
    for (const auto& o : others) occluders.push_back(o.to_polygon());

    RiskAssessment out;
    out.visible = visibility_polygon(ego.position, ego.heading, occluders, ego.sensor);
    out.observed.assign(others.size(), false);
    for (std::size_t i = 0; i < out.visible.ray_count(); ++i) {
        const auto hit = out.visible.ray_hit(i);
        if (hit >= 0 && static_cast<std::size_t>(hit) >= n_buildings)
            out.observed[static_cast<std::size_t>(hit) - n_buildings] = true;
    }

    out.intervals.assign(lanes.size(), {});
    if (cfg.mode == RiskMode::occlusion_aware) {
        for (std::size_t k = 0; k < lanes.size(); ++k)
            out.intervals[k] = unobserved_intervals(map.lane_samples(k), lanes[k].spline.length(),
                                                    out.visible, IntersectionMap::kSampleStep);
    }
    for (std::size_t j = 0; j < others.size(); ++j) {
        if (!out.observed[j]) continue;
        const auto per_lane = observed_vehicle_intervals(others[j], map);
        for (std::size_t k = 0; k < lanes.size(); ++k)
            if (!per_lane[k].empty()) out.intervals[k] = merge_intervals(out.intervals[k], per_lane[k]);
    }

    out.risk.forecast_horizon = cfg.forecast_horizon;
    out.particles_per_lane.assign(lanes.size(), 0);
    for (std::size_t k = 0; k < lanes.size(); ++k) {
        if (out.intervals[k].empty()) continue;
        Rng rng(derive_seed(stream_seed, {k}));
        const auto lane_id = static_cast<std::uint32_t>(k);
        const auto particles = sample_particles(lane_id, {lanes[k].v_min, lanes[k].v_max},
                                                out.intervals[k], cfg, rng);
        out.particles_per_lane[k] = particles.size();
        for (const auto& p : particles) {
            // Hand particles that run off the lane end to a successor lane.
            std::size_t lane = k;
            double s_hat = p.s + p.v * cfg.forecast_horizon;
            double pick = p.pick;
            while (s_hat > lanes[lane].spline.length()) {
                const auto& succ = map.successors(lane);
                if (succ.empty()) { s_hat = lanes[lane].spline.length(); break; }
                s_hat -= lanes[lane].spline.length();
                const double scaled = pick * static_cast<double>(succ.size());
                const auto idx = std::min(succ.size() - 1, static_cast<std::size_t>(scaled));
                pick = scaled - static_cast<double>(idx);
                lane = succ[idx];
            }
            const auto& spline = lanes[lane].spline;
            out.risk.points.push_back(
                {to_cartesian(spline, s_hat, p.b), static_cast<std::uint32_t>(lane), s_hat, p.b});
        }
    }
    return out;
}

inline RiskDistribution assess(const IntersectionMap& map, const EgoView& ego,
                               std::span<const OrientedBox> others, const RiskConfig& cfg,
                               std::uint64_t stream_seed) {
    return std::move(assess_detailed(map, ego, others, cfg, stream_seed).risk);
}

}  // namespace occrisk
