#pragma once

// Longitudinal planner: pick the acceleration that minimises
//   J1(a) + lambda * J2(a)
// where J1 sums a Gaussian repulsion from every risk particle lying on the
// ego route, evaluated at the ego's forecast position, and J2 penalises the
// forecast speed's deviation from the desired speed.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "occrisk/error.hpp"
#include "occrisk/geometry.hpp"
#include "occrisk/params.hpp"
#include "occrisk/risk.hpp"
#include "occrisk/spline.hpp"

namespace occrisk {

struct EgoPrediction {
    const LaneSpline* route = nullptr;
    double s = 0.0;
    double v = 0.0;
};

namespace detail {

// Golden-section minimisation of f on [lo, hi]; returns (argmin, min).
template <typename F>
std::pair<double, double> golden_min(F&& f, double lo, double hi, int iterations) {
    constexpr double r = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iterations; ++i) {
        if (fc <= fd) {
            b = d; d = c; fd = fc;
            c = b - r * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + r * (b - a); fd = f(d);
        }
    }
    return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace detail

/// Distance from p to the nearest point of `route`, refined on the spline.
inline double min_distance_to_route(const LaneSpline& route, Vec2 p) {
    const double len = route.length();
    const auto n = std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(len / 0.25)));
    const double h = len / static_cast<double>(n);
    // Coarse pass over the polyline vertices, then refine around the few best.
    std::vector<std::pair<double, std::size_t>> best;
    for (std::size_t i = 0; i <= n; ++i) best.push_back({norm2(route.eval(std::min(len, i * h)) - p), i});
    std::partial_sort(best.begin(), best.begin() + std::min<std::size_t>(4, best.size()), best.end());
    double result = std::sqrt(best.front().first);
    for (std::size_t k = 0; k < std::min<std::size_t>(4, best.size()); ++k) {
        const double c = static_cast<double>(best[k].second) * h;
        const double lo = std::max(0.0, c - h), hi = std::min(len, c + h);
        auto f = [&](double s) { return norm(route.eval(s) - p); };
        result = std::min({result, f(lo), f(hi), detail::golden_min(f, lo, hi, 60).second});
    }
    return result;
}

/// Spatial hash over a densely sampled route, answering "is p within r of
/// the route, and if so how far exactly" without scanning the whole route.
class RouteIndex {
public:
    RouteIndex(const LaneSpline& route, double max_query_radius)
        : route_(&route), radius_(max_query_radius) {
        const double len = route.length();
        const auto n = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(len / kStep)));
        step_ = len / static_cast<double>(n);
        for (std::size_t i = 0; i <= n; ++i) pts_.push_back(route.eval(std::min(len, i * step_)));
        box_ = route.bounds().inflated(radius_ + 1.0);
        cols_ = static_cast<std::size_t>(std::ceil((box_.hi.x - box_.lo.x) / kCell)) + 1;
        rows_ = static_cast<std::size_t>(std::ceil((box_.hi.y - box_.lo.y) / kCell)) + 1;
        cells_.assign(cols_ * rows_, {});
        // Register each polyline segment in every cell its inflated box touches.
        for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
            Aabb sb;
            sb.expand(pts_[i]);
            sb.expand(pts_[i + 1]);
            sb = sb.inflated(radius_ + kSlack);
            const auto [c0, r0] = cell_of(sb.lo);
            const auto [c1, r1] = cell_of(sb.hi);
            for (std::size_t r = r0; r <= r1; ++r)
                for (std::size_t c = c0; c <= c1; ++c) cells_[r * cols_ + c].push_back(static_cast<std::uint32_t>(i));
        }
    }

    /// Distance to the route when p is within the query radius, otherwise
    /// nullopt. Exact near the radius; polyline distance well inside it.
    std::optional<double> distance_within(Vec2 p) const {
        if (!box_.contains(p)) return std::nullopt;
        const auto [c, r] = cell_of(p);
        const auto& segs = cells_[r * cols_ + c];
        if (segs.empty()) return std::nullopt;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_seg = 0;
        for (std::uint32_t i : segs) {
            const double d = point_segment_distance(p, pts_[i], pts_[i + 1]);
            if (d < best) { best = d; best_seg = i; }
        }
        if (best > radius_ + kSlack) return std::nullopt;
        // The chord polyline is within kSlack of the curve; only refine near the gate.
        if (best < radius_ - kSlack) return best;
        const double len = route_->length();
        const double lo = std::max(0.0, (static_cast<double>(best_seg) - 1.0) * step_);
        const double hi = std::min(len, (static_cast<double>(best_seg) + 2.0) * step_);
        auto f = [&](double s) { return norm(route_->eval(s) - p); };
        return std::min({f(lo), f(hi), detail::golden_min(f, lo, hi, 40).second});
    }

private:
    static constexpr double kStep = 0.25;
    static constexpr double kCell = 2.0;
    static constexpr double kSlack = 0.01;  // chord-to-arc deviation allowance

    std::pair<std::size_t, std::size_t> cell_of(Vec2 p) const {
        const auto c = static_cast<std::size_t>(std::clamp((p.x - box_.lo.x) / kCell, 0.0, double(cols_ - 1)));
        const auto r = static_cast<std::size_t>(std::clamp((p.y - box_.lo.y) / kCell, 0.0, double(rows_ - 1)));
        return {c, r};
    }

    const LaneSpline* route_;
    double radius_;
    double step_ = 0.0;
    std::vector<Vec2> pts_;
    Aabb box_;
    std::size_t cols_ = 0, rows_ = 0;
    std::vector<std::vector<std::uint32_t>> cells_;
};

/// Forecast speed after T_f. The ego never drops below v_min: braking past
/// it brings the ego to v_min and holds it there.
inline double forecast_speed(double v, double a, const PlannerParams& p) {
    return std::max(p.v_min, v + a * p.forecast_horizon);
}

/// Forecast arc length of the ego under acceleration a, with the same
/// saturation at v_min, clamped to the route.
inline double ego_forecast_s(const EgoPrediction& ego, double a, const PlannerParams& p) {
    const double T = p.forecast_horizon;
    double s = ego.s + ego.v * T + 0.5 * a * T * T;
    if (ego.v + a * T < p.v_min && a < 0.0) {
        const double tau = std::max(0.0, (p.v_min - ego.v) / a);
        s = ego.s + ego.v * tau + 0.5 * a * tau * tau + p.v_min * (T - tau);
    }
    return std::clamp(s, 0.0, ego.route->length());
}

/// Particles that pass the on-route gate (distance to the route <= b_bar).
/// The gate does not depend on the acceleration, so it is computed once.
class SafetyField {
public:
    SafetyField(const LaneSpline& route, const RiskDistribution& risk, const PlannerParams& params)
        : params_(params) {
        if (!risk.empty() && std::abs(risk.forecast_horizon - params.forecast_horizon) > 1e-12)
            throw ConfigurationError("risk forecast horizon differs from planner T_f");
        const RouteIndex index(route, params.max_offset);
        for (const auto& rp : risk.points) {
            const auto d = index.distance_within(rp.p);
            if (d && *d <= params.max_offset) gated_.push_back(rp.p);
        }
    }

    const std::vector<Vec2>& gated() const noexcept { return gated_; }

    double j1_at(Vec2 ego_point) const { return j1_at(ego_point, gated_); }

    double j1_at(Vec2 ego_point, std::span<const Vec2> pts) const {
        const double cut2 = params_.discard_radius() * params_.discard_radius();
        const double inv_s2 = 1.0 / (params_.sigma * params_.sigma);
        double sum = 0.0;
        for (Vec2 q : pts) {
            const double r2 = norm2(ego_point - q);
            if (r2 < cut2) sum += std::exp(-r2 * inv_s2);
        }
        return sum;
    }

private:
    PlannerParams params_;
    std::vector<Vec2> gated_;
};

/// J1(a) = sum over on-route particles of exp(-r^2 / sigma^2), zero for r >= 2 sigma.
inline double safety_cost(double a, const EgoPrediction& ego, const RiskDistribution& risk,
                          const PlannerParams& params) {
    if (risk.empty()) return 0.0;
    const SafetyField field(*ego.route, risk, params);
    return field.j1_at(ego.route->eval(ego_forecast_s(ego, a, params)));
}

/// J2(a) = |v + a T_f - v_des|. Deliberately unsaturated so that harder
/// braking always costs more, even past the point where the ego would stop.
inline double speed_cost(double a, double v, const PlannerParams& params) {
    return std::abs(v + a * params.forecast_horizon - params.v_des);
}

struct AccelInterval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Accelerations within [a_min, a_max] that keep the forecast speed at or
/// below v_max. The lower speed bound saturates instead (see forecast_speed),
/// so full braking stays available at any speed. A speed marginally above
/// v_max is projected back first.
inline AccelInterval feasible_accelerations(double v, const PlannerParams& p) {
    auto make = [&](double vv) {
        return AccelInterval{p.a_min, std::min(p.a_max, (p.v_max - vv) / p.forecast_horizon)};
    };
    AccelInterval iv = make(v);
    if (iv.lo > iv.hi) iv = make(std::clamp(v, p.v_min, p.v_max));
    if (iv.lo > iv.hi) throw InfeasibleError("no acceleration satisfies the speed and acceleration bounds");
    return iv;
}

struct PlanResult {
    double accel = 0.0;
    double cost = 0.0;
    std::size_t gated_particles = 0;
    std::size_t evaluations = 0;
};

/// Exhaustive search over the feasible interval on a grid of
/// params.grid_step (anchored at multiples of the step, plus both ends),
/// followed by a golden-section polish inside the winning cell. Ties go to
/// the smaller acceleration.
inline PlanResult plan_detailed(const EgoPrediction& ego, const RiskDistribution& risk,
                                const PlannerParams& params) {
    if (!ego.route) throw ConfigurationError("planner needs an ego route");
    const AccelInterval iv = feasible_accelerations(ego.v, params);
    const double step = params.grid_step;

    std::vector<double> cand{iv.lo};
    for (auto k = static_cast<long long>(std::ceil(iv.lo / step));
         static_cast<double>(k) * step <= iv.hi; ++k) {
        const double a = static_cast<double>(k) * step;
        if (a > cand.back() + 1e-12 && a < iv.hi - 1e-12) cand.push_back(a);
    }
    if (iv.hi > cand.back()) cand.push_back(iv.hi);

    PlanResult res;
    const SafetyField field(*ego.route, risk, params);
    res.gated_particles = field.gated().size();

    std::vector<Vec2> ego_pts(cand.size());
    Aabb sweep;
    for (std::size_t j = 0; j < cand.size(); ++j) {
        ego_pts[j] = ego.route->eval(ego_forecast_s(ego, cand[j], params));
        sweep.expand(ego_pts[j]);
    }
    // Only particles near the swept forecast positions can contribute.
    std::vector<Vec2> near;
    const Aabb reach = sweep.inflated(params.discard_radius());
    for (Vec2 q : field.gated())
        if (reach.contains(q)) near.push_back(q);

    auto total = [&](double a, Vec2 ego_pt) {
        return field.j1_at(ego_pt, near) + params.lambda * speed_cost(a, ego.v, params);
    };
    auto cost_of = [&](double a) { return total(a, ego.route->eval(ego_forecast_s(ego, a, params))); };

    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cand.size(); ++j) {
        const double c = total(cand[j], ego_pts[j]);
        if (c < best_cost) { best_cost = c; best = j; }
    }
    res.evaluations = cand.size();

    double best_a = cand[best];
    const double lo = best > 0 ? cand[best - 1] : cand[best];
    const double hi = best + 1 < cand.size() ? cand[best + 1] : cand[best];
    if (hi > lo) {
        std::vector<double> extra;
        const double kink = (params.v_des - ego.v) / params.forecast_horizon;
        if (kink > lo && kink < hi) extra.push_back(kink);
        const auto [ga, gc] = detail::golden_min(cost_of, lo, hi, 40);
        extra.push_back(ga);
        res.evaluations += 42 + extra.size();
        for (double a : extra) {
            const double c = cost_of(a);
            if (c < best_cost || (c == best_cost && a < best_a)) { best_cost = c; best_a = a; }
        }
        (void)gc;
    }
    res.accel = best_a;
    res.cost = best_cost;
    return res;
}

inline double plan(const EgoPrediction& ego, const RiskDistribution& risk, const PlannerParams& params) {
    return plan_detailed(ego, risk, params).accel;
}

}  // namespace occrisk
