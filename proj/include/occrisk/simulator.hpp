#pragma once

// Closed-loop episodes and Monte Carlo batches.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "occrisk/error.hpp"
#include "occrisk/params.hpp"
#include "occrisk/planner.hpp"
#include "occrisk/risk.hpp"
#include "occrisk/rng.hpp"
#include "occrisk/scene.hpp"

namespace occrisk {

struct EpisodeConfig {
    double replan_period = 0.1;  // T_p, s
    double dt = 0.02;            // integration substep, s
    double time_limit = 30.0;    // s
    RiskConfig risk;
    PlannerParams planner;
    SensorModel sensor;
    VehicleParams vehicle;
    bool record_particles = false;

    std::size_t substeps() const { return static_cast<std::size_t>(std::llround(replan_period / dt)); }

    void validate() const {
        if (!(dt > 0.0) || !(replan_period > 0.0)) throw ConfigurationError("T_p and dt must be positive");
        if (dt > replan_period + 1e-12) throw ConfigurationError("dt must not exceed T_p");
        const double ratio = replan_period / dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
            throw ConfigurationError("T_p must be a whole multiple of dt");
        if (!(time_limit > 0.0)) throw ConfigurationError("time limit must be positive");
        if (std::abs(risk.forecast_horizon - planner.forecast_horizon) > 1e-12)
            throw ConfigurationError("risk and planner forecast horizons differ");
        risk.validate();
        planner.validate();
        sensor.validate();
    }
};

enum class Outcome { goal_reached, collision, timeout };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::goal_reached: return "goal_reached";
        case Outcome::collision: return "collision";
        case Outcome::timeout: return "timeout";
    }
    return "unknown";
}

struct TraceRecord {
    double t = 0.0;
    double s = 0.0;
    double v = 0.0;
    double a = 0.0;  // acceleration commanded from t onwards
    double x = 0.0;
    double y = 0.0;
    std::size_t n_particles = 0;
    double plan_wall_time = 0.0;  // s, zero on non-planning substeps
};

struct ParticleRecord {
    double t = 0.0;
    std::uint32_t lane = 0;
    double x = 0.0;
    double y = 0.0;
};

struct EpisodeResult {
    Outcome outcome = Outcome::timeout;
    std::vector<TraceRecord> trace;
    std::optional<double> collision_time;
    std::vector<ParticleRecord> particles;  // filled only when requested

    double end_time() const { return trace.empty() ? 0.0 : trace.back().t; }
};

/// Ego integration over one substep with zero-order-hold acceleration. If
/// the speed would cross a bound it stops at the bound for the rest of the
/// substep. Returns true when the speed ends the substep held at a bound.
inline bool integrate_ego(double& s, double& v, double a, double dt, double v_min, double v_max) {
    const double v_next = v + a * dt;
    double bound = 0.0;
    if (v_next < v_min && a < 0.0) bound = v_min;
    else if (v_next > v_max && a > 0.0) bound = v_max;
    else {
        s += v * dt + 0.5 * a * dt * dt;
        v = v_next;
        return false;
    }
    const double tau = std::clamp((bound - v) / a, 0.0, dt);
    s += v * tau + 0.5 * a * tau * tau + bound * (dt - tau);
    v = bound;
    return true;
}

/// Replan every T_p (sense, assess, plan), integrate every dt, and stop on
/// collision, goal arrival or the time limit. Other vehicles keep constant
/// speed and leave the scene past the end of their route.
inline EpisodeResult run_episode(const Scenario& scenario, const EpisodeConfig& cfg) {
    cfg.validate();
    if (!scenario.map) throw ConfigurationError("scenario has no map");
    const IntersectionMap& map = *scenario.map;
    const Route& route = map.routes().at(scenario.ego.route);
    const std::size_t substeps = cfg.substeps();
    const auto max_steps = static_cast<std::size_t>(std::llround(cfg.time_limit / cfg.dt));

    double s = scenario.ego.s, v = scenario.ego.v, a = 0.0;
    std::vector<double> other_s;
    for (const auto& o : scenario.others) other_s.push_back(o.s0);

    EpisodeResult res;
    auto held = [&](double acc) {
        return (acc < 0.0 && v <= cfg.planner.v_min) || (acc > 0.0 && v >= cfg.planner.v_max);
    };
    std::vector<OrientedBox> boxes;
    auto other_boxes = [&] {
        boxes.clear();
        for (std::size_t i = 0; i < scenario.others.size(); ++i) {
            const Route& r = map.routes()[scenario.others[i].route];
            if (other_s[i] <= r.length()) boxes.push_back(vehicle_box(r, other_s[i], cfg.vehicle));
        }
    };
    auto record = [&](double t, std::size_t n_particles, double wall) {
        const Vec2 p = route.spline.eval(std::min(s, route.length()));
        res.trace.push_back({t, s, v, a, p.x, p.y, n_particles, wall});
    };

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        std::size_t n_particles = 0;
        double wall = 0.0;
        if (k % substeps == 0) {
            const auto t0 = std::chrono::steady_clock::now();
            other_boxes();
            const double sc = std::min(s, route.length());
            const EgoView view{route.spline.eval(sc), route.spline.heading(sc), cfg.sensor};
            const std::uint64_t stream = derive_seed(scenario.seed, {0x7269736bULL, k / substeps});
            const RiskDistribution risk = assess(map, view, boxes, cfg.risk, stream);
            n_particles = risk.size();
            if (cfg.record_particles)
                for (const auto& rp : risk.points) res.particles.push_back({t, rp.lane, rp.p.x, rp.p.y});
            a = plan(EgoPrediction{&route.spline, sc, v}, risk, cfg.planner);
            if (held(a)) a = 0.0;
            wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        record(t, n_particles, wall);
        if (k == max_steps) break;

        // A speed held at its bound no longer accelerates the ego.
        if (integrate_ego(s, v, a, cfg.dt, cfg.planner.v_min, cfg.planner.v_max)) a = 0.0;
        for (std::size_t i = 0; i < other_s.size(); ++i) other_s[i] += scenario.others[i].speed * cfg.dt;

        const double t_next = static_cast<double>(k + 1) * cfg.dt;
        other_boxes();
        const OrientedBox ego_box = vehicle_box(route, s, cfg.vehicle);
        const bool hit = std::any_of(boxes.begin(), boxes.end(),
                                     [&](const OrientedBox& b) { return box_overlap(ego_box, b); });
        if (hit) {
            res.outcome = Outcome::collision;
            res.collision_time = t_next;
            record(t_next, 0, 0.0);
            return res;
        }
        if (s >= scenario.ego.goal_s) {
            res.outcome = Outcome::goal_reached;
            record(t_next, 0, 0.0);
            return res;
        }
    }
    res.outcome = Outcome::timeout;
    return res;
}

struct BatchEntry {
    std::size_t scenario_id = 0;
    RiskMode mode = RiskMode::occlusion_aware;
    std::optional<Scenario> scenario;
    std::optional<EpisodeResult> result;
    std::string error;  // scenario generation failure, if any
};

struct BatchOptions {
    std::size_t n_scenarios = 1;
    std::size_t n_others = 5;
    std::vector<RiskMode> modes{RiskMode::occlusion_aware, RiskMode::observed_only};
    std::uint64_t base_seed = 0;
    std::size_t parallelism = 1;
    std::size_t ego_route = 0;
    ScenarioOptions scenario;
    EpisodeConfig episode;
    bool keep_scenarios = true;
};

inline std::uint64_t scenario_seed(std::uint64_t base_seed, std::size_t scenario_id) {
    return derive_seed(base_seed, {static_cast<std::uint64_t>(scenario_id)});
}

/// Runs every mode on the same scenario i, for i in [0, n). Scenario i is a
/// function of (base_seed, i) only, so the output does not depend on the
/// number of workers. Entries are ordered by (scenario_id, mode index).
inline std::vector<BatchEntry> run_batch(std::shared_ptr<const IntersectionMap> map, const BatchOptions& opt) {
    if (opt.n_scenarios < 1) throw ConfigurationError("need at least one scenario");
    if (opt.modes.empty()) throw ConfigurationError("need at least one mode");
    opt.episode.validate();
    const std::size_t n_modes = opt.modes.size();
    std::vector<BatchEntry> out(opt.n_scenarios * n_modes);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= opt.n_scenarios) return;
            try {
                std::optional<Scenario> sc;
                std::string err;
                try {
                    sc = generate_scenario(map, opt.n_others, opt.ego_route,
                                           scenario_seed(opt.base_seed, i), opt.scenario);
                } catch (const SaturationError& e) {
                    err = e.what();
                }
                for (std::size_t m = 0; m < n_modes; ++m) {
                    BatchEntry& e = out[i * n_modes + m];
                    e.scenario_id = i;
                    e.mode = opt.modes[m];
                    e.error = err;
                    if (!sc) continue;
                    EpisodeConfig cfg = opt.episode;
                    cfg.risk.mode = opt.modes[m];
                    e.result = run_episode(*sc, cfg);
                    if (opt.keep_scenarios) e.scenario = *sc;
                }
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(opt.n_scenarios);
                return;
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(opt.parallelism, 1, opt.n_scenarios);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace occrisk
