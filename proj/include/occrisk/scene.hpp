#pragma once

// World model: lanes, routes and buildings of one intersection, the synthetic
// four-way generator, map validation and rejection-sampled scenarios.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "occrisk/error.hpp"
#include "occrisk/geometry.hpp"
#include "occrisk/params.hpp"
#include "occrisk/rng.hpp"
#include "occrisk/spline.hpp"

namespace occrisk {

/// Minimum gap between a building and the edge of any lane.
inline constexpr double kBuildingBuffer = 2.0;
/// Largest allowed gap between consecutive lanes of a route.
inline constexpr double kRouteGapTolerance = 1e-3;
/// Slack on the building buffer check, absorbing spline vs. chord error.
inline constexpr double kBufferTolerance = 1e-2;

struct LaneSpec {
    std::string id;
    std::vector<Vec2> waypoints;
    double v_min = 0.0;
    double v_max = 12.0;
    double width = 3.5;
    friend bool operator==(const LaneSpec&, const LaneSpec&) = default;
};

struct RouteSpec {
    std::string id;
    std::vector<std::string> lane_ids;
    std::optional<double> stopline_s;
    friend bool operator==(const RouteSpec&, const RouteSpec&) = default;
};

struct BuildingSpec {
    std::string id;
    std::vector<Vec2> vertices;
    friend bool operator==(const BuildingSpec&, const BuildingSpec&) = default;
};

struct MapMeta {
    std::string name;
    std::optional<double> origin_lat;
    std::optional<double> origin_lon;
    friend bool operator==(const MapMeta&, const MapMeta&) = default;
};

/// Raw, unvalidated map content as read from a document.
struct MapSpec {
    std::vector<LaneSpec> lanes;
    std::vector<RouteSpec> routes;
    std::vector<BuildingSpec> buildings;
    MapMeta meta;
    friend bool operator==(const MapSpec&, const MapSpec&) = default;
};

struct Violation {
    std::string kind;    // "unknown lane", "discontinuous route", "buffer violation", ...
    std::string entity;  // id of the offending lane / route / building
    std::string detail;
    std::string message() const { return kind + ": " + entity + (detail.empty() ? "" : " (" + detail + ")"); }
};

struct Lane {
    std::string id;
    LaneSpline spline;
    double v_min = 0.0;
    double v_max = 0.0;
    double width = 0.0;
};

struct Route {
    std::string id;
    std::vector<std::size_t> lanes;
    LaneSpline spline;
    std::vector<double> lane_start_s;  // arc length where each constituent lane begins
    double stopline_s = 0.0;
    double length() const { return spline.length(); }
    /// Where the route leaves the intersection: start of its final lane.
    double exit_s() const { return lane_start_s.back(); }
};

struct Building {
    std::string id;
    Polygon footprint;
};

/// Validated, immutable intersection. Build it with `IntersectionMap::build`.
class IntersectionMap {
public:
    static constexpr double kSampleStep = 0.25;

    /// Validates every invariant and collects all violations. Returns the
    /// map only when the list is empty.
    static std::shared_ptr<const IntersectionMap> build(const MapSpec& spec,
                                                        std::vector<Violation>* violations = nullptr);

    const std::vector<Lane>& lanes() const noexcept { return lanes_; }
    const std::vector<Route>& routes() const noexcept { return routes_; }
    const std::vector<Building>& buildings() const noexcept { return buildings_; }
    const MapMeta& meta() const noexcept { return spec_.meta; }
    const MapSpec& spec() const noexcept { return spec_; }

    std::optional<std::size_t> lane_index(const std::string& id) const {
        for (std::size_t i = 0; i < lanes_.size(); ++i)
            if (lanes_[i].id == id) return i;
        return std::nullopt;
    }
    std::optional<std::size_t> route_index(const std::string& id) const {
        for (std::size_t i = 0; i < routes_.size(); ++i)
            if (routes_[i].id == id) return i;
        return std::nullopt;
    }
    /// Lanes that follow `lane` on at least one route, ascending.
    const std::vector<std::size_t>& successors(std::size_t lane) const { return successors_[lane]; }
    /// Centerline samples every kSampleStep metres, computed once per map.
    const SplineSamples& lane_samples(std::size_t lane) const { return samples_[lane]; }
    const std::vector<Polygon>& building_polygons() const noexcept { return building_polys_; }

    friend bool operator==(const IntersectionMap& a, const IntersectionMap& b) { return a.spec_ == b.spec_; }

private:
    MapSpec spec_;
    std::vector<Lane> lanes_;
    std::vector<Route> routes_;
    std::vector<Building> buildings_;
    std::vector<Polygon> building_polys_;
    std::vector<std::vector<std::size_t>> successors_;
    std::vector<SplineSamples> samples_;
};

inline std::vector<Violation> validate_map(const MapSpec& spec) {
    std::vector<Violation> v;
    IntersectionMap::build(spec, &v);
    return v;
}

inline std::shared_ptr<const IntersectionMap> IntersectionMap::build(
    const MapSpec& spec, std::vector<Violation>* violations) {
    std::vector<Violation> local;
    auto& out = violations ? *violations : local;
    out.clear();
    auto map = std::make_shared<IntersectionMap>();
    map->spec_ = spec;

    std::map<std::string, std::size_t> lane_ids;
    for (const auto& ls : spec.lanes) {
        if (ls.id.empty()) { out.push_back({"schema", "lane", "empty id"}); continue; }
        if (lane_ids.count(ls.id)) { out.push_back({"duplicate id", ls.id, "lane"}); continue; }
        if (!(ls.v_min >= 0.0 && ls.v_min <= ls.v_max))
            out.push_back({"speed bounds", ls.id, "need 0 <= v_min <= v_max"});
        if (!(ls.width > 0.0)) out.push_back({"schema", ls.id, "lane width must be positive"});
        try {
            map->lanes_.push_back({ls.id, LaneSpline(ls.waypoints), ls.v_min, ls.v_max, ls.width});
            lane_ids[ls.id] = map->lanes_.size() - 1;
        } catch (const Error& e) {
            out.push_back({"degenerate lane", ls.id, e.what()});
        }
    }

    map->successors_.assign(map->lanes_.size(), {});
    std::map<std::string, bool> route_ids;
    for (const auto& rs : spec.routes) {
        if (route_ids.count(rs.id)) { out.push_back({"duplicate id", rs.id, "route"}); continue; }
        route_ids[rs.id] = true;
        if (rs.lane_ids.empty()) { out.push_back({"schema", rs.id, "route has no lanes"}); continue; }
        Route route;
        route.id = rs.id;
        bool ok = true;
        for (const auto& lid : rs.lane_ids) {
            auto it = lane_ids.find(lid);
            if (it == lane_ids.end()) {
                out.push_back({"unknown lane", rs.id, lid});
                ok = false;
            } else {
                route.lanes.push_back(it->second);
            }
        }
        if (!ok) continue;
        std::vector<Vec2> pts;
        std::vector<std::size_t> lane_first_point;
        for (std::size_t k = 0; k < route.lanes.size(); ++k) {
            const auto& wp = map->lanes_[route.lanes[k]].spline.waypoints();
            if (k > 0) {
                const double gap = distance(pts.back(), wp.front());
                if (gap > kRouteGapTolerance) {
                    out.push_back({"discontinuous route", rs.id,
                                   "gap " + std::to_string(gap) + " m before lane " +
                                       map->lanes_[route.lanes[k]].id});
                    ok = false;
                    break;
                }
                lane_first_point.push_back(pts.size() - 1);
                pts.insert(pts.end(), wp.begin() + 1, wp.end());
            } else {
                lane_first_point.push_back(0);
                pts.insert(pts.end(), wp.begin(), wp.end());
            }
        }
        if (!ok) continue;
        try {
            route.spline = LaneSpline(std::move(pts));
        } catch (const Error& e) {
            out.push_back({"degenerate route", rs.id, e.what()});
            continue;
        }
        for (std::size_t idx : lane_first_point) route.lane_start_s.push_back(route.spline.waypoint_s(idx));
        const double default_stop =
            route.lanes.size() > 1 ? route.lane_start_s[1] : route.spline.length();
        route.stopline_s = rs.stopline_s.value_or(default_stop);
        if (!(route.stopline_s >= 0.0 && route.stopline_s <= route.spline.length())) {
            out.push_back({"schema", rs.id, "stopline_s outside route"});
            continue;
        }
        for (std::size_t k = 0; k + 1 < route.lanes.size(); ++k) {
            auto& succ = map->successors_[route.lanes[k]];
            if (std::find(succ.begin(), succ.end(), route.lanes[k + 1]) == succ.end())
                succ.push_back(route.lanes[k + 1]);
        }
        map->routes_.push_back(std::move(route));
    }
    for (auto& succ : map->successors_) std::sort(succ.begin(), succ.end());

    for (const auto& lane : map->lanes_)
        map->samples_.push_back(sample_spline(lane.spline, kSampleStep));

    for (std::size_t bi = 0; bi < spec.buildings.size(); ++bi) {
        const auto& bs = spec.buildings[bi];
        const std::string id = bs.id.empty() ? "building[" + std::to_string(bi) + "]" : bs.id;
        Polygon poly;
        try {
            poly = Polygon(bs.vertices);
        } catch (const Error& e) {
            out.push_back({"degenerate building", id, e.what()});
            continue;
        }
        if (!poly.is_simple()) {
            out.push_back({"degenerate building", id, "self-intersecting footprint"});
            continue;
        }
        bool violated = false;
        for (std::size_t li = 0; li < map->lanes_.size() && !violated; ++li) {
            const auto& lane = map->lanes_[li];
            const double need = 0.5 * lane.width + kBuildingBuffer - kBufferTolerance;
            if (!lane.spline.bounds().inflated(need).overlaps(poly.bounds())) continue;
            for (Vec2 p : map->samples_[li].p) {
                if (poly.distance_to(p) < need) {
                    out.push_back({"buffer violation", id, "too close to lane " + lane.id});
                    violated = true;
                    break;
                }
            }
        }
        map->buildings_.push_back({id, poly});
        map->building_polys_.push_back(std::move(poly));
    }

    if (!out.empty()) return nullptr;
    return map;
}

/// Validates and throws LoadError naming the first offending entity.
inline std::shared_ptr<const IntersectionMap> make_map(const MapSpec& spec) {
    std::vector<Violation> v;
    auto map = IntersectionMap::build(spec, &v);
    if (!map) throw LoadError(v.front().message(), v.front().entity);
    return map;
}

// ---------------------------------------------------------------------------
// Synthetic four-way intersection.

struct FourWayGeometry {
    double lane_width = 3.5;
    double arm_length = 60.0;
    double turn_radius = 6.0;  // curb-return radius at each corner

    /// Half-size of the square intersection box; stoplines sit on its edges.
    double half_span() const { return lane_width + turn_radius; }
    double through_length() const { return 2.0 * arm_length + 2.0 * half_span(); }
};

namespace detail {

inline std::vector<Vec2> straight_points(Vec2 a, Vec2 b, double spacing) {
    const double len = distance(a, b);
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing)));
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i <= n; ++i) pts.push_back(a + (static_cast<double>(i) / n) * (b - a));
    return pts;
}

inline std::vector<Vec2> arc_points(Vec2 center, double radius, double from, double to, int n) {
    std::vector<Vec2> pts;
    for (int i = 0; i <= n; ++i)
        pts.push_back(center + radius * unit_from_angle(from + (to - from) * i / n));
    return pts;
}

inline std::vector<Vec2> rotated(const std::vector<Vec2>& pts, int quarter_turns) {
    std::vector<Vec2> out;
    out.reserve(pts.size());
    for (Vec2 p : pts) {
        Vec2 q = p;
        for (int k = 0; k < quarter_turns; ++k) q = rotate_left(q);
        out.push_back(q);
    }
    return out;
}

}  // namespace detail

/// Four-way un-signalled intersection centred at the origin, one lane per
/// direction on each arm, right-hand traffic. Arms are named S, E, N, W;
/// lanes "<arm>_in" / "<arm>_out", connectors "<from>_in:<to>_out", routes
/// "<arm>_left" / "<arm>_straight" / "<arm>_right". Each quadrant holds a
/// building kept exactly 2 m off the curb line and curb return.
inline MapSpec synthetic_fourway_spec(const FourWayGeometry& g, double v_min = 0.0, double v_max = 12.0) {
    const double w = g.lane_width, L = g.arm_length, R = g.turn_radius;
    if (!(w > 0.0) || !(L > 0.0) || !(R > 0.0))
        throw ConfigurationError("four-way dimensions must be positive");
    if (R <= kBuildingBuffer)
        throw ConfigurationError("turn_radius must exceed the 2 m building buffer");
    if (R > L) throw ConfigurationError("turn_radius exceeds arm_length");
    const double h = g.half_span();
    const double far = h + L;
    constexpr double kSpacing = 2.0;
    constexpr int kArcSegments = 12;
    constexpr double half_pi = 0.5 * std::numbers::pi;
    const char* arms[4] = {"S", "E", "N", "W"};

    // South-arm geometry; the other arms are quarter-turn rotations (CCW: S->E->N->W).
    const auto in_pts = detail::straight_points({0.5 * w, -far}, {0.5 * w, -h}, kSpacing);
    const auto out_pts = detail::straight_points({-0.5 * w, -h}, {-0.5 * w, -far}, kSpacing);
    const auto straight = detail::straight_points({0.5 * w, -h}, {0.5 * w, h}, kSpacing);
    const auto right = detail::arc_points({h, -h}, h - 0.5 * w, std::numbers::pi, half_pi, kArcSegments);
    const auto left = detail::arc_points({-h, -h}, h + 0.5 * w, 0.0, half_pi, kArcSegments);

    MapSpec spec;
    spec.meta.name = "synthetic_fourway";
    for (int a = 0; a < 4; ++a) {
        spec.lanes.push_back({std::string(arms[a]) + "_in", detail::rotated(in_pts, a), v_min, v_max, w});
        spec.lanes.push_back({std::string(arms[a]) + "_out", detail::rotated(out_pts, a), v_min, v_max, w});
    }
    for (int a = 0; a < 4; ++a) {
        const std::string from = std::string(arms[a]) + "_in";
        struct Turn { const char* name; int to; const std::vector<Vec2>* pts; };
        const Turn turns[3] = {{"left", (a + 3) % 4, &left}, {"straight", (a + 2) % 4, &straight},
                               {"right", (a + 1) % 4, &right}};
        for (const auto& t : turns) {
            const std::string to = std::string(arms[t.to]) + "_out";
            const std::string conn = from + ":" + to;
            spec.lanes.push_back({conn, detail::rotated(*t.pts, a), v_min, v_max, w});
            spec.routes.push_back({std::string(arms[a]) + "_" + t.name, {from, conn, to}, L});
        }
    }
    // Quadrant building: bounded by x, y >= w + 2 and, near the corner, by a
    // quarter circle of radius R - 2 around the curb-return centre.
    std::vector<Vec2> ne;
    ne.push_back({w + kBuildingBuffer, far});
    const auto corner = detail::arc_points({h, h}, R - kBuildingBuffer, std::numbers::pi,
                                           1.5 * std::numbers::pi, 16);
    ne.insert(ne.end(), corner.begin(), corner.end());
    ne.push_back({far, w + kBuildingBuffer});
    ne.push_back({far, far});
    const char* quadrants[4] = {"NE", "NW", "SW", "SE"};
    for (int q = 0; q < 4; ++q)
        spec.buildings.push_back({std::string("building_") + quadrants[q], detail::rotated(ne, q)});
    return spec;
}

inline std::shared_ptr<const IntersectionMap> synthetic_fourway(double lane_width, double arm_length,
                                                                double turn_radius) {
    return make_map(synthetic_fourway_spec({lane_width, arm_length, turn_radius}));
}

/// Distance from p to the driving surface of the synthetic four-way (0 on it).
inline double fourway_surface_distance(const FourWayGeometry& g, Vec2 p) {
    const double w = g.lane_width, h = g.half_span(), R = g.turn_radius;
    const double ax = std::abs(p.x), ay = std::abs(p.y);
    if (ax <= w || ay <= w) return 0.0;
    if (ax <= h && ay <= h) {
        const double r = distance({ax, ay}, {h, h});
        return r >= R ? 0.0 : R - r;
    }
    return std::min(ax - w, ay - w);
}

// ---------------------------------------------------------------------------
// Vehicles and scenarios.

struct VehicleState {
    std::size_t route = 0;
    double s = 0.0;
    double v = 0.0;
    OrientedBox box;
};

inline OrientedBox vehicle_box(const Route& route, double s, const VehicleParams& veh) {
    const double sc = std::clamp(s, 0.0, route.length());
    return OrientedBox(route.spline.eval(sc), route.spline.heading(sc), veh.length, veh.width);
}

struct EgoStart {
    std::size_t route = 0;
    double s = 0.0;
    double v = 0.0;
    double goal_s = 0.0;
    friend bool operator==(const EgoStart&, const EgoStart&) = default;
};

struct OtherVehicle {
    std::size_t route = 0;
    double speed = 0.0;
    double s0 = 0.0;
    friend bool operator==(const OtherVehicle&, const OtherVehicle&) = default;
};

struct Scenario {
    std::shared_ptr<const IntersectionMap> map;
    EgoStart ego;
    std::vector<OtherVehicle> others;
    std::uint64_t seed = 0;
    std::uint32_t rejections = 0;

    /// Field-wise equality; maps compare by content.
    friend bool operator==(const Scenario& a, const Scenario& b) {
        const bool same_map = a.map == b.map || (a.map && b.map && *a.map == *b.map);
        return same_map && a.ego == b.ego && a.others == b.others && a.seed == b.seed &&
               a.rejections == b.rejections;
    }
};

struct ScenarioOptions {
    double other_v_min = 4.0;
    double other_v_max = 12.0;
    double ego_speed = 10.0;
    double ego_start_before_stopline = 15.0;
    double goal_past_exit = 15.0;
    double horizon = 30.0;     // rejection rollout window, s
    double resolution = 0.1;   // rejection rollout step, s
    std::uint32_t max_rejections = 10000;
    VehicleParams vehicle;
};

/// Ego starting state on `route`: fixed distance before the stopline.
inline EgoStart ego_start(const IntersectionMap& map, std::size_t route, const ScenarioOptions& opt) {
    const Route& r = map.routes().at(route);
    EgoStart e;
    e.route = route;
    e.s = std::max(0.0, r.stopline_s - opt.ego_start_before_stopline);
    e.v = opt.ego_speed;
    e.goal_s = std::min(r.length(), r.exit_s() + opt.goal_past_exit);
    if (e.goal_s <= e.s) e.goal_s = r.length();
    return e;
}

/// True when the constant-speed rollout of `others` stays overlap-free over
/// the horizon. Vehicles that run off the end of their route leave the scene.
inline bool others_collision_free(const IntersectionMap& map, std::span<const OtherVehicle> others,
                                  const ScenarioOptions& opt) {
    const auto steps = static_cast<std::size_t>(std::llround(opt.horizon / opt.resolution));
    std::vector<OrientedBox> boxes(others.size());
    std::vector<bool> active(others.size());
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * opt.resolution;
        for (std::size_t i = 0; i < others.size(); ++i) {
            const Route& r = map.routes()[others[i].route];
            const double s = others[i].s0 + others[i].speed * t;
            active[i] = s <= r.length();
            if (active[i]) boxes[i] = vehicle_box(r, s, opt.vehicle);
        }
        for (std::size_t i = 0; i < others.size(); ++i)
            for (std::size_t j = i + 1; j < others.size(); ++j)
                if (active[i] && active[j] && box_overlap(boxes[i], boxes[j])) return false;
    }
    return true;
}

/// Draws other vehicles uniformly (route, speed, start) and redraws the
/// whole set until nothing overlaps the ego at t = 0 and the others never
/// collide among themselves. Pure in (map, seed).
inline Scenario generate_scenario(std::shared_ptr<const IntersectionMap> map, std::size_t n_others,
                                  std::size_t ego_route, std::uint64_t seed,
                                  const ScenarioOptions& opt = {}) {
    if (!map) throw ConfigurationError("scenario needs a map");
    if (ego_route >= map->routes().size()) throw ConfigurationError("ego route does not exist");
    if (map->routes().empty()) throw ConfigurationError("map has no routes");
    Scenario sc;
    sc.map = map;
    sc.seed = seed;
    sc.ego = ego_start(*map, ego_route, opt);
    const OrientedBox ego_box = vehicle_box(map->routes()[ego_route], sc.ego.s, opt.vehicle);

    Rng rng(seed);
    const std::size_t n_routes = map->routes().size();
    for (std::uint32_t attempt = 0; attempt < opt.max_rejections; ++attempt) {
        std::vector<OtherVehicle> others;
        others.reserve(n_others);
        for (std::size_t i = 0; i < n_others; ++i) {
            OtherVehicle o;
            o.route = std::min(n_routes - 1, static_cast<std::size_t>(rng.uniform() * n_routes));
            o.speed = rng.uniform(opt.other_v_min, opt.other_v_max);
            const double span = std::max(0.0, map->routes()[o.route].length() - opt.vehicle.length);
            o.s0 = rng.uniform(0.0, span);
            others.push_back(o);
        }
        bool ok = true;
        for (const auto& o : others)
            if (box_overlap(ego_box, vehicle_box(map->routes()[o.route], o.s0, opt.vehicle))) { ok = false; break; }
        if (ok) ok = others_collision_free(*map, others, opt);
        if (ok) {
            sc.others = std::move(others);
            sc.rejections = attempt;
            return sc;
        }
    }
    throw SaturationError("scenario generation rejected " + std::to_string(opt.max_rejections) +
                          " consecutive draws; map too crowded");
}

}  // namespace occrisk
