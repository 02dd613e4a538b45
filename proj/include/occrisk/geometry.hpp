#pragma once

// Planar primitives shared by every other module: points, simple polygons,
// oriented vehicle rectangles and the sensor description.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "occrisk/error.hpp"

namespace occrisk {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double k) { return {k * a.x, k * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
/// Counter-clockwise quarter turn, [0 -1; 1 0] * v.
constexpr Vec2 rotate_left(Vec2 v) { return {-v.y, v.x}; }
inline Vec2 rotate(Vec2 v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}
inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Distance from p to the closed segment [a, b].
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = norm2(ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + t * ab);
}

/// Parameter t >= 0 along the ray origin + t*dir where it meets segment [a, b],
/// or nullopt. dir need not be normalized; t is in units of |dir|.
inline std::optional<double> ray_segment_hit(Vec2 origin, Vec2 dir, Vec2 a, Vec2 b) {
    const Vec2 e = b - a;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-300) return std::nullopt;  // parallel
    const Vec2 w = a - origin;
    const double t = cross(w, e) / denom;
    const double u = cross(w, dir) / denom;
    if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return t;
}

/// True iff the closed segments [a, b] and [c, d] share a point.
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
        const double v = cross(q - p, r - p);
        return (v > 0.0) - (v < 0.0);
    };
    auto on_segment = [](Vec2 p, Vec2 q, Vec2 r) {
        return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
               std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

struct Aabb {
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

    void expand(Vec2 p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    Aabb inflated(double r) const { return {{lo.x - r, lo.y - r}, {hi.x + r, hi.y + r}}; }
    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    bool overlaps(const Aabb& o) const {
        return lo.x <= o.hi.x && o.lo.x <= hi.x && lo.y <= o.hi.y && o.lo.y <= hi.y;
    }
};

inline double signed_area(std::span<const Vec2> pts) {
    double a = 0.0;
    for (std::size_t i = 0, n = pts.size(); i < n; ++i) a += cross(pts[i], pts[(i + 1) % n]);
    return 0.5 * a;
}

/// Simple polygon, vertices stored counter-clockwise. Clockwise input is
/// reversed on construction.
class Polygon {
public:
    Polygon() = default;
    explicit Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
        if (vertices_.size() < 3) throw ArityError("polygon needs at least 3 vertices");
        const double a = signed_area(vertices_);
        if (!(std::abs(a) > 0.0)) throw DegenerateInputError("polygon has zero area");
        if (a < 0.0) std::reverse(vertices_.begin(), vertices_.end());
        for (Vec2 v : vertices_) box_.expand(v);
    }

    const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    const Aabb& bounds() const noexcept { return box_; }
    double area() const { return signed_area(vertices_); }

    Vec2 vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }

    /// Crossing-number test; boundary points may land on either side.
    bool contains(Vec2 p) const {
        if (!box_.contains(p)) return false;
        bool inside = false;
        for (std::size_t i = 0, j = vertices_.size() - 1; i < vertices_.size(); j = i++) {
            const Vec2 a = vertices_[i], b = vertices_[j];
            if ((a.y > p.y) != (b.y > p.y)) {
                const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (p.x < x) inside = !inside;
            }
        }
        return inside;
    }

    /// Euclidean distance from p to the boundary.
    double boundary_distance(Vec2 p) const {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            d = std::min(d, point_segment_distance(p, vertices_[i], vertex(i + 1)));
        return d;
    }

    /// Distance from p to the closed polygon region (0 inside).
    double distance_to(Vec2 p) const { return contains(p) ? 0.0 : boundary_distance(p); }

    /// O(n^2) check that no two non-adjacent edges touch.
    bool is_simple() const {
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (j == i + 1 || (i == 0 && j == n - 1)) continue;
                if (segments_intersect(vertices_[i], vertex(i + 1), vertices_[j], vertex(j + 1)))
                    return false;
            }
        }
        return true;
    }

    friend bool operator==(const Polygon& a, const Polygon& b) { return a.vertices_ == b.vertices_; }

private:
    std::vector<Vec2> vertices_;
    Aabb box_;
};

struct OrientedBox {
    Vec2 center;
    double heading = 0.0;  // radians, direction of the length axis
    double length = 0.0;
    double width = 0.0;

    OrientedBox() = default;
    OrientedBox(Vec2 c, double h, double l, double w) : center(c), heading(h), length(l), width(w) {
        if (!(l > 0.0) || !(w > 0.0)) throw DomainError("box extents must be positive");
    }

    Vec2 axis_long() const { return unit_from_angle(heading); }
    Vec2 axis_lat() const { return rotate_left(axis_long()); }

    /// Corners counter-clockwise, starting rear-right.
    std::array<Vec2, 4> corners() const {
        const Vec2 f = 0.5 * length * axis_long();
        const Vec2 l = 0.5 * width * axis_lat();
        return {center - f - l, center + f - l, center + f + l, center - f + l};
    }

    bool contains(Vec2 p) const {
        const Vec2 d = p - center;
        return std::abs(dot(d, axis_long())) <= 0.5 * length &&
               std::abs(dot(d, axis_lat())) <= 0.5 * width;
    }

    Polygon to_polygon() const {
        const auto c = corners();
        return Polygon({c.begin(), c.end()});
    }

    friend bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

/// Separating-axis test on the four edge normals of the two rectangles.
inline bool box_overlap(const OrientedBox& a, const OrientedBox& b) {
    const Vec2 d = b.center - a.center;
    const std::array<Vec2, 4> axes{a.axis_long(), a.axis_lat(), b.axis_long(), b.axis_lat()};
    for (Vec2 ax : axes) {
        const double ra = 0.5 * a.length * std::abs(dot(a.axis_long(), ax)) +
                          0.5 * a.width * std::abs(dot(a.axis_lat(), ax));
        const double rb = 0.5 * b.length * std::abs(dot(b.axis_long(), ax)) +
                          0.5 * b.width * std::abs(dot(b.axis_lat(), ax));
        if (std::abs(dot(d, ax)) > ra + rb) return false;
    }
    return true;
}

struct SensorModel {
    double max_range = 50.0;
    double fov = 2.0 * std::numbers::pi;
    double angular_resolution = 0.25 * std::numbers::pi / 180.0;

    void validate() const {
        if (!(max_range > 0.0)) throw ConfigurationError("sensor max_range must be positive");
        if (!(fov > 0.0) || fov > 2.0 * std::numbers::pi + 1e-12)
            throw ConfigurationError("sensor fov must lie in (0, 2*pi]");
        if (!(angular_resolution > 0.0) || angular_resolution > fov)
            throw ConfigurationError("sensor angular_resolution must lie in (0, fov]");
    }
    bool omnidirectional() const { return fov >= 2.0 * std::numbers::pi - 1e-12; }
};

}  // namespace occrisk
