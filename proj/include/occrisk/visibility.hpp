#pragma once

// Sensor visibility by ray casting, and extraction of the lane intervals a
// region does (not) cover.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "occrisk/geometry.hpp"
#include "occrisk/spline.hpp"

namespace occrisk {

/// Closed arc-length interval [lo, hi] on a lane.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Star-shaped region seen from `origin`. Vertex i sits on ray i; for a
/// partial field of view the origin is prepended as an extra vertex.
class VisibilityPolygon {
public:
    static constexpr std::int32_t kNoHit = -1;

    const Polygon& polygon() const noexcept { return polygon_; }
    Vec2 origin() const noexcept { return origin_; }
    std::size_t ray_count() const noexcept { return ranges_.size(); }
    double ray_range(std::size_t i) const { return ranges_[i]; }
    double ray_angle(std::size_t i) const { return start_ + step_ * static_cast<double>(i); }
    /// Index of the occluder that stopped ray i, or kNoHit when it reached max range.
    std::int32_t ray_hit(std::size_t i) const { return hits_[i]; }
    double area() const { return polygon_.area(); }

    /// O(1) containment: locate the wedge between two rays and test against
    /// the chord joining their end points.
    bool contains(Vec2 p) const {
        const Vec2 d = p - origin_;
        const double r2 = norm2(d);
        if (r2 > max_range_ * max_range_) return false;
        if (r2 == 0.0) return true;
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double phi = std::atan2(d.y, d.x) - start_;
        phi -= two_pi * std::floor(phi / two_pi);
        const std::size_t n = ranges_.size();
        std::size_t k, k1;
        if (full_circle_) {
            k = std::min(static_cast<std::size_t>(phi / step_), n - 1);
            k1 = (k + 1) % n;
        } else {
            if (phi > step_ * static_cast<double>(n - 1)) return false;
            k = std::min(static_cast<std::size_t>(phi / step_), n - 2);
            k1 = k + 1;
        }
        const Vec2 a = ray_angle_vec(k) * ranges_[k];
        const Vec2 b = ray_angle_vec(k1) * ranges_[k1];
        return cross(b - a, d - a) >= 0.0;
    }

private:
    friend VisibilityPolygon visibility_polygon(Vec2, double, std::span<const Polygon>,
                                                const SensorModel&);

    Vec2 ray_angle_vec(std::size_t i) const { return dirs_[i]; }

    Polygon polygon_;
    Vec2 origin_;
    double start_ = 0.0;
    double step_ = 0.0;
    double max_range_ = 0.0;
    bool full_circle_ = true;
    std::vector<double> ranges_;
    std::vector<Vec2> dirs_;
    std::vector<std::int32_t> hits_;
};

/// Casts one ray per angular_resolution step and keeps the nearest occluder
/// hit (or max range) on each. Occluders are opaque; the origin must lie
/// outside all of them.
inline VisibilityPolygon visibility_polygon(Vec2 origin, double heading,
                                            std::span<const Polygon> occluders,
                                            const SensorModel& sensor) {
    sensor.validate();
    for (const auto& occ : occluders)
        if (occ.contains(origin)) throw ContainmentError("sensor origin lies inside an occluder");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    VisibilityPolygon vis;
    vis.origin_ = origin;
    vis.max_range_ = sensor.max_range;
    vis.full_circle_ = sensor.omnidirectional();
    std::size_t n;
    if (vis.full_circle_) {
        n = static_cast<std::size_t>(std::ceil(two_pi / sensor.angular_resolution - 1e-9));
        n = std::max<std::size_t>(n, 3);
        vis.step_ = two_pi / static_cast<double>(n);
        vis.start_ = heading;
    } else {
        const auto gaps =
            static_cast<std::size_t>(std::ceil(sensor.fov / sensor.angular_resolution - 1e-9));
        n = std::max<std::size_t>(gaps, 2) + 1;
        vis.step_ = sensor.fov / static_cast<double>(n - 1);
        vis.start_ = heading - 0.5 * sensor.fov;
    }
    vis.ranges_.assign(n, sensor.max_range);
    vis.hits_.assign(n, VisibilityPolygon::kNoHit);
    vis.dirs_.resize(n);
    for (std::size_t i = 0; i < n; ++i) vis.dirs_[i] = unit_from_angle(vis.ray_angle(i));

    // Each edge only needs the rays inside the angular sector it subtends.
    auto wrap = [&](double a) { return a - two_pi * std::floor(a / two_pi); };
    const Aabb reach = Aabb{origin, origin}.inflated(sensor.max_range);
    for (std::size_t oi = 0; oi < occluders.size(); ++oi) {
        const Polygon& occ = occluders[oi];
        if (!reach.overlaps(occ.bounds())) continue;
        for (std::size_t e = 0; e < occ.size(); ++e) {
            const Vec2 a = occ.vertex(e), b = occ.vertex(e + 1);
            if (point_segment_distance(origin, a, b) > sensor.max_range) continue;
            const Vec2 da = a - origin, db = b - origin;
            const double aa = wrap(std::atan2(da.y, da.x) - vis.start_);
            double sweep = std::atan2(cross(da, db), dot(da, db));
            double from = sweep >= 0.0 ? aa : wrap(aa + sweep);
            sweep = std::abs(sweep);
            // A partial fan does not wrap, so a sector crossing 2*pi is
            // visited a second time shifted down by one turn.
            const int passes = (!vis.full_circle_ && from + sweep > two_pi) ? 2 : 1;
            for (int pass = 0; pass < passes; ++pass) {
                const double lo = from - (pass == 0 ? 0.0 : two_pi);
                auto first = static_cast<std::int64_t>(std::floor(lo / vis.step_)) - 1;
                auto last = static_cast<std::int64_t>(std::ceil((lo + sweep) / vis.step_)) + 1;
                for (std::int64_t k = first; k <= last; ++k) {
                    std::int64_t idx = k;
                    if (vis.full_circle_) {
                        const auto sn = static_cast<std::int64_t>(n);
                        idx = ((k % sn) + sn) % sn;
                    } else if (k < 0 || k >= static_cast<std::int64_t>(n)) {
                        continue;
                    }
                    const auto i = static_cast<std::size_t>(idx);
                    const auto t = ray_segment_hit(origin, vis.dirs_[i], a, b);
                    if (t && *t < vis.ranges_[i]) {
                        vis.ranges_[i] = *t;
                        vis.hits_[i] = static_cast<std::int32_t>(oi);
                    }
                }
            }
        }
    }

    std::vector<Vec2> verts;
    verts.reserve(n + 1);
    if (!vis.full_circle_) verts.push_back(origin);
    for (std::size_t i = 0; i < n; ++i) verts.push_back(origin + vis.ranges_[i] * vis.dirs_[i]);
    vis.polygon_ = Polygon(std::move(verts));
    return vis;
}

/// Turns a per-sample membership mask into maximal closed intervals. Each
/// run of flagged samples extends halfway to its unflagged neighbours (or to
/// the lane end) and is widened to at least one step.
inline std::vector<Interval> intervals_from_mask(std::span<const double> s,
                                                 const std::vector<bool>& flagged, double length,
                                                 double step) {
    std::vector<Interval> out;
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        if (!flagged[i]) { ++i; continue; }
        std::size_t j = i;
        while (j + 1 < n && flagged[j + 1]) ++j;
        Interval iv{i == 0 ? 0.0 : 0.5 * (s[i - 1] + s[i]),
                    j + 1 == n ? length : 0.5 * (s[j] + s[j + 1])};
        if (iv.length() < step) {
            const double grow = 0.5 * (step - iv.length());
            iv.lo -= grow;
            iv.hi += grow;
            if (iv.lo < 0.0) { iv.hi -= iv.lo; iv.lo = 0.0; }
            if (iv.hi > length) { iv.lo -= iv.hi - length; iv.hi = length; }
            iv.lo = std::max(iv.lo, 0.0);
        }
        if (!out.empty() && iv.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
        i = j + 1;
    }
    return out;
}

/// Union of two sorted interval lists.
inline std::vector<Interval> merge_intervals(std::span<const Interval> a,
                                             std::span<const Interval> b) {
    std::vector<Interval> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end(), [](const Interval& x, const Interval& y) {
        return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi);
    });
    std::vector<Interval> out;
    for (const auto& iv : all) {
        if (!out.empty() && iv.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}

inline double total_length(std::span<const Interval> ivs) {
    double t = 0.0;
    for (const auto& iv : ivs) t += iv.length();
    return t;
}

/// Lane intervals whose samples fall outside `visible`. Region is anything
/// with `bool contains(Vec2) const` (Polygon, VisibilityPolygon, ...).
template <typename Region>
std::vector<Interval> unobserved_intervals(const SplineSamples& samples, double length,
                                           const Region& visible, double step) {
    std::vector<bool> outside(samples.s.size());
    for (std::size_t i = 0; i < samples.s.size(); ++i) outside[i] = !visible.contains(samples.p[i]);
    return intervals_from_mask(samples.s, outside, length, step);
}

template <typename Region>
std::vector<Interval> unobserved_intervals(const LaneSpline& spline, const Region& visible,
                                           double step = 0.25) {
    return unobserved_intervals(sample_spline(spline, step), spline.length(), visible, step);
}

}  // namespace occrisk
