#pragma once

// Arc-length parameterized lane centerlines.
//
// A natural cubic spline is fitted through the waypoints using cumulative
// chord length as the internal parameter t. A lookup table of 64 samples per
// segment maps t to arc length s (Gauss-Legendre quadrature on |c'(t)|), and
// the inverse s -> t is a table lookup followed by Newton refinement.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "occrisk/error.hpp"
#include "occrisk/geometry.hpp"

namespace occrisk {

namespace detail {

// 5-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 5> kGaussNodes{
    0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussWeights{
    0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
    0.2369268850561891};

// Second derivatives of the natural cubic through (t_i, y_i).
inline std::vector<double> natural_second_derivatives(std::span<const double> t,
                                                      std::span<const double> y) {
    const std::size_t n = t.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    // Thomas algorithm on the interior system.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
        const double a = h0, b = 2.0 * (h0 + h1), cc = h1;
        const double r = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        const double denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (r - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m[i] = d[i] - c[i] * m[i + 1];
        if (i == 1) break;
    }
    return m;
}

}  // namespace detail

class LaneSpline {
public:
    static constexpr int kSamplesPerSegment = 64;

    LaneSpline() = default;

    explicit LaneSpline(std::vector<Vec2> waypoints) : waypoints_(std::move(waypoints)) {
        if (waypoints_.size() < 2) throw ArityError("spline needs at least 2 waypoints");
        for (Vec2 p : waypoints_)
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw DegenerateInputError("spline waypoint is not finite");
        const std::size_t n = waypoints_.size();
        knots_.resize(n, 0.0);
        for (std::size_t i = 1; i < n; ++i) {
            const double h = distance(waypoints_[i], waypoints_[i - 1]);
            if (!(h > 1e-9)) throw DegenerateInputError("consecutive spline waypoints coincide");
            knots_[i] = knots_[i - 1] + h;
        }
        fit();
        build_table();
    }

    const std::vector<Vec2>& waypoints() const noexcept { return waypoints_; }
    double length() const noexcept { return length_; }
    std::size_t segment_count() const noexcept { return segs_.size(); }
    /// Arc length at waypoint i.
    double waypoint_s(std::size_t i) const { return table_s_.at(i * kSamplesPerSegment); }
    const Aabb& bounds() const noexcept { return box_; }

    Vec2 eval(double s) const {
        check_domain(s);
        if (s <= 0.0) return waypoints_.front();
        if (s >= length_) return waypoints_.back();
        const auto [seg, u] = locate(s);
        return position(seg, u);
    }

    /// Unit tangent dc/ds.
    Vec2 tangent(double s) const {
        check_domain(s);
        const auto [seg, u] = locate(std::clamp(s, 0.0, length_));
        const Vec2 d = derivative(seg, u);
        return (1.0 / norm(d)) * d;
    }

    /// Unit normal: the tangent rotated +90 degrees.
    Vec2 perpendicular(double s) const { return rotate_left(tangent(s)); }

    /// Position and unit normal at s with a single table lookup.
    std::pair<Vec2, Vec2> frame(double s) const {
        check_domain(s);
        const auto [seg, u] = locate(std::clamp(s, 0.0, length_));
        const Vec2 d = derivative(seg, u);
        const Vec2 p = s <= 0.0 ? waypoints_.front() : s >= length_ ? waypoints_.back() : position(seg, u);
        return {p, rotate_left((1.0 / norm(d)) * d)};
    }

    double heading(double s) const {
        const Vec2 t = tangent(s);
        return std::atan2(t.y, t.x);
    }

    /// Arc length from 0 to s recomputed by direct quadrature; used by tests.
    double arc_length_between(double s0, double s1) const {
        const auto [seg0, u0] = locate(std::clamp(s0, 0.0, length_));
        const auto [seg1, u1] = locate(std::clamp(s1, 0.0, length_));
        double total = 0.0;
        for (std::size_t seg = seg0; seg <= seg1; ++seg) {
            const double a = seg == seg0 ? u0 : 0.0;
            const double b = seg == seg1 ? u1 : segs_[seg].h;
            total += quad(seg, a, b);
        }
        return total;
    }

    friend bool operator==(const LaneSpline& a, const LaneSpline& b) {
        return a.waypoints_ == b.waypoints_;
    }

private:
    struct Segment {
        double h = 0.0;  // parameter span
        std::array<double, 4> x{}, y{};  // c0 + c1 u + c2 u^2 + c3 u^3
    };

    void check_domain(double s) const {
        if (!(s >= -1e-9 && s <= length_ + 1e-9))
            throw DomainError("arc length " + std::to_string(s) + " outside [0, " +
                              std::to_string(length_) + "]");
    }

    void fit() {
        const std::size_t n = waypoints_.size();
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) { xs[i] = waypoints_[i].x; ys[i] = waypoints_[i].y; }
        const auto mx = detail::natural_second_derivatives(knots_, xs);
        const auto my = detail::natural_second_derivatives(knots_, ys);
        segs_.resize(n - 1);
        auto coeffs = [](double y0, double y1, double m0, double m1, double h) {
            return std::array<double, 4>{y0, (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0, 0.5 * m0,
                                         (m1 - m0) / (6.0 * h)};
        };
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = knots_[i + 1] - knots_[i];
            segs_[i].h = h;
            segs_[i].x = coeffs(xs[i], xs[i + 1], mx[i], mx[i + 1], h);
            segs_[i].y = coeffs(ys[i], ys[i + 1], my[i], my[i + 1], h);
        }
    }

    Vec2 position(std::size_t seg, double u) const {
        const auto& c = segs_[seg];
        return {c.x[0] + u * (c.x[1] + u * (c.x[2] + u * c.x[3])),
                c.y[0] + u * (c.y[1] + u * (c.y[2] + u * c.y[3]))};
    }
    Vec2 derivative(std::size_t seg, double u) const {
        const auto& c = segs_[seg];
        return {c.x[1] + u * (2.0 * c.x[2] + 3.0 * u * c.x[3]),
                c.y[1] + u * (2.0 * c.y[2] + 3.0 * u * c.y[3])};
    }
    double speed(std::size_t seg, double u) const { return norm(derivative(seg, u)); }

    double quad(std::size_t seg, double a, double b) const {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (int k = 0; k < 5; ++k)
            acc += detail::kGaussWeights[k] * speed(seg, mid + half * detail::kGaussNodes[k]);
        return acc * half;
    }

    void build_table() {
        const std::size_t nseg = segs_.size();
        table_u_.reserve(nseg * kSamplesPerSegment + 1);
        table_s_.reserve(nseg * kSamplesPerSegment + 1);
        double s = 0.0;
        for (std::size_t seg = 0; seg < nseg; ++seg) {
            const double h = segs_[seg].h;
            for (int k = 0; k < kSamplesPerSegment; ++k) {
                const double u0 = h * k / kSamplesPerSegment;
                const double u1 = h * (k + 1) / kSamplesPerSegment;
                table_u_.push_back(u0);
                table_s_.push_back(s);
                s += quad(seg, u0, u1);
            }
        }
        table_u_.push_back(segs_.back().h);
        table_s_.push_back(s);
        length_ = s;
        for (std::size_t i = 1; i < table_s_.size(); ++i)
            if (!(table_s_[i] > table_s_[i - 1]))
                throw DegenerateInputError("spline arc-length table is not strictly increasing");
        for (Vec2 p : waypoints_) box_.expand(p);
        // Cubic segments can bulge past their waypoints.
        for (std::size_t seg = 0; seg < nseg; ++seg)
            for (int k = 1; k < kSamplesPerSegment; ++k)
                box_.expand(position(seg, segs_[seg].h * k / kSamplesPerSegment));
    }

    // s -> (segment, local parameter u)
    std::pair<std::size_t, double> locate(double s) const {
        const std::size_t last = table_s_.size() - 1;
        if (s >= length_) return {segs_.size() - 1, segs_.back().h};
        std::size_t k = static_cast<std::size_t>(
            std::upper_bound(table_s_.begin(), table_s_.end(), s) - table_s_.begin());
        k = std::clamp<std::size_t>(k, 1, last) - 1;
        const std::size_t seg = std::min(k / kSamplesPerSegment, segs_.size() - 1);
        const double s0 = table_s_[k], s1 = table_s_[k + 1];
        const double u0 = table_u_[k];
        const double u1 = (k + 1) % kSamplesPerSegment == 0 ? segs_[seg].h : table_u_[k + 1];
        double u = u0 + (s - s0) / (s1 - s0) * (u1 - u0);
        for (int it = 0; it < 4; ++it) {
            const double f = s0 + quad(seg, u0, u) - s;
            if (std::abs(f) < 1e-13) break;
            u = std::clamp(u - f / speed(seg, u), u0, u1);
        }
        return {seg, u};
    }

    std::vector<Vec2> waypoints_;
    std::vector<double> knots_;
    std::vector<Segment> segs_;
    std::vector<double> table_u_;
    std::vector<double> table_s_;
    double length_ = 0.0;
    Aabb box_;
};

inline LaneSpline spline_from_waypoints(std::vector<Vec2> points) {
    return LaneSpline(std::move(points));
}

/// Points of a spline sampled every `step` metres, plus the end point.
struct SplineSamples {
    std::vector<double> s;
    std::vector<Vec2> p;
};

inline SplineSamples sample_spline(const LaneSpline& spline, double step) {
    if (!(step > 0.0)) throw DomainError("sampling step must be positive");
    SplineSamples out;
    const double len = spline.length();
    const auto n = static_cast<std::size_t>(std::floor(len / step + 1e-9));
    out.s.reserve(n + 2);
    for (std::size_t j = 0; j <= n; ++j) out.s.push_back(std::min(j * step, len));
    if (len - out.s.back() > 1e-9) out.s.push_back(len);
    out.p.reserve(out.s.size());
    for (double s : out.s) out.p.push_back(spline.eval(s));
    return out;
}

}  // namespace occrisk
