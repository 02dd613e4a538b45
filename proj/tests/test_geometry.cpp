#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "occrisk/geometry.hpp"
#include "occrisk/spline.hpp"
#include "occrisk/visibility.hpp"

using namespace occrisk;

namespace {

constexpr double kPi = std::numbers::pi;

// Natural cubic spline through the points with chord-length knots, solved
// with a dense linear system. Kept deliberately separate from the library.
struct ReferenceCubic {
    std::vector<double> t;
    std::vector<Vec2> p, m;  // m: second derivatives

    explicit ReferenceCubic(std::vector<Vec2> pts) : p(std::move(pts)) {
        const std::size_t n = p.size();
        t.assign(n, 0.0);
        for (std::size_t i = 1; i < n; ++i) t[i] = t[i - 1] + distance(p[i], p[i - 1]);
        m.assign(n, {});
        if (n < 3) return;
        const std::size_t k = n - 2;
        std::vector<std::vector<double>> A(k, std::vector<double>(k + 2, 0.0));
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t i = r + 1;
            const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
            if (r > 0) A[r][r - 1] = h0;
            A[r][r] = 2.0 * (h0 + h1);
            if (r + 1 < k) A[r][r + 1] = h1;
            const Vec2 rhs = 6.0 * ((1.0 / h1) * (p[i + 1] - p[i]) - (1.0 / h0) * (p[i] - p[i - 1]));
            A[r][k] = rhs.x;
            A[r][k + 1] = rhs.y;
        }
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t r = c + 1; r < k; ++r) {
                const double f = A[r][c] / A[c][c];
                for (std::size_t j = c; j < k + 2; ++j) A[r][j] -= f * A[c][j];
            }
        }
        for (std::size_t c = k; c-- > 0;) {
            double sx = A[c][k], sy = A[c][k + 1];
            for (std::size_t j = c + 1; j < k; ++j) { sx -= A[c][j] * m[j + 1].x; sy -= A[c][j] * m[j + 1].y; }
            m[c + 1] = {sx / A[c][c], sy / A[c][c]};
        }
    }

    Vec2 at(double u) const {
        std::size_t i = 0;
        while (i + 2 < t.size() && u > t[i + 1]) ++i;
        const double h = t[i + 1] - t[i];
        const double a = (t[i + 1] - u) / h, b = (u - t[i]) / h;
        return a * p[i] + b * p[i + 1] +
               ((a * a * a - a) * h * h / 6.0) * m[i] + ((b * b * b - b) * h * h / 6.0) * m[i + 1];
    }
    double end() const { return t.back(); }
};

double polyline_length(const std::vector<Vec2>& pts) {
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i], pts[i - 1]);
    return len;
}

// Adaptive Simpson on |c'(u)| with a central-difference derivative.
double adaptive_length(const ReferenceCubic& c, double a, double b, double tol) {
    auto speed = [&](double u) {
        const double h = 1e-6;
        const double lo = std::max(0.0, u - h), hi = std::min(c.end(), u + h);
        return distance(c.at(hi), c.at(lo)) / (hi - lo);
    };
    auto simpson = [&](double x0, double x1) {
        return (x1 - x0) / 6.0 * (speed(x0) + 4.0 * speed(0.5 * (x0 + x1)) + speed(x1));
    };
    auto rec = [&](auto&& self, double x0, double x1, double whole, double eps, int depth) -> double {
        const double mid = 0.5 * (x0 + x1);
        const double l = simpson(x0, mid), r = simpson(mid, x1);
        if (depth > 40 || std::abs(l + r - whole) < 15.0 * eps) return l + r + (l + r - whole) / 15.0;
        return self(self, x0, mid, l, 0.5 * eps, depth + 1) + self(self, mid, x1, r, 0.5 * eps, depth + 1);
    };
    // Split at the knots so the integrand is smooth on each piece.
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < c.t.size(); ++i) {
        const double x0 = std::max(a, c.t[i]), x1 = std::min(b, c.t[i + 1]);
        if (x1 > x0) total += rec(rec, x0, x1, simpson(x0, x1), tol, 0);
    }
    return total;
}

// Dense resampling of the reference curve, then walk to arc length target.
Vec2 point_at_arclength(const ReferenceCubic& c, double target) {
    const int n = 400000;
    Vec2 prev = c.at(0.0);
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
        const Vec2 q = c.at(c.end() * i / n);
        const double d = distance(q, prev);
        if (acc + d >= target) return prev + ((target - acc) / d) * (q - prev);
        acc += d;
        prev = q;
    }
    return prev;
}

std::vector<Vec2> random_waypoints(std::mt19937_64& gen) {
    std::uniform_int_distribution<int> count(2, 7);
    std::uniform_real_distribution<double> step(3.0, 15.0), turn(-0.8, 0.8);
    std::vector<Vec2> pts{{0.0, 0.0}};
    double heading = 0.0;
    for (int i = count(gen); i > 1; --i) {
        heading += turn(gen);
        pts.push_back(pts.back() + step(gen) * unit_from_angle(heading));
    }
    return pts;
}

// Does the open segment o->p cross any edge of any polygon?
bool segment_blocked(Vec2 o, Vec2 p, const std::vector<Polygon>& polys) {
    auto orient = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
    for (const auto& poly : polys) {
        const auto& v = poly.vertices();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Vec2 a = v[i], b = v[(i + 1) % v.size()];
            const double d1 = orient(o, p, a), d2 = orient(o, p, b);
            const double d3 = orient(a, b, o), d4 = orient(a, b, p);
            if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) return true;
        }
    }
    return false;
}

Polygon square(Vec2 c, double half) {
    return Polygon({{c.x - half, c.y - half}, {c.x + half, c.y - half}, {c.x + half, c.y + half}, {c.x - half, c.y + half}});
}

}  // namespace

TEST(Spline, TwoPointsIsStraight) {
    const auto s = spline_from_waypoints({{0, 0}, {10, 0}});
    EXPECT_NEAR(s.length(), 10.0, 1e-12);
    EXPECT_NEAR(distance(s.eval(0.0), {0, 0}), 0.0, 1e-12);
    EXPECT_NEAR(distance(s.eval(3.2), {3.2, 0}), 0.0, 1e-9);
}

TEST(Spline, CollinearThreePoints) {
    const auto s = spline_from_waypoints({{0, 0}, {5, 0}, {10, 0}});
    EXPECT_NEAR(s.length(), 10.0, 1e-9);
    EXPECT_NEAR(distance(s.eval(7.5), {7.5, 0}), 0.0, 1e-6);
}

TEST(Spline, QuarterTurnAgainstReferenceCurve) {
    const std::vector<Vec2> wp{{0, 0}, {7, 3}, {10, 10}};
    const auto s = spline_from_waypoints(wp);
    const ReferenceCubic ref(wp);
    const double expected = adaptive_length(ref, 0.0, ref.end(), 1e-10);
    EXPECT_NEAR(s.length(), expected, 1e-6);
    EXPECT_LT(distance(s.eval(0.5 * s.length()), point_at_arclength(ref, 0.5 * expected)), 1e-3);
    EXPECT_LT(distance(s.eval(s.length()), wp.back()), 1e-9);
}

TEST(Spline, EndpointsAreExact) {
    std::mt19937_64 gen(11);
    for (int k = 0; k < 50; ++k) {
        const auto wp = random_waypoints(gen);
        const auto s = spline_from_waypoints(wp);
        EXPECT_LT(distance(s.eval(0.0), wp.front()), 1e-9);
        EXPECT_LT(distance(s.eval(s.length()), wp.back()), 1e-9);
    }
}

TEST(Spline, Errors) {
    EXPECT_THROW(spline_from_waypoints({{1, 1}}), ArityError);
    EXPECT_THROW(spline_from_waypoints({}), ArityError);
    EXPECT_THROW(spline_from_waypoints({{0, 0}, {0, 0}, {1, 0}}), DegenerateInputError);
    const auto s = spline_from_waypoints({{0, 0}, {10, 0}});
    EXPECT_THROW(s.eval(-0.1), DomainError);
    EXPECT_THROW(s.eval(10.1), DomainError);
    EXPECT_THROW(s.perpendicular(11.0), DomainError);
}

TEST(Spline, PerpendicularOfAxisAlignedLines) {
    const auto sx = spline_from_waypoints({{0, 0}, {10, 0}});
    const auto sy = spline_from_waypoints({{0, 0}, {0, 10}});
    for (double s : {0.0, 2.5, 10.0}) {
        EXPECT_NEAR(distance(sx.perpendicular(s), {0, 1}), 0.0, 1e-12);
        EXPECT_NEAR(distance(sy.perpendicular(s), {-1, 0}), 0.0, 1e-12);
    }
}

TEST(Spline, PerpendicularAgainstFiniteDifference) {
    const auto s = spline_from_waypoints({{0, 0}, {7, 3}, {10, 10}});
    const double m = 0.5 * s.length(), h = 1e-5;
    const Vec2 fd = s.eval(m + h) - s.eval(m - h);
    const Vec2 t = (1.0 / norm(fd)) * fd;
    EXPECT_NEAR(dot(s.perpendicular(m), t), 0.0, 1e-6);
    EXPECT_NEAR(norm(s.perpendicular(m)), 1.0, 1e-12);
}

TEST(Spline, ArcLengthPropertyOnRandomSplines) {
    std::mt19937_64 gen(5);
    for (int k = 0; k < 40; ++k) {
        const auto s = spline_from_waypoints(random_waypoints(gen));
        std::uniform_real_distribution<double> u(0.0, s.length());
        for (int j = 0; j < 5; ++j) {
            double s1 = u(gen), s2 = u(gen);
            if (s1 > s2) std::swap(s1, s2);
            std::vector<Vec2> pts;
            const int n = 2000;
            for (int i = 0; i <= n; ++i) pts.push_back(s.eval(s1 + (s2 - s1) * i / n));
            EXPECT_NEAR(polyline_length(pts), s2 - s1, 1e-3 * (s2 - s1) + 1e-4);
        }
    }
}

TEST(Spline, UnitSpeedAndOrthogonalNormal) {
    std::mt19937_64 gen(8);
    for (int k = 0; k < 20; ++k) {
        const auto s = spline_from_waypoints(random_waypoints(gen));
        std::uniform_real_distribution<double> u(1e-3, s.length() - 1e-3);
        for (int j = 0; j < 100; ++j) {
            const double x = u(gen), h = 1e-4;
            const double lo = std::max(0.0, x - h), hi = std::min(s.length(), x + h);
            const double speed = distance(s.eval(hi), s.eval(lo)) / (hi - lo);
            EXPECT_NEAR(speed, 1.0, 1e-3);
            EXPECT_NEAR(dot(s.perpendicular(x), s.tangent(x)), 0.0, 1e-9);
        }
    }
}

TEST(Polygon, NormalizesOrientationAndRejectsDegenerates) {
    const Polygon cw({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
    EXPECT_GT(cw.area(), 0.0);
    EXPECT_NEAR(cw.area(), 1.0, 1e-12);
    EXPECT_TRUE(cw.contains({0.5, 0.5}));
    EXPECT_FALSE(cw.contains({1.5, 0.5}));
    EXPECT_THROW(Polygon({{0, 0}, {1, 0}}), ArityError);
    EXPECT_THROW(Polygon({{0, 0}, {1, 0}, {2, 0}}), DegenerateInputError);
    EXPECT_FALSE(Polygon({{0, 0}, {2, 2}, {2, 0}, {0, 1}}).is_simple());
    EXPECT_TRUE(cw.is_simple());
}

TEST(BoxOverlap, Examples) {
    const OrientedBox a({0, 0}, 0.0, 1.0, 1.0);
    EXPECT_TRUE(box_overlap(a, a));
    EXPECT_FALSE(box_overlap(a, OrientedBox({3, 0}, 0.0, 1.0, 1.0)));
    EXPECT_THROW(OrientedBox({0, 0}, 0.0, 0.0, 1.0), DomainError);
}

TEST(BoxOverlap, RotatedSquareAgainstPointSampling) {
    const OrientedBox a({0, 0}, 0.0, 1.0, 1.0);
    const OrientedBox b({1.2, 0}, kPi / 4, 1.0, 1.0);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    bool shared = false;
    for (int i = 0; i < 1'000'000 && !shared; ++i) {
        const Vec2 p{u(gen), u(gen)};
        shared = a.contains(p) && b.contains(p);
    }
    EXPECT_EQ(box_overlap(a, b), shared);
    EXPECT_EQ(box_overlap(b, a), shared);
}

TEST(BoxOverlap, SymmetricAndRigidInvariant) {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> pos(-4, 4), ang(-kPi, kPi), ext(0.5, 5.0);
    int checked = 0;
    for (int i = 0; i < 4000; ++i) {
        const OrientedBox a({pos(gen), pos(gen)}, ang(gen), ext(gen), ext(gen));
        const OrientedBox b({pos(gen), pos(gen)}, ang(gen), ext(gen), ext(gen));
        // Skip near-tangent pairs: shrink and grow both boxes by 1e-3 and
        // require the same answer.
        const OrientedBox as(a.center, a.heading, a.length - 2e-3, a.width - 2e-3);
        const OrientedBox ag(a.center, a.heading, a.length + 2e-3, a.width + 2e-3);
        const OrientedBox bs(b.center, b.heading, b.length - 2e-3, b.width - 2e-3);
        const OrientedBox bg(b.center, b.heading, b.length + 2e-3, b.width + 2e-3);
        if (box_overlap(as, bs) != box_overlap(ag, bg)) continue;
        ++checked;
        const bool r = box_overlap(a, b);
        EXPECT_EQ(r, box_overlap(b, a));
        const double th = ang(gen);
        const Vec2 shift{pos(gen), pos(gen)};
        auto move = [&](const OrientedBox& o) {
            return OrientedBox(rotate(o.center, th) + shift, o.heading + th, o.length, o.width);
        };
        EXPECT_EQ(r, box_overlap(move(a), move(b)));
    }
    EXPECT_GT(checked, 3500);
}

TEST(Visibility, EmptyMapIsNearlyADisc) {
    const double R = 50.0;
    const SensorModel sensor;
    const auto vis = visibility_polygon({3, -2}, 0.3, {}, sensor);
    EXPECT_EQ(vis.ray_count(), 1440u);
    EXPECT_NEAR(vis.area(), kPi * R * R, 0.01 * kPi * R * R);
    EXPECT_LE(vis.area(), kPi * R * R);
}

TEST(Visibility, SquareDueNorth) {
    const SensorModel sensor;
    const std::vector<Polygon> occ{square({0, 20}, 3)};
    const auto vis = visibility_polygon({0, 0}, 0.0, occ, sensor);
    const Vec2 behind{0, 30}, south{0, -25};
    EXPECT_TRUE(segment_blocked({0, 0}, behind, occ));
    EXPECT_FALSE(vis.contains(behind));
    EXPECT_FALSE(vis.polygon().contains(behind));
    EXPECT_FALSE(segment_blocked({0, 0}, south, occ));
    EXPECT_TRUE(vis.contains(south));
    EXPECT_TRUE(vis.polygon().contains(south));
}

TEST(Visibility, AgreesWithSingleRayOracle) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> c(-35, 35), half(1, 5), probe(-48, 48);
    const SensorModel sensor;
    const Vec2 origin{0, 0};
    int compared = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Polygon> occ;
        while (occ.size() < 6) {
            const Vec2 ctr{c(gen), c(gen)};
            const double h = half(gen);
            if (norm(ctr) < h * 1.5 + 1.0) continue;
            occ.push_back(square(ctr, h));
        }
        const auto vis = visibility_polygon(origin, 0.0, occ, sensor);
        for (int i = 0; i < 500; ++i) {
            const Vec2 p{probe(gen), probe(gen)};
            if (norm(p) > sensor.max_range - 0.5) continue;
            bool inside_occ = false;
            for (const auto& o : occ) inside_occ |= o.contains(p);
            if (inside_occ) continue;
            // Only compare where a half-degree wobble does not change the answer.
            const bool truth = !segment_blocked(origin, p, occ);
            const double w = 0.5 * kPi / 180.0;
            if (segment_blocked(origin, rotate(p, w), occ) == truth ||
                segment_blocked(origin, rotate(p, -w), occ) == truth ||
                segment_blocked(origin, 0.97 * p, occ) == truth || segment_blocked(origin, 1.03 * p, occ) == truth)
                continue;
            ++compared;
            EXPECT_EQ(vis.contains(p), truth) << p.x << "," << p.y;
        }
    }
    EXPECT_GT(compared, 3000);
}

TEST(Visibility, HiddenOccluderChangesNothing) {
    const SensorModel sensor;
    const Polygon front = square({0, 10}, 4);
    const Polygon hidden = square({0, 20}, 1);
    const auto a = visibility_polygon({0, 0}, 0.0, std::vector<Polygon>{front}, sensor);
    const auto b = visibility_polygon({0, 0}, 0.0, std::vector<Polygon>{front, hidden}, sensor);
    ASSERT_EQ(a.polygon().size(), b.polygon().size());
    for (std::size_t i = 0; i < a.polygon().size(); ++i)
        EXPECT_LT(distance(a.polygon().vertex(i), b.polygon().vertex(i)), 1e-9);
}

TEST(Visibility, AddingOccludersNeverAddsArea) {
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> c(-40, 40), half(0.5, 6);
    const SensorModel sensor;
    std::vector<Polygon> occ;
    double prev = visibility_polygon({0, 0}, 0.0, occ, sensor).area();
    while (occ.size() < 15) {
        const Vec2 ctr{c(gen), c(gen)};
        const double h = half(gen);
        if (std::abs(ctr.x) < h + 0.5 && std::abs(ctr.y) < h + 0.5) continue;
        occ.push_back(square(ctr, h));
        const double now = visibility_polygon({0, 0}, 0.0, occ, sensor).area();
        EXPECT_LE(now, prev + 1e-9);
        prev = now;
    }
}

TEST(Visibility, RecordsWhichOccluderStoppedEachRay) {
    const SensorModel sensor;
    const std::vector<Polygon> occ{square({10, 0}, 1), square({-10, 0}, 1)};
    const auto vis = visibility_polygon({0, 0}, 0.0, occ, sensor);
    EXPECT_EQ(vis.ray_hit(0), 0);  // first ray points along the heading (+x)
    EXPECT_NEAR(vis.ray_range(0), 9.0, 1e-9);
    EXPECT_EQ(vis.ray_hit(vis.ray_count() / 2), 1);
    EXPECT_EQ(vis.ray_hit(vis.ray_count() / 4), VisibilityPolygon::kNoHit);
}

TEST(Visibility, OriginInsideOccluderThrows) {
    const std::vector<Polygon> occ{square({0, 0}, 1)};
    EXPECT_THROW(visibility_polygon({0, 0}, 0.0, occ, SensorModel{}), ContainmentError);
}

TEST(Visibility, PartialFieldOfView) {
    SensorModel sensor;
    sensor.fov = kPi / 2;
    const auto vis = visibility_polygon({0, 0}, 0.0, {}, sensor);
    EXPECT_TRUE(vis.contains({20, 5}));
    EXPECT_FALSE(vis.contains({-20, 0}));
    EXPECT_FALSE(vis.contains({5, 20}));
    EXPECT_NEAR(vis.area(), kPi * 50 * 50 / 4, 0.01 * kPi * 50 * 50 / 4);
    // A fan straddling the +x axis, with an occluder on the wrap-around side.
    sensor.fov = kPi;
    const std::vector<Polygon> occ{square({10, -3}, 1)};
    const auto fan = visibility_polygon({0, 0}, 0.0, occ, sensor);
    EXPECT_FALSE(fan.contains({20, -6}));
    EXPECT_TRUE(fan.contains({20, 6}));
}

TEST(Visibility, SensorValidation) {
    SensorModel s;
    s.max_range = 0;
    EXPECT_THROW(s.validate(), ConfigurationError);
    s = SensorModel{};
    s.fov = 7.0;
    EXPECT_THROW(s.validate(), ConfigurationError);
    s = SensorModel{};
    s.angular_resolution = 0;
    EXPECT_THROW(s.validate(), ConfigurationError);
}

TEST(UnobservedIntervals, TrivialCases) {
    const auto lane = spline_from_waypoints({{0, 0}, {100, 0}});
    const Polygon all({{-5, -5}, {105, -5}, {105, 5}, {-5, 5}});
    const Polygon none({{0, 20}, {10, 20}, {10, 30}, {0, 30}});
    EXPECT_TRUE(unobserved_intervals(lane, all).empty());
    const auto iv = unobserved_intervals(lane, none);
    ASSERT_EQ(iv.size(), 1u);
    EXPECT_DOUBLE_EQ(iv[0].lo, 0.0);
    EXPECT_DOUBLE_EQ(iv[0].hi, 100.0);
}

TEST(UnobservedIntervals, BoxClippingMatchesAnalyticEndpoints) {
    const auto lane = spline_from_waypoints({{0, 0}, {100, 0}});
    const double step = 0.25;
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> x(5, 95);
    for (int k = 0; k < 200; ++k) {
        double x0 = k == 0 ? 30.0 : x(gen), x1 = k == 0 ? 60.0 : x(gen);
        if (x0 > x1) std::swap(x0, x1);
        if (x1 - x0 < 1.0) continue;
        const Polygon box({{x0, -3}, {x1, -3}, {x1, 3}, {x0, 3}});
        const auto iv = unobserved_intervals(lane, box, step);
        ASSERT_EQ(iv.size(), 2u);
        EXPECT_DOUBLE_EQ(iv[0].lo, 0.0);
        EXPECT_NEAR(iv[0].hi, x0, step);
        EXPECT_NEAR(iv[1].lo, x1, step);
        EXPECT_DOUBLE_EQ(iv[1].hi, 100.0);
    }
}

TEST(UnobservedIntervals, PartitionsTheLane) {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> c(-30, 30), half(1, 6);
    const SensorModel sensor;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Polygon> occ;
        while (occ.size() < 5) {
            const Vec2 ctr{c(gen), c(gen)};
            const double h = half(gen);
            if (std::abs(ctr.x) < h + 1 && std::abs(ctr.y) < h + 1) continue;
            occ.push_back(square(ctr, h));
        }
        const auto vis = visibility_polygon({0, 0}, 0.0, occ, sensor);
        const auto lane = spline_from_waypoints({{-60, -8}, {0, -12}, {60, -5}});
        const auto iv = unobserved_intervals(lane, vis);
        for (std::size_t i = 0; i < iv.size(); ++i) {
            EXPECT_GE(iv[i].length(), 0.25 - 1e-12);
            if (i > 0) { EXPECT_GT(iv[i].lo, iv[i - 1].hi); }
            // Midpoints of long runs are outside; midpoints of long gaps inside.
            if (iv[i].length() > 0.75) { EXPECT_FALSE(vis.contains(lane.eval(0.5 * (iv[i].lo + iv[i].hi)))); }
            if (i > 0 && iv[i].lo - iv[i - 1].hi > 0.75) {
                EXPECT_TRUE(vis.contains(lane.eval(0.5 * (iv[i].lo + iv[i - 1].hi))));
            }
        }
    }
}

TEST(UnobservedIntervals, ShrinkingVisibilityNeverShrinksIntervals) {
    const auto lane = spline_from_waypoints({{-50, 5}, {0, 6}, {50, 4}});
    const SensorModel sensor;
    std::vector<Polygon> occ;
    double prev = total_length(unobserved_intervals(lane, visibility_polygon({0, 0}, 0.0, occ, sensor)));
    for (Vec2 c : {Vec2{-10, 2}, Vec2{15, 3}, Vec2{30, -4}, Vec2{-3, -3}}) {
        occ.push_back(square(c, 1.0));
        const double now = total_length(unobserved_intervals(lane, visibility_polygon({0, 0}, 0.0, occ, sensor)));
        EXPECT_GE(now, prev - 1e-12);
        prev = now;
    }
}

TEST(Intervals, MergeAndMask) {
    const std::vector<Interval> a{{0, 2}, {5, 6}}, b{{1, 3}, {7, 8}};
    const auto m = merge_intervals(a, b);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_DOUBLE_EQ(m[0].hi, 3.0);
    EXPECT_DOUBLE_EQ(total_length(m), 5.0);
    const std::vector<double> s{0, 1, 2, 3, 4};
    const auto iv = intervals_from_mask(s, {false, true, true, false, false}, 4.0, 1.0);
    ASSERT_EQ(iv.size(), 1u);
    EXPECT_DOUBLE_EQ(iv[0].lo, 0.5);
    EXPECT_DOUBLE_EQ(iv[0].hi, 2.5);
}
