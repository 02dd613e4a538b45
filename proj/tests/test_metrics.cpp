#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "occrisk/metrics.hpp"
#include "occrisk/report.hpp"

using namespace occrisk;

namespace {

EpisodeResult make_episode(Outcome outcome, double T, double dt, const std::function<double(double)>& v,
                           const std::function<double(double)>& a) {
    EpisodeResult r;
    r.outcome = outcome;
    const auto n = static_cast<std::size_t>(std::llround(T / dt));
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * dt;
        r.trace.push_back({t, 0.0, v(t), a(t), 0.0, 0.0, 0, 0.0});
    }
    if (outcome == Outcome::collision) r.collision_time = r.end_time();
    return r;
}

EpisodeResult constant_episode(Outcome outcome, double T, double v, double a) {
    return make_episode(outcome, T, 0.1, [=](double) { return v; }, [=](double) { return a; });
}

// Linear-interpolation percentile straight from the definition.
double oracle_percentile(std::vector<double> x, double q) {
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * q / 100.0;
    const double lo = std::floor(h);
    const double hi = std::min(lo + 1.0, static_cast<double>(x.size()) - 1.0);
    return x[static_cast<std::size_t>(lo)] + (h - lo) * (x[static_cast<std::size_t>(hi)] - x[static_cast<std::size_t>(lo)]);
}

}  // namespace

TEST(CollisionRate, Examples) {
    EXPECT_EQ(collision_rate(0, 100), 0.0);
    EXPECT_EQ(collision_rate(5, 100), 5.0);
    EXPECT_EQ(collision_rate(29, 2000), 1.45);
    EXPECT_THROW(collision_rate(0, 0), ArityError);
    EXPECT_THROW(collision_rate(std::span<const EpisodeResult>{}), ArityError);
}

TEST(CollisionRate, TimeoutsOnlyInTheDenominator) {
    std::vector<EpisodeResult> rs;
    rs.push_back(constant_episode(Outcome::collision, 1.0, 5.0, 0.0));
    rs.push_back(constant_episode(Outcome::timeout, 1.0, 5.0, 0.0));
    rs.push_back(constant_episode(Outcome::goal_reached, 1.0, 5.0, 0.0));
    rs.push_back(constant_episode(Outcome::timeout, 1.0, 5.0, 0.0));
    EXPECT_EQ(collision_rate(rs), 25.0);
}

TEST(CollisionRate, NumeratorIsAdditive) {
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t na = 1 + gen() % 300, nb = 1 + gen() % 300;
        const std::size_t ca = gen() % (na + 1), cb = gen() % (nb + 1);
        const double lhs = collision_rate(ca + cb, na + nb) * static_cast<double>(na + nb);
        const double rhs = collision_rate(ca, na) * static_cast<double>(na) + collision_rate(cb, nb) * static_cast<double>(nb);
        EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, lhs));
    }
}

TEST(Discomfort, Examples) {
    const std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0};
    EXPECT_EQ(discomfort(t, std::vector<double>{1, -4, 3.9, -2, 4}, 4.0, 4.0), 0.0);
    EXPECT_EQ(discomfort(t, std::vector<double>(5, -8.0), 4.0, 4.0), 4.0);
    EXPECT_THROW(discomfort(t, std::vector<double>(5, 0.0), 4.0, 0.0), DomainError);
    EXPECT_THROW(discomfort(t, std::vector<double>(4, 0.0), 4.0, 4.0), ArityError);
}

TEST(Discomfort, HalfBrakingWithinGridError) {
    for (double dt : {0.02, 0.1, 0.3}) {
        const double T = 6.0;
        const auto r = make_episode(Outcome::goal_reached, T, dt, [](double) { return 5.0; },
                                    [=](double t) { return t <= T / 2 ? -8.0 : 0.0; });
        std::vector<double> ts, as;
        for (const auto& rec : r.trace) { ts.push_back(rec.t); as.push_back(rec.a); }
        EXPECT_NEAR(discomfort(ts, as, 4.0, T), 2.0, dt * 8.0 / T) << dt;
    }
}

TEST(Discomfort, SignFlipAndThresholdMonotone) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> acc(-8.0, 2.5);
    std::vector<double> t, a, neg;
    for (int i = 0; i <= 300; ++i) {
        t.push_back(0.02 * i);
        a.push_back(acc(gen));
        neg.push_back(-a.back());
    }
    const double T = t.back();
    EXPECT_EQ(discomfort(t, a, 4.0, T), discomfort(t, neg, 4.0, T));
    double prev = discomfort(t, a, 0.5, T);
    for (double th = 1.0; th <= 9.0; th += 0.5) {
        const double d = discomfort(t, a, th, T);
        EXPECT_LE(d, prev);
        EXPECT_GE(d, 0.0);
        prev = d;
    }
}

TEST(Discomfort, CollisionEpisodeStopsAtTheCollision) {
    auto r = make_episode(Outcome::collision, 4.0, 0.1, [](double) { return 5.0; },
                          [](double t) { return t < 2.0 + 1e-9 ? -8.0 : 0.0; });
    r.collision_time = 2.0;
    EXPECT_NEAR(discomfort(r, 4.0), 4.0, 1e-12);
}

TEST(Percentile, MatchesSortOracle) {
    std::mt19937_64 gen(9);
    std::normal_distribution<double> nd(3.0, 2.0);
    for (std::size_t n : {1u, 2u, 3u, 10u, 101u}) {
        std::vector<double> x;
        for (std::size_t i = 0; i < n; ++i) x.push_back(nd(gen));
        for (double q : {0.0, 5.0, 20.0, 35.0, 50.0, 65.0, 80.0, 95.0, 100.0})
            EXPECT_NEAR(percentile(x, q), oracle_percentile(x, q), 1e-12) << n << ' ' << q;
    }
    EXPECT_EQ(median({8.0, 12.0}), 10.0);
    EXPECT_THROW(percentile({}, 50.0), ArityError);
}

TEST(Cdf, Examples) {
    const auto one = cdf({1.0});
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], std::pair(1.0, 1.0));
    const auto three = cdf({3.0, 1.0, 2.0});
    ASSERT_EQ(three.size(), 3u);
    EXPECT_EQ(three[0].first, 1.0);
    EXPECT_DOUBLE_EQ(three[0].second, 1.0 / 3.0);
    EXPECT_EQ(three[1].first, 2.0);
    EXPECT_DOUBLE_EQ(three[1].second, 2.0 / 3.0);
    EXPECT_EQ(three[2], std::pair(3.0, 1.0));
    EXPECT_THROW(cdf({}), ArityError);
}

TEST(Cdf, MonotoneAndConsistentWithPercentile) {
    std::mt19937_64 gen(17);
    std::exponential_distribution<double> ed(0.3);
    std::vector<double> rates;
    for (int i = 0; i < 73; ++i) rates.push_back(ed(gen));
    const auto table = cdf(rates);
    for (std::size_t i = 1; i < table.size(); ++i) {
        EXPECT_LE(table[i - 1].first, table[i].first);
        EXPECT_LT(table[i - 1].second, table[i].second);
    }
    EXPECT_EQ(table.back().second, 1.0);
    // The 95th percentile lies between the table rows that bracket rank 0.95 * (n - 1).
    const double p95 = percentile(rates, 95.0);
    const auto k = static_cast<std::size_t>(std::floor(0.95 * 72));
    EXPECT_GE(p95, table[k].first);
    EXPECT_LE(p95, table[k + 1].first);
}

TEST(ProfileBands, IdenticalEpisodesCollapse) {
    std::vector<EpisodeResult> rs(5, make_episode(Outcome::goal_reached, 3.0, 0.1, [](double t) { return 10.0 - t; },
                                                  [](double) { return -1.0; }));
    const auto bands = profile_bands(rs, 0.5);
    ASSERT_EQ(bands.size(), 7u);  // bins 0 .. 3.0
    for (const auto& row : bands) {
        EXPECT_EQ(row.count, 5u);
        for (std::size_t i = 0; i < 7; ++i) {
            EXPECT_NEAR(row.v[i], row.v[3], 1e-12);
            EXPECT_EQ(row.a[i], -1.0);
        }
    }
    EXPECT_THROW(profile_bands(rs, 0.0), DomainError);
}

TEST(ProfileBands, TwoConstantSpeeds) {
    std::vector<EpisodeResult> rs{constant_episode(Outcome::goal_reached, 2.0, 8.0, 0.0),
                                  constant_episode(Outcome::goal_reached, 2.0, 12.0, 0.0)};
    for (const auto& row : profile_bands(rs, 0.5)) {
        EXPECT_EQ(row.v[3], 10.0);
        EXPECT_NEAR(row.v[0], 8.2, 1e-12);
        EXPECT_NEAR(row.v[6], 11.8, 1e-12);
    }
}

TEST(ProfileBands, RampFamilyMatchesSortOracle) {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<EpisodeResult> rs;
    for (int i = 0; i < 100; ++i) {
        const double v0 = 6.0 + 6.0 * u(gen), slope = -2.0 + 3.0 * u(gen), T = 2.0 + 6.0 * u(gen);
        rs.push_back(make_episode(Outcome::goal_reached, T, 0.1, [=](double t) { return v0 + slope * t; },
                                  [=](double) { return slope; }));
    }
    const double bin = 0.5;
    const auto bands = profile_bands(rs, bin);
    for (const auto& row : bands) {
        // Per-episode bin means, computed independently from the raw records.
        std::vector<double> vs, as;
        for (const auto& r : rs) {
            double sv = 0.0, sa = 0.0;
            int n = 0;
            for (const auto& rec : r.trace)
                if (rec.t >= row.t - 1e-9 && rec.t < row.t + bin - 1e-9) { sv += rec.v; sa += rec.a; ++n; }
            if (n) { vs.push_back(sv / n); as.push_back(sa / n); }
        }
        ASSERT_EQ(row.count, vs.size()) << row.t;
        for (std::size_t i = 0; i < 7; ++i) {
            EXPECT_NEAR(row.v[i], oracle_percentile(vs, kBandPercentiles[i]), 1e-9);
            EXPECT_NEAR(row.a[i], oracle_percentile(as, kBandPercentiles[i]), 1e-9);
            if (i) {
                EXPECT_LE(row.v[i - 1], row.v[i]);
                EXPECT_LE(row.a[i - 1], row.a[i]);
            }
        }
    }
    // Active counts shrink as episodes finish.
    for (std::size_t i = 1; i < bands.size(); ++i) EXPECT_LE(bands[i].count, bands[i - 1].count);
}

TEST(Summarize, CountsPerMode) {
    std::vector<BatchEntry> entries;
    auto add = [&](std::size_t id, RiskMode m, std::optional<EpisodeResult> r) {
        BatchEntry e;
        e.scenario_id = id;
        e.mode = m;
        e.result = std::move(r);
        if (!e.result) e.error = "rejected";
        entries.push_back(std::move(e));
    };
    add(0, RiskMode::occlusion_aware, constant_episode(Outcome::goal_reached, 2.0, 5.0, -8.0));
    add(0, RiskMode::observed_only, constant_episode(Outcome::collision, 2.0, 5.0, 0.0));
    add(1, RiskMode::occlusion_aware, constant_episode(Outcome::timeout, 2.0, 5.0, -8.0));
    add(1, RiskMode::observed_only, constant_episode(Outcome::goal_reached, 2.0, 5.0, 6.0));
    add(2, RiskMode::occlusion_aware, std::nullopt);
    add(2, RiskMode::observed_only, std::nullopt);
    const auto rows = summarize(entries, "x", 4.0);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].mode, "occlusion_aware");
    EXPECT_EQ(rows[0].n, 2u);
    EXPECT_EQ(rows[0].collisions, 0u);
    EXPECT_EQ(rows[0].timeout_count, 1u);
    EXPECT_EQ(rows[0].failed_scenarios, 1u);
    ASSERT_EQ(rows[0].discomfort.size(), 1u);  // the timeout is excluded
    EXPECT_EQ(rows[0].discomfort_median, 4.0);
    EXPECT_EQ(rows[1].mode, "observed_only");
    EXPECT_EQ(rows[1].collision_rate_pct, 50.0);
    ASSERT_EQ(rows[1].discomfort.size(), 2u);
    EXPECT_NEAR(rows[1].discomfort_median, 1.0, 1e-12);  // median of {0, 2}
    EXPECT_NEAR(rows[1].discomfort_p95, 1.9, 1e-12);
}

TEST(Report, SummaryCsvRoundTripsThroughOverlay) {
    SummaryRow a{"b_int", "occlusion_aware", 10, 1, 10.0, 0.5, 1.25, 0, 0, {}};
    SummaryRow b{"b_int", "observed_only", 10, 3, 30.0, 0.1, 0.2, 1, 0, {}};
    MapMeta meta{"b_int", 42.28, -83.74};
    std::ostringstream os;
    write_summary_header(os);
    write_summary_rows(os, std::vector{a, b}, meta);
    EXPECT_EQ(os.str(),
              "name,mode,n,collisions,collision_rate_pct,discomfort_median,discomfort_p95,timeout_count,"
              "failed_scenarios,origin_lat,origin_lon\n"
              "b_int,occlusion_aware,10,1,10,0.5,1.25,0,0,42.28,-83.74\n"
              "b_int,observed_only,10,3,30,0.1,0.2,1,0,42.28,-83.74\n");
    std::istringstream in(os.str());
    const auto rows = read_summary(in, "mem");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].name, "b_int");
    EXPECT_EQ(rows[0].origin_lat, 42.28);
    EXPECT_EQ(rows[0].rates.at("observed_only"), 30.0);
}

TEST(Report, NumbersRoundTrip) {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(gen);
        EXPECT_EQ(parse_num(fmt_num(x), "t"), x);
    }
    EXPECT_EQ(fmt_num(1.45), "1.45");
    EXPECT_EQ(fmt_num(4.0), "4");
}
