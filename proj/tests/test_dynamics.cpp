#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fluxgauge/dynamics.hpp"
#include "fluxgauge/geometry/zoo.hpp"
#include "fluxgauge/random.hpp"

using namespace fluxgauge;
constexpr double pi = std::numbers::pi;

namespace {

/// Midpoint-rule estimate of the masked displacement, independent of the crossing search.
Vec brute_masked(const std::function<Vec(double)>& x, double t0, double t1, const ImplicitDomain& d, int n) {
    CompensatedVecSum s;
    const double w = (t1 - t0) / n;
    for (int i = 0; i < n; ++i) {
        const double a = t0 + i * w;
        const Vec xa = x(a), xb = x(a + w);
        if (d.level(x(a + 0.5 * w)) <= 0.0) s += xb - xa;
    }
    return s.value();
}

}  // namespace

TEST(Integrate, RotationReturnsAfterOnePeriod) {
    const auto tr = integrate(fields::rotation(2), {1, 0, 0}, 2 * pi);
    EXPECT_LE(distance(tr.state(tr.size() - 1), Vec{1, 0, 0}), 1e-6);
    EXPECT_NEAR(tr.end_time(), 2 * pi, 1e-15);
    for (double t : {0.3, 1.7, 4.1}) EXPECT_NEAR(distance(tr.at(t), Vec{std::cos(t), std::sin(t), 0}), 0.0, 1e-7);
}

TEST(Integrate, ConstantField) {
    const auto tr = integrate(fields::constant({1, 0, 0}, 2), {0, 0, 0}, 3.0);
    EXPECT_NEAR(tr.state(tr.size() - 1).x, 3.0, 1e-12);
    EXPECT_NEAR(tr.state(tr.size() - 1).y, 0.0, 1e-15);
}

TEST(Integrate, LimitCycleAttracts) {
    const auto tr = integrate(fields::limit_cycle(), {0.5, 0, 0}, 20.0);
    EXPECT_NEAR(norm(tr.state(tr.size() - 1)), 1.0, 1e-4);
}

TEST(Integrate, BadInputs) {
    EXPECT_THROW(integrate(fields::rotation(2), {1, 0, 0}, 0.0), Error);
    EXPECT_THROW(integrate(fields::rotation(3), {1, 0, 0}, 1.0), Error);
}

TEST(Integrate, StepUnderflowOnBlowUp) {
    // x' = x^2 from 1 blows up at t = 1.
    const VectorField f([](const Vec& x) { return Vec{x.x * x.x, 0, 0}; }, 2, "blowup");
    try {
        integrate(f, {1, 0, 0}, 2.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StepUnderflow);
    }
}

TEST(Masked, ClosedOrbitInsideLargeDisk) {
    const auto tr = integrate(fields::rotation(2), {1, 0, 0}, 2 * pi);
    const auto m = masked_displacement(tr, zoo::ball({}, 5.0, 2));
    EXPECT_LE(norm(m.displacement), 1e-6);
    EXPECT_NEAR(m.residence_time, 2 * pi, 1e-12);
}

TEST(Masked, ChordThroughSmallDisk) {
    const auto tr = integrate(fields::rotation(2), {-1, 0, 0}, 2 * pi);
    const auto m = masked_displacement(tr, zoo::ball({1, 0, 0}, 0.5, 2));
    const double y = std::sqrt(1.0 - 0.875 * 0.875);
    EXPECT_NEAR(norm(m.displacement), 2 * y, 1e-4);
    EXPECT_NEAR(norm(m.displacement), 0.9682, 1e-4);
    ASSERT_EQ(m.intervals.size(), 1u);
    EXPECT_NEAR(m.residence_time, 2 * std::atan2(y, 0.875), 1e-8);
}

TEST(Masked, NeverEnteringIsExactlyZero) {
    const auto tr = integrate(fields::rotation(2), {1, 0, 0}, 2 * pi);
    const auto m = masked_displacement(tr, zoo::ball({5, 5, 0}, 0.5, 2));
    EXPECT_EQ(m.displacement, Vec{});
    EXPECT_EQ(m.residence_time, 0.0);
    EXPECT_TRUE(m.intervals.empty());
}

TEST(Masked, TelescopingMatchesVelocityQuadrature) {
    Rng rng(7, 0);
    const auto f = fields::limit_cycle();
    for (int trial = 0; trial < 12; ++trial) {
        const Vec x0{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), 0};
        const auto tr = integrate(f, x0, rng.uniform(2.0, 8.0));
        const auto d = zoo::ball({rng.uniform(-1, 1), rng.uniform(-1, 1), 0}, rng.uniform(0.2, 0.8), 2);
        const auto m = masked_displacement(tr, d);
        const Vec q = masked_velocity_quadrature(tr, m, f);
        EXPECT_LE(distance(m.displacement, q), 10.0 * tr.step_tolerance() * 100.0) << trial;
        const Vec b = brute_masked([&tr](double t) { return tr.at(t); }, 0.0, tr.end_time(), d, 400000);
        EXPECT_LE(distance(m.displacement, b), 1e-3) << trial;
    }
}

TEST(Masked, ReversalNegates) {
    Rng rng(8, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec x0{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), 0};
        const auto tr = integrate(fields::limit_cycle(), x0, 5.0);
        const auto d = zoo::ball({rng.uniform(-1, 1), rng.uniform(-1, 1), 0}, rng.uniform(0.2, 0.8), 2);
        const auto fwd = masked_displacement(tr, d);
        const auto rev = masked_displacement(tr.reversed(), d);
        EXPECT_EQ(rev.displacement, -fwd.displacement);
        EXPECT_EQ(rev.residence_time, fwd.residence_time);
        EXPECT_EQ(tr.reversed().reversed().at(1.3), tr.at(1.3));
        EXPECT_EQ(tr.reversed().at(0.0), tr.state(tr.size() - 1));
    }
}

TEST(Simplicity, Polylines) {
    EXPECT_TRUE(is_simple_polyline(sample_curve(circle_curve({}, 1.0), 500), true));
    EXPECT_FALSE(is_simple_polyline({{0, 0, 0}, {1, 1, 0}, {1, 0, 0}, {0, 1, 0}}, true));
    EXPECT_FALSE(is_simple_polyline(sample_curve(make_m_cover(circle_curve({}, 1.0), 2, 0.01).parametrization, 2000), true));
    EXPECT_FALSE(is_simple_polyline(sample_curve(make_m_cover(circle_curve({}, 1.0), 3, 0.0).parametrization, 3000), true));
}

TEST(Cor2d, EllipseAgainstOffsetDisk) {
    const auto r = check_cor_2d(ellipse_curve({}, 2.0, 1.0), zoo::ball({2, 0, 0}, 1.0, 2));
    EXPECT_EQ(r.verdict, Verdict::Holds);
    EXPECT_NEAR(r.lhs, 2.0 * std::sqrt(5.0) / 3.0, 1e-8);
    EXPECT_NEAR(r.rhs, pi, 1e-3);
}

TEST(Cor2d, CurveInsideDomain) {
    const auto r = check_cor_2d(circle_curve({}, 1.0), zoo::ball({}, 3.0, 2));
    EXPECT_LE(r.lhs, 1e-12);
    EXPECT_EQ(r.verdict, Verdict::Holds);
}

TEST(Cor2d, TrajectoryCurve) {
    const auto tr = integrate(fields::rotation(2), {-1, 0, 0}, 2 * pi);
    const auto r = check_cor_2d(tr, zoo::ball({1, 0, 0}, 0.5, 2));
    EXPECT_EQ(r.verdict, Verdict::Holds);
    EXPECT_NEAR(r.lhs, 0.9682, 1e-4);
    EXPECT_THROW(check_cor_2d(integrate(fields::rotation(2), {-1, 0, 0}, 3.0), zoo::ball({}, 1.0, 2)), Error);
}

TEST(Cor2d, MultiCoverGuard) {
    const auto cover = make_m_cover(circle_curve({}, 1.0), 8, 0.001);
    const auto d2 = zoo::ball({1, 0, 0}, 0.5, 2);
    try {
        check_cor_2d(cover, d2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotSimple);
    }
    Cor2dOptions o;
    o.allow_non_simple = true;
    const auto r = check_cor_2d(cover, d2, o);
    EXPECT_TRUE(r.has_flag(kNotARegularDomain));
    EXPECT_EQ(r.verdict, Verdict::Violated);
    EXPECT_GT(r.lhs, r.rhs);
    EXPECT_FALSE(r.proven_violation());
}

TEST(Probe, LimitCycleResidenceGrows) {
    const auto p = minimal_set_probe(fields::limit_cycle(), {-1, 0, 0}, {1, 0, 0}, 0.1, {10, 50, 100});
    ASSERT_EQ(p.rows.size(), 3u);
    EXPECT_GE(p.residence_growth(), 4.0);
    EXPECT_TRUE(p.loops_bounded());
    for (const auto& r : p.rows) {
        EXPECT_NEAR(r.bound, pi * 0.1, 1e-15);
        EXPECT_GT(r.loops, 0);
        EXPECT_LE(r.max_loop_displacement, 0.2 + 1e-6);
    }
    // Each pass contributes the chord (0, 0.2), so the total grows with the number of passes.
    EXPECT_GT(p.rows.back().magnitude, p.rows.front().magnitude);
}

TEST(Probe, FarBallNeverVisited) {
    const auto p = minimal_set_probe(fields::limit_cycle(), {-1, 0, 0}, {3, 3, 0}, 0.1, {10, 50});
    for (const auto& r : p.rows) {
        EXPECT_EQ(r.residence_time, 0.0);
        EXPECT_EQ(r.magnitude, 0.0);
    }
}

TEST(Probe, SinkEquilibrium) {
    const double T = 20.0;
    const auto p = minimal_set_probe(fields::sink(2), {1, 0, 0}, {0, 0, 0}, 0.1, {T});
    const auto& r = p.rows.front();
    EXPECT_LE(r.magnitude, 0.1 * (1 + 1e-6));
    EXPECT_NEAR(r.residence_time, T - std::log(10.0), 1e-6);
}

TEST(Probe, BadParams) {
    EXPECT_THROW(minimal_set_probe(fields::sink(2), {1, 0, 0}, {}, 0.0, {1}), Error);
    EXPECT_THROW(minimal_set_probe(fields::sink(2), {1, 0, 0}, {}, 0.1, {2, 1}), Error);
}
