#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fluxgauge/bounds.hpp"
#include "fluxgauge/geometry/zoo.hpp"

using namespace fluxgauge;
constexpr double pi = std::numbers::pi;

namespace {

ImplicitDomain upper_halfplane() { return zoo::halfspace({0, -1, 0}, 0.0, 2); }
ImplicitDomain unit_disk() { return zoo::ball({}, 1.0, 2); }

QuadOptions opts(double h) {
    QuadOptions o;
    o.h = h;
    o.sup_samples = 4000;
    return o;
}

}  // namespace

TEST(Verdict, Rules) {
    EXPECT_EQ(decide(1.0, 1.0, 0.0, 0.0), Verdict::Holds);
    EXPECT_EQ(decide(1.05, 1.0, 0.1, 0.03), Verdict::Holds);
    EXPECT_EQ(decide(1.2, 1.0, 0.1, 0.03), Verdict::Violated);
    EXPECT_EQ(decide(1.2, 1.0, 0.1, 0.1), Verdict::Inconclusive);
    BoundReport r;
    r.lhs = 2.0;
    r.rhs = 1.0;
    finalize(r, 0.01, 0.0);
    EXPECT_DOUBLE_EQ(r.slack, -1.0);
    EXPECT_NEAR(r.tolerance, 0.03 + 1e-9, 1e-15);
    EXPECT_EQ(r.verdict, Verdict::Violated);
    EXPECT_TRUE(r.proven_violation());
    r.flags.emplace_back(kNotARegularDomain);
    EXPECT_FALSE(r.proven_violation());
}

TEST(Thm1, Chord) {
    const auto r = check_thm1(upper_halfplane(), unit_disk(), fields::constant({0, 1, 0}, 2), opts(0.01));
    EXPECT_NEAR(r.lhs, 2.0, 1e-3);
    EXPECT_NEAR(r.rhs, 2 * pi, 1e-3);
    EXPECT_EQ(r.verdict, Verdict::Holds);
    ASSERT_NE(r.ingredient("area_dD2"), nullptr);
    EXPECT_EQ(r.ingredient("sup_f")->value, 1.0);
}

TEST(Thm1, Disjoint) {
    const auto r = check_thm1(zoo::ball({5, 5, 0}, 1.0, 2), unit_disk(), fields::identity(2), opts(0.02));
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.verdict, Verdict::Holds);
    EXPECT_TRUE(r.has_flag(kEmptyClip));
}

TEST(Thm1, NestedDisks) {
    const auto r = check_thm1(unit_disk(), zoo::ball({}, 2.0, 2), fields::identity(2), opts(0.01));
    EXPECT_NEAR(r.lhs, 2 * pi, 1e-2);
    EXPECT_NEAR(r.rhs, 16 * pi, 0.01 * 16 * pi);
    EXPECT_EQ(r.verdict, Verdict::Holds);
}

TEST(Thm2, ChordAndComb) {
    const auto chord = check_thm2(upper_halfplane(), unit_disk(), fields::constant({0, 1, 0}, 2), opts(0.01));
    EXPECT_NEAR(chord.lhs, 2.0, 1e-3);
    EXPECT_NEAR(chord.rhs, pi, 1e-3);
    EXPECT_EQ(chord.verdict, Verdict::Holds);

    const double rho = default_comb_smoothing(4);
    const auto comb = check_thm2(make_comb(4, rho), make_comb_translate(4, rho), fields::constant({0, 1, 0}, 2),
                                 opts(1.0 / 512.0));
    EXPECT_NEAR(comb.lhs, 4.0, 0.15 * 4.0);
    EXPECT_NEAR(comb.rhs, 5.0, 0.15 * 5.0);
    EXPECT_NEAR(comb.slack, 1.0, 0.5);
    EXPECT_EQ(comb.verdict, Verdict::Holds);
}

TEST(Thm2, RejectsDivergentField) {
    try {
        check_thm2(upper_halfplane(), unit_disk(), fields::identity(2), opts(0.05));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotDivergenceFree);
    }
}

TEST(Cor3, ChordAndContainment) {
    const auto chord = check_cor3(upper_halfplane(), unit_disk(), opts(0.01));
    EXPECT_NEAR(chord.lhs, 2.0, 1e-2);
    EXPECT_EQ(chord.verdict, Verdict::Holds);
    const auto inside = check_cor3(zoo::ball({0.2, 0, 0}, 0.5, 2), unit_disk(), opts(0.01));
    EXPECT_NEAR(inside.lhs, 0.0, 1e-9);
    EXPECT_EQ(inside.verdict, Verdict::Holds);
}

TEST(Cor3, ScaleEquivariance) {
    for (int dim : {2, 3}) {
        const auto d1 = zoo::ball({0.5, 0, 0}, 0.8, dim), d2 = zoo::ball({}, 1.0, dim);
        const double h = dim == 2 ? 0.01 : 0.05;
        const auto base = check_cor3(d1, d2, opts(h));
        for (double lambda : {0.5, 2.0}) {
            const auto r = check_cor3(scale(d1, lambda), scale(d2, lambda), opts(h * lambda));
            const double factor = std::pow(lambda, dim - 1);
            EXPECT_NEAR(r.lhs, factor * base.lhs, 1e-6 * factor * base.lhs) << dim << " " << lambda;
            EXPECT_NEAR(r.rhs, factor * base.rhs, 1e-6 * factor * base.rhs) << dim << " " << lambda;
        }
    }
}

TEST(Thm4, ChordReproducesFactorOfTwo) {
    const auto [claimed, proof] = check_thm4(upper_halfplane(), unit_disk(), opts(0.01));
    EXPECT_NEAR(claimed.lhs, 2.0, 1e-2);
    EXPECT_NEAR(claimed.ingredient("diameter_D2")->value, 2.0, 1e-6);
    EXPECT_NEAR(claimed.rhs, 1.0, 1e-6);
    EXPECT_EQ(claimed.verdict, Verdict::Violated);
    EXPECT_NEAR(proof.rhs, 2.0, 1e-6);
    EXPECT_EQ(proof.verdict, Verdict::Holds);
    EXPECT_LE(std::abs(proof.slack), 0.01 * proof.rhs);
    EXPECT_FALSE(claimed.proven_violation());
}

TEST(Thm4, Equator) {
    const auto [claimed, proof] =
        check_thm4(zoo::halfspace({0, 0, -1}, 0.0, 3), zoo::ball({}, 1.0, 3), opts(0.04));
    EXPECT_NEAR(claimed.lhs, pi, 0.01 * pi);
    EXPECT_NEAR(claimed.rhs, pi / 2, 1e-4);
    EXPECT_EQ(claimed.verdict, Verdict::Violated);
    EXPECT_EQ(proof.verdict, Verdict::Holds);
}

TEST(Thm4, TinyDiskInside) {
    const auto [claimed, proof] = check_thm4(zoo::ball({0.1, 0.1, 0}, 0.2, 2), unit_disk(), opts(0.01));
    EXPECT_NEAR(claimed.lhs, 0.0, 1e-9);
    EXPECT_EQ(claimed.verdict, Verdict::Holds);
    EXPECT_EQ(proof.verdict, Verdict::Holds);
}

TEST(Thm4, NotConvex) {
    try {
        check_thm4(upper_halfplane(), zoo::annulus(0.5, 1.0, 2), opts(0.02));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotConvex);
    }
}

TEST(Vdotn, UpperSemicircle) {
    const auto [claimed, proof] = check_vdotn(unit_disk(), upper_halfplane(), {0, 1, 0}, opts(0.01));
    EXPECT_NEAR(claimed.lhs, 2.0, 1e-2);
    EXPECT_EQ(claimed.verdict, Verdict::Violated);
    EXPECT_EQ(proof.verdict, Verdict::Holds);
    EXPECT_THROW(check_vdotn(unit_disk(), upper_halfplane(), {0, 2, 0}), Error);
}

TEST(General, ChordAndDisk) {
    const auto chord = check_general(upper_halfplane(), unit_disk(), fields::constant({0, 1, 0}, 2), opts(0.01));
    EXPECT_NEAR(chord.rhs, pi, 1e-3);
    EXPECT_NEAR(chord.ingredient("flux_dD2")->value, 0.0, 1e-9);
    EXPECT_EQ(chord.ingredient("div_integral_D2")->value, 0.0);
    EXPECT_EQ(chord.verdict, Verdict::Holds);

    const auto disk = check_general(zoo::ball({0.7, 0.3, 0}, 0.6, 2), unit_disk(), fields::identity(2), opts(0.01));
    EXPECT_NEAR(disk.rhs, 4 * pi, 0.01 * 4 * pi);
    EXPECT_LE(disk.lhs, 2 * pi);
    EXPECT_EQ(disk.verdict, Verdict::Holds);

    const auto empty = check_general(zoo::ball({5, 0, 0}, 0.5, 2), unit_disk(), fields::identity(2), opts(0.02));
    EXPECT_EQ(empty.lhs, 0.0);
}

TEST(General, DivergenceFreeIngredientsVanish) {
    const auto r = check_general(zoo::ball({0, 0.5, 0}, 0.7, 3), zoo::torus(1.0, 0.4), fields::curl_xy(), opts(0.05));
    EXPECT_NEAR(r.ingredient("flux_dD2")->value, 0.0, 1e-9);
    EXPECT_EQ(r.ingredient("div_integral_D2")->value, 0.0);
    EXPECT_EQ(r.ingredient("sup_div_f")->value, 0.0);
    EXPECT_EQ(r.verdict, Verdict::Holds);
}

TEST(MeasureLemma, TightTwoPointCase) {
    const auto r = check_measure_lemma({{1, 1}, {1, -1}, {true, true}, {true, false}});
    EXPECT_EQ(r.lhs, 1.0);
    EXPECT_EQ(r.rhs, 1.0);
    EXPECT_EQ(r.slack, 0.0);
    EXPECT_EQ(r.verdict, Verdict::Holds);
}

TEST(MeasureLemma, ZeroFunction) {
    const auto r = check_measure_lemma({{2, 3}, {0, 0}, {true, true}, {false, true}});
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.rhs, 0.0);
    EXPECT_EQ(r.verdict, Verdict::Holds);
}

TEST(MeasureLemma, RandomInstancesHoldExactly) {
    Rng rng(2026, 9);
    for (int k = 0; k < 1000; ++k) {
        const auto inst = random_discrete_instance(rng);
        const auto r = check_measure_lemma(inst);
        // Independent check by enumeration of both sides.
        double a = 0, b = 0, u = 0, mu = 0, sup = 0;
        for (std::size_t i = 0; i < inst.weights.size(); ++i) {
            if (inst.weights[i] > 0) sup = std::max(sup, std::abs(inst.values[i]));
            if (!inst.in_u[i]) continue;
            mu += inst.weights[i];
            u += inst.weights[i] * inst.values[i];
            (inst.in_v[i] ? b : a) += inst.weights[i] * inst.values[i];
        }
        EXPECT_LE(std::abs(a), 0.5 * (mu * sup + std::abs(u))) << k;
        EXPECT_LE(std::abs(b), 0.5 * (mu * sup + std::abs(u))) << k;
        EXPECT_EQ(r.verdict, Verdict::Holds) << k;
    }
    EXPECT_THROW(check_measure_lemma({{1}, {1, 2}, {true}, {true}}), Error);
}

TEST(OffsetStudy, BallVolumes) {
    QuadOptions o = opts(1.0 / 256.0);
    const auto s = offset_convergence_study(unit_disk(), std::nullopt, fields::identity(2), {0.2, 0.1, 0.05, 0.0}, o);
    ASSERT_EQ(s.rows.size(), 4u);
    const double expected[] = {1.382, 0.660, 0.322};
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(s.rows[k].volume - pi, expected[k], 2e-3);
    EXPECT_NEAR(s.rows[3].volume, volume(unit_disk(), o.h).value, 0.0);
    EXPECT_TRUE(s.volume.monotone);
    EXPECT_NEAR(s.volume.rate, 1.0, 0.1);
    EXPECT_NEAR(s.area.rate, 1.0, 0.1);
    EXPECT_THROW(offset_convergence_study(unit_disk(), std::nullopt, fields::identity(2), {0.1, 0.2}, o), Error);
}

TEST(OffsetStudy, ClippedColumn) {
    const auto s = offset_convergence_study(unit_disk(), upper_halfplane(), fields::constant({0, 1, 0}, 2),
                                            {0.1, 0.05}, opts(0.01));
    EXPECT_NEAR(s.rows[0].clipped_flux, -2.2, 1e-2);
    EXPECT_NEAR(s.rows[1].clipped_flux, -2.1, 1e-2);
}

TEST(LogLog, Slope) {
    EXPECT_NEAR(loglog_slope({1, 2, 4}, {3, 12, 48}), 2.0, 1e-12);
    EXPECT_TRUE(std::isnan(loglog_slope({1}, {1})));
}
