#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fluxgauge/geometry/zoo.hpp"
#include "fluxgauge/measures.hpp"
#include "fluxgauge/random.hpp"

using namespace fluxgauge;
constexpr double pi = std::numbers::pi;

namespace {

SurfaceMesh unit_circle() { return mesh_boundary(zoo::ball({}, 1.0, 2), 0.005); }

/// k concentric rings of equal width filling radii [0.2, 0.9].
ImplicitDomain rings(int k) {
    const double pitch = 0.7 / k;
    return ImplicitDomain(
        [k, pitch](const Vec& x) {
            const double rr = norm(Vec{x.x, x.y, 0.0});
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < k; ++i) {
                const double mid = 0.2 + (i + 0.5) * pitch;
                best = std::min(best, std::abs(rr - mid) - 0.25 * pitch);
            }
            return best;
        },
        2, Box{{-1, -1, 0}, {1, 1, 0}}, 1.0, "rings" + std::to_string(k), true);
}

}  // namespace

TEST(Empirical, CircleHalfMeasure) {
    const auto m = empirical_measure(unit_circle());
    EXPECT_NEAR(m.total_weight, 1.0, 1e-12);
    const double half = m.measure([](const Vec& x) { return x.y > 0; }, [](const Vec& n) { return n.y > 0; });
    EXPECT_NEAR(half, 0.5, 1e-3);
    EXPECT_NEAR(m.measure([](const Vec&) { return true; }, [](const Vec&) { return true; }), 1.0, 1e-12);
    EXPECT_NEAR(norm(m.mean_normal()), 0.0, 1e-3);
    for (const Atom& a : m.atoms) EXPECT_NEAR(norm(a.n), 1.0, 1e-12);
}

TEST(Empirical, EmptyMesh) {
    try {
        empirical_measure(SurfaceMesh(2, {}, "empty"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyMesh);
    }
}

TEST(Empirical, IntegrationIdentity) {
    const auto mesh = mesh_boundary(zoo::torus(1.0, 0.35), 0.06);
    const auto m = empirical_measure(mesh);
    auto g = [](const Vec& x, const Vec& n) { return x.x * n.y + std::sin(x.z) + n.z * n.z; };
    CompensatedSum direct;
    for (const Facet& f : mesh.facets()) direct += f.area * g(f.centroid, f.normal);
    EXPECT_NEAR(m.integrate(g), direct.value() / mesh.total_area(), 1e-12);
}

TEST(BallMean, Examples) {
    const auto m = empirical_measure(unit_circle());
    EXPECT_LE(norm(ball_mean_normal(m, {}, 2.0)), 1e-3);
    EXPECT_EQ(ball_mean_normal(m, {10, 10, 0}, 0.5), Vec{});
    EXPECT_THROW(ball_mean_normal(m, {}, 0.0), Error);

    const auto comb = mesh_boundary(make_comb(4, default_comb_smoothing(4)), 1.0 / 512.0);
    const auto cm = empirical_measure(comb);
    const double bound = 2 * pi * 0.25 / (2 * cm.source_area);
    EXPECT_NEAR(bound, (pi / 2) / 20, 0.15 * (pi / 2) / 20);
    const auto est = disintegration_estimate(comb, {{0.5, 0.5, 0}}, 0.25);
    EXPECT_LE(est.balls[0].magnitude, bound + est.balls[0].tolerance);
}

TEST(BallMean, PropertyBoundOnRandomBalls) {
    Rng rng(31, 4);
    const std::vector<SurfaceMesh> meshes = {
        mesh_boundary(make_comb(6, default_comb_smoothing(6)), 1.0 / 512.0),
        mesh_boundary(zoo::annulus(0.3, 0.8, 2), 0.005),
        mesh_boundary(zoo::torus(1.0, 0.3), 0.05),
        mesh_boundary(zoo::smoothed_box({}, {0.5, 0.3, 0.4}, 0.1, 3), 0.04),
    };
    for (const auto& mesh : meshes) {
        std::vector<Vec> centers;
        for (int k = 0; k < 40; ++k)
            centers.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), mesh.dimension() == 3 ? rng.uniform(-0.5, 0.5) : 0.0});
        const auto est = disintegration_estimate(mesh, centers, rng.uniform(0.1, 0.6));
        for (const auto& b : est.balls) {
            EXPECT_LE(b.magnitude, b.bound + b.tolerance) << mesh.source_label();
            EXPECT_LE(b.magnitude, b.mass + 1e-12);
        }
    }
}

TEST(SurfaceLimit, CombSequenceDominated) {
    const std::vector<ImplicitDomain> combs = {make_comb(4, default_comb_smoothing(4)),
                                               make_comb(8, default_comb_smoothing(8))};
    const auto centers = ball_grid(Box{{0, 0, 0}, {1, 1, 0}}, 2, 3);
    const auto s = surface_limit_study(combs, {1.0 / 512.0, 1.0 / 1024.0}, centers, 0.2);
    EXPECT_EQ(s.estimates.size(), 2u);
    EXPECT_TRUE(s.dominated);
    EXPECT_TRUE(s.bounds_decay);
}

TEST(SurfaceLimit, NonIncreasingAreasRejected) {
    const auto c = zoo::ball({}, 1.0, 2);
    try {
        surface_limit_study({c, c}, {0.02}, {{0, 0, 0}}, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PreconditionFailed);
    }
}

TEST(SurfaceLimit, ConcentricRings) {
    const auto s = surface_limit_study({rings(2), rings(4), rings(8)}, {1.0 / 512.0},
                                       ball_grid(Box{{-1, -1, 0}, {1, 1, 0}}, 2, 3), 0.3);
    EXPECT_TRUE(s.dominated);
    EXPECT_TRUE(s.bounds_decay);
    EXPECT_TRUE(s.means_decay);
}

TEST(BallGrid, Layout) {
    const auto g = ball_grid(Box{{0, 0, 0}, {1, 1, 0}}, 2, 3);
    ASSERT_EQ(g.size(), 9u);
    EXPECT_NEAR(g[0].x, 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(g[4].y, 0.5, 1e-15);
    EXPECT_EQ(ball_grid(Box{{0, 0, 0}, {1, 1, 1}}, 3, 2).size(), 8u);
}
