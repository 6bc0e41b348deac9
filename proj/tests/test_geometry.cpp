#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fluxgauge/geometry/curve.hpp"
#include "fluxgauge/geometry/mesh.hpp"
#include "fluxgauge/geometry/zoo.hpp"
#include "fluxgauge/random.hpp"

using namespace fluxgauge;
constexpr double pi = std::numbers::pi;

TEST(Zoo, SignedDistanceValues) {
    EXPECT_DOUBLE_EQ(zoo::ball({0, 0, 0}, 1.0, 2).level({2, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(zoo::halfspace({0, 1, 0}, 0.0, 2).level({3, -2, 0}), -2.0);
    EXPECT_DOUBLE_EQ(zoo::annulus(1.0, 2.0, 2).level({0, 1.5, 0}), -0.5);
    EXPECT_NEAR(zoo::torus(2.0, 0.5).level({2, 0, 0}), -0.5, 1e-15);
}

TEST(Zoo, ClassifyUsesBand) {
    const auto d = zoo::ball({0, 0, 0}, 1.0, 2);
    EXPECT_EQ(d.classify({0, 0, 0}), Membership::Inside);
    EXPECT_EQ(d.classify({1, 0, 0}), Membership::Boundary);
    EXPECT_EQ(d.classify({1.1, 0, 0}), Membership::Outside);
    EXPECT_TRUE(d.contains({1, 0, 0}));
}

TEST(Zoo, RejectsBadParameters) {
    EXPECT_THROW(zoo::ball({}, -1.0), Error);
    EXPECT_THROW(zoo::annulus(2.0, 1.0), Error);
    EXPECT_THROW(make_comb(2, 0.0), Error);
    EXPECT_THROW(make_comb(4, 1.0 / 64.0), Error);
    EXPECT_THROW(make_zoo("dodecahedron", {}, 3), Error);
    EXPECT_THROW(zoo::rounded_polygon({{0, 0, 0}, {0, 1, 0}, {1, 0, 0}}, 0.1), Error);
    try {
        make_zoo("ball", {1.0}, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadParams);
    }
}

TEST(Zoo, CombMembership) {
    const auto comb = make_comb(4, 0.0);
    EXPECT_TRUE(comb.contains({0.5, 0.03, 0}));    // tooth 0
    EXPECT_TRUE(comb.contains({0.9, 0.78, 0}));    // tooth 3 spans [0.75, 0.8125]
    EXPECT_FALSE(comb.contains({0.5, 0.15, 0}));   // gap
    EXPECT_TRUE(comb.contains({0.03, 0.5, 0}));    // spine
    EXPECT_FALSE(comb.contains({0.5, 0.9, 0}));    // above the last tooth
    EXPECT_DOUBLE_EQ(comb.level({0.5, 0.15, 0}), 0.15 - 0.0625);
    const auto shifted = make_comb_translate(4, 0.0);
    EXPECT_TRUE(shifted.contains({0.5, 0.03 + 1.0 / 32.0, 0}));
    EXPECT_FALSE(shifted.contains({0.01, 0.5, 0}));
}

TEST(Zoo, OffsetAndScale) {
    const auto b = zoo::ball({0, 0, 0}, 1.0, 2);
    const auto grown = offset_domain({b, 0.25});
    EXPECT_DOUBLE_EQ(grown.level({1.25, 0, 0}), 0.0);
    EXPECT_EQ(offset_domain({b, 0.0}).label(), b.label());
    const auto big = scale(b, 2.0);
    EXPECT_DOUBLE_EQ(big.level({3, 0, 0}), 1.0);
    EXPECT_THROW(scale(b, 0.0), Error);
}

TEST(Zoo, ProjectToBoundary) {
    const auto b = zoo::smoothed_box({0, 0, 0}, {1, 0.5, 0}, 0.1, 2);
    const Vec p = b.project_to_boundary({0.3, 0.2, 0});
    EXPECT_NEAR(b.level(p), 0.0, 1e-12);
}

TEST(Mesh, UnitCirclePerimeter) {
    const auto m = mesh_boundary(zoo::ball({0, 0, 0}, 1.0, 2), 0.01);
    EXPECT_NEAR(m.total_area(), 2 * pi, 1e-3);
    EXPECT_NEAR(norm(m.normal_sum()), 0.0, 1e-12);
}

TEST(Mesh, NormalsPointOutward) {
    const auto m = mesh_boundary(zoo::ball({0.1, -0.2, 0}, 0.7, 2), 0.02);
    for (const Facet& f : m.facets()) EXPECT_GT(dot(f.normal, f.centroid - Vec{0.1, -0.2, 0}), 0.0);
}

TEST(Mesh, UnitSphereArea) {
    const auto m = mesh_boundary(zoo::ball({0, 0, 0}, 1.0, 3), 0.05);
    EXPECT_NEAR(m.total_area(), 4 * pi, 0.01 * 4 * pi);
    EXPECT_NEAR(norm(m.normal_sum()), 0.0, 1e-10);
}

TEST(Mesh, TorusArea) {
    const auto m = mesh_boundary(zoo::torus(1.0, 0.3), 0.03);
    EXPECT_NEAR(m.total_area(), 4 * pi * pi * 0.3, 0.01 * 4 * pi * pi * 0.3);
}

TEST(Mesh, CombPerimeter) {
    const auto m = mesh_boundary(make_comb(4, 0.0), 1.0 / 512.0);
    EXPECT_NEAR(m.total_area(), 9.625, 0.01 * 9.625);
}

TEST(Mesh, EmptyBoundary) {
    const ImplicitDomain everywhere([](const Vec&) { return -1.0; }, 2, Box{{-1, -1, 0}, {1, 1, 0}});
    try {
        mesh_boundary(everywhere, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyBoundary);
    }
}

TEST(Mesh, ResolutionTooCoarse) {
    // Thin slab narrower than the grid pitch: node values miss its interior entirely.
    const ImplicitDomain sliver([](const Vec& x) { return std::abs(x.x - 0.05) - 0.002; }, 2,
                                Box{{-1, -1, 0}, {1, 1, 0}}, 1.0, "sliver", true);
    try {
        mesh_boundary(sliver, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ResolutionTooCoarse);
    }
    EXPECT_NO_THROW(mesh_boundary(sliver, 0.001));
}

TEST(Mesh, ChordClipLength) {
    const auto plane = mesh_boundary(zoo::halfspace({0, -1, 0}, 0.0, 2), 0.01);
    const auto chord = clip_mesh(plane, zoo::ball({0, 0, 0}, 1.0, 2));
    EXPECT_NEAR(chord.total_area(), 2.0, 1e-3);
    for (const Facet& f : chord.facets()) EXPECT_NEAR(f.normal.y, -1.0, 1e-12);
}

TEST(Mesh, ClipDimensionMismatch) {
    const auto m = mesh_boundary(zoo::ball({}, 1.0, 2), 0.1);
    EXPECT_THROW(clip_mesh(m, zoo::ball({}, 1.0, 3)), Error);
}

TEST(Mesh, ClipPreservesTotalUnderComplement) {
    const auto circle = mesh_boundary(zoo::ball({}, 1.0, 2), 0.01);
    const auto inside = clip_mesh(circle, zoo::halfspace({1, 1, 0}, 0.2, 2));
    const auto outside = clip_mesh(circle, zoo::halfspace({-1, -1, 0}, -0.2, 2).with_band(-1e-9));
    EXPECT_NEAR(inside.total_area() + outside.total_area(), circle.total_area(), 1e-9);
}

TEST(Mesh, RandomBallsProperty) {
    Rng rng(20261016, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = trial % 2 == 0 ? 2 : 3;
        const Vec c{rng.uniform(-1, 1), rng.uniform(-1, 1), dim == 3 ? rng.uniform(-1, 1) : 0.0};
        const double r = rng.uniform(0.3, 1.0);
        const double h = dim == 2 ? r / 80.0 : r / 20.0;
        const auto m = mesh_boundary(zoo::ball(c, r, dim), h);
        const double exact = dim == 2 ? 2 * pi * r : 4 * pi * r * r;
        EXPECT_NEAR(m.total_area(), exact, (dim == 2 ? 1e-3 : 1e-2) * exact) << "trial " << trial;
        EXPECT_LT(norm(m.normal_sum()), 1e-9 * exact) << "trial " << trial;
    }
}

TEST(Curve, LengthsOfCircleAndCover) {
    EXPECT_NEAR(curve_length(circle_curve({}, 2.0)), 4 * pi, 1e-8);
    const auto cover = make_m_cover(circle_curve({}, 1.0), 10, 0.0);
    EXPECT_NEAR(curve_length(cover), 20 * pi, 1e-7);
    EXPECT_EQ(cover.winding_count, 10);
    const auto bumpy = make_m_cover(circle_curve({}, 1.0), 10, 0.01);
    EXPECT_GT(curve_length(bumpy), 20 * pi * 0.99);
    EXPECT_LT(curve_length(bumpy), 20 * pi * 1.02);
    EXPECT_THROW(make_m_cover(circle_curve({}, 1.0), 0, 0.0), Error);
}

TEST(Curve, MeshNormalsOutwardForCounterClockwise) {
    const auto m = curve_mesh(circle_curve({}, 1.0), 1000);
    EXPECT_NEAR(m.total_area(), 2 * pi, 1e-4);
    for (const Facet& f : m.facets()) EXPECT_GT(dot(f.normal, f.centroid), 0.0);
}

TEST(Curve, EllipsePerimeter) {
    // Ramanujan's second approximation, accurate to ~1e-9 relative for a/b = 2.
    const double a = 2.0, b = 1.0, hh = std::pow((a - b) / (a + b), 2);
    const double ramanujan = pi * (a + b) * (1 + 3 * hh / (10 + std::sqrt(4 - 3 * hh)));
    EXPECT_NEAR(curve_length(ellipse_curve({}, a, b)), ramanujan, 1e-6);
}
