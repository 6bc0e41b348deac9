#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxgauge/error.hpp"
#include "fluxgauge/geometry/domain.hpp"

namespace fluxgauge {

namespace sdf {

inline double ball(const Vec& p, const Vec& c, double r) { return distance(p, c) - r; }

/// Box of half extents `half` with convex edges rounded at radius rho (rho <= min half).
inline double rounded_box(const Vec& p, const Vec& c, const Vec& half, double rho, int dim) {
    double outside2 = 0.0;
    double inside = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < dim; ++i) {
        const double q = std::abs(p[i] - c[i]) - (half[i] - rho);
        if (q > 0.0) outside2 += q * q;
        inside = std::max(inside, q);
    }
    return std::sqrt(outside2) + std::min(inside, 0.0) - rho;
}

/// Signed distance to a convex polygon given counter-clockwise.
inline double convex_polygon(const Vec& p, std::span<const Vec> verts) {
    const std::size_t n = verts.size();
    double best2 = std::numeric_limits<double>::infinity();
    double max_plane = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& a = verts[i];
        const Vec& b = verts[(i + 1) % n];
        const Vec e = b - a;
        const double t = std::clamp(dot(p - a, e) / dot(e, e), 0.0, 1.0);
        const Vec d = p - (a + e * t);
        best2 = std::min(best2, dot(d, d));
        const Vec outward = normalized(Vec{e.y, -e.x, 0.0});
        max_plane = std::max(max_plane, dot(p - a, outward));
    }
    const double dist = std::sqrt(best2);
    return max_plane > 0.0 ? dist : -dist;
}

}  // namespace sdf

namespace zoo {

inline void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::BadParams, what);
}

inline Box cube_box(const Vec& c, double r, int dim) {
    Box b{c, c};
    return b.expanded(r, dim);
}

inline ImplicitDomain ball(const Vec& center, double radius, int dim = 2) {
    require(radius > 0.0, "ball radius must be positive");
    ImplicitDomain d([center, radius](const Vec& x) { return sdf::ball(x, center, radius); }, dim,
                     cube_box(center, radius, dim), 1.0, "ball", true);
    return d.with_gradient([center](const Vec& x) { return normalized(x - center); });
}

/// {x : normal . x <= offset}; `normal` is the outward normal. The box [-frame, frame]^d
/// frames the region of interest since the domain is unbounded.
inline ImplicitDomain halfspace(const Vec& normal, double offset, int dim = 2, double frame = 3.0) {
    require(norm(normal) > 0.0, "halfspace normal must be nonzero");
    require(frame > 0.0, "halfspace frame must be positive");
    const Vec n = normalized(normal);
    ImplicitDomain d([n, offset](const Vec& x) { return dot(n, x) - offset; }, dim,
                     cube_box(Vec{}, frame, dim), 1.0, "halfspace", true, false);
    return d.with_gradient([n](const Vec&) { return n; });
}

/// Annulus (d=2) or spherical shell (d=3) r_in <= |x - c| <= r_out.
inline ImplicitDomain annulus(double r_in, double r_out, int dim = 2, const Vec& center = {}) {
    require(r_in > 0.0 && r_out > r_in, "annulus needs 0 < r_in < r_out");
    const double mid = 0.5 * (r_in + r_out), half = 0.5 * (r_out - r_in);
    return ImplicitDomain(
        [=](const Vec& x) { return std::abs(distance(x, center) - mid) - half; }, dim,
        cube_box(center, r_out, dim), 1.0, "annulus", true);
}

/// Torus about the z axis with major radius R and tube radius r.
inline ImplicitDomain torus(double major, double minor, const Vec& center = {}) {
    require(minor > 0.0 && major > minor, "torus needs 0 < r < R");
    Box box{center - Vec{major + minor, major + minor, minor},
            center + Vec{major + minor, major + minor, minor}};
    return ImplicitDomain(
        [=](const Vec& x) {
            const Vec p = x - center;
            const double q = std::hypot(p.x, p.y) - major;
            return std::hypot(q, p.z) - minor;
        },
        3, box, 1.0, "torus", true);
}

/// Axis-aligned box with corners (d=2) or edges (d=3) rounded at radius rho.
inline ImplicitDomain smoothed_box(const Vec& center, const Vec& half, double rho, int dim = 2) {
    for (int i = 0; i < dim; ++i) require(half[i] > 0.0, "box half extents must be positive");
    double min_half = half.x;
    for (int i = 1; i < dim; ++i) min_half = std::min(min_half, half[i]);
    require(rho >= 0.0 && rho <= min_half, "box rounding radius must lie in [0, min half extent]");
    Box box{center - half, center + half};
    if (dim == 2) box.lo.z = box.hi.z = 0.0;
    return ImplicitDomain(
        [=](const Vec& x) { return sdf::rounded_box(x, center, half, rho, dim); }, dim, box, 1.0,
        "smoothed_box", true);
}

/// Convex polygon (d=2, counter-clockwise vertices) dilated by rho, which rounds its corners.
inline ImplicitDomain rounded_polygon(std::vector<Vec> verts, double rho) {
    require(verts.size() >= 3, "polygon needs at least three vertices");
    require(rho >= 0.0, "polygon rounding radius must be non-negative");
    double signed_area = 0.0;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const Vec& a = verts[i];
        const Vec& b = verts[(i + 1) % verts.size()];
        signed_area += a.x * b.y - a.y * b.x;
        const Vec& c = verts[(i + 2) % verts.size()];
        require(cross(b - a, c - b).z > 0.0, "polygon must be strictly convex and counter-clockwise");
    }
    require(signed_area > 0.0, "polygon must be counter-clockwise");
    Box box{verts[0], verts[0]};
    for (const Vec& v : verts)
        for (int i = 0; i < 2; ++i) {
            box.lo[i] = std::min(box.lo[i], v[i]);
            box.hi[i] = std::max(box.hi[i], v[i]);
        }
    box = box.expanded(rho, 2);
    return ImplicitDomain(
        [verts = std::move(verts), rho](const Vec& x) { return sdf::convex_polygon(x, verts) - rho; },
        2, box, 1.0, "rounded_polygon", true);
}

}  // namespace zoo

inline double default_comb_smoothing(int n) { return 1.0 / (8.0 * n * n); }

/// Comb: n teeth {i/n <= x2 <= i/n + 1/n^2} and a spine {0 <= x1 <= 1/n^2} inside [0,1]^d,
/// as a min of rounded boxes. Convex corners are rounded at rho; concave ones stay sharp.
inline ImplicitDomain make_comb(int n, double rho, int dim = 2) {
    zoo::require(n > 2, "comb needs n > 2");
    zoo::require(dim == 2 || dim == 3, "comb dimension must be 2 or 3");
    const double thick = 1.0 / (static_cast<double>(n) * n);
    zoo::require(rho >= 0.0 && rho < 0.25 * thick, "comb smoothing must satisfy 0 <= rho < 1/(4n^2)");
    const double half_thick = 0.5 * thick;
    auto level = [n, rho, dim, half_thick](const Vec& x) {
        Vec tooth_half{0.5, half_thick, 0.5};
        // All teeth share x/z extents, so the nearest tooth centre in x2 gives the minimum.
        const double k = std::floor((x.y - half_thick) * n + 0.5);
        const double i = std::clamp(k, 0.0, static_cast<double>(n - 1));
        const Vec tooth_center{0.5, i / n + half_thick, 0.5};
        const double tooth = sdf::rounded_box(x, tooth_center, tooth_half, rho, dim);
        const double spine =
            sdf::rounded_box(x, Vec{half_thick, 0.5, 0.5}, Vec{half_thick, 0.5, 0.5}, rho, dim);
        return std::min(tooth, spine);
    };
    Box box{Vec{}, dim == 3 ? Vec{1, 1, 1} : Vec{1, 1, 0}};
    return ImplicitDomain(level, dim, box, 1.0, "comb" + std::to_string(n), true);
}

/// Companion of the comb shifted by (1/(2n^2), 1/(2n^2), 0).
inline ImplicitDomain make_comb_translate(int n, double rho, int dim = 2) {
    const double s = 1.0 / (2.0 * n * n);
    return translate(make_comb(n, rho, dim), Vec{s, s, 0.0})
        .with_label("comb" + std::to_string(n) + "_translate");
}

/// Builds a zoo domain from a name and a flat parameter list (CLI/config entry point).
///   ball:      c_1..c_d, r
///   halfspace: n_1..n_d, offset [, frame]
///   annulus:   r_in, r_out [, c_1..c_d]
///   torus:     R, r                          (d = 3)
///   box:       c_1..c_d, h_1..h_d, rho
///   polygon:   rho, x_0, y_0, x_1, y_1, ...  (d = 2)
///   comb:      n [, rho]
///   comb_translate: n [, rho]
inline ImplicitDomain make_zoo(std::string_view name, std::span<const double> p, int dim) {
    using zoo::require;
    require(dim == 2 || dim == 3, "dimension must be 2 or 3");
    auto vec_at = [&](std::size_t off) {
        Vec v;
        for (int i = 0; i < dim; ++i) v[i] = p[off + i];
        return v;
    };
    const std::size_t d = static_cast<std::size_t>(dim);
    if (name == "ball") {
        require(p.size() == d + 1, "ball expects d+1 parameters");
        return zoo::ball(vec_at(0), p[d], dim);
    }
    if (name == "halfspace") {
        require(p.size() == d + 1 || p.size() == d + 2, "halfspace expects d+1 or d+2 parameters");
        return zoo::halfspace(vec_at(0), p[d], dim, p.size() == d + 2 ? p[d + 1] : 3.0);
    }
    if (name == "annulus") {
        require(p.size() == 2 || p.size() == 2 + d, "annulus expects 2 or 2+d parameters");
        return zoo::annulus(p[0], p[1], dim, p.size() == 2 ? Vec{} : vec_at(2));
    }
    if (name == "torus") {
        require(dim == 3, "torus is three-dimensional");
        require(p.size() == 2 || p.size() == 5, "torus expects 2 or 5 parameters");
        return zoo::torus(p[0], p[1], p.size() == 2 ? Vec{} : Vec{p[2], p[3], p[4]});
    }
    if (name == "box") {
        require(p.size() == 2 * d + 1, "box expects 2d+1 parameters");
        return zoo::smoothed_box(vec_at(0), vec_at(d), p[2 * d], dim);
    }
    if (name == "polygon") {
        require(dim == 2, "polygon is two-dimensional");
        require(p.size() >= 7 && p.size() % 2 == 1, "polygon expects rho followed by vertex pairs");
        std::vector<Vec> verts;
        for (std::size_t i = 1; i + 1 < p.size(); i += 2) verts.push_back(Vec{p[i], p[i + 1], 0.0});
        return zoo::rounded_polygon(std::move(verts), p[0]);
    }
    if (name == "comb" || name == "comb_translate") {
        require(p.size() == 1 || p.size() == 2, "comb expects n [, rho]");
        require(p[0] == std::floor(p[0]), "comb n must be an integer");
        const int n = static_cast<int>(p[0]);
        require(n > 2, "comb needs n > 2");
        const double rho = p.size() == 2 ? p[1] : default_comb_smoothing(n);
        return name == "comb" ? make_comb(n, rho, dim) : make_comb_translate(n, rho, dim);
    }
    throw Error(ErrorCode::BadParams, "unknown zoo domain '" + std::string(name) + "'");
}

inline ImplicitDomain make_zoo(std::string_view name, std::initializer_list<double> p, int dim) {
    return make_zoo(name, std::span<const double>(p.begin(), p.size()), dim);
}

}  // namespace fluxgauge
