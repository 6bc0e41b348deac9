#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "fluxgauge/error.hpp"
#include "fluxgauge/fields.hpp"
#include "fluxgauge/geometry/domain.hpp"
#include "fluxgauge/geometry/mesh.hpp"
#include "fluxgauge/parallel.hpp"
#include "fluxgauge/random.hpp"
#include "fluxgauge/summation.hpp"

namespace fluxgauge {

enum class QuadratureMethod { MeshMidpoint, GridSimplex, McOracle };

constexpr std::string_view to_string(QuadratureMethod m) {
    switch (m) {
        case QuadratureMethod::MeshMidpoint: return "MESH_MIDPOINT";
        case QuadratureMethod::GridSimplex: return "GRID_SIMPLEX";
        case QuadratureMethod::McOracle: return "MC_ORACLE";
    }
    return "UNKNOWN";
}

struct QuadratureResult {
    double value = 0.0;
    Vec vector_value;             // populated for vector-valued integrals
    bool vector_valued = false;
    double error_estimate = 0.0;  // Richardson difference or Monte Carlo standard error
    double resolution = 0.0;
    std::uint64_t sample_count = 0;
    std::uint64_t seed = 0;
    QuadratureMethod method = QuadratureMethod::MeshMidpoint;
};

/// Midpoint rule: sum of area_i * f(centroid_i) . n_i.
inline QuadratureResult surface_flux(const SurfaceMesh& mesh, const VectorField& field) {
    if (mesh.dimension() != field.dimension())
        throw Error(ErrorCode::DimensionMismatch, "mesh and field differ in dimension");
    const auto& facets = mesh.facets();
    std::vector<CompensatedSum> parts((facets.size() + 4095) / 4096);
    for_each_chunk(facets.size(), 4096, [&](std::size_t b, std::size_t e, std::size_t c) {
        for (std::size_t i = b; i < e; ++i)
            parts[c] += facets[i].area * dot(field(facets[i].centroid), facets[i].normal);
    });
    CompensatedSum total;
    for (const auto& p : parts) total += p;
    QuadratureResult r;
    r.value = total.value();
    r.resolution = mesh.resolution();
    r.sample_count = facets.size();
    return r;
}

/// Flux on `fine` with the difference to the coarser mesh as error estimate.
inline QuadratureResult surface_flux(const SurfaceMesh& fine, const SurfaceMesh& coarse, const VectorField& field) {
    QuadratureResult r = surface_flux(fine, field);
    r.error_estimate = std::abs(r.value - surface_flux(coarse, field).value);
    return r;
}

inline QuadratureResult normal_integral(const SurfaceMesh& mesh) {
    QuadratureResult r;
    r.vector_valued = true;
    r.vector_value = mesh.normal_sum();
    r.value = norm(r.vector_value);
    r.resolution = mesh.resolution();
    r.sample_count = mesh.size();
    return r;
}

inline QuadratureResult normal_integral(const SurfaceMesh& fine, const SurfaceMesh& coarse) {
    QuadratureResult r = normal_integral(fine);
    r.error_estimate = norm(r.vector_value - coarse.normal_sum());
    return r;
}

namespace detail {

using Integrand = std::function<double(const Vec&)>;

inline double simplex_measure(const std::array<Vec, 4>& p, int dim) {
    if (dim == 2) return 0.5 * std::abs(cross(p[1] - p[0], p[2] - p[0]).z);
    return std::abs(dot(p[1] - p[0], cross(p[2] - p[0], p[3] - p[0]))) / 6.0;
}

inline Vec simplex_centroid(const std::array<Vec, 4>& p, int dim) {
    Vec c;
    for (int i = 0; i <= dim; ++i) c += p[i];
    return c / (dim + 1);
}

/// Centroid-rule integral over the part of one simplex where the linear interpolant is <= 0.
/// `crossing(a, b)` returns the zero of the interpolant on edge (a, b).
template <class Crossing>
double clipped_simplex_integral(const std::array<Vec, 4>& p, const std::array<double, 4>& f, int dim,
                                const Integrand& g, Crossing&& crossing) {
    const int nv = dim + 1;
    std::array<int, 4> in{}, out{};
    int n_in = 0, n_out = 0;
    for (int q = 0; q < nv; ++q) (f[q] <= 0.0 ? in[n_in++] : out[n_out++]) = q;
    double acc = 0.0;
    auto piece = [&](const Vec& a, const Vec& b, const Vec& c, const Vec& d = Vec{}) {
        const std::array<Vec, 4> s{a, b, c, d};
        const double m = simplex_measure(s, dim);
        if (m > 0.0) acc += m * g(simplex_centroid(s, dim));
    };
    if (n_out == 0) {
        piece(p[0], p[1], p[2], p[3]);
        return acc;
    }
    if (n_in == 0) return 0.0;
    auto X = [&](int a, int b) { return crossing(a, b); };
    if (dim == 2) {
        if (n_in == 1) {
            const int a = in[0];
            piece(p[a], X(a, out[0]), X(a, out[1]));
        } else {
            const int a = in[0], b = in[1], c = out[0];
            const Vec pac = X(a, c), pbc = X(b, c);
            piece(p[a], p[b], pbc);
            piece(p[a], pbc, pac);
        }
        return acc;
    }
    if (n_in == 1) {
        const int a = in[0];
        piece(p[a], X(a, out[0]), X(a, out[1]), X(a, out[2]));
    } else if (n_in == 3) {
        const int a = in[0], b = in[1], c = in[2], d = out[0];
        const Vec pad = X(a, d), pbd = X(b, d), pcd = X(c, d);
        piece(p[a], p[b], p[c], pcd);
        piece(p[a], p[b], pcd, pbd);
        piece(p[a], pad, pbd, pcd);
    } else {
        const int a = in[0], b = in[1], c = out[0], d = out[1];
        const Vec pac = X(a, c), pad = X(a, d), pbc = X(b, c), pbd = X(b, d);
        piece(p[a], p[b], pbc, pbd);
        piece(p[a], pac, pbc, pbd);
        piece(p[a], pac, pbd, pad);
    }
    return acc;
}

/// Integral of g over {phi <= 0} on a grid of pitch h: midpoint rule on interior cells,
/// exact clipping of the piecewise-linear interpolant on boundary cells. The region
/// integrated is exactly the one enclosed by mesh_boundary at the same pitch.
inline double integrate_over_domain(const ImplicitDomain& domain, double h, const Integrand& g) {
    if (!(h > 0.0)) throw Error(ErrorCode::BadParams, "resolution must be positive");
    const int dim = domain.dimension();
    Box region = domain.bounding_box();
    if (domain.bounded()) region = region.expanded(2.0 * h, dim);
    const LevelGrid grid(domain, h, region);
    const std::int64_t slabs = dim == 3 ? grid.cells(2) : grid.cells(1);
    std::vector<CompensatedSum> parts(static_cast<std::size_t>(slabs));
    const double cell_measure = std::pow(h, dim);
    const int corners = dim == 2 ? 4 : 8;
    for_each_chunk(static_cast<std::size_t>(slabs), 1, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t slab = b; slab < e; ++slab) {
            const auto s = static_cast<std::int64_t>(slab);
            const std::int64_t j_lo = dim == 3 ? 0 : s, j_hi = dim == 3 ? grid.cells(1) : s + 1;
            const std::int64_t k = dim == 3 ? s : 0;
            for (std::int64_t j = j_lo; j < j_hi; ++j)
                for (std::int64_t i = 0; i < grid.cells(0); ++i) {
                    const std::int64_t base = grid.index(i, j, k);
                    int n_in = 0;
                    for (int c = 0; c < corners; ++c) {
                        const std::int64_t idx = base + (c & 1) * grid.stride(0) +
                                                 ((c >> 1) & 1) * grid.stride(1) + ((c >> 2) & 1) * grid.stride(2);
                        n_in += grid.value(idx) <= 0.0;
                    }
                    if (n_in == 0) continue;
                    if (n_in == corners) {
                        Vec mid = grid.position(static_cast<std::size_t>(base));
                        for (int a = 0; a < dim; ++a) mid[a] += 0.5 * h;
                        parts[slab] += cell_measure * g(mid);
                        continue;
                    }
                    grid.for_each_simplex(i, j, k, [&](const std::array<std::int64_t, 4>& sx) {
                        std::array<Vec, 4> p{};
                        std::array<double, 4> f{};
                        for (int q = 0; q <= dim; ++q) {
                            p[q] = grid.position(static_cast<std::size_t>(sx[q]));
                            f[q] = grid.value(sx[q]);
                        }
                        parts[slab] += clipped_simplex_integral(
                            p, f, dim, g, [&](int a, int b) { return grid.crossing(sx[a], sx[b]); });
                    });
                }
        }
    });
    CompensatedSum total;
    for (const auto& p : parts) total += p;
    return total.value();
}

}  // namespace detail

/// Vol(D) on a grid of pitch h.
inline QuadratureResult volume(const ImplicitDomain& domain, double h) {
    QuadratureResult r;
    r.value = detail::integrate_over_domain(domain, h, [](const Vec&) { return 1.0; });
    r.resolution = h;
    r.method = QuadratureMethod::GridSimplex;
    return r;
}

/// Vol(D) at pitch h with |V_h - V_2h| as error estimate.
inline QuadratureResult volume_refined(const ImplicitDomain& domain, double h) {
    QuadratureResult r = volume(domain, h);
    r.error_estimate = std::abs(r.value - volume(domain, 2.0 * h).value);
    return r;
}

/// Integral of div f over D on a grid of pitch h.
inline QuadratureResult divergence_volume_integral(const ImplicitDomain& domain, const VectorField& field,
                                                   double h) {
    if (domain.dimension() != field.dimension())
        throw Error(ErrorCode::DimensionMismatch, "field and domain differ in dimension");
    QuadratureResult r;
    r.value = detail::integrate_over_domain(domain, h, [&](const Vec& x) { return field.divergence(x); });
    r.resolution = h;
    r.method = QuadratureMethod::GridSimplex;
    return r;
}

inline QuadratureResult divergence_volume_integral_refined(const ImplicitDomain& domain, const VectorField& field,
                                                           double h) {
    QuadratureResult r = divergence_volume_integral(domain, field, h);
    r.error_estimate = std::abs(r.value - divergence_volume_integral(domain, field, 2.0 * h).value);
    return r;
}

/// Monte Carlo estimate of the flux of f through the part of dD1 inside D2.
///
/// Uniform samples in the box of D2 are kept on the shell |phi1| <= w; by the coarea
/// formula E[V/(2w) * 1_shell * 1_{D2} * f . grad phi1] converges to the surface integral
/// with normal grad phi1 / |grad phi1| as w -> 0. Reports the standard error.
inline QuadratureResult mc_flux_oracle(const ImplicitDomain& d1, const ImplicitDomain& d2, const VectorField& field,
                                       std::uint64_t samples, std::uint64_t seed, double shell_halfwidth) {
    if (samples < 1000) throw Error(ErrorCode::BadParams, "oracle needs at least 1000 samples");
    if (!(shell_halfwidth > 0.0)) throw Error(ErrorCode::BadParams, "shell half-width must be positive");
    const int dim = d1.dimension();
    if (d2.dimension() != dim || field.dimension() != dim)
        throw Error(ErrorCode::DimensionMismatch, "oracle inputs differ in dimension");
    QuadratureResult r;
    r.method = QuadratureMethod::McOracle;
    r.sample_count = samples;
    r.seed = seed;
    r.resolution = shell_halfwidth;
    Box box = d2.bounding_box();
    if (d1.bounded()) box = intersect(box, d1.bounding_box().expanded(shell_halfwidth, dim), dim);
    if (is_empty(box, dim)) return r;
    const double scale = box.volume(dim) / (2.0 * shell_halfwidth);

    constexpr std::uint64_t batch = 1 << 15;
    const std::size_t batches = static_cast<std::size_t>((samples + batch - 1) / batch);
    std::vector<CompensatedSum> s1(batches), s2(batches);
    std::vector<int> degenerate(batches, 0);
    for_each_chunk(batches, 1, [&](std::size_t b, std::size_t, std::size_t) {
        Rng rng(seed, b);
        const std::uint64_t n = std::min<std::uint64_t>(batch, samples - b * batch);
        for (std::uint64_t i = 0; i < n; ++i) {
            Vec x;
            for (int k = 0; k < dim; ++k) x[k] = rng.uniform(box.lo[k], box.hi[k]);
            if (std::abs(d1.level(x)) > shell_halfwidth || !d2.contains(x)) continue;
            const Vec grad = d1.gradient(x);
            if (norm(grad) < 1e-8) {
                degenerate[b] = 1;
                continue;
            }
            const double v = scale * dot(field(x), grad);
            s1[b] += v;
            s2[b] += v * v;
        }
    });
    for (int d : degenerate)
        if (d) throw Error(ErrorCode::DegenerateGradient, "|grad phi1| < 1e-8 at an accepted oracle sample");
    CompensatedSum sum, sum2;
    for (std::size_t b = 0; b < batches; ++b) {
        sum += s1[b];
        sum2 += s2[b];
    }
    const double n = static_cast<double>(samples);
    const double mean = sum.value() / n;
    const double var = std::max(0.0, sum2.value() / n - mean * mean);
    r.value = mean;
    r.error_estimate = std::sqrt(var / (n - 1.0));
    return r;
}

}  // namespace fluxgauge
