#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fluxgauge/error.hpp"
#include "fluxgauge/geometry/domain.hpp"
#include "fluxgauge/parallel.hpp"
#include "fluxgauge/summation.hpp"

namespace fluxgauge {

/// Segment (d=2) or triangle (d=3) with its measure and outward unit normal.
struct Facet {
    std::array<Vec, 3> v{};
    int nv = 0;
    double area = 0.0;
    Vec normal;
    Vec centroid;

    std::span<const Vec> vertices() const { return {v.data(), static_cast<std::size_t>(nv)}; }
};

inline Facet make_segment(const Vec& a, const Vec& b, const Vec& normal) {
    Facet f;
    f.v = {a, b, Vec{}};
    f.nv = 2;
    f.area = distance(a, b);
    f.normal = normal;
    f.centroid = (a + b) * 0.5;
    return f;
}

inline Facet make_triangle(const Vec& a, const Vec& b, const Vec& c, const Vec& normal) {
    Facet f;
    f.v = {a, b, c};
    f.nv = 3;
    f.area = 0.5 * norm(cross(b - a, c - a));
    f.normal = normal;
    f.centroid = (a + b + c) / 3.0;
    return f;
}

/// A discretized hypersurface: polyline (d=2) or triangle soup (d=3).
class SurfaceMesh {
public:
    SurfaceMesh() = default;
    SurfaceMesh(int dim, std::vector<Facet> facets, std::string label, double resolution = 0.0)
        : dim_(dim), facets_(std::move(facets)), label_(std::move(label)), resolution_(resolution) {}

    int dimension() const { return dim_; }
    const std::vector<Facet>& facets() const { return facets_; }
    std::size_t size() const { return facets_.size(); }
    bool empty() const { return facets_.empty(); }
    const std::string& source_label() const { return label_; }
    /// Grid pitch the mesh was extracted at (0 when not grid-derived).
    double resolution() const { return resolution_; }

    double total_area() const {
        CompensatedSum s;
        for (const Facet& f : facets_) s += f.area;
        return s.value();
    }

    /// Sum of area-weighted normals; vanishes for a closed surface.
    Vec normal_sum() const {
        CompensatedVecSum s;
        for (const Facet& f : facets_) s += f.normal * f.area;
        return s.value();
    }

    /// Distinct vertex positions.
    std::vector<Vec> vertices() const {
        std::vector<Vec> out;
        out.reserve(facets_.size() * static_cast<std::size_t>(dim_));
        for (const Facet& f : facets_)
            for (const Vec& p : f.vertices()) out.push_back(p);
        auto less = [](const Vec& a, const Vec& b) {
            return a.x != b.x ? a.x < b.x : (a.y != b.y ? a.y < b.y : a.z < b.z);
        };
        std::sort(out.begin(), out.end(), less);
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    int dim_ = 2;
    std::vector<Facet> facets_;
    std::string label_;
    double resolution_ = 0.0;
};

struct MeshOptions {
    /// Grid region override; defaults to the domain's bounding box.
    std::optional<Box> region;
    /// Extra margin (in grid pitches) around the region so closed boundaries stay closed.
    double margin_cells = 2.0;
    bool check_resolution = true;
    /// Hidden double crossings allowed, as a fraction of sign-changing grid edges.
    double max_hidden_fraction = 0.02;
};

namespace detail {

/// Uniform node grid with cached level values.
class LevelGrid {
public:
    LevelGrid(const ImplicitDomain& domain, double h, const Box& region) : dim_(domain.dimension()), h_(h) {
        lo_ = region.lo;
        for (int k = 0; k < 3; ++k) n_[k] = 0;
        for (int k = 0; k < dim_; ++k) {
            const double ext = region.hi[k] - region.lo[k];
            n_[k] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(ext / h - 1e-9)));
        }
        stride_[0] = 1;
        stride_[1] = n_[0] + 1;
        stride_[2] = (n_[0] + 1) * (n_[1] + 1);
        const std::size_t count = static_cast<std::size_t>(stride_[2] * (n_[2] + 1));
        values_.resize(count);
        parallel_for(count, [&](std::size_t idx) { values_[idx] = domain.level(position(idx)); });
    }

    int dim() const { return dim_; }
    double pitch() const { return h_; }
    std::int64_t cells(int axis) const { return n_[axis]; }
    std::int64_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return i * stride_[0] + j * stride_[1] + k * stride_[2];
    }
    std::int64_t stride(int axis) const { return stride_[axis]; }
    double value(std::int64_t idx) const { return values_[static_cast<std::size_t>(idx)]; }
    std::size_t node_count() const { return values_.size(); }

    Vec position(std::size_t idx) const {
        const auto i = static_cast<std::int64_t>(idx);
        const std::int64_t ix = i % stride_[1];
        const std::int64_t iy = (i / stride_[1]) % (n_[1] + 1);
        const std::int64_t iz = i / stride_[2];
        Vec p{lo_.x + static_cast<double>(ix) * h_, lo_.y + static_cast<double>(iy) * h_, 0.0};
        if (dim_ == 3) p.z = lo_.z + static_cast<double>(iz) * h_;
        return p;
    }

    /// Node indices of each Kuhn simplex of cell (i, j, k).
    template <class Fn>
    void for_each_simplex(std::int64_t i, std::int64_t j, std::int64_t k, Fn&& fn) const {
        const std::int64_t base = index(i, j, k);
        if (dim_ == 2) {
            const std::int64_t c0 = base, c1 = base + stride_[0], c2 = base + stride_[1],
                               c3 = base + stride_[0] + stride_[1];
            const std::array<std::int64_t, 4> t0{c0, c1, c3, 0}, t1{c0, c2, c3, 0};
            fn(t0);
            fn(t1);
            return;
        }
        static constexpr std::array<std::array<int, 3>, 6> perms{
            {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
        for (const auto& p : perms) {
            std::array<std::int64_t, 4> t{};
            t[0] = base;
            t[1] = t[0] + stride_[p[0]];
            t[2] = t[1] + stride_[p[1]];
            t[3] = t[2] + stride_[p[2]];
            fn(t);
        }
    }

    bool cell_is_mixed(std::int64_t i, std::int64_t j, std::int64_t k) const {
        const std::int64_t base = index(i, j, k);
        bool any_in = false, any_out = false;
        const int corners = dim_ == 2 ? 4 : 8;
        for (int c = 0; c < corners; ++c) {
            const std::int64_t idx = base + (c & 1) * stride_[0] + ((c >> 1) & 1) * stride_[1] +
                                     ((c >> 2) & 1) * stride_[2];
            (value(idx) <= 0.0 ? any_in : any_out) = true;
        }
        return any_in && any_out;
    }

    /// Zero crossing on grid edge (a, b), computed in canonical node order so that
    /// neighbouring simplices produce bitwise identical points.
    Vec crossing(std::int64_t a, std::int64_t b) const {
        if (a > b) std::swap(a, b);
        const double fa = value(a), fb = value(b);
        const double t = fa / (fa - fb);
        return lerp(position(static_cast<std::size_t>(a)), position(static_cast<std::size_t>(b)), t);
    }

private:
    int dim_;
    double h_;
    Vec lo_;
    std::array<std::int64_t, 3> n_{};
    std::array<std::int64_t, 3> stride_{};
    std::vector<double> values_;
};

inline Vec oriented(Vec n, const Vec& toward) { return dot(n, toward) < 0.0 ? -n : n; }

/// Emits the zero-set facets of the linear interpolant on one simplex.
inline void emit_simplex(const LevelGrid& g, const std::array<std::int64_t, 4>& s,
                         std::vector<Facet>& out, double min_area) {
    const int nv = g.dim() + 1;
    std::array<int, 4> in{}, outside{};
    int n_in = 0, n_out = 0;
    for (int q = 0; q < nv; ++q) {
        if (g.value(s[q]) <= 0.0)
            in[n_in++] = q;
        else
            outside[n_out++] = q;
    }
    if (n_in == 0 || n_out == 0) return;
    Vec out_mean;
    for (int q = 0; q < n_out; ++q) out_mean += g.position(static_cast<std::size_t>(s[outside[q]]));
    out_mean = out_mean / n_out;

    if (g.dim() == 2) {
        const int lone = n_in == 1 ? in[0] : outside[0];
        std::array<int, 2> others{};
        int m = 0;
        for (int q = 0; q < 3; ++q)
            if (q != lone) others[m++] = q;
        const Vec a = g.crossing(s[lone], s[others[0]]);
        const Vec b = g.crossing(s[lone], s[others[1]]);
        const double len = distance(a, b);
        if (len <= min_area) return;
        const Vec n = oriented(normalized(perp(b - a)), out_mean - a);
        out.push_back(make_segment(a, b, n));
        return;
    }

    auto push_tri = [&](const Vec& a, const Vec& b, const Vec& c) {
        const Vec cr = cross(b - a, c - a);
        const double area = 0.5 * norm(cr);
        if (area <= min_area) return;
        const Vec n = oriented(cr / (2.0 * area), out_mean - (a + b + c) / 3.0);
        out.push_back(make_triangle(a, b, c, n));
    };
    if (n_in == 1 || n_out == 1) {
        const int lone = n_in == 1 ? in[0] : outside[0];
        std::array<Vec, 3> p{};
        int m = 0;
        for (int q = 0; q < 4; ++q)
            if (q != lone) p[m++] = g.crossing(s[lone], s[q]);
        push_tri(p[0], p[1], p[2]);
        return;
    }
    // Two inside (a, b), two outside (c, d): quad p_ac, p_bc, p_bd, p_ad.
    const auto a = s[in[0]], b = s[in[1]], c = s[outside[0]], d = s[outside[1]];
    const Vec pac = g.crossing(a, c), pbc = g.crossing(b, c), pbd = g.crossing(b, d),
              pad = g.crossing(a, d);
    push_tri(pac, pbc, pbd);
    push_tri(pac, pbd, pad);
}

}  // namespace detail

/// Piecewise-linear boundary extraction on a uniform grid of pitch h.
///
/// Each grid cell is split into Kuhn simplices (2 triangles or 6 tetrahedra) and the
/// zero set of the linear interpolant is emitted per simplex (marching triangles /
/// marching tetrahedra), giving a consistently oriented closed mesh with no
/// ambiguous cases. Normals point toward {phi > 0}.
inline SurfaceMesh mesh_boundary(const ImplicitDomain& domain, double h, const MeshOptions& opts = {}) {
    if (!(h > 0.0)) throw Error(ErrorCode::BadParams, "resolution must be positive");
    const int dim = domain.dimension();
    Box region = opts.region.value_or(domain.bounding_box());
    if (domain.bounded() || opts.region) region = region.expanded(opts.margin_cells * h, dim);
    for (int k = 0; k < dim; ++k)
        if (!std::isfinite(region.lo[k]) || !std::isfinite(region.hi[k]) || region.hi[k] <= region.lo[k])
            throw Error(ErrorCode::BadParams, "meshing region must be a finite nonempty box");

    const detail::LevelGrid grid(domain, h, region);
    const std::int64_t nz = dim == 3 ? grid.cells(2) : 1;
    const double min_area = 1e-12 * std::pow(h, dim - 1);

    // Hidden double crossings: same-sign grid edges that the Lipschitz bound cannot rule out.
    std::size_t crossings = 0, hidden = 0;
    if (opts.check_resolution) {
        const double lip_h = domain.lipschitz_hint() * h;
        for (std::size_t idx = 0; idx < grid.node_count(); ++idx) {
            const Vec p = grid.position(idx);
            const auto i = static_cast<std::int64_t>(idx);
            const std::array<std::int64_t, 3> coord{i % grid.stride(1), (i / grid.stride(1)) % (grid.cells(1) + 1),
                                                    dim == 3 ? i / grid.stride(2) : 0};
            for (int axis = 0; axis < dim; ++axis) {
                if (coord[axis] >= grid.cells(axis)) continue;
                const std::int64_t nb = i + grid.stride(axis);
                const double fa = grid.value(i), fb = grid.value(nb);
                const bool ia = fa <= 0.0, ib = fb <= 0.0;
                if (ia != ib) {
                    ++crossings;
                } else if (std::abs(fa) + std::abs(fb) <= lip_h) {
                    Vec mid = p;
                    mid[axis] += 0.5 * h;
                    if ((domain.level(mid) <= 0.0) != ia) ++hidden;
                }
            }
        }
        if (static_cast<double>(hidden) > opts.max_hidden_fraction * static_cast<double>(crossings))
            throw Error(ErrorCode::ResolutionTooCoarse,
                        std::to_string(hidden) + " hidden double crossings against " +
                            std::to_string(crossings) + " resolved crossings at h=" + std::to_string(h) +
                            " for " + domain.label());
    }

    // Slabs along the last axis are processed independently and concatenated in order.
    const std::int64_t slabs = dim == 3 ? nz : grid.cells(1);
    std::vector<std::vector<Facet>> per_slab(static_cast<std::size_t>(slabs));
    for_each_chunk(static_cast<std::size_t>(slabs), 1, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t slab = b; slab < e; ++slab) {
            auto& out = per_slab[slab];
            const auto s = static_cast<std::int64_t>(slab);
            const std::int64_t j_lo = dim == 3 ? 0 : s, j_hi = dim == 3 ? grid.cells(1) : s + 1;
            const std::int64_t k = dim == 3 ? s : 0;
            for (std::int64_t j = j_lo; j < j_hi; ++j)
                for (std::int64_t i = 0; i < grid.cells(0); ++i) {
                    if (!grid.cell_is_mixed(i, j, k)) continue;
                    grid.for_each_simplex(i, j, k, [&](const std::array<std::int64_t, 4>& simplex) {
                        detail::emit_simplex(grid, simplex, out, min_area);
                    });
                }
        }
    });
    std::vector<Facet> facets;
    for (auto& v : per_slab) facets.insert(facets.end(), v.begin(), v.end());
    if (facets.empty()) {
        if (hidden > 0)
            throw Error(ErrorCode::ResolutionTooCoarse, "boundary of " + domain.label() +
                                                            " falls between grid nodes at h=" + std::to_string(h));
        throw Error(ErrorCode::EmptyBoundary, "no sign change of the level function for " + domain.label());
    }
    return SurfaceMesh(dim, std::move(facets), domain.label(), h);
}

namespace detail {

inline void clip_facet(const Facet& f, const ImplicitDomain& clip, int depth, std::vector<Facet>& out) {
    bool any_in = false, any_out = false;
    for (const Vec& p : f.vertices()) (clip.contains(p) ? any_in : any_out) = true;
    if (depth == 0 || !(any_in && any_out)) {
        if (clip.contains(f.centroid)) out.push_back(f);
        return;
    }
    if (f.nv == 2) {
        const Vec m = (f.v[0] + f.v[1]) * 0.5;
        Facet a = make_segment(f.v[0], m, f.normal), b = make_segment(m, f.v[1], f.normal);
        a.area = b.area = 0.5 * f.area;
        clip_facet(a, clip, depth - 1, out);
        clip_facet(b, clip, depth - 1, out);
        return;
    }
    const Vec m01 = (f.v[0] + f.v[1]) * 0.5, m12 = (f.v[1] + f.v[2]) * 0.5, m20 = (f.v[2] + f.v[0]) * 0.5;
    std::array<Facet, 4> kids{make_triangle(f.v[0], m01, m20, f.normal), make_triangle(m01, f.v[1], m12, f.normal),
                              make_triangle(m20, m12, f.v[2], f.normal), make_triangle(m01, m12, m20, f.normal)};
    for (Facet& k : kids) {
        k.area = 0.25 * f.area;
        clip_facet(k, clip, depth - 1, out);
    }
}

}  // namespace detail

/// Facets of `surface` lying in the closed domain `clip`.
///
/// Facets whose vertices straddle the clip boundary are bisected (segments) or split
/// into four (triangles) up to `refine_depth` times, then kept by centroid.
inline SurfaceMesh clip_mesh(const SurfaceMesh& surface, const ImplicitDomain& clip, int refine_depth = 8) {
    if (surface.dimension() != clip.dimension())
        throw Error(ErrorCode::DimensionMismatch, "surface and clip domain differ in dimension");
    if (refine_depth < 0) throw Error(ErrorCode::BadParams, "refine depth must be non-negative");
    const auto& src = surface.facets();
    std::vector<std::vector<Facet>> parts((src.size() + 1023) / 1024);
    for_each_chunk(src.size(), 1024, [&](std::size_t b, std::size_t e, std::size_t c) {
        for (std::size_t i = b; i < e; ++i) detail::clip_facet(src[i], clip, refine_depth, parts[c]);
    });
    std::vector<Facet> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return SurfaceMesh(surface.dimension(), std::move(out), surface.source_label() + "&" + clip.label(),
                       surface.resolution());
}

/// Polyline through `points` with right-hand normals (outward for counter-clockwise curves).
inline SurfaceMesh polyline_mesh(std::span<const Vec> points, bool closed, std::string label) {
    std::vector<Facet> facets;
    const std::size_t n = points.size();
    const std::size_t segs = closed ? n : (n == 0 ? 0 : n - 1);
    facets.reserve(segs);
    for (std::size_t i = 0; i < segs; ++i) {
        const Vec& a = points[i];
        const Vec& b = points[(i + 1) % n];
        const Vec t = b - a;
        if (norm(t) == 0.0) continue;
        facets.push_back(make_segment(a, b, normalized(Vec{t.y, -t.x, 0.0})));
    }
    return SurfaceMesh(2, std::move(facets), std::move(label));
}

}  // namespace fluxgauge
