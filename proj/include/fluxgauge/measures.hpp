#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fluxgauge/error.hpp"
#include "fluxgauge/geometry/domain.hpp"
#include "fluxgauge/geometry/mesh.hpp"
#include "fluxgauge/parallel.hpp"
#include "fluxgauge/summation.hpp"

namespace fluxgauge {

struct Atom {
    Vec x;
    Vec n;
    double w = 0.0;
};

/// Area-weighted distribution of (point, normal) pairs of a hypersurface.
struct EmpiricalMeasure {
    int dim = 2;
    std::vector<Atom> atoms;
    double total_weight = 0.0;
    double source_area = 0.0;

    /// mu(U x V) for predicates on position and normal.
    double measure(const std::function<bool(const Vec&)>& in_u, const std::function<bool(const Vec&)>& in_v) const {
        CompensatedSum s;
        for (const Atom& a : atoms)
            if (in_u(a.x) && in_v(a.n)) s += a.w;
        return s.value();
    }

    /// Sum of w g(x, n) over atoms.
    double integrate(const std::function<double(const Vec&, const Vec&)>& g) const {
        CompensatedSum s;
        for (const Atom& a : atoms) s += a.w * g(a.x, a.n);
        return s.value();
    }

    Vec mean_normal() const {
        CompensatedVecSum s;
        for (const Atom& a : atoms) s += a.n * a.w;
        return s.value();
    }
};

/// One atom per facet at its centroid, weighted by area / total area.
inline EmpiricalMeasure empirical_measure(const SurfaceMesh& mesh) {
    const double area = mesh.total_area();
    if (mesh.empty() || !(area > 0.0)) throw Error(ErrorCode::EmptyMesh, "empirical measure of an empty mesh");
    EmpiricalMeasure m;
    m.dim = mesh.dimension();
    m.source_area = area;
    m.atoms.reserve(mesh.size());
    CompensatedSum total;
    for (const Facet& f : mesh.facets()) {
        m.atoms.push_back({f.centroid, f.normal, f.area / area});
        total += f.area / area;
    }
    m.total_weight = total.value();
    return m;
}

/// Area of the sphere of radius r in R^d (circumference for d = 2).
inline double sphere_area(int dim, double r) {
    return dim == 2 ? 2.0 * std::numbers::pi * r : 4.0 * std::numbers::pi * r * r;
}

/// Un-normalized mean normal over the ball: sum of w n over atoms with |x - c| <= r.
inline Vec ball_mean_normal(const EmpiricalMeasure& m, const Vec& center, double r) {
    if (!(r > 0.0)) throw Error(ErrorCode::BadParams, "ball radius must be positive");
    CompensatedVecSum s;
    for (const Atom& a : m.atoms)
        if (distance(a.x, center) <= r) s += a.n * a.w;
    return s.value();
}

inline double ball_mass(const EmpiricalMeasure& m, const Vec& center, double r) {
    CompensatedSum s;
    for (const Atom& a : m.atoms)
        if (distance(a.x, center) <= r) s += a.w;
    return s.value();
}

struct BallEstimate {
    Vec center;
    Vec mean;             // un-normalized: sum of w n over the ball
    Vec normalized_mean;  // mean / mass when the ball carries mass
    double mass = 0.0;
    double magnitude = 0.0;
    double bound = 0.0;       // Area(dB) / (2 Area(source))
    double tolerance = 0.0;   // weight of facets cut by the sphere
};

struct DisintegrationEstimate {
    std::string label;
    double radius = 0.0;
    double source_area = 0.0;
    std::vector<BallEstimate> balls;

    double max_magnitude() const {
        double m = 0.0;
        for (const auto& b : balls) m = std::max(m, b.magnitude);
        return m;
    }
    bool dominated() const {
        for (const auto& b : balls)
            if (b.magnitude > b.bound + b.tolerance) return false;
        return true;
    }
};

/// Ball means over a set of centers. Facets with vertices on both sides of a sphere are
/// the only ones whose assignment is resolution dependent; their weight is the tolerance.
inline DisintegrationEstimate disintegration_estimate(const SurfaceMesh& mesh, const std::vector<Vec>& centers,
                                                      double r) {
    const EmpiricalMeasure m = empirical_measure(mesh);
    DisintegrationEstimate est;
    est.label = mesh.source_label();
    est.radius = r;
    est.source_area = m.source_area;
    est.balls.resize(centers.size());
    const double bound = sphere_area(m.dim, r) / (2.0 * m.source_area);
    for_each_chunk(centers.size(), 1, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t k = b; k < e; ++k) {
            BallEstimate& be = est.balls[k];
            be.center = centers[k];
            be.mean = ball_mean_normal(m, centers[k], r);
            be.mass = ball_mass(m, centers[k], r);
            be.magnitude = norm(be.mean);
            if (be.mass > 0.0) be.normalized_mean = be.mean / be.mass;
            be.bound = bound;
            CompensatedSum cut;
            const auto& facets = mesh.facets();
            for (std::size_t i = 0; i < facets.size(); ++i) {
                bool in = false, out = false;
                for (const Vec& p : facets[i].vertices()) (distance(p, centers[k]) <= r ? in : out) = true;
                if (in && out) cut += m.atoms[i].w;
            }
            be.tolerance = cut.value() + 1e-12;
        }
    });
    return est;
}

/// Regular grid of k^d centers in a box, cell-centred.
inline std::vector<Vec> ball_grid(const Box& box, int dim, int k) {
    std::vector<Vec> out;
    const int kz = dim == 3 ? k : 1;
    for (int iz = 0; iz < kz; ++iz)
        for (int iy = 0; iy < k; ++iy)
            for (int ix = 0; ix < k; ++ix) {
                Vec c;
                const int idx[3] = {ix, iy, iz};
                for (int a = 0; a < dim; ++a) c[a] = box.lo[a] + (idx[a] + 0.5) * (box.hi[a] - box.lo[a]) / k;
                out.push_back(c);
            }
    return out;
}

struct SurfaceLimitStudy {
    std::vector<DisintegrationEstimate> estimates;
    std::vector<double> decay_factors;  // max magnitude of element k over element k+1
    bool dominated = false;             // every ball mean within its bound
    bool bounds_decay = false;          // the bound shrinks along the sequence
    bool means_decay = false;           // the max ball mean shrinks along the sequence
};

/// Ball means for a sequence of domains with growing boundary area, meshed at the given pitches.
inline SurfaceLimitStudy surface_limit_study(const std::vector<ImplicitDomain>& domains,
                                             const std::vector<double>& resolutions, const std::vector<Vec>& centers,
                                             double r, const MeshOptions& mesh_opts = {}) {
    if (domains.empty() || centers.empty())
        throw Error(ErrorCode::BadParams, "surface limit study needs domains and ball centers");
    if (resolutions.size() != domains.size() && resolutions.size() != 1)
        throw Error(ErrorCode::BadParams, "one resolution, or one per domain");
    SurfaceLimitStudy study;
    for (std::size_t i = 0; i < domains.size(); ++i) {
        const double h = resolutions.size() == 1 ? resolutions[0] : resolutions[i];
        study.estimates.push_back(disintegration_estimate(mesh_boundary(domains[i], h, mesh_opts), centers, r));
        if (i > 0 && !(study.estimates[i].source_area > study.estimates[i - 1].source_area))
            throw Error(ErrorCode::PreconditionFailed, "surface areas must increase strictly along the sequence");
    }
    study.dominated = study.bounds_decay = study.means_decay = true;
    for (std::size_t i = 0; i < study.estimates.size(); ++i) {
        study.dominated = study.dominated && study.estimates[i].dominated();
        if (i == 0) continue;
        const auto& prev = study.estimates[i - 1];
        const auto& cur = study.estimates[i];
        study.decay_factors.push_back(cur.max_magnitude() > 0.0 ? prev.max_magnitude() / cur.max_magnitude()
                                                                : std::numeric_limits<double>::infinity());
        study.bounds_decay = study.bounds_decay && cur.balls.front().bound < prev.balls.front().bound;
        study.means_decay = study.means_decay && cur.max_magnitude() < prev.max_magnitude();
    }
    return study;
}

}  // namespace fluxgauge
