#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fluxgauge/error.hpp"
#include "fluxgauge/fields.hpp"
#include "fluxgauge/geometry/domain.hpp"
#include "fluxgauge/geometry/mesh.hpp"
#include "fluxgauge/quadrature.hpp"
#include "fluxgauge/random.hpp"

namespace fluxgauge {

enum class InequalityId {
    Thm1,
    Thm2,
    Cor3,
    Thm4Claimed,
    Thm4ProofDerived,
    GeneralEq5,
    LemmaVdotnClaimed,
    LemmaVdotnProofDerived,
    MeasureLemma,
    DivTheorem,
    Cor2d,
    MinimalSetProbe,
};

constexpr std::string_view to_string(InequalityId id) {
    switch (id) {
        case InequalityId::Thm1: return "THM1";
        case InequalityId::Thm2: return "THM2";
        case InequalityId::Cor3: return "COR3";
        case InequalityId::Thm4Claimed: return "THM4_CLAIMED";
        case InequalityId::Thm4ProofDerived: return "THM4_PROOF_DERIVED";
        case InequalityId::GeneralEq5: return "GENERAL_EQ5";
        case InequalityId::LemmaVdotnClaimed: return "LEMMA_VDOTN_CLAIMED";
        case InequalityId::LemmaVdotnProofDerived: return "LEMMA_VDOTN_PROOF_DERIVED";
        case InequalityId::MeasureLemma: return "MEASURE_LEMMA";
        case InequalityId::DivTheorem: return "DIV_THEOREM";
        case InequalityId::Cor2d: return "COR2D";
        case InequalityId::MinimalSetProbe: return "MINIMAL_SET_PROBE";
    }
    return "UNKNOWN";
}

/// Inequalities with a complete argument behind them. Both convex-bound variants of the
/// theorem are probes; only the lemma's proof-derived form is established.
constexpr bool is_proven(InequalityId id) {
    switch (id) {
        case InequalityId::Thm1:
        case InequalityId::Thm2:
        case InequalityId::Cor3:
        case InequalityId::GeneralEq5:
        case InequalityId::MeasureLemma:
        case InequalityId::DivTheorem:
        case InequalityId::Cor2d:
        case InequalityId::LemmaVdotnProofDerived: return true;
        default: return false;
    }
}

enum class Verdict { Holds, Violated, Inconclusive };

constexpr std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Holds: return "HOLDS";
        case Verdict::Violated: return "VIOLATED";
        case Verdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "UNKNOWN";
}

inline constexpr std::string_view kNotARegularDomain = "NOT_A_REGULAR_DOMAIN";
inline constexpr std::string_view kEmptyClip = "EMPTY_CLIP";

struct Ingredient {
    std::string name;
    double value = 0.0;
    double error = 0.0;
    std::string provenance;  // "analytic", "mesh h=...", "samples=..."
};

struct BoundReport {
    InequalityId id = InequalityId::Thm1;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    double combined_error = 0.0;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<Ingredient> ingredients;
    std::vector<std::string> flags;
    std::string config_id;
    std::uint64_t seed = 0;
    double resolution = 0.0;

    bool has_flag(std::string_view f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
    const Ingredient* ingredient(std::string_view name) const {
        for (const auto& i : ingredients)
            if (i.name == name) return &i;
        return nullptr;
    }
    /// True when this report is a violation of a proven bound on a regular domain.
    bool proven_violation() const {
        return verdict == Verdict::Violated && is_proven(id) && !has_flag(kNotARegularDomain);
    }
};

inline Verdict decide(double lhs, double rhs, double tolerance, double combined_error) {
    if (lhs <= rhs + tolerance) return Verdict::Holds;
    if (lhs > rhs + 3.0 * combined_error) return Verdict::Violated;
    return Verdict::Inconclusive;
}

/// Fills slack, tolerance and verdict from lhs/rhs and their error estimates.
inline void finalize(BoundReport& r, double lhs_error, double rhs_error) {
    r.slack = r.rhs - r.lhs;
    r.combined_error = lhs_error + rhs_error;
    r.tolerance = 3.0 * r.combined_error + 1e-9 * std::abs(r.rhs);
    r.verdict = decide(r.lhs, r.rhs, r.tolerance, r.combined_error);
}

inline std::string mesh_provenance(double h) { return "mesh h=" + std::to_string(h); }

struct QuadOptions {
    double h = 0.01;          // pitch for the boundary meshes
    double volume_h = 0.0;    // pitch for volume integrals, 0 means h
    bool richardson = true;   // error estimates from a second pass at 2h
    std::size_t sup_samples = 20000;
    std::uint64_t seed = 1;
    int clip_depth = 8;
    MeshOptions mesh;

    double vol_h() const { return volume_h > 0.0 ? volume_h : h; }
};

/// Lazily computed geometry shared by the checks on one (D1, D2) pair.
class PairContext {
public:
    PairContext(ImplicitDomain d1, ImplicitDomain d2, QuadOptions opts)
        : d1_(std::move(d1)), d2_(std::move(d2)), opts_(std::move(opts)) {
        if (d1_.dimension() != d2_.dimension())
            throw Error(ErrorCode::DimensionMismatch, "D1 and D2 differ in dimension");
    }

    const ImplicitDomain& d1() const { return d1_; }
    const ImplicitDomain& d2() const { return d2_; }
    const QuadOptions& options() const { return opts_; }
    int dimension() const { return d1_.dimension(); }

    /// Mesh of dD1 clipped to D2 at pitch h (coarse: 2h).
    const SurfaceMesh& clipped(bool coarse = false) {
        auto& slot = coarse ? clipped_coarse_ : clipped_fine_;
        if (!slot) slot = build_clip(coarse ? 2.0 * opts_.h : opts_.h);
        return *slot;
    }
    bool clip_empty() { return clipped().empty(); }

    const SurfaceMesh& boundary2(bool coarse = false) {
        auto& slot = coarse ? boundary_coarse_ : boundary_fine_;
        if (!slot) slot = mesh_boundary(d2_, coarse ? 2.0 * opts_.h : opts_.h, opts_.mesh);
        return *slot;
    }

    const QuadratureResult& area2() {
        if (!area_) {
            QuadratureResult r;
            r.value = boundary2().total_area();
            r.resolution = opts_.h;
            if (opts_.richardson) r.error_estimate = std::abs(r.value - boundary2(true).total_area());
            area_ = r;
        }
        return *area_;
    }

    const QuadratureResult& volume2() {
        if (!volume_) volume_ = opts_.richardson ? volume_refined(d2_, opts_.vol_h()) : volume(d2_, opts_.vol_h());
        return *volume_;
    }

    QuadratureResult clipped_flux(const VectorField& f) {
        QuadratureResult r = surface_flux(clipped(), f);
        if (opts_.richardson) r.error_estimate = std::abs(r.value - surface_flux(clipped(true), f).value);
        return r;
    }

    QuadratureResult clipped_normal() {
        QuadratureResult r = normal_integral(clipped());
        if (opts_.richardson) r.error_estimate = norm(r.vector_value - clipped(true).normal_sum());
        return r;
    }

    QuadratureResult boundary2_flux(const VectorField& f) {
        QuadratureResult r = surface_flux(boundary2(), f);
        if (opts_.richardson) r.error_estimate = std::abs(r.value - surface_flux(boundary2(true), f).value);
        return r;
    }

    QuadratureResult divergence_integral2(const VectorField& f) {
        return opts_.richardson ? divergence_volume_integral_refined(d2_, f, opts_.vol_h())
                                : divergence_volume_integral(d2_, f, opts_.vol_h());
    }

    /// max(analytic hint, sampled interior max, max over dD2 mesh vertices).
    SupNorms sup(const VectorField& f) {
        if (!boundary_vertices_) boundary_vertices_ = boundary2().vertices();
        SupNorms s = sup_norms(f, d2_, opts_.sup_samples, opts_.seed, *boundary_vertices_);
        if (f.sup_norm_hint()) s.field = std::max(s.field, *f.sup_norm_hint());
        if (f.div_sup_norm_hint()) s.divergence = std::max(s.divergence, *f.div_sup_norm_hint());
        return s;
    }

private:
    SurfaceMesh build_clip(double h) const {
        const int dim = dimension();
        MeshOptions mo = opts_.mesh;
        Box region = d2_.bounding_box().expanded(2.0 * h, dim);
        if (d1_.bounded() || !d2_.bounded())
            region = intersect(region, d1_.bounding_box().expanded(2.0 * h, dim), dim);
        if (is_empty(region, dim)) return SurfaceMesh(dim, {}, d1_.label(), h);
        mo.region = region;
        try {
            return clip_mesh(mesh_boundary(d1_, h, mo), d2_, opts_.clip_depth);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::EmptyBoundary) return SurfaceMesh(dim, {}, d1_.label(), h);
            throw;
        }
    }

    ImplicitDomain d1_, d2_;
    QuadOptions opts_;
    std::optional<SurfaceMesh> clipped_fine_, clipped_coarse_, boundary_fine_, boundary_coarse_;
    std::optional<QuadratureResult> area_, volume_;
    std::optional<std::vector<Vec>> boundary_vertices_;
};

namespace detail {

inline BoundReport start_report(InequalityId id, PairContext& ctx) {
    BoundReport r;
    r.id = id;
    r.seed = ctx.options().seed;
    r.resolution = ctx.options().h;
    r.config_id = ctx.d1().label() + "|" + ctx.d2().label();
    if (ctx.clip_empty()) r.flags.emplace_back(kEmptyClip);
    return r;
}

inline void add_sup_ingredients(BoundReport& r, const SupNorms& s, const VectorField& f, std::size_t samples) {
    r.ingredients.push_back({"sup_f", s.field, 0.0,
                             f.sup_norm_hint() ? "analytic+samples=" + std::to_string(samples)
                                               : "samples=" + std::to_string(samples)});
    r.ingredients.push_back({"sup_div_f", s.divergence, 0.0,
                             f.div_sup_norm_hint() ? "analytic+samples=" + std::to_string(samples)
                                                   : "samples=" + std::to_string(samples)});
}

}  // namespace detail

/// |flux of f through dD1 inside D2| <= Area(dD2) |f|_inf + Vol(D2) |div f|_inf.
inline BoundReport check_thm1(PairContext& ctx, const VectorField& f) {
    BoundReport r = detail::start_report(InequalityId::Thm1, ctx);
    const auto flux = ctx.clipped_flux(f);
    const auto& area = ctx.area2();
    const auto& vol = ctx.volume2();
    const SupNorms s = ctx.sup(f);
    r.lhs = std::abs(flux.value);
    r.rhs = area.value * s.field + vol.value * s.divergence;
    const std::string mp = mesh_provenance(ctx.options().h);
    r.ingredients.push_back({"flux", flux.value, flux.error_estimate, mp});
    r.ingredients.push_back({"area_dD2", area.value, area.error_estimate, mp});
    r.ingredients.push_back({"vol_D2", vol.value, vol.error_estimate, "grid h=" + std::to_string(ctx.options().vol_h())});
    detail::add_sup_ingredients(r, s, f, ctx.options().sup_samples);
    finalize(r, flux.error_estimate, area.error_estimate * s.field + vol.error_estimate * s.divergence);
    return r;
}

/// Divergence-free fields: |flux| <= Area(dD2) |f|_inf / 2.
inline BoundReport check_thm2(PairContext& ctx, const VectorField& f) {
    const SupNorms s = ctx.sup(f);
    if (s.divergence > 1e-6)
        throw Error(ErrorCode::NotDivergenceFree,
                    f.label() + ": sampled |div f| = " + std::to_string(s.divergence) + " exceeds 1e-6");
    BoundReport r = detail::start_report(InequalityId::Thm2, ctx);
    const auto flux = ctx.clipped_flux(f);
    const auto& area = ctx.area2();
    r.lhs = std::abs(flux.value);
    r.rhs = 0.5 * area.value * s.field;
    const std::string mp = mesh_provenance(ctx.options().h);
    r.ingredients.push_back({"flux", flux.value, flux.error_estimate, mp});
    r.ingredients.push_back({"area_dD2", area.value, area.error_estimate, mp});
    detail::add_sup_ingredients(r, s, f, ctx.options().sup_samples);
    finalize(r, flux.error_estimate, 0.5 * area.error_estimate * s.field);
    return r;
}

/// |integral of n over dD1 inside D2| <= Area(dD2) / 2.
inline BoundReport check_cor3(PairContext& ctx) {
    BoundReport r = detail::start_report(InequalityId::Cor3, ctx);
    const auto n = ctx.clipped_normal();
    const auto& area = ctx.area2();
    r.lhs = n.value;
    r.rhs = 0.5 * area.value;
    const std::string mp = mesh_provenance(ctx.options().h);
    r.ingredients.push_back({"normal_integral", n.value, n.error_estimate, mp});
    r.ingredients.push_back({"area_dD2", area.value, area.error_estimate, mp});
    finalize(r, n.error_estimate, 0.5 * area.error_estimate);
    return r;
}

/// rhs = (Area |f| + |flux through dD2| + Vol |div f| + |integral of div f|) / 2.
inline BoundReport check_general(PairContext& ctx, const VectorField& f) {
    BoundReport r = detail::start_report(InequalityId::GeneralEq5, ctx);
    const auto flux = ctx.clipped_flux(f);
    const auto& area = ctx.area2();
    const auto& vol = ctx.volume2();
    const auto bflux = ctx.boundary2_flux(f);
    const auto dint = ctx.divergence_integral2(f);
    const SupNorms s = ctx.sup(f);
    r.lhs = std::abs(flux.value);
    r.rhs = 0.5 * (area.value * s.field + std::abs(bflux.value) + vol.value * s.divergence + std::abs(dint.value));
    const std::string mp = mesh_provenance(ctx.options().h);
    const std::string gp = "grid h=" + std::to_string(ctx.options().vol_h());
    r.ingredients.push_back({"flux", flux.value, flux.error_estimate, mp});
    r.ingredients.push_back({"area_dD2", area.value, area.error_estimate, mp});
    r.ingredients.push_back({"vol_D2", vol.value, vol.error_estimate, gp});
    r.ingredients.push_back({"flux_dD2", bflux.value, bflux.error_estimate, mp});
    r.ingredients.push_back({"div_integral_D2", dint.value, dint.error_estimate, gp});
    detail::add_sup_ingredients(r, s, f, ctx.options().sup_samples);
    finalize(r, flux.error_estimate,
             0.5 * (area.error_estimate * s.field + bflux.error_estimate + vol.error_estimate * s.divergence +
                    dint.error_estimate));
    return r;
}

inline BoundReport check_thm1(const ImplicitDomain& d1, const ImplicitDomain& d2, const VectorField& f,
                              const QuadOptions& o = {}) {
    PairContext ctx(d1, d2, o);
    return check_thm1(ctx, f);
}
inline BoundReport check_thm2(const ImplicitDomain& d1, const ImplicitDomain& d2, const VectorField& f,
                              const QuadOptions& o = {}) {
    PairContext ctx(d1, d2, o);
    return check_thm2(ctx, f);
}
inline BoundReport check_cor3(const ImplicitDomain& d1, const ImplicitDomain& d2, const QuadOptions& o = {}) {
    PairContext ctx(d1, d2, o);
    return check_cor3(ctx);
}
inline BoundReport check_general(const ImplicitDomain& d1, const ImplicitDomain& d2, const VectorField& f,
                                 const QuadOptions& o = {}) {
    PairContext ctx(d1, d2, o);
    return check_general(ctx, f);
}

/// Volume of the unit-free (d-1)-ball of radius r: 2r for d = 2, pi r^2 for d = 3.
inline double ball_volume_codim1(int dim, double r) { return dim == 2 ? 2.0 * r : std::numbers::pi * r * r; }

/// Midpoints of random pairs of interior sample points must lie in the domain.
inline bool sampled_convex(const ImplicitDomain& d, std::size_t samples, std::uint64_t seed) {
    const HaltonSequence seq(d.bounding_box(), d.dimension(), seed);
    std::vector<Vec> inside;
    for (std::size_t i = 0; i < samples; ++i)
        if (const Vec p = seq[i]; d.level(p) <= 0.0) inside.push_back(p);
    if (inside.size() < 2) return true;
    Rng rng(seed, 0xc0);
    const double slack = std::max(d.band(), 1e-12);
    for (std::size_t k = 0; k < 2 * inside.size(); ++k) {
        const auto& a = inside[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(inside.size()) - 1))];
        const auto& b = inside[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(inside.size()) - 1))];
        if (d.level((a + b) * 0.5) > slack) return false;
    }
    return true;
}

struct DiameterEstimate {
    double value = 0.0;
    Vec a, b;
};

/// Max pairwise distance over boundary vertices, then projected local ascent on dD.
inline DiameterEstimate estimate_diameter(const ImplicitDomain& d, const SurfaceMesh& boundary) {
    std::vector<Vec> pts = boundary.vertices();
    if (pts.empty()) throw Error(ErrorCode::EmptyMesh, "diameter of an empty boundary");
    const int dim = d.dimension();
    if (pts.size() > 2000) {
        // Candidates extreme in one of many directions; diameter endpoints are among them.
        std::vector<Vec> cand;
        const int k = dim == 2 ? 720 : 2000;
        for (int i = 0; i < k; ++i) {
            Vec u;
            if (dim == 2) {
                const double t = 2.0 * std::numbers::pi * i / k;
                u = {std::cos(t), std::sin(t), 0.0};
            } else {
                const double z = 1.0 - (2.0 * i + 1.0) / k, rr = std::sqrt(1.0 - z * z);
                const double t = i * std::numbers::pi * (3.0 - std::sqrt(5.0));
                u = {rr * std::cos(t), rr * std::sin(t), z};
            }
            cand.push_back(*std::max_element(pts.begin(), pts.end(),
                                             [&](const Vec& p, const Vec& q) { return dot(p, u) < dot(q, u); }));
        }
        pts = std::move(cand);
    }
    DiameterEstimate best;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (const double dd = distance(pts[i], pts[j]); dd > best.value) best = {dd, pts[i], pts[j]};
    const double h0 = boundary.resolution() > 0.0 ? boundary.resolution() : 1e-2 * best.value;
    auto ascend = [&](Vec& p, const Vec& q) {
        p = d.project_to_boundary(p);
        double step = h0;
        for (int it = 0; it < 60 && step > 1e-14 * best.value; ++it) {
            const Vec dir = normalized(p - q);
            const Vec g = normalized(d.gradient(p));
            const Vec t = dir - g * dot(dir, g);
            const Vec cand = d.project_to_boundary(p + t * step);
            if (distance(cand, q) > distance(p, q))
                p = cand;
            else
                step *= 0.5;
        }
    };
    for (int round = 0; round < 2; ++round) {
        ascend(best.a, best.b);
        ascend(best.b, best.a);
    }
    best.value = distance(best.a, best.b);
    return best;
}

/// Convex-D2 bound on |integral of n over dD1 inside D2|, in both forms:
/// the stated constant Vol(B^{d-1}(delta/2)) / 2 and the constant Vol(B^{d-1}(delta/2))
/// that the supporting argument delivers.
inline std::pair<BoundReport, BoundReport> check_thm4(PairContext& ctx, std::size_t convex_samples = 4000) {
    if (!sampled_convex(ctx.d2(), convex_samples, ctx.options().seed))
        throw Error(ErrorCode::NotConvex, ctx.d2().label() + " failed the sampled midpoint convexity test");
    const int dim = ctx.dimension();
    const auto n = ctx.clipped_normal();
    const auto diam = estimate_diameter(ctx.d2(), ctx.boundary2());
    const double ball = ball_volume_codim1(dim, 0.5 * diam.value);
    // Diameter error from the mesh is O(h^2); the ball volume scales like delta^(d-1).
    const double h = ctx.options().h;
    const double ball_err = (dim - 1) * ball * (h * h) / std::max(diam.value, 1e-300);
    const std::string mp = mesh_provenance(h);
    BoundReport claimed = detail::start_report(InequalityId::Thm4Claimed, ctx);
    BoundReport proof = detail::start_report(InequalityId::Thm4ProofDerived, ctx);
    for (BoundReport* r : {&claimed, &proof}) {
        r->lhs = n.value;
        r->ingredients.push_back({"normal_integral", n.value, n.error_estimate, mp});
        r->ingredients.push_back({"diameter_D2", diam.value, h * h, mp + "+local search"});
        r->ingredients.push_back({"vol_ball_d-1", ball, ball_err, "analytic in diameter"});
    }
    claimed.rhs = 0.5 * ball;
    proof.rhs = ball;
    finalize(claimed, n.error_estimate, 0.5 * ball_err);
    finalize(proof, n.error_estimate, ball_err);
    return {claimed, proof};
}

inline std::pair<BoundReport, BoundReport> check_thm4(const ImplicitDomain& d1, const ImplicitDomain& d2,
                                                      const QuadOptions& o = {}) {
    PairContext ctx(d1, d2, o);
    return check_thm4(ctx);
}

/// integral over C of v . n_dD, where D is convex and C = dD inside `region`, against both
/// forms of the convex constant.
inline std::pair<BoundReport, BoundReport> check_vdotn(const ImplicitDomain& convex_d, const ImplicitDomain& region,
                                                       const Vec& v, const QuadOptions& o = {}) {
    if (std::abs(norm(v) - 1.0) > 1e-12) throw Error(ErrorCode::BadParams, "v must be a unit vector");
    if (!sampled_convex(convex_d, 4000, o.seed))
        throw Error(ErrorCode::NotConvex, convex_d.label() + " failed the sampled midpoint convexity test");
    PairContext ctx(convex_d, region, o);
    const int dim = ctx.dimension();
    const auto flux = ctx.clipped_flux(fields::constant(v, dim));
    const SurfaceMesh full = mesh_boundary(convex_d, o.h, o.mesh);
    const auto diam = estimate_diameter(convex_d, full);
    const double ball = ball_volume_codim1(dim, 0.5 * diam.value);
    const double ball_err = (dim - 1) * ball * (o.h * o.h) / std::max(diam.value, 1e-300);
    BoundReport claimed = detail::start_report(InequalityId::LemmaVdotnClaimed, ctx);
    BoundReport proof = detail::start_report(InequalityId::LemmaVdotnProofDerived, ctx);
    for (BoundReport* r : {&claimed, &proof}) {
        r->lhs = flux.value;
        r->ingredients.push_back({"v_dot_n_integral", flux.value, flux.error_estimate, mesh_provenance(o.h)});
        r->ingredients.push_back({"diameter_D", diam.value, o.h * o.h, mesh_provenance(o.h) + "+local search"});
        r->ingredients.push_back({"vol_ball_d-1", ball, ball_err, "analytic in diameter"});
    }
    claimed.rhs = 0.5 * ball;
    proof.rhs = ball;
    finalize(claimed, flux.error_estimate, 0.5 * ball_err);
    finalize(proof, flux.error_estimate, ball_err);
    return {claimed, proof};
}

/// Finite measure space X = {0..n-1} with point weights, a function on X and two subsets.
struct DiscreteInstance {
    std::vector<double> weights;
    std::vector<double> values;
    std::vector<bool> in_u;
    std::vector<bool> in_v;
};

/// Both halves of the split-set inequality, evaluated by direct summation. lhs is the larger
/// of the two sides and the verdict uses zero tolerance.
inline BoundReport check_measure_lemma(const DiscreteInstance& inst) {
    const std::size_t n = inst.weights.size();
    if (inst.values.size() != n || inst.in_u.size() != n || inst.in_v.size() != n)
        throw Error(ErrorCode::BadParams, "measure instance arrays differ in length");
    double mu_u = 0.0, sup = 0.0, int_u = 0.0, int_u_minus_v = 0.0, int_u_and_v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (inst.weights[i] < 0.0) throw Error(ErrorCode::BadParams, "weights must be non-negative");
        if (inst.weights[i] > 0.0) sup = std::max(sup, std::abs(inst.values[i]));
        if (!inst.in_u[i]) continue;
        const double wf = inst.weights[i] * inst.values[i];
        mu_u += inst.weights[i];
        int_u += wf;
        (inst.in_v[i] ? int_u_and_v : int_u_minus_v) += wf;
    }
    BoundReport r;
    r.id = InequalityId::MeasureLemma;
    r.lhs = std::max(std::abs(int_u_minus_v), std::abs(int_u_and_v));
    r.rhs = 0.5 * (mu_u * sup + std::abs(int_u));
    r.slack = r.rhs - r.lhs;
    r.verdict = r.lhs <= r.rhs ? Verdict::Holds : Verdict::Violated;
    r.ingredients = {{"int_U_minus_V", int_u_minus_v, 0.0, "exact"},
                     {"int_U_and_V", int_u_and_v, 0.0, "exact"},
                     {"mu_U", mu_u, 0.0, "exact"},
                     {"sup_f", sup, 0.0, "exact"},
                     {"int_U", int_u, 0.0, "exact"}};
    return r;
}

/// Random instance with small integer weights and values, so every sum is exact in double.
inline DiscreteInstance random_discrete_instance(Rng& rng, std::size_t max_size = 20) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, static_cast<int>(max_size)));
    DiscreteInstance inst;
    for (std::size_t i = 0; i < n; ++i) {
        inst.weights.push_back(static_cast<double>(rng.uniform_int(0, 9)));
        inst.values.push_back(static_cast<double>(rng.uniform_int(-9, 9)));
        inst.in_u.push_back(rng.uniform() < 0.7);
        inst.in_v.push_back(rng.uniform() < 0.5);
    }
    return inst;
}

/// Least-squares slope of log y against log x over entries with x, y > 0.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    const double den = m * sxx - sx * sx;
    return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (m * sxy - sx * sy) / den;
}

struct OffsetRow {
    double eta = 0.0;
    double volume = 0.0;
    double area = 0.0;
    double boundary_flux = 0.0;
    double clipped_flux = 0.0;  // flux of f through dD1 inside the offset domain
};

struct CauchyTrend {
    std::vector<double> differences;  // |q_k - q_{k+1}| over consecutive positive etas
    double rate = 0.0;                // log-log slope of differences against eta
    bool monotone = false;            // differences strictly decreasing
};

struct OffsetStudy {
    std::vector<OffsetRow> rows;
    CauchyTrend volume, area, boundary_flux, clipped_flux;
};

inline CauchyTrend cauchy_trend(const std::vector<OffsetRow>& rows, double OffsetRow::*q) {
    CauchyTrend t;
    std::vector<double> etas;
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        if (!(rows[k + 1].eta > 0.0)) break;
        t.differences.push_back(std::abs(rows[k].*q - rows[k + 1].*q));
        etas.push_back(rows[k].eta);
    }
    t.rate = loglog_slope(etas, t.differences);
    t.monotone = t.differences.size() >= 2;
    for (std::size_t k = 0; k + 1 < t.differences.size(); ++k)
        t.monotone = t.monotone && t.differences[k + 1] < t.differences[k];
    return t;
}

/// Offsets D2^eta = {phi2 <= eta} along a decreasing list of etas (a trailing 0 gives the
/// base row). D1 is optional; without it the clipped-flux column stays 0.
inline OffsetStudy offset_convergence_study(const ImplicitDomain& d2, const std::optional<ImplicitDomain>& d1,
                                            const VectorField& f, const std::vector<double>& etas,
                                            const QuadOptions& o = {}) {
    if (etas.empty()) throw Error(ErrorCode::BadParams, "offset study needs at least one eta");
    for (std::size_t k = 0; k < etas.size(); ++k) {
        if (etas[k] < 0.0) throw Error(ErrorCode::BadParams, "offsets must be non-negative");
        if (k > 0 && !(etas[k] < etas[k - 1])) throw Error(ErrorCode::BadParams, "offsets must decrease strictly");
    }
    OffsetStudy study;
    for (double eta : etas) {
        const ImplicitDomain dom = offset_domain({d2, eta});
        OffsetRow row;
        row.eta = eta;
        const SurfaceMesh boundary = mesh_boundary(dom, o.h, o.mesh);
        row.area = boundary.total_area();
        row.volume = volume(dom, o.vol_h()).value;
        row.boundary_flux = surface_flux(boundary, f).value;
        if (d1) {
            QuadOptions oo = o;
            oo.richardson = false;
            PairContext ctx(*d1, dom, oo);
            row.clipped_flux = surface_flux(ctx.clipped(), f).value;
        }
        study.rows.push_back(row);
    }
    study.volume = cauchy_trend(study.rows, &OffsetRow::volume);
    study.area = cauchy_trend(study.rows, &OffsetRow::area);
    study.boundary_flux = cauchy_trend(study.rows, &OffsetRow::boundary_flux);
    study.clipped_flux = cauchy_trend(study.rows, &OffsetRow::clipped_flux);
    return study;
}

}  // namespace fluxgauge
