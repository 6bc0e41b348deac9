#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fluxgauge/bounds.hpp"
#include "fluxgauge/config.hpp"
#include "fluxgauge/dynamics.hpp"
#include "fluxgauge/fields.hpp"
#include "fluxgauge/geometry/curve.hpp"
#include "fluxgauge/geometry/zoo.hpp"
#include "fluxgauge/io.hpp"
#include "fluxgauge/measures.hpp"
#include "fluxgauge/parallel.hpp"
#include "fluxgauge/quadrature.hpp"
#include "fluxgauge/random.hpp"

#ifndef FLUXGAUGE_VERSION
#define FLUXGAUGE_VERSION "0.0.0"
#endif

namespace fluxgauge {

struct ScenarioInfo {
    Scenario scenario;
    std::string_view anchor;
    std::string_view description;
};

inline const std::vector<ScenarioInfo>& scenario_catalog() {
    static const std::vector<ScenarioInfo> catalog = {
        {Scenario::Verify,
         "Theorem 'Stokes-Approx-1', Theorem 'Stokes-Approx-2', Corollary 'main result', Theorem 'extended_stokes'",
         "flux bounds on one (D1, D2, f) or a seeded random suite, with a Monte Carlo cross-check"},
        {Scenario::CombStudy, "Example 'tight bounds-1'",
         "comb pairs whose clipped normal integral approaches half the perimeter"},
        {Scenario::ImmersionCounterexample, "Example 'need_stokes-1'",
         "m-fold cover of a circle breaks the bound once the curve is not embedded"},
        {Scenario::ConvexProbe, "Theorem 'convex-theorem', Lemma 'vdotn'",
         "stated and proof-derived convex constants on chord and equator configurations"},
        {Scenario::OffsetStudy, "Prop. 'epsilon-approx'",
         "volume, area and flux of level-set offsets as the offset shrinks"},
        {Scenario::MeasureLimit, "Theorem 'surface limit'",
         "ball means of boundary normals along a comb sequence"},
        {Scenario::OdeAudit, "Corollary '2d_cor', Theorem 'minimal-set'",
         "masked displacement of a closed orbit and the minimal-set probe"},
        {Scenario::DivergenceCheck, "Lemma 'divergence-with-corners'",
         "boundary flux against the volume integral of the divergence"},
    };
    return catalog;
}

/// One line per scenario: "name → anchor: description".
inline std::string list_scenarios() {
    std::string out;
    for (const auto& s : scenario_catalog())
        out += std::string(to_string(s.scenario)) + " → " + std::string(s.anchor) + ": " +
               std::string(s.description) + "\n";
    return out;
}

struct Artifact {
    std::string name;  // file name inside the output directory
    std::string kind;  // "svg" or "csv"
    std::string caption;
    std::string content;
};

struct RunReport {
    ExperimentConfig config;
    std::string config_hash;
    std::vector<BoundReport> checks;
    std::vector<Artifact> artifacts;
    Json studies = Json::object();
    std::vector<std::string> notes;
    double wall_clock_seconds = 0.0;

    bool proven_violation() const {
        for (const auto& c : checks)
            if (c.proven_violation()) return true;
        return false;
    }
    int exit_code() const { return proven_violation() ? 1 : 0; }

    std::string summary() const { return summary_csv(checks); }

    /// report.json; only `wall_clock_seconds` varies between identical runs.
    Json to_json() const {
        Json checks_json = Json::array();
        for (const auto& c : checks) checks_json.push_back(fluxgauge::to_json(c));
        Json figures = Json::array();
        for (const auto& a : artifacts) figures.push_back({{"path", a.name}, {"kind", a.kind}, {"caption", a.caption}});
        return Json{{"scenario", std::string(to_string(config.scenario))},
                    {"config_hash", config_hash},
                    {"config", fluxgauge::to_json(config)},
                    {"tool_version", FLUXGAUGE_VERSION},
                    {"checks", checks_json},
                    {"figures", figures},
                    {"studies", studies},
                    {"notes", notes},
                    {"proven_violation", proven_violation()},
                    {"wall_clock_seconds", wall_clock_seconds}};
    }
};

inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(to_json(c).dump()); }

namespace detail {

inline ImplicitDomain config_domain(const CatalogSpec& s, int dim) {
    try {
        return make_zoo(s.name, s.params, dim);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigInvalid, "domain '" + s.name + "': " + e.what());
    }
}

inline VectorField config_field(const CatalogSpec& s, int dim) {
    try {
        return field_catalog(s.name, s.params, dim);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigInvalid, "field '" + s.name + "': " + e.what());
    }
}

inline Vec config_point(const std::vector<double>& p, const Vec& fallback) {
    return p.empty() ? fallback : Vec{p[0], p[1], 0.0};
}

struct PairCase {
    ImplicitDomain d1;
    ImplicitDomain d2;
    VectorField f;
    std::string label;
    std::uint64_t seed;
};

inline Vec random_unit(Rng& rng, int dim) {
    for (;;) {
        Vec v{rng.uniform(-1, 1), rng.uniform(-1, 1), dim == 3 ? rng.uniform(-1, 1) : 0.0};
        const double n = norm(v);
        if (n > 0.1 && n <= 1.0) return v / n;
    }
}

inline Vec random_point(Rng& rng, int dim, double a) {
    return {rng.uniform(-a, a), rng.uniform(-a, a), dim == 3 ? rng.uniform(-a, a) : 0.0};
}

inline ImplicitDomain random_box(Rng& rng, int dim) {
    const Vec c = random_point(rng, dim, 0.4);
    Vec half{rng.uniform(0.25, 0.7), rng.uniform(0.25, 0.7), dim == 3 ? rng.uniform(0.25, 0.7) : 0.0};
    const double lo = std::min({half.x, half.y, dim == 3 ? half.z : half.x});
    return zoo::smoothed_box(c, half, 0.2 * lo, dim);
}

/// Seeded random (D1, D2, f): D1 a ball, half-space or smoothed box; D2 a ball or smoothed
/// box; f from the catalog, about half of them divergence-free.
inline PairCase random_case(std::uint64_t seed, int k, int dim) {
    Rng rng(seed, 1000 + static_cast<std::uint64_t>(k));
    const int t1 = rng.uniform_int(0, 3);
    ImplicitDomain d1 = t1 <= 1   ? zoo::ball(random_point(rng, dim, 0.5), rng.uniform(0.3, 0.9), dim)
                        : t1 == 2 ? zoo::halfspace(random_unit(rng, dim), rng.uniform(-0.4, 0.4), dim)
                                  : random_box(rng, dim);
    ImplicitDomain d2 = rng.uniform() < 0.6 ? zoo::ball(random_point(rng, dim, 0.4), rng.uniform(0.4, 1.0), dim)
                                            : random_box(rng, dim);
    const int tf = rng.uniform_int(0, 5);
    VectorField f = tf == 0   ? fields::constant(random_unit(rng, dim) * rng.uniform(0.5, 2.0), dim)
                    : tf == 1 ? fields::rotation(dim)
                    : tf == 2 ? (dim == 3 ? fields::curl_xy(rng.uniform(0.5, 2.0))
                                          : fields::shear(dim, rng.uniform(-2.0, 2.0)))
                    : tf == 3 ? fields::identity(dim)
                    : tf == 4 ? fields::quadratic(dim)
                              : fields::polynomial(dim);
    const std::string label = "random" + std::to_string(dim) + "d#" + std::to_string(k);
    return {std::move(d1), std::move(d2), std::move(f), label, seed + static_cast<std::uint64_t>(k)};
}

inline constexpr double kDivergenceFreeTol = 1e-6;

/// Proven flux bounds on one pair, with an optional Monte Carlo cross-check of the flux.
inline std::vector<BoundReport> verify_case(const PairCase& pc, double h, std::uint64_t mc_samples) {
    QuadOptions o;
    o.h = h;
    o.seed = pc.seed;
    PairContext ctx(pc.d1, pc.d2, o);
    std::vector<BoundReport> out;
    out.push_back(check_thm1(ctx, pc.f));
    if (mc_samples > 0) {
        const double w = pc.d1.dimension() == 2 ? 0.01 : 0.02;
        const auto mc = mc_flux_oracle(pc.d1, pc.d2, pc.f, mc_samples, pc.seed, w);
        BoundReport& r = out.back();
        const Ingredient* flux = r.ingredient("flux");
        r.ingredients.push_back({"mc_flux", mc.value, mc.error_estimate,
                                 "samples=" + std::to_string(mc.sample_count) + " shell=" + fmt(w)});
        const double combined = std::hypot(flux->error, mc.error_estimate);
        if (std::abs(flux->value - mc.value) > 3.0 * combined) r.flags.emplace_back("ORACLE_MISMATCH");
    }
    if (ctx.sup(pc.f).divergence <= kDivergenceFreeTol) out.push_back(check_thm2(ctx, pc.f));
    out.push_back(check_cor3(ctx));
    out.push_back(check_general(ctx, pc.f));
    for (auto& r : out) r.config_id = pc.label + ":" + pc.d1.label() + "|" + pc.d2.label() + "|" + pc.f.label();
    return out;
}

inline void run_verify(const ExperimentConfig& c, RunReport& rep) {
    const int dim = c.dimension;
    const double h = c.resolution > 0.0 ? c.resolution : (dim == 2 ? 0.01 : 0.04);
    std::vector<PairCase> cases;
    if (c.d1 || c.d2) {
        if (!c.d1 || !c.d2) throw Error(ErrorCode::ConfigInvalid, "verify needs both d1 and d2");
        const auto d1 = config_domain(*c.d1, dim), d2 = config_domain(*c.d2, dim);
        std::vector<CatalogSpec> fs = c.fields;
        if (fs.empty()) fs.push_back({"constant", dim == 2 ? std::vector<double>{0, 1} : std::vector<double>{0, 0, 1}});
        for (std::size_t i = 0; i < fs.size(); ++i)
            cases.push_back({d1, d2, config_field(fs[i], dim), "config#" + std::to_string(i), c.seed});
    }
    for (int k = 0; k < c.random_configs; ++k) cases.push_back(random_case(c.seed, k, dim));
    if (cases.empty()) throw Error(ErrorCode::ConfigInvalid, "verify needs d1 and d2, or random_configs > 0");

    std::vector<std::vector<BoundReport>> results(cases.size());
    for_each_chunk(cases.size(), 1, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t i = b; i < e; ++i) results[i] = verify_case(cases[i], h, c.mc_samples);
    });
    int mismatches = 0;
    for (auto& rs : results)
        for (auto& r : rs) {
            if (r.has_flag("ORACLE_MISMATCH")) ++mismatches;
            rep.checks.push_back(std::move(r));
        }
    rep.studies["verify"] = {{"cases", cases.size()}, {"resolution", h}, {"oracle_mismatches", mismatches}};

    if (dim == 2 && c.d1 && c.d2) {
        const auto& pc = cases.front();
        QuadOptions o;
        o.h = h;
        PairContext ctx(pc.d1, pc.d2, o);
        const SurfaceMesh b2 = ctx.boundary2();
        const SurfaceMesh& clip = ctx.clipped();
        rep.artifacts.push_back({"verify_pair.svg", "svg", "dD2 (grey) and dD1 clipped to D2 (red)",
                                 svg_meshes({{&b2, "#999999"}, {&clip, "#d62728"}})});
    }
}

inline std::vector<int> comb_sizes(const ExperimentConfig& c) {
    return c.comb_n.empty() ? std::vector<int>{4, 8, 16} : c.comb_n;
}

inline double comb_resolution(const ExperimentConfig& c, int n) {
    return c.resolution > 0.0 ? c.resolution : 1.0 / (8.0 * n * n);
}

inline void run_comb_study(const ExperimentConfig& c, RunReport& rep) {
    if (c.dimension != 2) throw Error(ErrorCode::ConfigInvalid, "comb-study is planar");
    Json rows = Json::array();
    for (int n : comb_sizes(c)) {
        QuadOptions o;
        o.h = comb_resolution(c, n);
        o.seed = c.seed;
        const double rho = default_comb_smoothing(n);
        PairContext ctx(make_comb(n, rho), make_comb_translate(n, rho), o);
        BoundReport cor3 = check_cor3(ctx);
        BoundReport thm2 = check_thm2(ctx, fields::constant({0, 1, 0}, 2));
        const double perimeter = ctx.area2().value;
        const Vec nvec = ctx.clipped_normal().vector_value;
        rows.push_back({{"n", n},
                        {"resolution", o.h},
                        {"perimeter_dD2", perimeter},
                        {"expected_perimeter", 2 * n + 2},
                        {"normal_integral", vec_json(nvec, 2)},
                        {"normal_integral_magnitude", cor3.lhs},
                        {"expected_magnitude", n},
                        {"ratio_to_half_perimeter", cor3.lhs / (0.5 * perimeter)}});
        if (rep.artifacts.empty()) {
            const SurfaceMesh& b2 = ctx.boundary2();
            const SurfaceMesh& clip = ctx.clipped();
            rep.artifacts.push_back({"comb" + std::to_string(n) + ".svg", "svg",
                                     "translated comb boundary (grey) and comb boundary inside it (red)",
                                     svg_meshes({{&b2, "#999999"}, {&clip, "#d62728"}})});
        }
        rep.checks.push_back(std::move(cor3));
        rep.checks.push_back(std::move(thm2));
    }
    rep.studies["comb"] = rows;
}

inline void run_immersion(const ExperimentConfig& c, RunReport& rep) {
    if (c.dimension != 2) throw Error(ErrorCode::ConfigInvalid, "immersion-counterexample is planar");
    const int m = c.cover_m > 0 ? c.cover_m : 10;
    const double h = c.resolution > 0.0 ? c.resolution : 0.005;
    const auto cover = make_m_cover(circle_curve({}, 1.0), m, c.cover_perturbation);
    const ImplicitDomain d2 = c.d2 ? config_domain(*c.d2, 2) : zoo::ball({0, 0.3, 0}, 1.1, 2);
    const std::size_t per_sheet = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / h));
    const SurfaceMesh fine = clip_mesh(curve_mesh(cover, per_sheet), d2);
    const SurfaceMesh coarse = clip_mesh(curve_mesh(cover, per_sheet / 2), d2);
    const auto n = normal_integral(fine, coarse);
    const SurfaceMesh b2 = mesh_boundary(d2, h), b2c = mesh_boundary(d2, 2 * h);
    const double perim = b2.total_area(), perim_err = std::abs(perim - b2c.total_area());

    BoundReport r;
    r.id = InequalityId::Cor3;
    r.config_id = cover.parametrization.label + "|" + d2.label();
    r.seed = c.seed;
    r.resolution = h;
    r.lhs = n.value;
    r.rhs = 0.5 * perim;
    r.ingredients.push_back({"normal_integral", n.value, n.error_estimate, "polyline " + std::to_string(per_sheet) + "/sheet"});
    r.ingredients.push_back({"area_dD2", perim, perim_err, mesh_provenance(h)});
    r.ingredients.push_back({"cover_multiplicity", static_cast<double>(m), 0.0, "config"});
    r.flags.emplace_back(kNotARegularDomain);
    finalize(r, n.error_estimate, 0.5 * perim_err);
    rep.checks.push_back(r);

    if (c.allow_non_simple) {
        Cor2dOptions o;
        o.h = h;
        o.allow_non_simple = true;
        BoundReport d = check_cor_2d(cover, d2, o);
        d.seed = c.seed;
        rep.checks.push_back(std::move(d));
    } else {
        rep.notes.emplace_back("COR2D skipped: the cover is NOT_SIMPLE; pass --allow-non-simple to evaluate it");
    }
    rep.studies["immersion"] = {{"m", m},
                                {"normal_integral", vec_json(n.vector_value, 2)},
                                {"magnitude", n.value},
                                {"expected_magnitude", 2 * m},
                                {"half_perimeter_dD2", 0.5 * perim}};
    rep.artifacts.push_back({"immersion.svg", "svg", "m-fold cover (black) and dD2 (blue)",
                             svg_meshes({{&b2, "#1f77b4"}, {&fine, "#000000"}})});
}

inline void run_convex_probe(const ExperimentConfig& c, RunReport& rep) {
    const int dim = c.dimension;
    const double h = c.resolution > 0.0 ? c.resolution : (dim == 2 ? 0.01 : 0.04);
    const ImplicitDomain d1 = c.d1 ? config_domain(*c.d1, dim)
                                   : zoo::halfspace(dim == 2 ? Vec{0, -1, 0} : Vec{0, 0, -1}, 0.0, dim);
    const ImplicitDomain d2 = c.d2 ? config_domain(*c.d2, dim) : zoo::ball({}, 1.0, dim);
    QuadOptions o;
    o.h = h;
    o.seed = c.seed;
    PairContext ctx(d1, d2, o);
    try {
        auto [claimed, proof] = check_thm4(ctx);
        rep.checks.push_back(claimed);
        rep.checks.push_back(proof);
        // The lemma integrates over dD2 inside D1; v is the direction of that normal integral.
        PairContext swapped(d2, d1, o);
        const Vec nv = swapped.clipped_normal().vector_value;
        if (norm(nv) > 0.0) {
            auto [vc, vp] = check_vdotn(d2, d1, normalized(nv), o);
            rep.checks.push_back(vc);
            rep.checks.push_back(vp);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotConvex) throw Error(ErrorCode::ConfigInvalid, e.what());
        throw;
    }
    if (dim == 2) {
        const SurfaceMesh& b2 = ctx.boundary2();
        const SurfaceMesh& clip = ctx.clipped();
        rep.artifacts.push_back({"convex_probe.svg", "svg", "convex D2 boundary (grey) and the clipped piece (red)",
                                 svg_meshes({{&b2, "#999999"}, {&clip, "#d62728"}})});
    }
}

inline void run_offset_study(const ExperimentConfig& c, RunReport& rep) {
    const int dim = c.dimension;
    const double h = c.resolution > 0.0 ? c.resolution : (dim == 2 ? 1.0 / 512.0 : 1.0 / 32.0);
    std::vector<ImplicitDomain> d2s;
    for (const auto& s : c.domains) d2s.push_back(config_domain(s, dim));
    if (d2s.empty()) {
        d2s.push_back(zoo::ball({}, 1.0, dim));
        d2s.push_back(make_comb(4, default_comb_smoothing(4), dim));
    }
    const VectorField f = c.fields.empty() ? fields::identity(dim) : config_field(c.fields.front(), dim);
    std::optional<ImplicitDomain> d1;
    if (c.d1) d1 = config_domain(*c.d1, dim);
    const std::vector<double> etas = c.etas.empty() ? std::vector<double>{0.02, 0.01, 0.005} : c.etas;
    QuadOptions o;
    o.h = h;
    o.seed = c.seed;
    Json studies = Json::array();
    for (const auto& d2 : d2s) {
        OffsetStudy s;
        try {
            s = offset_convergence_study(d2, d1, f, etas, o);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::BadParams) throw Error(ErrorCode::ConfigInvalid, e.what());
            throw;
        }
        Json rows = Json::array();
        std::string csv = d1 ? "eta,volume,area,boundary_flux,clipped_flux\n" : "eta,volume,area,boundary_flux\n";
        for (const auto& r : s.rows) {
            Json row{{"eta", r.eta}, {"volume", r.volume}, {"area", r.area}, {"boundary_flux", r.boundary_flux}};
            csv += fmt(r.eta) + "," + fmt(r.volume) + "," + fmt(r.area) + "," + fmt(r.boundary_flux);
            if (d1) {
                row["clipped_flux"] = r.clipped_flux;
                csv += "," + fmt(r.clipped_flux);
            }
            rows.push_back(row);
            csv += "\n";
        }
        auto trend = [](const CauchyTrend& t) {
            return Json{{"differences", t.differences}, {"rate", json_number(t.rate)}, {"monotone", t.monotone}};
        };
        Json study{{"domain", d2.label()},
                   {"field", f.label()},
                   {"resolution", h},
                   {"rows", rows},
                   {"volume", trend(s.volume)},
                   {"area", trend(s.area)},
                   {"boundary_flux", trend(s.boundary_flux)}};
        if (d1) study["clipped_flux"] = trend(s.clipped_flux);
        studies.push_back(study);
        rep.artifacts.push_back({"offsets_" + d2.label() + ".csv", "csv", "offset rows for " + d2.label(), csv});
    }
    rep.studies["offset"] = studies;
}

inline void run_measure_limit(const ExperimentConfig& c, RunReport& rep) {
    if (c.dimension != 2) throw Error(ErrorCode::ConfigInvalid, "measure-limit is planar");
    const auto ns = comb_sizes(c);
    std::vector<ImplicitDomain> combs;
    std::vector<double> hs;
    for (int n : ns) {
        combs.push_back(make_comb(n, default_comb_smoothing(n)));
        hs.push_back(comb_resolution(c, n));
    }
    const int k = c.ball_grid > 0 ? c.ball_grid : 3;
    const double r = c.ball_radius > 0.0 ? c.ball_radius : 0.2;
    const auto centers = ball_grid(Box{{0, 0, 0}, {1, 1, 0}}, 2, k);
    const auto study = surface_limit_study(combs, hs, centers, r);
    Json per = Json::array();
    for (std::size_t i = 0; i < study.estimates.size(); ++i) {
        const auto& e = study.estimates[i];
        for (const auto& b : e.balls) {
            BoundReport br;
            br.id = InequalityId::Cor3;
            br.config_id = e.label + "|ball(" + fmt_short(b.center.x) + "," + fmt_short(b.center.y) + ";" +
                           fmt_short(r) + ")";
            br.seed = c.seed;
            br.resolution = hs[i];
            br.lhs = b.magnitude;
            br.rhs = b.bound;
            br.ingredients.push_back({"ball_mean_normal_x", b.mean.x, 0.0, mesh_provenance(hs[i])});
            br.ingredients.push_back({"ball_mean_normal_y", b.mean.y, 0.0, mesh_provenance(hs[i])});
            br.ingredients.push_back({"ball_mass", b.mass, 0.0, mesh_provenance(hs[i])});
            br.ingredients.push_back({"area_dD", e.source_area, 0.0, mesh_provenance(hs[i])});
            br.ingredients.push_back({"cut_facet_weight", b.tolerance, 0.0, mesh_provenance(hs[i])});
            finalize(br, b.tolerance / 3.0, 0.0);
            rep.checks.push_back(std::move(br));
        }
        per.push_back({{"comb", e.label},
                       {"resolution", hs[i]},
                       {"perimeter", e.source_area},
                       {"bound", e.balls.front().bound},
                       {"max_magnitude", e.max_magnitude()},
                       {"dominated", e.dominated()}});
        const SurfaceMesh mesh = mesh_boundary(combs[i], hs[i]);
        std::ostringstream csv;
        write_disintegration_csv(e, 2, csv);
        rep.artifacts.push_back({"ball_means_" + e.label + ".csv", "csv", "ball means for " + e.label, csv.str()});
        rep.artifacts.push_back({"heat_" + e.label + ".svg", "svg", "ball-mean magnitudes over " + e.label,
                                 svg_heat_map(e, mesh)});
    }
    rep.studies["surface_limit"] = {{"radius", r},
                                    {"grid", k},
                                    {"combs", per},
                                    {"decay_factors", study.decay_factors},
                                    {"dominated", study.dominated},
                                    {"bounds_decay", study.bounds_decay},
                                    {"means_decay", study.means_decay}};
}

inline void run_ode_audit(const ExperimentConfig& c, RunReport& rep) {
    if (c.dimension != 2) throw Error(ErrorCode::ConfigInvalid, "ode-audit is planar");
    const VectorField f = c.fields.empty() ? fields::limit_cycle() : config_field(c.fields.front(), 2);
    if (f.label() != "limit_cycle" && f.label() != "rotation")
        throw Error(ErrorCode::ConfigInvalid, "ode-audit needs a field with the unit circle as a 2pi-periodic orbit");
    const double h = c.resolution > 0.0 ? c.resolution : 0.005;
    const Trajectory orbit = integrate(f, {1, 0, 0}, 2.0 * std::numbers::pi);
    const int disks = c.random_configs > 0 ? c.random_configs : 100;
    std::vector<BoundReport> cor(static_cast<std::size_t>(disks));
    for_each_chunk(cor.size(), 1, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t i = b; i < e; ++i) {
            Rng rng(c.seed, 2000 + i);
            const Vec center{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), 0};
            const double radius = rng.uniform(0.1, 1.0);
            Cor2dOptions o;
            o.h = h;
            cor[i] = check_cor_2d(orbit, zoo::ball(center, radius, 2), o);
            cor[i].seed = c.seed;
            cor[i].config_id = "orbit|disk(" + fmt_short(center.x) + "," + fmt_short(center.y) + ";" +
                               fmt_short(radius) + ")";
        }
    });
    for (auto& r : cor) rep.checks.push_back(std::move(r));

    const Vec x0 = config_point(c.x0, {-1, 0, 0});
    const Vec y0 = config_point(c.y0, {1, 0, 0});
    const double r0 = c.r0 > 0.0 ? c.r0 : 0.1;
    const std::vector<double> horizons = c.horizons.empty() ? std::vector<double>{10, 50, 100} : c.horizons;
    MinimalSetProbe probe;
    try {
        probe = minimal_set_probe(f, x0, y0, r0, horizons);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BadParams) throw Error(ErrorCode::ConfigInvalid, e.what());
        throw;
    }
    for (const auto& row : probe.rows) {
        BoundReport r;
        r.id = InequalityId::MinimalSetProbe;
        r.config_id = "probe|ball(" + fmt_short(y0.x) + "," + fmt_short(y0.y) + ";" + fmt_short(r0) + ")|T=" +
                      fmt_short(row.horizon);
        r.seed = c.seed;
        r.resolution = probe.trajectory.step_tolerance();
        r.lhs = row.magnitude;
        r.rhs = row.bound;
        r.ingredients.push_back({"displacement_x", row.displacement.x, 0.0, "dense output + bisection"});
        r.ingredients.push_back({"displacement_y", row.displacement.y, 0.0, "dense output + bisection"});
        r.ingredients.push_back({"residence_time", row.residence_time, 0.0, "dense output + bisection"});
        r.ingredients.push_back({"visits", static_cast<double>(row.visits), 0.0, "count"});
        r.ingredients.push_back({"loops", static_cast<double>(row.loops), 0.0, "count"});
        r.ingredients.push_back({"max_loop_displacement", row.max_loop_displacement, 0.0, "dense output + bisection"});
        finalize(r, 1e-3 / 3.0, 0.0);
        rep.checks.push_back(std::move(r));
    }
    rep.studies["probe"] = fluxgauge::to_json(probe);

    std::ostringstream traj;
    write_trajectory_csv(probe.trajectory, traj);
    rep.artifacts.push_back({"probe_trajectory.csv", "csv", "probe trajectory (t, x, y)", traj.str()});
    rep.artifacts.push_back({"probe_phase.svg", "svg", "probe trajectory with B(y0, r0)",
                             svg_phase_portrait(probe.trajectory, nullptr, &y0, r0)});
    if (!rep.checks.empty()) {
        Rng rng(c.seed, 2000);
        const Vec center{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), 0};
        const double radius = rng.uniform(0.1, 1.0);
        const SurfaceMesh b = mesh_boundary(zoo::ball(center, radius, 2), h);
        rep.artifacts.push_back({"orbit_disk0.svg", "svg", "closed orbit against the first random disk",
                                 svg_phase_portrait(orbit, &b, nullptr, 0.0)});
    }
}

/// Relative residual below which both levels count as resolved and no order is fitted.
inline constexpr double kResolvedFloor = 1e-6;

inline BoundReport divergence_case(const ImplicitDomain& d, const VectorField& f, double h) {
    const SurfaceMesh fine = mesh_boundary(d, h), coarse = mesh_boundary(d, 2.0 * h);
    const double flux = surface_flux(fine, f).value, flux2 = surface_flux(coarse, f).value;
    const double div = divergence_volume_integral(d, f, h).value;
    const double div2 = divergence_volume_integral(d, f, 2.0 * h).value;
    CompensatedSum abs_flux;
    for (const Facet& fa : fine.facets()) abs_flux += fa.area * std::abs(dot(f(fa.centroid), fa.normal));
    const double scale = std::max(std::abs(div), abs_flux.value());
    const double res = std::abs(flux - div), res2 = std::abs(flux2 - div2);
    const bool floor = res <= kResolvedFloor * scale && res2 <= kResolvedFloor * scale;
    const double order = floor ? std::numeric_limits<double>::infinity() : std::log2(res2 / res);

    BoundReport r;
    r.id = InequalityId::DivTheorem;
    r.config_id = d.label() + "|" + f.label();
    r.resolution = h;
    r.lhs = res;
    r.rhs = 0.01 * scale;
    r.ingredients.push_back({"flux", flux, std::abs(flux - flux2), mesh_provenance(h)});
    r.ingredients.push_back({"div_integral", div, std::abs(div - div2), "grid h=" + std::to_string(h)});
    r.ingredients.push_back({"abs_flux", abs_flux.value(), 0.0, mesh_provenance(h)});
    r.ingredients.push_back({"residual_2h", res2, 0.0, mesh_provenance(2.0 * h)});
    r.ingredients.push_back({"observed_order", order, 0.0, floor ? "resolved: both residuals below 1e-6 relative" : "log2(res_2h / res_h)"});
    finalize(r, 0.0, 0.0);
    return r;
}

inline void run_divergence_check(const ExperimentConfig& c, RunReport& rep) {
    const int dim = c.dimension;
    const double h = c.resolution > 0.0 ? c.resolution : (dim == 2 ? 1.0 / 256.0 : 1.0 / 64.0);
    std::vector<ImplicitDomain> ds;
    for (const auto& s : c.domains) ds.push_back(config_domain(s, dim));
    if (ds.empty()) {
        ds.push_back(zoo::ball({}, 1.0, dim));
        if (dim == 2)
            ds.push_back(zoo::annulus(0.4, 1.0, 2));
        else
            ds.push_back(zoo::torus(1.0, 0.35));
        ds.push_back(zoo::smoothed_box({}, {0.8, 0.6, 0.5}, 0.1, dim));
    }
    std::vector<VectorField> fs;
    for (const auto& s : c.fields) fs.push_back(config_field(s, dim));
    if (fs.empty()) {
        fs.push_back(fields::constant(dim == 2 ? Vec{1, 0.5, 0} : Vec{1, 0.5, -0.25}, dim));
        fs.push_back(fields::identity(dim));
        fs.push_back(fields::rotation(dim));
        fs.push_back(fields::quadratic(dim));
        fs.push_back(fields::polynomial(dim));
    }
    std::vector<BoundReport> out(ds.size() * fs.size());
    for_each_chunk(out.size(), 1, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t i = b; i < e; ++i) {
            out[i] = divergence_case(ds[i / fs.size()], fs[i % fs.size()], h);
            out[i].seed = c.seed;
        }
    });
    for (auto& r : out) rep.checks.push_back(std::move(r));
    if (dim == 2) {
        std::vector<SurfaceMesh> meshes;
        for (const auto& d : ds) meshes.push_back(mesh_boundary(d, h));
        std::vector<std::pair<const SurfaceMesh*, std::string>> list;
        for (const auto& m : meshes) list.push_back({&m, "#333333"});
        rep.artifacts.push_back({"divergence_domains.svg", "svg", "domain boundaries", svg_meshes(list)});
    }
}

}  // namespace detail

/// Executes the scenario in memory. Errors propagate as fluxgauge::Error.
inline RunReport run_scenario(const ExperimentConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    RunReport rep;
    rep.config = c;
    rep.config_hash = config_hash(c);
    switch (c.scenario) {
        case Scenario::Verify: detail::run_verify(c, rep); break;
        case Scenario::CombStudy: detail::run_comb_study(c, rep); break;
        case Scenario::ImmersionCounterexample: detail::run_immersion(c, rep); break;
        case Scenario::ConvexProbe: detail::run_convex_probe(c, rep); break;
        case Scenario::OffsetStudy: detail::run_offset_study(c, rep); break;
        case Scenario::MeasureLimit: detail::run_measure_limit(c, rep); break;
        case Scenario::OdeAudit: detail::run_ode_audit(c, rep); break;
        case Scenario::DivergenceCheck: detail::run_divergence_check(c, rep); break;
    }
    rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

/// Writes report.json, summary.csv and the artifacts into the configured output directory.
inline void write_outputs(const RunReport& rep) {
    namespace fs = std::filesystem;
    const fs::path dir(rep.config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::RuntimeFailure, "cannot create " + dir.string() + ": " + ec.message());
    write_text((dir / "report.json").string(), rep.to_json().dump(2) + "\n");
    write_text((dir / "summary.csv").string(), rep.summary());
    for (const auto& a : rep.artifacts) write_text((dir / a.name).string(), a.content);
}

}  // namespace fluxgauge
