#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluxgauge/bounds.hpp"
#include "fluxgauge/dynamics.hpp"
#include "fluxgauge/geometry/mesh.hpp"
#include "fluxgauge/measures.hpp"
#include "fluxgauge/quadrature.hpp"

namespace fluxgauge {

using Json = nlohmann::json;

/// Shortest round-trip decimal form of a double ("%.17g").
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Fixed short form for SVG coordinates.
inline std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Non-finite doubles become strings so the JSON stays valid.
inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(fmt(v)); }

inline Json vec_json(const Vec& v, int dim) {
    Json a = Json::array();
    for (int i = 0; i < dim; ++i) a.push_back(json_number(v[i]));
    return a;
}

inline Json to_json(const QuadratureResult& q) {
    Json j{{"value", json_number(q.value)},
           {"error_estimate", json_number(q.error_estimate)},
           {"method", std::string(to_string(q.method))},
           {"resolution", json_number(q.resolution)},
           {"seed", q.seed}};
    if (q.vector_valued) j["vector_value"] = vec_json(q.vector_value, 3);
    if (q.sample_count > 0) j["sample_count"] = q.sample_count;
    return j;
}

inline Json to_json(const BoundReport& r) {
    Json ingredients = Json::array();
    for (const auto& i : r.ingredients)
        ingredients.push_back({{"name", i.name},
                               {"value", json_number(i.value)},
                               {"error", json_number(i.error)},
                               {"provenance", i.provenance}});
    return Json{{"id", std::string(to_string(r.id))},
                {"lhs", json_number(r.lhs)},
                {"rhs", json_number(r.rhs)},
                {"slack", json_number(r.slack)},
                {"tolerance", json_number(r.tolerance)},
                {"combined_error", json_number(r.combined_error)},
                {"verdict", std::string(to_string(r.verdict))},
                {"proven", is_proven(r.id)},
                {"ingredients", ingredients},
                {"flags", r.flags},
                {"config_id", r.config_id},
                {"seed", r.seed},
                {"resolution", json_number(r.resolution)}};
}

inline const char* kSummaryHeader = "check_id,lhs,rhs,slack,verdict,seed,resolution";

inline std::string summary_row(const BoundReport& r) {
    return std::string(to_string(r.id)) + "," + fmt(r.lhs) + "," + fmt(r.rhs) + "," + fmt(r.slack) + "," +
           std::string(to_string(r.verdict)) + "," + std::to_string(r.seed) + "," + fmt(r.resolution);
}

inline std::string summary_csv(const std::vector<BoundReport>& reports) {
    std::string out = std::string(kSummaryHeader) + "\n";
    for (const auto& r : reports) out += summary_row(r) + "\n";
    return out;
}

/// facet_id, vertex coordinates, area, normal components.
inline void write_mesh_csv(const SurfaceMesh& mesh, std::ostream& os) {
    const int d = mesh.dimension();
    const char* axes = "xyz";
    os << "facet_id";
    for (int v = 0; v < d; ++v)
        for (int a = 0; a < d; ++a) os << ",v" << v << "_" << axes[a];
    os << ",area";
    for (int a = 0; a < d; ++a) os << ",n_" << axes[a];
    os << "\n";
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const Facet& f = mesh.facets()[i];
        os << i;
        for (const Vec& p : f.vertices())
            for (int a = 0; a < d; ++a) os << "," << fmt(p[a]);
        os << "," << fmt(f.area);
        for (int a = 0; a < d; ++a) os << "," << fmt(f.normal[a]);
        os << "\n";
    }
}

inline void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
    os << "t,x,y\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const Vec p = tr.state(i);
        os << fmt(tr.time(i)) << "," << fmt(p.x) << "," << fmt(p.y) << "\n";
    }
}

inline Json to_json(const MinimalSetProbe& p) {
    Json rows = Json::array();
    for (const auto& r : p.rows)
        rows.push_back({{"horizon", r.horizon},
                        {"displacement", vec_json(r.displacement, 2)},
                        {"magnitude", r.magnitude},
                        {"bound", r.bound},
                        {"residence_time", r.residence_time},
                        {"visits", r.visits},
                        {"loops", r.loops},
                        {"max_loop_displacement", r.max_loop_displacement}});
    return Json{{"x0", vec_json(p.x0, 2)},
                {"y0", vec_json(p.y0, 2)},
                {"r0", p.r0},
                {"rows", rows},
                {"displacement_bounded", p.displacement_bounded()},
                {"loops_bounded", p.loops_bounded()},
                {"residence_growth", json_number(p.residence_growth())}};
}

/// center coordinates, r, mean components, magnitude, bound.
inline void write_disintegration_csv(const DisintegrationEstimate& e, int dim, std::ostream& os) {
    const char* axes = "xyz";
    for (int a = 0; a < dim; ++a) os << "c_" << axes[a] << ",";
    os << "r";
    for (int a = 0; a < dim; ++a) os << ",m_" << axes[a];
    os << ",magnitude,bound,tolerance\n";
    for (const auto& b : e.balls) {
        for (int a = 0; a < dim; ++a) os << fmt(b.center[a]) << ",";
        os << fmt(e.radius);
        for (int a = 0; a < dim; ++a) os << "," << fmt(b.mean[a]);
        os << "," << fmt(b.magnitude) << "," << fmt(b.bound) << "," << fmt(b.tolerance) << "\n";
    }
}

/// Minimal SVG writer over a world-space box; y points up.
class SvgCanvas {
public:
    SvgCanvas(const Box& world, double pixels = 600.0) : world_(world) {
        const double w = world.hi.x - world.lo.x, h = world.hi.y - world.lo.y;
        scale_ = pixels / std::max(w, h);
        width_ = w * scale_;
        height_ = h * scale_;
    }

    void polyline(const std::vector<Vec>& pts, bool closed, const std::string& stroke, double width = 1.0) {
        if (pts.empty()) return;
        body_ << "<" << (closed ? "polygon" : "polyline") << " fill=\"none\" stroke=\"" << stroke
              << "\" stroke-width=\"" << fmt_short(width) << "\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) body_ << (i ? " " : "") << px(pts[i]) << "," << py(pts[i]);
        body_ << "\"/>\n";
    }

    void segments(const SurfaceMesh& mesh, const std::string& stroke, double width = 1.0) {
        for (const Facet& f : mesh.facets()) {
            const auto v = f.vertices();
            if (v.size() < 2) continue;
            body_ << "<line x1=\"" << px(v[0]) << "\" y1=\"" << py(v[0]) << "\" x2=\"" << px(v[1]) << "\" y2=\""
                  << py(v[1]) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt_short(width) << "\"/>\n";
        }
    }

    void circle(const Vec& c, double r, const std::string& stroke, const std::string& fill = "none") {
        body_ << "<circle cx=\"" << px(c) << "\" cy=\"" << py(c) << "\" r=\"" << fmt_short(r * scale_)
              << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }

    void rect(const Vec& lo, const Vec& hi, const std::string& fill) {
        body_ << "<rect x=\"" << px(lo) << "\" y=\"" << py(hi) << "\" width=\"" << fmt_short((hi.x - lo.x) * scale_)
              << "\" height=\"" << fmt_short((hi.y - lo.y) * scale_) << "\" fill=\"" << fill << "\"/>\n";
    }

    void text(const Vec& at, const std::string& s, double size = 12.0) {
        body_ << "<text x=\"" << px(at) << "\" y=\"" << py(at) << "\" font-size=\"" << fmt_short(size)
              << "\" font-family=\"monospace\">" << s << "</text>\n";
    }

    std::string str() const {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_short(width_) << "\" height=\""
           << fmt_short(height_) << "\" viewBox=\"0 0 " << fmt_short(width_) << " " << fmt_short(height_) << "\">\n"
           << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << body_.str() << "</svg>\n";
        return os.str();
    }

private:
    std::string px(const Vec& p) const { return fmt_short((p.x - world_.lo.x) * scale_); }
    std::string py(const Vec& p) const { return fmt_short((world_.hi.y - p.y) * scale_); }

    Box world_;
    double scale_ = 1.0, width_ = 0.0, height_ = 0.0;
    std::ostringstream body_;
};

/// Planar bounding box that starts empty and grows by points.
struct PlanarBounds {
    Box box{{1e300, 1e300, 0}, {-1e300, -1e300, 0}};
    void add(const Vec& v) {
        box.lo.x = std::min(box.lo.x, v.x);
        box.lo.y = std::min(box.lo.y, v.y);
        box.hi.x = std::max(box.hi.x, v.x);
        box.hi.y = std::max(box.hi.y, v.y);
    }
    Box get() const { return box.hi.x < box.lo.x ? Box{{0, 0, 0}, {1, 1, 0}} : box; }
};

inline Box padded_box(const Box& b, double frac = 0.05) {
    const double pad = frac * std::max(b.hi.x - b.lo.x, b.hi.y - b.lo.y);
    return Box{b.lo - Vec{pad, pad, 0}, b.hi + Vec{pad, pad, 0}};
}

/// Planar boundary meshes, one stroke colour each.
inline std::string svg_meshes(const std::vector<std::pair<const SurfaceMesh*, std::string>>& meshes) {
    PlanarBounds world;
    for (const auto& [m, _] : meshes)
        for (const Vec& v : m->vertices()) world.add(v);
    SvgCanvas c(padded_box(world.get()));
    for (const auto& [m, colour] : meshes) c.segments(*m, colour, 1.0);
    return c.str();
}

/// Trajectory with the boundary of D2 and the probe ball overlaid.
inline std::string svg_phase_portrait(const Trajectory& tr, const SurfaceMesh* d2_boundary, const Vec* ball_center,
                                      double ball_radius) {
    PlanarBounds world;
    auto grow = [&](const Vec& v) { world.add(v); };
    const auto pts = sample_trajectory(tr, 2);
    for (const Vec& p : pts) grow(p);
    if (d2_boundary)
        for (const Vec& v : d2_boundary->vertices()) grow(v);
    if (ball_center) {
        grow(*ball_center - Vec{ball_radius, ball_radius, 0});
        grow(*ball_center + Vec{ball_radius, ball_radius, 0});
    }
    SvgCanvas c(padded_box(world.get()));
    if (d2_boundary) c.segments(*d2_boundary, "#1f77b4", 1.5);
    c.polyline(pts, false, "#333333", 1.0);
    if (ball_center) c.circle(*ball_center, ball_radius, "#d62728", "#d6272833");
    return c.str();
}

/// Heat map of ball-mean magnitudes on a planar grid of centers, with the source mesh.
inline std::string svg_heat_map(const DisintegrationEstimate& e, const SurfaceMesh& mesh) {
    PlanarBounds world;
    for (const auto& b : e.balls) {
        world.add(b.center - Vec{e.radius, e.radius, 0});
        world.add(b.center + Vec{e.radius, e.radius, 0});
    }
    SvgCanvas c(padded_box(world.get()));
    const double top = std::max(e.max_magnitude(), e.balls.empty() ? 0.0 : e.balls.front().bound);
    for (const auto& b : e.balls) {
        const double s = top > 0.0 ? std::clamp(b.magnitude / top, 0.0, 1.0) : 0.0;
        char colour[8];
        std::snprintf(colour, sizeof colour, "#%02x%02x%02x", 255, static_cast<int>(255 * (1 - s)),
                      static_cast<int>(255 * (1 - s)));
        c.circle(b.center, e.radius, "#999999", colour);
        c.text(b.center, fmt_short(b.magnitude), 10.0);
    }
    c.segments(mesh, "#000000", 0.5);
    return c.str();
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::RuntimeFailure, "cannot write " + path);
    f << content;
}

/// FNV-1a 64-bit, hex encoded.
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fluxgauge
