#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fluxgauge/error.hpp"
#include "fluxgauge/geometry/mesh.hpp"
#include "fluxgauge/summation.hpp"

namespace fluxgauge {

/// Closed planar curve t -> x(t), periodic with period `period`.
struct ParametricCurve {
    std::function<Vec(double)> eval;
    double period = 2.0 * std::numbers::pi;
    std::string label;

    Vec operator()(double t) const { return eval(t); }

    Vec derivative(double t) const {
        const double step = 1e-6 * period;
        return (eval(t + step) - eval(t - step)) / (2.0 * step);
    }
};

inline ParametricCurve circle_curve(const Vec& center, double radius) {
    return {[center, radius](double t) { return center + Vec{std::cos(t), std::sin(t), 0.0} * radius; },
            2.0 * std::numbers::pi, "circle"};
}

inline ParametricCurve ellipse_curve(const Vec& center, double a, double b) {
    return {[center, a, b](double t) { return center + Vec{a * std::cos(t), b * std::sin(t), 0.0}; },
            2.0 * std::numbers::pi, "ellipse"};
}

/// A base curve traversed m times; not the boundary of any regular domain when m > 1.
struct ImmersedCurve {
    ParametricCurve parametrization;  // over [0, m * base period]
    int winding_count = 1;
    double perturbation_scale = 0.0;

    double parameter_length() const { return parametrization.period; }
};

/// Traverses `base` m times, pushing sheet points along the base's right-hand normal by
/// eps * sin(t / m) (t in base-period units) so that the sheets are distinguishable.
inline ImmersedCurve make_m_cover(const ParametricCurve& base, int m, double perturbation) {
    if (m < 1) throw Error(ErrorCode::BadParams, "cover multiplicity must be at least 1");
    const double tau = base.period;
    const double omega = 2.0 * std::numbers::pi / (m * tau);
    auto eval = [base, tau, omega, perturbation](double t) {
        const double s = t - tau * std::floor(t / tau);
        const Vec p = base(s);
        if (perturbation == 0.0) return p;
        const Vec tangent = base.derivative(s);
        const Vec normal = normalized(Vec{tangent.y, -tangent.x, 0.0});
        return p + normal * (perturbation * std::sin(omega * t));
    };
    ImmersedCurve c;
    c.parametrization = {eval, m * tau, base.label + "x" + std::to_string(m)};
    c.winding_count = m;
    c.perturbation_scale = perturbation;
    return c;
}

/// Arc length by composite 5-point Gauss-Legendre on |x'(t)|.
inline double curve_length(const ParametricCurve& c, int panels_per_unit_period = 512) {
    static constexpr std::array<double, 5> node{0.0, -0.5384693101056831, 0.5384693101056831,
                                                -0.9061798459386640, 0.9061798459386640};
    static constexpr std::array<double, 5> weight{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                  0.2369268850561891, 0.2369268850561891};
    const int panels = std::max(1, static_cast<int>(std::ceil(panels_per_unit_period * c.period /
                                                               (2.0 * std::numbers::pi))));
    const double width = c.period / panels;
    CompensatedSum total;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * width;
        for (std::size_t q = 0; q < node.size(); ++q)
            total += weight[q] * 0.5 * width * norm(c.derivative(mid + 0.5 * width * node[q]));
    }
    return total.value();
}

inline double curve_length(const ImmersedCurve& c, int panels_per_unit_period = 512) {
    return curve_length(c.parametrization, panels_per_unit_period);
}

/// Samples t_i = i * period / n for i < n (the closing point is implied).
inline std::vector<Vec> sample_curve(const ParametricCurve& c, std::size_t n) {
    std::vector<Vec> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = c(c.period * static_cast<double>(i) / static_cast<double>(n));
    return pts;
}

/// Closed polyline mesh of a curve, normals on the right of the direction of travel.
inline SurfaceMesh curve_mesh(const ParametricCurve& c, std::size_t segments) {
    const auto pts = sample_curve(c, segments);
    return polyline_mesh(pts, true, c.label);
}

inline SurfaceMesh curve_mesh(const ImmersedCurve& c, std::size_t segments_per_sheet) {
    return curve_mesh(c.parametrization, segments_per_sheet * static_cast<std::size_t>(c.winding_count));
}

}  // namespace fluxgauge
