#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fluxgauge/bounds.hpp"
#include "fluxgauge/error.hpp"
#include "fluxgauge/fields.hpp"
#include "fluxgauge/geometry/curve.hpp"
#include "fluxgauge/geometry/domain.hpp"
#include "fluxgauge/geometry/mesh.hpp"
#include "fluxgauge/summation.hpp"

namespace fluxgauge {

/// Accepted steps of an ODE solution with cubic Hermite dense output.
///
/// A reversed trajectory shares the forward data and maps indices and times, so reversal
/// is an exact involution.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<double> times, std::vector<Vec> states, std::vector<Vec> velocities, double step_tolerance)
        : t_(std::move(times)), x_(std::move(states)), v_(std::move(velocities)), tol_(step_tolerance) {
        if (t_.size() != x_.size() || t_.size() != v_.size() || t_.empty())
            throw Error(ErrorCode::BadParams, "trajectory arrays must be nonempty and of equal length");
        for (std::size_t i = 1; i < t_.size(); ++i)
            if (!(t_[i] > t_[i - 1])) throw Error(ErrorCode::BadParams, "trajectory times must increase strictly");
    }

    std::size_t size() const { return t_.size(); }
    double step_tolerance() const { return tol_; }
    bool is_reversed() const { return reversed_; }
    double start_time() const { return t_.front(); }
    double end_time() const { return t_.back(); }

    double time(std::size_t i) const { return reversed_ ? mirror(t_[raw(i)]) : t_[i]; }
    Vec state(std::size_t i) const { return x_[raw(i)]; }
    Vec velocity(std::size_t i) const { return reversed_ ? -v_[raw(i)] : v_[i]; }

    std::vector<double> times() const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = time(i);
        return out;
    }
    std::vector<Vec> states() const {
        std::vector<Vec> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = state(i);
        return out;
    }

    /// Dense output at time t in [start_time, end_time].
    Vec at(double t) const { return forward_at(reversed_ ? mirror(t) : t); }

    Trajectory reversed() const {
        Trajectory r = *this;
        r.reversed_ = !reversed_;
        return r;
    }

    /// Same path in its stored (forward) orientation.
    Trajectory forward() const {
        Trajectory r = *this;
        r.reversed_ = false;
        return r;
    }

    /// Cubic Hermite interpolant on the stored data.
    Vec forward_at(double t) const {
        if (t <= t_.front()) return x_.front();
        if (t >= t_.back()) return x_.back();
        const auto it = std::upper_bound(t_.begin(), t_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
        const double dt = t_[i + 1] - t_[i];
        const double s = (t - t_[i]) / dt;
        const double s2 = s * s, s3 = s2 * s;
        return x_[i] * (2 * s3 - 3 * s2 + 1) + v_[i] * (dt * (s3 - 2 * s2 + s)) + x_[i + 1] * (-2 * s3 + 3 * s2) +
               v_[i + 1] * (dt * (s3 - s2));
    }

    const std::vector<double>& forward_times() const { return t_; }

private:
    std::size_t raw(std::size_t i) const { return reversed_ ? t_.size() - 1 - i : i; }
    double mirror(double t) const { return t_.front() + t_.back() - t; }

    std::vector<double> t_;
    std::vector<Vec> x_;
    std::vector<Vec> v_;
    double tol_ = 0.0;
    bool reversed_ = false;
};

struct IntegrateOptions {
    double tol = 1e-10;
    double min_step = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 20'000'000;
};

/// Dormand-Prince 5(4) with step-size control and first-same-as-last reuse.
inline Trajectory integrate(const VectorField& field, const Vec& x0, double T, const IntegrateOptions& o = {}) {
    if (field.dimension() != 2) throw Error(ErrorCode::DimensionMismatch, "integration is planar");
    if (!(T > 0.0)) throw Error(ErrorCode::BadParams, "horizon must be positive");
    if (!(o.tol > 0.0)) throw Error(ErrorCode::BadParams, "tolerance must be positive");
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2, (void)c3, (void)c4, (void)c5;

    Vec x{x0.x, x0.y, 0.0};
    Vec k1 = field(x);
    std::vector<double> ts{0.0};
    std::vector<Vec> xs{x}, vs{k1};
    double t = 0.0;
    const double d0 = norm(x), d1 = norm(k1);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-4 : 0.01 * d0 / d1;
    h = std::min({h, T, o.max_step});
    h = std::max(h, 1e-6 * T);
    std::size_t steps = 0;
    while (t < T) {
        if (++steps > o.max_steps) throw Error(ErrorCode::StepUnderflow, "step budget exhausted");
        bool last = false;
        if (t + h >= T) {
            h = T - t;
            last = true;
        }
        const Vec k2 = field(x + k1 * (h * a21));
        const Vec k3 = field(x + (k1 * a31 + k2 * a32) * h);
        const Vec k4 = field(x + (k1 * a41 + k2 * a42 + k3 * a43) * h);
        const Vec k5 = field(x + (k1 * a51 + k2 * a52 + k3 * a53 + k4 * a54) * h);
        const Vec k6 = field(x + (k1 * a61 + k2 * a62 + k3 * a63 + k4 * a64 + k5 * a65) * h);
        Vec xn = x + (k1 * b1 + k3 * b3 + k4 * b4 + k5 * b5 + k6 * b6) * h;
        xn.z = 0.0;
        const Vec k7 = field(xn);
        const Vec e = (k1 * e1 + k3 * e3 + k4 * e4 + k5 * e5 + k6 * e6 + k7 * e7) * h;
        double err = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double sc = o.tol * (1.0 + std::max(std::abs(x[i]), std::abs(xn[i])));
            err = std::max(err, std::abs(e[i]) / sc);
        }
        if (!std::isfinite(err)) err = 1e10;
        if (err <= 1.0) {
            t = last ? T : t + h;
            x = xn;
            k1 = k7;
            ts.push_back(t);
            xs.push_back(x);
            vs.push_back(k1);
        }
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h = std::min(h * (err <= 1.0 ? std::min(fac, 5.0) : std::min(fac, 1.0)), o.max_step);
        if (t < T && h < o.min_step)
            throw Error(ErrorCode::StepUnderflow, "required step below " + std::to_string(o.min_step) +
                                                      " at t=" + std::to_string(t));
    }
    return Trajectory(std::move(ts), std::move(xs), std::move(vs), o.tol);
}

struct MaskedInterval {
    double t_entry = 0.0;
    double t_exit = 0.0;
    Vec entry;
    Vec exit;
};

struct MaskedDisplacement {
    Vec displacement;
    double residence_time = 0.0;
    std::vector<MaskedInterval> intervals;
};

namespace detail {

using PathFn = std::function<Vec(double)>;

/// Level of the bracketed crossing must drop to this before it is accepted.
inline constexpr double kCrossingTol = 1e-9;

inline double bisect_crossing(const PathFn& x, const ImplicitDomain& d, double a, double b, bool a_inside) {
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double v = d.level(x(m));
        if (std::abs(v) <= kCrossingTol) return m;
        if ((v <= 0.0) == a_inside)
            a = m;
        else
            b = m;
        if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(m)) break;
    }
    const double m = 0.5 * (a + b);
    if (std::abs(d.level(x(m))) <= kCrossingTol) return m;
    throw Error(ErrorCode::CrossingUnresolved, "boundary crossing could not be located to 1e-9");
}

/// Inside intervals of a path over [nodes.front(), nodes.back()].
///
/// Each node interval is split into `sub` pieces; pieces whose end values could hide a
/// double crossing given the Lipschitz bound are bisected up to `max_depth` levels.
inline std::vector<MaskedInterval> masked_intervals(const PathFn& x, const std::vector<double>& nodes,
                                                    const ImplicitDomain& d, int sub = 8, int max_depth = 12) {
    std::vector<MaskedInterval> out;
    if (nodes.size() < 2) return out;
    const double lip = d.lipschitz_hint();
    double t_prev = nodes.front();
    Vec x_prev = x(t_prev);
    double v_prev = d.level(x_prev);
    bool inside = v_prev <= 0.0;
    if (inside) out.push_back({t_prev, t_prev, x_prev, x_prev});

    auto on_crossing = [&](double a, double b, bool a_inside) {
        const double tc = bisect_crossing(x, d, a, b, a_inside);
        const Vec xc = x(tc);
        if (a_inside) {
            out.back().t_exit = tc;
            out.back().exit = xc;
        } else {
            out.push_back({tc, tc, xc, xc});
        }
        inside = !a_inside;
    };

    std::function<void(double, Vec, double, double, Vec, double, int)> piece =
        [&](double ta, Vec xa, double va, double tb, Vec xb, double vb, int depth) {
            const bool ia = va <= 0.0, ib = vb <= 0.0;
            if (ia != ib && depth >= max_depth) {
                on_crossing(ta, tb, ia);
                return;
            }
            const bool may_hide = std::abs(va) + std::abs(vb) <= 2.0 * lip * distance(xa, xb) + 1e-15;
            if (ia == ib && (!may_hide || depth >= max_depth)) return;
            if (ia != ib && !may_hide) {
                on_crossing(ta, tb, ia);
                return;
            }
            const double tm = 0.5 * (ta + tb);
            const Vec xm = x(tm);
            const double vm = d.level(xm);
            piece(ta, xa, va, tm, xm, vm, depth + 1);
            piece(tm, xm, vm, tb, xb, vb, depth + 1);
        };

    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double a = nodes[i], b = nodes[i + 1];
        for (int s = 1; s <= sub; ++s) {
            const double t = s == sub ? b : a + (b - a) * s / sub;
            const Vec xt = x(t);
            const double vt = d.level(xt);
            piece(t_prev, x_prev, v_prev, t, xt, vt, 0);
            t_prev = t;
            x_prev = xt;
            v_prev = vt;
        }
    }
    if (inside) {
        out.back().t_exit = t_prev;
        out.back().exit = x_prev;
    }
    return out;
}

inline MaskedDisplacement summarize(std::vector<MaskedInterval> intervals) {
    MaskedDisplacement m;
    CompensatedVecSum disp;
    CompensatedSum res;
    for (const auto& iv : intervals) {
        disp += iv.exit - iv.entry;
        res += iv.t_exit - iv.t_entry;
    }
    m.displacement = disp.value();
    m.residence_time = res.value();
    m.intervals = std::move(intervals);
    return m;
}

}  // namespace detail

/// Integral of chi_D(x(t)) x'(t) dt, which telescopes to the sum of exit - entry chords.
inline MaskedDisplacement masked_displacement(const Trajectory& traj, const ImplicitDomain& d) {
    if (d.dimension() != 2) throw Error(ErrorCode::DimensionMismatch, "masked displacement is planar");
    const Trajectory fwd = traj.forward();
    auto intervals = detail::masked_intervals([&fwd](double t) { return fwd.forward_at(t); }, fwd.forward_times(), d);
    MaskedDisplacement m = detail::summarize(std::move(intervals));
    if (traj.is_reversed()) {
        const double t0 = traj.start_time(), t1 = traj.end_time();
        m.displacement = -m.displacement;
        std::reverse(m.intervals.begin(), m.intervals.end());
        for (auto& iv : m.intervals) {
            iv = {t0 + t1 - iv.t_exit, t0 + t1 - iv.t_entry, iv.exit, iv.entry};
        }
    }
    return m;
}

/// Masked displacement of a closed parametric curve sampled at `nodes` uniform parameters.
inline MaskedDisplacement masked_displacement(const ParametricCurve& c, const ImplicitDomain& d,
                                              std::size_t nodes = 4096) {
    if (d.dimension() != 2) throw Error(ErrorCode::DimensionMismatch, "masked displacement is planar");
    std::vector<double> ts(nodes + 1);
    for (std::size_t i = 0; i <= nodes; ++i) ts[i] = c.period * static_cast<double>(i) / static_cast<double>(nodes);
    return detail::summarize(detail::masked_intervals([&c](double t) { return c(t); }, ts, d));
}

/// Gauss-Legendre quadrature of f(x(t)) over the inside intervals; agrees with the chord
/// sum up to integration error when x' = f(x).
inline Vec masked_velocity_quadrature(const Trajectory& traj, const MaskedDisplacement& m, const VectorField& f,
                                      int panels_per_interval = 64) {
    static constexpr std::array<double, 5> node{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                                0.9061798459386640};
    static constexpr std::array<double, 5> weight{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                  0.2369268850561891, 0.2369268850561891};
    CompensatedVecSum acc;
    for (const auto& iv : m.intervals) {
        const double w = (iv.t_exit - iv.t_entry) / panels_per_interval;
        if (!(w > 0.0)) continue;
        for (int p = 0; p < panels_per_interval; ++p) {
            const double mid = iv.t_entry + (p + 0.5) * w;
            for (std::size_t q = 0; q < node.size(); ++q)
                acc += f(traj.at(mid + 0.5 * w * node[q])) * (weight[q] * 0.5 * w);
        }
    }
    return acc.value();
}

namespace detail {

inline double orient(const Vec& a, const Vec& b, const Vec& c) { return cross(b - a, c - a).z; }

inline bool on_segment(const Vec& a, const Vec& b, const Vec& p, double eps) {
    return std::min(a.x, b.x) - eps <= p.x && p.x <= std::max(a.x, b.x) + eps && std::min(a.y, b.y) - eps <= p.y &&
           p.y <= std::max(a.y, b.y) + eps;
}

inline bool segments_intersect(const Vec& p1, const Vec& p2, const Vec& q1, const Vec& q2, double eps) {
    const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2), d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
    if (((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)))
        return true;
    const double len = std::max(distance(p1, p2), distance(q1, q2));
    const double tol = eps * std::max(1.0, len);
    if (std::abs(d1) <= tol && on_segment(q1, q2, p1, tol)) return true;
    if (std::abs(d2) <= tol && on_segment(q1, q2, p2, tol)) return true;
    if (std::abs(d3) <= tol && on_segment(p1, p2, q1, tol)) return true;
    if (std::abs(d4) <= tol && on_segment(p1, p2, q2, tol)) return true;
    return false;
}

}  // namespace detail

/// Segment-intersection scan of a polyline using a uniform hash grid. Adjacent segments
/// (including the closing pair of a closed polyline) are not compared.
inline bool is_simple_polyline(const std::vector<Vec>& pts, bool closed) {
    const std::size_t n = pts.size();
    const std::size_t segs = closed ? n : (n == 0 ? 0 : n - 1);
    if (segs < 3) return true;
    double total = 0.0;
    for (std::size_t i = 0; i < segs; ++i) total += distance(pts[i], pts[(i + 1) % n]);
    const double cell = std::max(2.0 * total / static_cast<double>(segs), 1e-12);
    const double eps = 1e-12;
    auto key = [](std::int64_t i, std::int64_t j) { return (static_cast<std::uint64_t>(i) << 32) ^ static_cast<std::uint32_t>(j); };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
    for (std::size_t s = 0; s < segs; ++s) {
        const Vec& a = pts[s];
        const Vec& b = pts[(s + 1) % n];
        const auto i0 = static_cast<std::int64_t>(std::floor(std::min(a.x, b.x) / cell));
        const auto i1 = static_cast<std::int64_t>(std::floor(std::max(a.x, b.x) / cell));
        const auto j0 = static_cast<std::int64_t>(std::floor(std::min(a.y, b.y) / cell));
        const auto j1 = static_cast<std::int64_t>(std::floor(std::max(a.y, b.y) / cell));
        for (auto i = i0; i <= i1; ++i)
            for (auto j = j0; j <= j1; ++j) {
                auto& bucket = grid[key(i, j)];
                for (std::size_t o : bucket) {
                    const std::size_t gap = s > o ? s - o : o - s;
                    if (gap <= 1 || (closed && gap == segs - 1)) continue;
                    if (detail::segments_intersect(a, b, pts[o], pts[(o + 1) % n], eps)) return false;
                }
                bucket.push_back(s);
            }
    }
    return true;
}

/// Dense samples of a trajectory: nodes plus `sub - 1` interpolated points per step.
inline std::vector<Vec> sample_trajectory(const Trajectory& traj, int sub = 4) {
    std::vector<Vec> out;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const double a = traj.time(i), b = traj.time(i + 1);
        for (int s = 0; s < sub; ++s) out.push_back(traj.at(a + (b - a) * s / sub));
    }
    out.push_back(traj.state(traj.size() - 1));
    return out;
}

struct Cor2dOptions {
    double h = 0.005;               // pitch of the perimeter mesh for dD2
    bool allow_non_simple = false;  // report instead of throwing NOT_SIMPLE
    std::size_t curve_nodes = 4096;
    std::size_t simplicity_samples = 20000;
    double closure_tol = 1e-6;
};

namespace detail {

inline BoundReport cor2d_report(const MaskedDisplacement& m, double lhs_error, const ImplicitDomain& d2,
                                const Cor2dOptions& o, bool simple, const std::string& label) {
    if (!simple && !o.allow_non_simple)
        throw Error(ErrorCode::NotSimple, label + " intersects itself; the bound requires a Jordan curve");
    BoundReport r;
    r.id = InequalityId::Cor2d;
    r.config_id = label + "|" + d2.label();
    r.resolution = o.h;
    const double perim = mesh_boundary(d2, o.h).total_area();
    const double perim_err = std::abs(perim - mesh_boundary(d2, 2.0 * o.h).total_area());
    r.lhs = norm(m.displacement);
    r.rhs = 0.5 * perim;
    r.ingredients.push_back({"masked_displacement_x", m.displacement.x, lhs_error, "dense output + bisection"});
    r.ingredients.push_back({"masked_displacement_y", m.displacement.y, lhs_error, "dense output + bisection"});
    r.ingredients.push_back({"perimeter_dD2", perim, perim_err, mesh_provenance(o.h)});
    r.ingredients.push_back({"residence_time", m.residence_time, 0.0, "dense output + bisection"});
    if (!simple) r.flags.emplace_back(kNotARegularDomain);
    finalize(r, lhs_error, 0.5 * perim_err);
    return r;
}

}  // namespace detail

/// |masked displacement of a closed trajectory| <= perimeter(dD2) / 2.
inline BoundReport check_cor_2d(const Trajectory& traj, const ImplicitDomain& d2, const Cor2dOptions& o = {}) {
    const Vec first = traj.state(0), last = traj.state(traj.size() - 1);
    if (distance(first, last) > o.closure_tol * (1.0 + norm(first)))
        throw Error(ErrorCode::PreconditionFailed, "trajectory is not closed");
    auto pts = sample_trajectory(traj);
    pts.pop_back();
    const bool simple = is_simple_polyline(pts, true);
    const auto m = masked_displacement(traj, d2);
    const double lhs_error = 10.0 * traj.step_tolerance() * (1.0 + norm(first)) + 2.0 * detail::kCrossingTol;
    return detail::cor2d_report(m, lhs_error, d2, o, simple, "trajectory");
}

inline BoundReport check_cor_2d(const ParametricCurve& c, const ImplicitDomain& d2, const Cor2dOptions& o = {}) {
    const bool simple = is_simple_polyline(sample_curve(c, o.simplicity_samples), true);
    const auto m = masked_displacement(c, d2, o.curve_nodes);
    return detail::cor2d_report(m, 4.0 * detail::kCrossingTol, d2, o, simple, c.label);
}

inline BoundReport check_cor_2d(const ImmersedCurve& c, const ImplicitDomain& d2, const Cor2dOptions& o = {}) {
    Cor2dOptions oo = o;
    oo.curve_nodes = o.curve_nodes * static_cast<std::size_t>(c.winding_count);
    oo.simplicity_samples = o.simplicity_samples * static_cast<std::size_t>(c.winding_count);
    return check_cor_2d(c.parametrization, d2, oo);
}

struct ProbeRow {
    double horizon = 0.0;
    Vec displacement;
    double magnitude = 0.0;
    double bound = 0.0;            // pi r0
    double residence_time = 0.0;
    int visits = 0;
    int loops = 0;                 // closed first-return loops completed by the horizon
    double max_loop_displacement = 0.0;
};

struct MinimalSetProbe {
    Vec x0, y0;
    double r0 = 0.0;
    std::vector<ProbeRow> rows;
    Trajectory trajectory;
    std::vector<double> return_times;  // first-return times to the section through x0

    bool displacement_bounded(double tol = 1e-3) const {
        for (const auto& r : rows)
            if (r.magnitude > r.bound + tol) return false;
        return true;
    }
    double residence_growth() const {
        if (rows.size() < 2 || rows.front().residence_time <= 0.0) return 0.0;
        return rows.back().residence_time / rows.front().residence_time;
    }
    bool loops_bounded(double tol = 1e-3) const {
        for (const auto& r : rows)
            if (r.max_loop_displacement > r.bound + tol) return false;
        return true;
    }
};

/// Masked displacement into B(y0, r0) and residence time along one trajectory from x0,
/// truncated at each horizon. Also reports, per horizon, the largest masked displacement of
/// a single first-return loop (the arc between consecutive same-direction crossings of the
/// line through x0 normal to f(x0), closed by a segment on that line).
inline MinimalSetProbe minimal_set_probe(const VectorField& f, const Vec& x0, const Vec& y0, double r0,
                                         const std::vector<double>& horizons, const IntegrateOptions& io = {}) {
    if (!(r0 > 0.0)) throw Error(ErrorCode::BadParams, "probe radius must be positive");
    if (horizons.empty()) throw Error(ErrorCode::BadParams, "probe needs horizons");
    for (std::size_t k = 1; k < horizons.size(); ++k)
        if (!(horizons[k] > horizons[k - 1])) throw Error(ErrorCode::BadParams, "horizons must increase");
    MinimalSetProbe p;
    p.x0 = x0;
    p.y0 = y0;
    p.r0 = r0;
    p.trajectory = integrate(f, x0, horizons.back(), io);
    const Trajectory& tr = p.trajectory;
    const detail::PathFn path = [&tr](double t) { return tr.forward_at(t); };
    const auto ball = ImplicitDomain([y0, r0](const Vec& x) { return distance(x, y0) - r0; }, 2,
                                     Box{y0 - Vec{r0, r0, 0}, y0 + Vec{r0, r0, 0}}, 1.0, "probe_ball", true);
    const auto intervals = detail::masked_intervals(path, tr.forward_times(), ball);

    // Section through x0 normal to f(x0); returns are kept only near x0 so closing segments avoid the ball.
    const Vec f0 = f(x0);
    if (norm(f0) > 0.0) {
        const Vec n0 = normalized(f0);
        const auto half = ImplicitDomain([x0, n0](const Vec& x) { return dot(x - x0, n0); }, 2,
                                         Box{x0 - Vec{1, 1, 0}, x0 + Vec{1, 1, 0}}, 1.0, "section", true, false);
        const double reach = std::max(0.0, 0.5 * distance(x0, y0) - r0);
        for (const auto& iv : detail::masked_intervals(path, tr.forward_times(), half)) {
            // Exits of {(x - x0) . n0 <= 0} are crossings in the direction of f(x0).
            if (iv.t_exit > iv.t_entry && iv.t_exit < tr.end_time() && iv.t_exit > tr.start_time() + 1e-9 &&
                distance(iv.exit, x0) < reach)
                p.return_times.push_back(iv.t_exit);
        }
    }

    auto displacement_between = [&](double a, double b, double* residence, int* visits) {
        CompensatedVecSum d;
        CompensatedSum res;
        int v = 0;
        for (const auto& iv : intervals) {
            const double lo = std::max(a, iv.t_entry), hi = std::min(b, iv.t_exit);
            if (hi < lo || (hi == lo && iv.t_exit > iv.t_entry)) continue;
            const Vec xe = lo == iv.t_entry ? iv.entry : tr.forward_at(lo);
            const Vec xx = hi == iv.t_exit ? iv.exit : tr.forward_at(hi);
            d += xx - xe;
            res += hi - lo;
            ++v;
        }
        if (residence) *residence = res.value();
        if (visits) *visits = v;
        return d.value();
    };

    for (double T : horizons) {
        ProbeRow row;
        row.horizon = T;
        row.bound = std::numbers::pi * r0;
        row.displacement = displacement_between(0.0, T, &row.residence_time, &row.visits);
        row.magnitude = norm(row.displacement);
        double prev = 0.0;
        for (double rt : p.return_times) {
            if (rt > T) break;
            row.max_loop_displacement =
                std::max(row.max_loop_displacement, norm(displacement_between(prev, rt, nullptr, nullptr)));
            ++row.loops;
            prev = rt;
        }
        p.rows.push_back(row);
    }
    return p;
}

}  // namespace fluxgauge
