#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fluxgauge/error.hpp"
#include "fluxgauge/geometry/domain.hpp"
#include "fluxgauge/random.hpp"
#include "fluxgauge/vec.hpp"

namespace fluxgauge {

enum class DivergenceMode { Analytic, FiniteDifference };

/// A vector field f: R^d -> R^d with its divergence.
class VectorField {
public:
    using EvalFn = std::function<Vec(const Vec&)>;
    using DivFn = std::function<double(const Vec&)>;

    VectorField(EvalFn eval, int dim, std::string label, DivFn div = {})
        : eval_(std::move(eval)), div_(std::move(div)), dim_(dim), label_(std::move(label)) {
        if (dim_ != 2 && dim_ != 3) throw Error(ErrorCode::BadParams, "field dimension must be 2 or 3");
    }

    Vec operator()(const Vec& x) const { return eval_(x); }
    int dimension() const { return dim_; }
    const std::string& label() const { return label_; }
    DivergenceMode divergence_mode() const {
        return div_ ? DivergenceMode::Analytic : DivergenceMode::FiniteDifference;
    }

    /// Global bound on |f|, when one is known in closed form.
    std::optional<double> sup_norm_hint() const { return sup_hint_; }
    /// Global bound on |div f|, when one is known in closed form.
    std::optional<double> div_sup_norm_hint() const { return div_hint_; }
    bool divergence_free() const { return divergence_free_; }

    VectorField& set_sup_norm_hint(double v) {
        sup_hint_ = v;
        return *this;
    }
    VectorField& set_div_sup_norm_hint(double v) {
        div_hint_ = v;
        return *this;
    }
    VectorField& set_divergence_free(bool v) {
        divergence_free_ = v;
        if (v) div_hint_ = 0.0;
        return *this;
    }

    static double fd_step(const Vec& x) {
        return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + norm(x));
    }

    /// Central-difference divergence with step delta.
    double fd_divergence(const Vec& x, double delta) const {
        double acc = 0.0;
        for (int i = 0; i < dim_; ++i) {
            Vec xp = x, xm = x;
            xp[i] += delta;
            xm[i] -= delta;
            acc += (eval_(xp)[i] - eval_(xm)[i]) / (2.0 * delta);
        }
        return acc;
    }

    double divergence(const Vec& x) const { return div_ ? div_(x) : fd_divergence(x, fd_step(x)); }

    /// Sum of two fields of the same dimension.
    friend VectorField operator+(const VectorField& a, const VectorField& b) {
        if (a.dim_ != b.dim_) throw Error(ErrorCode::DimensionMismatch, "field dimensions differ");
        VectorField out([a, b](const Vec& x) { return a(x) + b(x); }, a.dim_, a.label_ + "+" + b.label_,
                        [a, b](const Vec& x) { return a.divergence(x) + b.divergence(x); });
        return out;
    }
    friend VectorField operator*(double s, const VectorField& a) {
        VectorField out([a, s](const Vec& x) { return a(x) * s; }, a.dim_, a.label_,
                        [a, s](const Vec& x) { return s * a.divergence(x); });
        if (a.sup_hint_) out.set_sup_norm_hint(std::abs(s) * *a.sup_hint_);
        if (a.div_hint_) out.set_div_sup_norm_hint(std::abs(s) * *a.div_hint_);
        out.divergence_free_ = a.divergence_free_;
        return out;
    }

private:
    EvalFn eval_;
    DivFn div_;
    int dim_;
    std::string label_;
    std::optional<double> sup_hint_;
    std::optional<double> div_hint_;
    bool divergence_free_ = false;
};

inline double divergence(const VectorField& field, const Vec& x) { return field.divergence(x); }

namespace fields {

inline VectorField constant(const Vec& v, int dim) {
    VectorField f([v](const Vec&) { return v; }, dim, "constant", [](const Vec&) { return 0.0; });
    f.set_sup_norm_hint(norm(v)).set_divergence_free(true);
    return f;
}

/// f(x) = x.
inline VectorField identity(int dim) {
    VectorField f([dim](const Vec& x) { return dim == 2 ? Vec{x.x, x.y, 0.0} : x; }, dim, "identity",
                  [dim](const Vec&) { return static_cast<double>(dim); });
    f.set_div_sup_norm_hint(dim);
    return f;
}

/// (-y, x) in the plane; rotation about the z axis in R^3.
inline VectorField rotation(int dim) {
    VectorField f([](const Vec& x) { return Vec{-x.y, x.x, 0.0}; }, dim, "rotation",
                  [](const Vec&) { return 0.0; });
    f.set_divergence_free(true);
    return f;
}

/// (s * y, 0[, 0]).
inline VectorField shear(int dim, double s = 1.0) {
    VectorField f([s](const Vec& x) { return Vec{s * x.y, 0.0, 0.0}; }, dim, "shear",
                  [](const Vec&) { return 0.0; });
    f.set_divergence_free(true);
    return f;
}

/// (x^2, y[, z]) with divergence 2x + d - 1.
inline VectorField quadratic(int dim) {
    VectorField f([dim](const Vec& x) { return Vec{x.x * x.x, x.y, dim == 3 ? x.z : 0.0}; }, dim, "quadratic",
                  [dim](const Vec& x) { return 2.0 * x.x + (dim - 1); });
    return f;
}

/// (x^2, xy[, z^2]) with divergence 3x (+ 2z).
inline VectorField polynomial(int dim) {
    VectorField f([dim](const Vec& x) { return Vec{x.x * x.x, x.x * x.y, dim == 3 ? x.z * x.z : 0.0}; }, dim,
                  "polynomial", [dim](const Vec& x) { return 3.0 * x.x + (dim == 3 ? 2.0 * x.z : 0.0); });
    return f;
}

/// curl of (0, 0, xy) = (x, -y, 0); divergence-free in R^3.
inline VectorField curl_xy(double scale = 1.0) {
    VectorField f([scale](const Vec& x) { return Vec{scale * x.x, -scale * x.y, 0.0}; }, 3, "curl_xy",
                  [](const Vec&) { return 0.0; });
    f.set_divergence_free(true);
    return f;
}

/// Planar limit-cycle field (x(1-r^2) - y, y(1-r^2) + x) with the unit circle as cycle.
inline VectorField limit_cycle() {
    VectorField f(
        [](const Vec& x) {
            const double g = 1.0 - (x.x * x.x + x.y * x.y);
            return Vec{x.x * g - x.y, x.y * g + x.x, 0.0};
        },
        2, "limit_cycle", [](const Vec& x) { return 2.0 - 4.0 * (x.x * x.x + x.y * x.y); });
    return f;
}

/// f(x) = -x.
inline VectorField sink(int dim) {
    VectorField f([dim](const Vec& x) { return dim == 2 ? Vec{-x.x, -x.y, 0.0} : -x; }, dim, "sink",
                  [dim](const Vec&) { return -static_cast<double>(dim); });
    f.set_div_sup_norm_hint(dim);
    return f;
}

}  // namespace fields

/// Catalog lookup by name:
///   constant (params: v_1..v_d), identity, rotation, shear ([s]), quadratic, polynomial,
///   curl ([s], d = 3), limit_cycle (d = 2), sink.
inline VectorField field_catalog(std::string_view name, std::span<const double> params, int dim) {
    auto bad = [&](const std::string& why) { return Error(ErrorCode::BadParams, std::string(name) + ": " + why); };
    if (dim != 2 && dim != 3) throw bad("dimension must be 2 or 3");
    if (name == "constant") {
        if (params.size() != static_cast<std::size_t>(dim)) throw bad("expects d components");
        Vec v;
        for (int i = 0; i < dim; ++i) v[i] = params[i];
        return fields::constant(v, dim);
    }
    auto no_params = [&] {
        if (!params.empty()) throw bad("takes no parameters");
    };
    if (name == "identity") return no_params(), fields::identity(dim);
    if (name == "rotation") return no_params(), fields::rotation(dim);
    if (name == "shear") {
        if (params.size() > 1) throw bad("expects at most one parameter");
        return fields::shear(dim, params.empty() ? 1.0 : params[0]);
    }
    if (name == "quadratic") return no_params(), fields::quadratic(dim);
    if (name == "polynomial") return no_params(), fields::polynomial(dim);
    if (name == "curl") {
        if (dim != 3) throw bad("is three-dimensional");
        if (params.size() > 1) throw bad("expects at most one parameter");
        return fields::curl_xy(params.empty() ? 1.0 : params[0]);
    }
    if (name == "limit_cycle") {
        if (dim != 2) throw bad("is planar");
        return no_params(), fields::limit_cycle();
    }
    if (name == "sink") return no_params(), fields::sink(dim);
    throw bad("unknown field");
}

inline VectorField field_catalog(std::string_view name, std::initializer_list<double> params, int dim) {
    return field_catalog(name, std::span<const double>(params.begin(), params.size()), dim);
}

struct SupNorms {
    double field = 0.0;       // sampled max |f|, a lower bound of the true sup
    double divergence = 0.0;  // sampled max |div f|
    std::size_t inside_samples = 0;
};

/// Halton points in a box, Cranley-Patterson rotated by a seed-derived shift.
class HaltonSequence {
public:
    HaltonSequence(const Box& box, int dim, std::uint64_t seed) : box_(box), dim_(dim) {
        Rng rng(seed, 0x5eed);
        for (double& s : shift_) s = rng.uniform();
    }

    Vec operator[](std::uint64_t i) const {
        static constexpr unsigned bases[3] = {2, 3, 5};
        Vec p;
        for (int k = 0; k < dim_; ++k) {
            double u = radical_inverse(i + 1, bases[k]) + shift_[k];
            u -= std::floor(u);
            p[k] = box_.lo[k] + u * (box_.hi[k] - box_.lo[k]);
        }
        return p;
    }

private:
    Box box_;
    int dim_;
    std::array<double, 3> shift_{};
};

/// Sampled sup norms of |f| and |div f| over the domain's box points inside the domain,
/// plus any extra boundary points supplied by the caller.
inline SupNorms sup_norms(const VectorField& field, const ImplicitDomain& domain, std::size_t samples,
                          std::uint64_t seed, std::span<const Vec> extra_points = {}) {
    if (samples < 1) throw Error(ErrorCode::BadParams, "sup_norms needs at least one sample");
    if (field.dimension() != domain.dimension())
        throw Error(ErrorCode::DimensionMismatch, "field and domain differ in dimension");
    SupNorms out;
    auto visit = [&](const Vec& p) {
        out.field = std::max(out.field, norm(field(p)));
        out.divergence = std::max(out.divergence, std::abs(field.divergence(p)));
    };
    const HaltonSequence seq(domain.bounding_box(), domain.dimension(), seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const Vec p = seq[i];
        if (!domain.contains(p)) continue;
        ++out.inside_samples;
        visit(p);
    }
    for (const Vec& p : extra_points) visit(p);
    return out;
}

}  // namespace fluxgauge
