#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "fluxgauge/error.hpp"
#include "fluxgauge/vec.hpp"

namespace fluxgauge {

enum class Membership { Inside, Boundary, Outside };

/// A regular domain {phi <= 0} given by a level function.
///
/// The bounding box must contain the part of the domain that matters to the
/// caller; meshing and volume integration never look outside it. Unbounded
/// domains (half-spaces) carry a finite box around the region of interest.
class ImplicitDomain {
public:
    using LevelFn = std::function<double(const Vec&)>;
    using GradientFn = std::function<Vec(const Vec&)>;

    ImplicitDomain(LevelFn level, int dim, Box box, double lipschitz_hint = 1.0,
                   std::string label = {}, bool exact_sdf = false, bool bounded = true)
        : level_(std::move(level)),
          dim_(dim),
          box_(box),
          lipschitz_(lipschitz_hint),
          label_(std::move(label)),
          exact_sdf_(exact_sdf),
          bounded_(bounded) {
        if (dim_ != 2 && dim_ != 3) throw Error(ErrorCode::BadParams, "dimension must be 2 or 3");
        if (!(lipschitz_ > 0.0)) throw Error(ErrorCode::BadParams, "lipschitz hint must be positive");
        if (!level_) throw Error(ErrorCode::BadParams, "missing level function");
        band_ = 1e-9 * lipschitz_;
    }

    double level(const Vec& x) const { return level_(x); }
    double operator()(const Vec& x) const { return level_(x); }

    int dimension() const { return dim_; }
    const Box& bounding_box() const { return box_; }
    double lipschitz_hint() const { return lipschitz_; }
    const std::string& label() const { return label_; }
    bool exact_sdf() const { return exact_sdf_; }
    /// False for domains whose box only frames a region of interest.
    bool bounded() const { return bounded_; }
    double band() const { return band_; }

    ImplicitDomain with_band(double band) const {
        ImplicitDomain d = *this;
        d.band_ = band;
        return d;
    }
    ImplicitDomain with_box(const Box& box) const {
        ImplicitDomain d = *this;
        d.box_ = box;
        return d;
    }
    ImplicitDomain with_label(std::string label) const {
        ImplicitDomain d = *this;
        d.label_ = std::move(label);
        return d;
    }
    ImplicitDomain with_gradient(GradientFn g) const {
        ImplicitDomain d = *this;
        d.gradient_ = std::move(g);
        return d;
    }

    Membership classify(const Vec& x) const {
        const double v = level_(x);
        if (v < -band_) return Membership::Inside;
        if (v > band_) return Membership::Outside;
        return Membership::Boundary;
    }

    /// Closed-set membership; band ties count as inside.
    bool contains(const Vec& x) const { return level_(x) <= band_; }

    Vec gradient(const Vec& x) const {
        if (gradient_) return gradient_(x);
        Vec g;
        const double step = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + norm(x));
        for (int i = 0; i < dim_; ++i) {
            Vec xp = x, xm = x;
            xp[i] += step;
            xm[i] -= step;
            g[i] = (level_(xp) - level_(xm)) / (2.0 * step);
        }
        return g;
    }

    /// Newton projection onto {phi = 0} along the gradient.
    Vec project_to_boundary(Vec x, int iterations = 20) const {
        for (int k = 0; k < iterations; ++k) {
            const double v = level_(x);
            if (std::abs(v) <= 1e-14 * (1.0 + norm(x))) break;
            const Vec g = gradient(x);
            const double g2 = dot(g, g);
            if (g2 < 1e-24) break;
            x -= g * (v / g2);
        }
        return x;
    }

private:
    LevelFn level_;
    GradientFn gradient_;
    int dim_;
    Box box_;
    double lipschitz_;
    std::string label_;
    bool exact_sdf_;
    bool bounded_;
    double band_ = 0.0;
};

/// Level-set offset {phi <= eta} of a base domain.
struct OffsetSpec {
    ImplicitDomain base;
    double eta = 0.0;
};

inline ImplicitDomain offset_domain(const OffsetSpec& spec) {
    const ImplicitDomain& base = spec.base;
    const double eta = spec.eta;
    if (eta == 0.0) return base;
    auto fn = [base, eta](const Vec& x) { return base.level(x) - eta; };
    Box box = base.bounding_box().expanded(std::max(0.0, eta), base.dimension());
    ImplicitDomain out(fn, base.dimension(), box, base.lipschitz_hint(),
                       base.label() + "+offset(" + std::to_string(eta) + ")", base.exact_sdf(),
                       base.bounded());
    return out.with_gradient([base](const Vec& x) { return base.gradient(x); });
}

inline ImplicitDomain translate(const ImplicitDomain& base, const Vec& shift) {
    auto fn = [base, shift](const Vec& x) { return base.level(x - shift); };
    Box box{base.bounding_box().lo + shift, base.bounding_box().hi + shift};
    if (base.dimension() == 2) box.lo.z = box.hi.z = 0.0;
    return ImplicitDomain(fn, base.dimension(), box, base.lipschitz_hint(), base.label() + "+shift",
                          base.exact_sdf(), base.bounded());
}

/// Dilation of all of space by lambda > 0 (the scaled level function stays a signed distance).
inline ImplicitDomain scale(const ImplicitDomain& base, double lambda) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::BadParams, "scale factor must be positive");
    auto fn = [base, lambda](const Vec& x) { return lambda * base.level(x / lambda); };
    Box box{base.bounding_box().lo * lambda, base.bounding_box().hi * lambda};
    return ImplicitDomain(fn, base.dimension(), box, base.lipschitz_hint(),
                          base.label() + "*" + std::to_string(lambda), base.exact_sdf(),
                          base.bounded());
}

}  // namespace fluxgauge
