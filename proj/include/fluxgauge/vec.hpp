#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace fluxgauge {

/// Point or vector in R^d for d <= 3. Planar quantities keep z = 0.
struct Vec {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec& operator+=(const Vec& o) {
        x += o.x; y += o.y; z += o.z;
        return *this;
    }
    constexpr Vec& operator-=(const Vec& o) {
        x -= o.x; y -= o.y; z -= o.z;
        return *this;
    }
    constexpr Vec& operator*=(double s) {
        x *= s; y *= s; z *= s;
        return *this;
    }

    friend constexpr bool operator==(const Vec&, const Vec&) = default;
};

constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
constexpr Vec operator-(const Vec& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec operator*(Vec a, double s) { return a *= s; }
constexpr Vec operator*(double s, Vec a) { return a *= s; }
constexpr Vec operator/(Vec a, double s) { return a *= (1.0 / s); }

constexpr double dot(const Vec& a, const Vec& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec cross(const Vec& a, const Vec& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec& a, const Vec& b) { return norm(a - b); }
inline Vec normalized(const Vec& a) {
    const double n = norm(a);
    return n > 0.0 ? a / n : a;
}
constexpr Vec lerp(const Vec& a, const Vec& b, double t) { return a + (b - a) * t; }

/// Planar rotation by +90 degrees.
constexpr Vec perp(const Vec& a) { return {-a.y, a.x, 0.0}; }

constexpr Vec unit(int axis) {
    Vec e;
    e[axis] = 1.0;
    return e;
}

/// Axis-aligned box [lo, hi]; unused axes have lo = hi = 0.
struct Box {
    Vec lo;
    Vec hi;

    constexpr Vec extent() const { return hi - lo; }
    constexpr Vec center() const { return (lo + hi) * 0.5; }
    Box expanded(double margin, int dim) const {
        Box b = *this;
        for (int i = 0; i < dim; ++i) {
            b.lo[i] -= margin;
            b.hi[i] += margin;
        }
        return b;
    }
    constexpr bool contains(const Vec& p, int dim) const {
        for (int i = 0; i < dim; ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }
    double volume(int dim) const {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= hi[i] - lo[i];
        return v;
    }
};

inline Box intersect(const Box& a, const Box& b, int dim) {
    Box r;
    for (int i = 0; i < dim; ++i) {
        r.lo[i] = std::max(a.lo[i], b.lo[i]);
        r.hi[i] = std::min(a.hi[i], b.hi[i]);
    }
    return r;
}

inline bool is_empty(const Box& b, int dim) {
    for (int i = 0; i < dim; ++i)
        if (b.hi[i] <= b.lo[i]) return true;
    return false;
}

}  // namespace fluxgauge
