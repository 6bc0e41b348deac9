#pragma once

#include <cmath>

#include "fluxgauge/vec.hpp"

namespace fluxgauge {

/// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) {
        add(v);
        return *this;
    }
    CompensatedSum& operator+=(const CompensatedSum& o) {
        add(o.sum_);
        add(o.comp_);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedVecSum {
public:
    void add(const Vec& v) {
        x_.add(v.x);
        y_.add(v.y);
        z_.add(v.z);
    }
    CompensatedVecSum& operator+=(const Vec& v) {
        add(v);
        return *this;
    }
    CompensatedVecSum& operator+=(const CompensatedVecSum& o) {
        x_ += o.x_;
        y_ += o.y_;
        z_ += o.z_;
        return *this;
    }
    Vec value() const { return {x_.value(), y_.value(), z_.value()}; }

private:
    CompensatedSum x_, y_, z_;
};

}  // namespace fluxgauge
