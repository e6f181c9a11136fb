#pragma once

#include <span>
#include <vector>

namespace twshape {

/// Natural cubic spline (zero second derivative at both ends) through
/// strictly increasing knots.
class NaturalCubicSpline {
public:
    NaturalCubicSpline() = default;
    NaturalCubicSpline(std::vector<double> knots, std::vector<double> values);

    /// Evaluates the cubic piece containing t; outside the knot span the end
    /// pieces are continued (callers decide what to do there).
    double operator()(double t) const;
    double derivative(double t) const;

    std::span<const double> knots() const noexcept { return x_; }
    std::span<const double> values() const noexcept { return y_; }
    std::span<const double> second_derivatives() const noexcept { return m_; }

    double front_slope() const;
    double back_slope() const;

private:
    std::size_t interval(double t) const;

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;
};

}  // namespace twshape
