#pragma once

#include <span>
#include <vector>

#include "twshape/reference.hpp"

namespace twshape {

/// Deformation of the reference: uphill slope factor u, downhill slope
/// factor d, horizontal location m (ms) and vertical shift h (mV).
struct ShapeParams {
    double u = 1.0;
    double d = 1.0;
    double m = 0.0;
    double h = 0.0;

    static constexpr ShapeParams identity() noexcept { return {}; }
    bool valid() const noexcept;
    friend bool operator==(const ShapeParams&, const ShapeParams&) = default;
};

struct FitResult {
    ShapeParams params;
    double rss = 0.0;    // mV^2
    double sigma = 0.0;  // sqrt(rss / J), mV
    bool converged = false;
    int iterations = 0;
};

/// sqrt(u d) K(u (t - m)) + h for t <= m, sqrt(u d) K(d (t - m)) + h for
/// t > m, with t in the reference's centred frame. Throws OutOfSupport
/// naming the branch when the scaled argument leaves K's support.
double deform(const ReferenceCurve& ref, const ShapeParams& p, double t);

/// As deform() but never throws; the reference is continued linearly past
/// its support. Adds to *excess the squared distance of the argument
/// outside the support.
double deform_unchecked(const ReferenceCurve& ref, const ShapeParams& p, double t,
                        double* excess_sq = nullptr) noexcept;

/// r_j = (x_j - center_v) - deform(K, p, t_j - center_t).
std::vector<double> residuals(const ReferenceCurve& ref, const ShapeParams& p,
                              std::span<const double> beat, std::span<const double> time_axis);

double residual_sum_of_squares(const ReferenceCurve& ref, const ShapeParams& p,
                               std::span<const double> beat, std::span<const double> time_axis);

/// Location and shift of p in the beat's own frame: m + center_t is ms after
/// the R peak, h + center_v is mV relative to the record's zero level.
ShapeParams to_record_frame(const ReferenceCurve& ref, const ShapeParams& p) noexcept;

}  // namespace twshape
