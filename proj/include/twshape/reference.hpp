#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "twshape/segmentation.hpp"
#include "twshape/spline.hpp"

namespace twshape {

struct Support {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double t) const noexcept { return t >= lo && t <= hi; }
};

/// The common T-wave shape K: a centred natural spline through the mean
/// curve, with an extended support for evaluating deformed arguments.
///
/// Centring moves the apex of the mean curve to t = 0 and removes the mean
/// value of the curve. center_t / center_v record the offsets so observed
/// beats can be put into the same frame.
class ReferenceCurve {
public:
    ReferenceCurve() = default;
    ReferenceCurve(std::vector<double> knots, std::vector<double> values, double center_t,
                   double center_v, Support support);

    /// Spline inside the knot span, linear continuation of the boundary
    /// slope between the knots and the support bounds. Throws OutOfSupport
    /// beyond the support.
    double evaluate(double t) const;

    /// Same as evaluate() but continues linearly past the support instead of
    /// throwing. Pair with support_excess() to penalise such arguments.
    double evaluate_unchecked(double t) const noexcept;

    /// Distance of t outside the support (0 inside).
    double support_excess(double t) const noexcept;

    std::span<const double> knots() const noexcept { return spline_.knots(); }
    std::span<const double> values() const noexcept { return spline_.values(); }
    const NaturalCubicSpline& spline() const noexcept { return spline_; }
    double center_t() const noexcept { return center_t_; }
    double center_v() const noexcept { return center_v_; }
    const Support& support() const noexcept { return support_; }

    /// max(values) - min(values), mV.
    double amplitude() const noexcept;

private:
    NaturalCubicSpline spline_;
    double center_t_ = 0.0;
    double center_v_ = 0.0;
    Support support_;
    double front_slope_ = 0.0;
    double back_slope_ = 0.0;
};

/// Centres a sampled curve and fits the spline. The support is the knot
/// span extended by one full span on each side.
ReferenceCurve reference_from_curve(std::span<const double> time_axis,
                                    std::span<const double> values);

/// Pointwise mean of the beat matrix, centred and splined.
ReferenceCurve build_reference(const BeatMatrix& matrix);

/// Reference over several references (multi-record designs). Curves are
/// resampled on a common grid over the intersection of their knot spans,
/// averaged, and centred again. center_t / center_v of the result are the
/// mean input offsets plus the new centring, so the result is usable in the
/// same absolute frame as its inputs.
ReferenceCurve build_hyper_reference(std::span<const ReferenceCurve> refs);

/// CSV with "# center_t=", "# center_v=", "# support=lo,hi" header lines,
/// then a "t,value" header row and one row per knot. Values are written in
/// shortest round-trip form so reading back restores the curve exactly.
void write_reference_csv(const ReferenceCurve& ref, const std::filesystem::path& path);
ReferenceCurve read_reference_csv(const std::filesystem::path& path);

}  // namespace twshape
