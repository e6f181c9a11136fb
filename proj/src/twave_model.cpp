#include "twshape/twave_model.hpp"

#include <cmath>
#include <string>

#include "twshape/error.hpp"

namespace twshape {

bool ShapeParams::valid() const noexcept {
    return u > 0.0 && d > 0.0 && std::isfinite(u) && std::isfinite(d) && std::isfinite(m) &&
           std::isfinite(h);
}

double deform(const ReferenceCurve& ref, const ShapeParams& p, double t) {
    const bool uphill = t <= p.m;
    const double arg = (uphill ? p.u : p.d) * (t - p.m);
    if (!ref.support().contains(arg))
        throw Error(ErrorCode::OutOfSupport,
                    std::string(uphill ? "uphill" : "downhill") + " branch argument " +
                        std::to_string(arg) + " ms outside reference support");
    return std::sqrt(p.u * p.d) * ref.evaluate_unchecked(arg) + p.h;
}

double deform_unchecked(const ReferenceCurve& ref, const ShapeParams& p, double t,
                        double* excess_sq) noexcept {
    const double arg = (t <= p.m ? p.u : p.d) * (t - p.m);
    if (excess_sq) {
        const double e = ref.support_excess(arg);
        *excess_sq += e * e;
    }
    return std::sqrt(p.u * p.d) * ref.evaluate_unchecked(arg) + p.h;
}

std::vector<double> residuals(const ReferenceCurve& ref, const ShapeParams& p,
                              std::span<const double> beat, std::span<const double> time_axis) {
    if (beat.size() != time_axis.size())
        throw Error(ErrorCode::InvalidArgument, "beat and time axis differ in length");
    std::vector<double> r(beat.size());
    for (std::size_t j = 0; j < beat.size(); ++j)
        r[j] = (beat[j] - ref.center_v()) - deform(ref, p, time_axis[j] - ref.center_t());
    return r;
}

double residual_sum_of_squares(const ReferenceCurve& ref, const ShapeParams& p,
                               std::span<const double> beat, std::span<const double> time_axis) {
    double s = 0.0;
    for (double r : residuals(ref, p, beat, time_axis)) s += r * r;
    return s;
}

ShapeParams to_record_frame(const ReferenceCurve& ref, const ShapeParams& p) noexcept {
    return {p.u, p.d, p.m + ref.center_t(), p.h + ref.center_v()};
}

}  // namespace twshape
