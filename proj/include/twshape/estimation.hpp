#pragma once

#include <optional>
#include <span>
#include <vector>

#include "twshape/reference.hpp"
#include "twshape/segmentation.hpp"
#include "twshape/twave_model.hpp"

namespace twshape {

/// The simplex works on (log u, log d, m / 10 ms, h / 0.1 mV) so that one
/// unit means a comparable change for every parameter.
struct FitOptions {
    int max_iterations = 2000;
    double tolerance = 1e-6;
    int restarts = 3;
    /// Re-run the simplex from its converged point until it stops improving
    /// (at most this many times); guards against premature collapse.
    int polish_runs = 2;
};

/// Least-squares fit of the four deformation parameters to one beat.
/// Never throws on non-convergence: the best point is returned with
/// converged = false.
FitResult fit_beat(const ReferenceCurve& ref, std::span<const double> beat,
                   std::span<const double> time_axis,
                   std::optional<ShapeParams> init = std::nullopt, const FitOptions& options = {});

/// Three-parameter shape-invariant fit w K(w (t - m)) + h; w is stored in
/// both u and d of the result.
FitResult fit_beat_sim(const ReferenceCurve& ref, std::span<const double> beat,
                       std::span<const double> time_axis, const FitOptions& options = {});

/// Starting point used when no initialisation is given: unit slopes, the
/// breakpoint at the beat's apex, and h matching the mean level.
ShapeParams initial_guess(const ReferenceCurve& ref, std::span<const double> beat,
                          std::span<const double> time_axis);

struct FitAllOptions {
    FitOptions fit;
    /// Start beat i+1 from beat i's estimate when that fit converged.
    bool warm_start = true;
    /// More than one thread fits beats independently (warm start is then off).
    unsigned threads = 1;
};

std::vector<FitResult> fit_all(const ReferenceCurve& ref, const BeatMatrix& matrix,
                               const FitAllOptions& options = {});

}  // namespace twshape
