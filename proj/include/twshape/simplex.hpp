#pragma once

#include <functional>
#include <span>
#include <vector>

namespace twshape {

struct SimplexOptions {
    int max_iterations = 2000;
    /// Converged once every vertex lies within this distance of the best one.
    double tolerance = 1e-6;
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder-Mead downhill simplex (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). The initial simplex is x0 plus one vertex per axis offset
/// by steps[i]. Non-finite objective values are treated as +infinity.
SimplexResult nelder_mead(const Objective& f, std::span<const double> x0,
                          std::span<const double> steps, const SimplexOptions& options = {});

}  // namespace twshape
