#include "twshape/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "twshape/error.hpp"

namespace twshape {

namespace {

double safe_eval(const Objective& f, std::span<const double> x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

SimplexResult nelder_mead(const Objective& f, std::span<const double> x0,
                          std::span<const double> steps, const SimplexOptions& options) {
    const std::size_t n = x0.size();
    if (n == 0 || steps.size() != n)
        throw Error(ErrorCode::InvalidArgument, "simplex needs matching start point and steps");

    std::vector<std::vector<double>> vertex(n + 1, std::vector<double>(x0.begin(), x0.end()));
    for (std::size_t i = 0; i < n; ++i) vertex[i + 1][i] += steps[i];
    std::vector<double> value(n + 1);
    for (std::size_t i = 0; i <= n; ++i) value[i] = safe_eval(f, vertex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto point_along = [&](double coef, std::vector<double>& out) {
        // centroid + coef * (centroid - worst)
        const auto& worst = vertex[order[n]];
        for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + coef * (centroid[k] - worst[k]);
    };

    SimplexResult result;
    int iter = 0;
    for (;; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });

        const auto& best = vertex[order[0]];
        double diameter = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double dx = vertex[order[i]][k] - best[k];
                s += dx * dx;
            }
            diameter = std::max(diameter, std::sqrt(s));
        }
        if (diameter < options.tolerance) {
            result.converged = true;
            break;
        }
        if (iter >= options.max_iterations) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) centroid[k] += vertex[order[i]][k];
        for (double& c : centroid) c /= static_cast<double>(n);

        const std::size_t worst = order[n];
        const double f_best = value[order[0]];
        const double f_second = value[order[n - 1]];
        const double f_worst = value[worst];

        point_along(1.0, trial);
        const double f_reflect = safe_eval(f, trial);
        if (f_reflect < f_best) {
            point_along(2.0, trial2);
            const double f_expand = safe_eval(f, trial2);
            if (f_expand < f_reflect) {
                vertex[worst] = trial2;
                value[worst] = f_expand;
            } else {
                vertex[worst] = trial;
                value[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < f_second) {
            vertex[worst] = trial;
            value[worst] = f_reflect;
            continue;
        }
        if (f_reflect < f_worst) {
            point_along(0.5, trial2);  // outside contraction
            const double f_contract = safe_eval(f, trial2);
            if (f_contract <= f_reflect) {
                vertex[worst] = trial2;
                value[worst] = f_contract;
                continue;
            }
        } else {
            point_along(-0.5, trial2);  // inside contraction
            const double f_contract = safe_eval(f, trial2);
            if (f_contract < f_worst) {
                vertex[worst] = trial2;
                value[worst] = f_contract;
                continue;
            }
        }
        // Shrink towards the best vertex.
        const auto best_copy = vertex[order[0]];
        for (std::size_t i = 1; i <= n; ++i) {
            auto& v = vertex[order[i]];
            for (std::size_t k = 0; k < n; ++k) v[k] = best_copy[k] + 0.5 * (v[k] - best_copy[k]);
            value[order[i]] = safe_eval(f, v);
        }
    }

    const auto best_it = std::min_element(value.begin(), value.end());
    const auto best_idx = static_cast<std::size_t>(best_it - value.begin());
    result.x = vertex[best_idx];
    result.value = *best_it;
    result.iterations = iter;
    return result;
}

}  // namespace twshape
