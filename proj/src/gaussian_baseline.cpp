#include "twshape/gaussian_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "twshape/error.hpp"
#include "twshape/simplex.hpp"

namespace twshape {

namespace {

constexpr double kLocationScale = 10.0;  // ms per simplex unit

GaussianPair from_scaled(std::span<const double> z) {
    GaussianPair g;
    for (std::size_t c = 0; c < 2; ++c)
        g.components[c] = {std::exp(z[3 * c]), std::exp(z[3 * c + 1]), z[3 * c + 2] * kLocationScale};
    return g;
}

}  // namespace

double GaussianPair::evaluate(double t) const noexcept {
    double s = 0.0;
    for (const auto& c : components) s += c.lambda * std::exp(-(t - c.mu) * (t - c.mu) / (2.0 * c.sigma2));
    return s;
}

std::array<double, 6> GaussianPair::scaled() const noexcept {
    std::array<double, 6> z{};
    for (std::size_t c = 0; c < 2; ++c) {
        z[3 * c] = std::log(components[c].lambda);
        z[3 * c + 1] = std::log(components[c].sigma2);
        z[3 * c + 2] = components[c].mu / kLocationScale;
    }
    return z;
}

GaussianPair fit_gaussian_pair(std::span<const double> beat, std::span<const double> time_axis,
                               const FitOptions& options) {
    const std::size_t n = beat.size();
    if (n != time_axis.size())
        throw Error(ErrorCode::InvalidArgument, "beat and time axis differ in length");
    if (n < 12) throw Error(ErrorCode::TooFewPoints, "Gaussian fit needs at least 12 samples");

    // Initialisation from the two highest well-separated local maxima.
    const double width = time_axis.back() - time_axis.front();
    const double sigma_guess = width / 6.0;
    std::vector<std::size_t> maxima;
    for (std::size_t j = 1; j + 1 < n; ++j)
        if (beat[j] > beat[j - 1] && beat[j] >= beat[j + 1]) maxima.push_back(j);
    std::sort(maxima.begin(), maxima.end(), [&](auto a, auto b) { return beat[a] > beat[b]; });
    const auto apex = static_cast<std::size_t>(std::max_element(beat.begin(), beat.end()) - beat.begin());

    // Heights are kept positive (searched in log space).
    constexpr double kMinHeight = 1e-3;
    auto height = [&](std::size_t j) { return std::max(beat[j], kMinHeight); };
    GaussianPair init;
    init.components[0] = init.components[1] = {height(apex), sigma_guess * sigma_guess, time_axis[apex]};
    std::optional<std::size_t> second;
    for (std::size_t k = 1; k < maxima.size(); ++k) {
        if (std::abs(time_axis[maxima[k]] - time_axis[maxima[0]]) >= sigma_guess) {
            second = maxima[k];
            break;
        }
    }
    if (!maxima.empty() && second) {
        init.components[0].mu = time_axis[maxima[0]];
        init.components[0].lambda = height(maxima[0]);
        init.components[1].mu = time_axis[*second];
        init.components[1].lambda = height(*second);
    } else {
        const double lambda = height(apex) / (2.0 * std::exp(-0.5));
        init.components[0] = {lambda, sigma_guess * sigma_guess, time_axis[apex] - sigma_guess};
        init.components[1] = {lambda, sigma_guess * sigma_guess, time_axis[apex] + sigma_guess};
    }

    const Objective f = [&](std::span<const double> z) {
        const GaussianPair g = from_scaled(z);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double r = beat[j] - g.evaluate(time_axis[j]);
            s += r * r;
        }
        return s;
    };
    const auto z0 = init.scaled();
    const std::vector<double> steps{0.2, 0.2, 0.5, 0.2, 0.2, 0.5};
    const SimplexOptions so{options.max_iterations, options.tolerance};

    SimplexResult best = nelder_mead(f, z0, steps, so);
    int iterations = best.iterations;
    // Polish while the restarted simplex keeps improving; the surface has
    // long flat valleys when the components overlap.
    for (int k = 0; k < std::max(options.polish_runs, 1) * 2; ++k) {
        SimplexResult again = nelder_mead(f, best.x, steps, so);
        iterations += again.iterations;
        const bool improved = again.value < best.value * (1.0 - 1e-12);
        if (again.value <= best.value) best = std::move(again);
        if (!improved) break;
    }

    GaussianPair out = from_scaled(best.x);
    if (out.components[0].mu > out.components[1].mu) std::swap(out.components[0], out.components[1]);
    out.rss = best.value;
    out.converged = best.converged;
    out.iterations = iterations;
    return out;
}

std::vector<GaussianPair> fit_gaussian_all(const BeatMatrix& matrix, const FitOptions& options) {
    std::vector<GaussianPair> out;
    out.reserve(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i)
        out.push_back(fit_gaussian_pair(matrix.row(i), matrix.time_axis(), options));
    return out;
}

ClusterReport classify_by_mu(std::span<const GaussianPair> pairs, std::span<const int> labels,
                             int component, const KMeansOptions& options) {
    if (component != 1 && component != 2)
        throw Error(ErrorCode::InvalidArgument, "component must be 1 or 2");
    if (pairs.size() < 2) throw Error(ErrorCode::InsufficientData, "classification needs at least 2 beats");
    std::vector<std::vector<double>> points;
    points.reserve(pairs.size());
    for (const auto& p : pairs) points.push_back({p.components[static_cast<std::size_t>(component - 1)].mu});
    return kmeans(points, 2, labels, options);
}

}  // namespace twshape
