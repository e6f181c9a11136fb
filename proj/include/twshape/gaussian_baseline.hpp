#pragma once

#include <array>
#include <span>
#include <vector>

#include "twshape/analysis.hpp"
#include "twshape/estimation.hpp"
#include "twshape/segmentation.hpp"

namespace twshape {

/// lambda * exp(-(t - mu)^2 / (2 sigma2)); lambda is an unnormalised,
/// positive height.
struct GaussianComponent {
    double lambda = 0.0;  // mV
    double sigma2 = 1.0;  // ms^2
    double mu = 0.0;      // ms
};

/// Independent two-bump fit of one beat, components ordered by mu.
struct GaussianPair {
    std::array<GaussianComponent, 2> components;
    double rss = 0.0;
    bool converged = false;
    int iterations = 0;

    double evaluate(double t) const noexcept;
    /// (log lambda, log sigma2, mu / 10 ms) for both components: the
    /// coordinates the simplex searches in.
    std::array<double, 6> scaled() const noexcept;
};

GaussianPair fit_gaussian_pair(std::span<const double> beat, std::span<const double> time_axis,
                               const FitOptions& options = {});

std::vector<GaussianPair> fit_gaussian_all(const BeatMatrix& matrix, const FitOptions& options = {});

/// Two-cluster k-means on mu of the chosen component (1 or 2).
ClusterReport classify_by_mu(std::span<const GaussianPair> pairs, std::span<const int> labels,
                             int component, const KMeansOptions& options = {});

}  // namespace twshape
