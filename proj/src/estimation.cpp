#include "twshape/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "twshape/error.hpp"
#include "twshape/simplex.hpp"

namespace twshape {

namespace {

constexpr double kLocationScale = 10.0;  // ms per simplex unit
constexpr double kShiftScale = 0.1;      // mV per simplex unit

/// Beat and time axis moved into the reference's centred frame, plus the
/// weight of the out-of-support penalty.
struct CentredBeat {
    std::vector<double> t;
    std::vector<double> x;
    double penalty_weight = 1.0;

    CentredBeat(const ReferenceCurve& ref, std::span<const double> beat,
                std::span<const double> time_axis) {
        if (beat.size() != time_axis.size())
            throw Error(ErrorCode::InvalidArgument, "beat and time axis differ in length");
        if (beat.size() < 8) throw Error(ErrorCode::TooFewPoints, "a beat needs at least 8 samples");
        t.resize(beat.size());
        x.resize(beat.size());
        for (std::size_t j = 0; j < beat.size(); ++j) {
            t[j] = time_axis[j] - ref.center_t();
            x[j] = beat[j] - ref.center_v();
        }
        // One support-width past the edge costs about one amplitude squared.
        const auto k = ref.knots();
        const double width = k.back() - k.front();
        const double amp = std::max(ref.amplitude(), 1e-6);
        penalty_weight = (amp / width) * (amp / width);
    }

    double rss(const ReferenceCurve& ref, const ShapeParams& p, double* excess_sq) const {
        double s = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double r = x[j] - deform_unchecked(ref, p, t[j], excess_sq);
            s += r * r;
        }
        return s;
    }

    double objective(const ReferenceCurve& ref, const ShapeParams& p) const {
        double excess = 0.0;
        const double s = rss(ref, p, &excess);
        return s + penalty_weight * excess;
    }
};

ShapeParams from_scaled4(std::span<const double> z) {
    return {std::exp(z[0]), std::exp(z[1]), z[2] * kLocationScale, z[3] * kShiftScale};
}

std::vector<double> to_scaled4(const ShapeParams& p) {
    return {std::log(p.u), std::log(p.d), p.m / kLocationScale, p.h / kShiftScale};
}

ShapeParams from_scaled3(std::span<const double> z) {
    const double w = std::exp(z[0]);
    return {w, w, z[1] * kLocationScale, z[2] * kShiftScale};
}

std::vector<double> to_scaled3(const ShapeParams& p) {
    return {std::log(std::sqrt(p.u * p.d)), p.m / kLocationScale, p.h / kShiftScale};
}

struct Attempt {
    std::vector<double> z;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// One simplex run followed by polishing restarts from the converged point.
Attempt run_with_polish(const Objective& f, std::vector<double> z0, std::span<const double> steps,
                        const FitOptions& options) {
    const SimplexOptions so{options.max_iterations, options.tolerance};
    SimplexResult r = nelder_mead(f, z0, steps, so);
    Attempt a{r.x, r.value, r.converged, r.iterations};
    for (int k = 0; k < options.polish_runs && a.converged; ++k) {
        SimplexResult again = nelder_mead(f, a.z, steps, so);
        a.iterations += again.iterations;
        const bool improved = again.value < a.value;
        if (again.value <= a.value) {
            a.z = again.x;
            a.value = again.value;
        }
        a.converged = again.converged;
        if (!improved) break;
    }
    return a;
}

/// Tries the given start, then jittered restarts while nothing converged.
template <typename Jitter>
Attempt solve(const Objective& f, const std::vector<double>& z0, std::span<const double> steps,
              const FitOptions& options, Jitter jitter) {
    Attempt best = run_with_polish(f, z0, steps, options);
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int k = 0; k < options.restarts && !best.converged; ++k) {
        std::vector<double> start = best.z;
        jitter(start, z0, rng, unit);
        Attempt again = run_with_polish(f, start, steps, options);
        const int used = best.iterations + again.iterations;
        if (again.converged || again.value < best.value) best = std::move(again);
        best.iterations = used;
    }
    return best;
}

FitResult make_result(const ReferenceCurve& ref, const CentredBeat& cb, const ShapeParams& p,
                      const Attempt& a) {
    FitResult out;
    out.params = p;
    out.rss = cb.rss(ref, p, nullptr);
    out.sigma = std::sqrt(out.rss / static_cast<double>(cb.t.size()));
    out.converged = a.converged;
    out.iterations = a.iterations;
    return out;
}

}  // namespace

ShapeParams initial_guess(const ReferenceCurve& ref, std::span<const double> beat,
                          std::span<const double> time_axis) {
    const CentredBeat cb(ref, beat, time_axis);
    const auto apex = static_cast<std::size_t>(std::max_element(cb.x.begin(), cb.x.end()) -
                                               cb.x.begin());
    ShapeParams p{1.0, 1.0, cb.t[apex], 0.0};  // reference apex sits at t = 0
    double model_mean = 0.0;
    for (double t : cb.t) model_mean += deform_unchecked(ref, p, t);
    model_mean /= static_cast<double>(cb.t.size());
    const double beat_mean =
        std::accumulate(cb.x.begin(), cb.x.end(), 0.0) / static_cast<double>(cb.x.size());
    p.h = beat_mean - model_mean;
    return p;
}

FitResult fit_beat(const ReferenceCurve& ref, std::span<const double> beat,
                   std::span<const double> time_axis, std::optional<ShapeParams> init,
                   const FitOptions& options) {
    const CentredBeat cb(ref, beat, time_axis);
    ShapeParams start = init.value_or(initial_guess(ref, beat, time_axis));
    if (!start.valid()) start = initial_guess(ref, beat, time_axis);

    const Objective f = [&](std::span<const double> z) { return cb.objective(ref, from_scaled4(z)); };
    const std::vector<double> steps{0.1, 0.1, 0.5, 0.5};
    const Attempt a = solve(f, to_scaled4(start), steps, options,
                            [](std::vector<double>& s, const std::vector<double>& z0, auto& rng,
                               auto& unit) {
                                s = z0;
                                s[0] += std::log1p(0.2 * unit(rng));
                                s[1] += std::log1p(0.2 * unit(rng));
                                s[2] += 20.0 * unit(rng) / kLocationScale;
                            });
    return make_result(ref, cb, from_scaled4(a.z), a);
}

FitResult fit_beat_sim(const ReferenceCurve& ref, std::span<const double> beat,
                       std::span<const double> time_axis, const FitOptions& options) {
    const CentredBeat cb(ref, beat, time_axis);
    const ShapeParams start = initial_guess(ref, beat, time_axis);

    const Objective f = [&](std::span<const double> z) { return cb.objective(ref, from_scaled3(z)); };
    const std::vector<double> steps{0.1, 0.5, 0.5};
    const Attempt a = solve(f, to_scaled3(start), steps, options,
                            [](std::vector<double>& s, const std::vector<double>& z0, auto& rng,
                               auto& unit) {
                                s = z0;
                                s[0] += std::log1p(0.2 * unit(rng));
                                s[1] += 20.0 * unit(rng) / kLocationScale;
                            });
    return make_result(ref, cb, from_scaled3(a.z), a);
}

std::vector<FitResult> fit_all(const ReferenceCurve& ref, const BeatMatrix& matrix,
                               const FitAllOptions& options) {
    const std::size_t n = matrix.rows();
    std::vector<FitResult> results(n);
    const auto time_axis = matrix.time_axis();

    if (options.threads <= 1) {
        std::optional<ShapeParams> previous;
        for (std::size_t i = 0; i < n; ++i) {
            results[i] = fit_beat(ref, matrix.row(i), time_axis,
                                  options.warm_start ? previous : std::nullopt, options.fit);
            previous = results[i].converged ? std::optional(results[i].params) : std::nullopt;
        }
        return results;
    }

    const unsigned workers = std::min<unsigned>(options.threads, static_cast<unsigned>(n));
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers)
                results[i] = fit_beat(ref, matrix.row(i), time_axis, std::nullopt, options.fit);
        });
    }
    pool.clear();
    return results;
}

}  // namespace twshape
