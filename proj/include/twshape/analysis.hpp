#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twshape/estimation.hpp"
#include "twshape/ingest.hpp"
#include "twshape/segmentation.hpp"

namespace twshape {

enum class Parameter { U = 0, D = 1, M = 2, H = 3 };
inline constexpr std::array<Parameter, 4> kAllParameters{Parameter::U, Parameter::D, Parameter::M,
                                                         Parameter::H};
const char* name(Parameter p) noexcept;
Parameter parse_parameter(std::string_view text);
double get(const ShapeParams& p, Parameter which) noexcept;

/// Series of one parameter across fit results.
std::vector<double> parameter_series(std::span<const FitResult> results, Parameter which);

// ---------------------------------------------------------------------------
// Boundary robustness

enum class ReferencePolicy {
    RebuildPerWindow,  // rebuild K from each shifted window
    ReuseBase,         // keep the K built on the unshifted window
};

struct ShiftSummary {
    double shift_ms = 0.0;
    std::size_t beats = 0;
    std::array<double, 4> median_rel{};  // median(delta) / theta, per parameter
    std::array<double, 4> stdev_rel{};
    double median_dm_ms = 0.0;
    double stdev_dm_ms = 0.0;
    std::size_t h_excluded = 0;  // beats with |h| < 1e-3 mV left out of the h columns
};

/// Deltas are taken between parameters in the record frame (m in ms after R,
/// h in mV; see to_record_frame) so that relative changes of m and h are
/// meaningful. A rebuilt reference is centred on its own window, so h from a
/// shifted window is restated against the base window's center_v before
/// differencing. Only beats retained by every window are compared.
struct RobustnessReport {
    Window base_window;
    std::vector<double> shifts;
    std::vector<std::size_t> beat_ids;                         // common beats
    std::vector<std::vector<std::array<double, 4>>> relative;  // [shift][beat]; NaN where excluded
    std::vector<std::vector<double>> dm_ms;                    // [shift][beat]
    std::vector<ShiftSummary> summary;                         // per shift
};

/// Refits the record on [a + s, b - s] for each shift s and compares with the
/// fit on [a, b].
RobustnessReport robustness_sweep(const EcgRecord& record, std::span<const std::size_t> peaks,
                                  Window window, std::span<const double> shifts_ms,
                                  ReferencePolicy policy = ReferencePolicy::RebuildPerWindow,
                                  const FitAllOptions& fit_options = {});

// ---------------------------------------------------------------------------
// QT relations for a quadratic T-wave K(t) = a (t - b)^2 + c

struct QuadraticT {
    double a = -1.0;
    double b = 0.0;
    double c = 1.0;
};

/// Right root of the quadratic: b + sqrt(-c / a).
double qt_quadratic(const QuadraticT& q);

/// Baseline crossing of the deformed quadratic on its downhill branch
/// (t > m): m + b/d + sqrt(-c/a - h / (a sqrt(u d))) / d.
double qt_deformed(const QuadraticT& q, const ShapeParams& p);

/// The same expression with u in place of d. It describes the uphill-branch
/// algebra and is not a QT interval.
double qt_deformed_uphill(const QuadraticT& q, const ShapeParams& p);

// ---------------------------------------------------------------------------
// Clustering

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 300;
    std::uint64_t seed = 0;
};

struct ClusterReport {
    std::vector<int> assignments;
    std::vector<std::vector<double>> centers;  // per cluster, feature units
    double within_ss = 0.0;                    // in standardised units
    std::optional<double> match_rate;          // when labels were given
    bool degenerate = false;                   // every feature had zero variance
};

/// k-means with k-means++ seeding on standardised features; the restart with
/// the lowest within-cluster sum of squares is kept. points[i] is one
/// observation.
ClusterReport kmeans(const std::vector<std::vector<double>>& points, int k,
                     std::span<const int> labels = {}, const KMeansOptions& options = {});

ClusterReport kmeans_params(std::span<const FitResult> results, std::span<const Parameter> features,
                            int k, std::span<const int> labels = {},
                            const KMeansOptions& options = {});

/// Fraction of observations whose cluster maps to their label under the best
/// one-to-one assignment of clusters to label values.
double match_rate(std::span<const int> assignments, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Spectra

struct Spectrum {
    std::vector<double> frequency_hz;
    std::vector<double> power;
    double sample_rate_hz = 0.0;  // of the uniform resampling grid
    std::size_t peak_bin() const;  // largest power excluding DC
    double bin_width_hz() const;
};

/// Resamples the beat-indexed series onto a uniform time grid (same number of
/// points, mean beat rate), removes the mean, applies a Hann taper and
/// returns the one-sided periodogram.
Spectrum psd_series(std::span<const double> series, std::span<const double> beat_times_s);

// ---------------------------------------------------------------------------
// Lagged RR correlations

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct LagTable {
    int max_lag = 0;
    /// r[parameter][lag]; nullopt where a series has zero variance.
    std::array<std::vector<std::optional<double>>, 4> r;
    std::array<std::optional<int>, 4> best_lag;  // argmax |r|
};

/// Correlation of each parameter at beat t with RR at beat t - lag. rr must be
/// indexed by result rows (see rr_for_rows).
LagTable lag_correlations(std::span<const FitResult> results, const RrSeries& rr, int max_lag);

// ---------------------------------------------------------------------------
// Multivariate outliers

struct OutlierReport {
    std::vector<double> distance_sq;   // squared Mahalanobis distance per beat
    std::vector<std::size_t> flagged;  // beats above the threshold
    double threshold = 0.0;            // chi-square(4) quantile
};

OutlierReport outlier_beats(std::span<const FitResult> results, double level = 0.999);

}  // namespace twshape
