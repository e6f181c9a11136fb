#include "twshape/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "twshape/error.hpp"
#include "twshape/reference.hpp"

namespace twshape {

const char* name(Parameter p) noexcept {
    switch (p) {
        case Parameter::U: return "u";
        case Parameter::D: return "d";
        case Parameter::M: return "m";
        case Parameter::H: return "h";
    }
    return "?";
}

Parameter parse_parameter(std::string_view text) {
    for (auto p : kAllParameters)
        if (text == name(p)) return p;
    throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + std::string(text) + "'");
}

double get(const ShapeParams& p, Parameter which) noexcept {
    switch (which) {
        case Parameter::U: return p.u;
        case Parameter::D: return p.d;
        case Parameter::M: return p.m;
        case Parameter::H: return p.h;
    }
    return 0.0;
}

std::vector<double> parameter_series(std::span<const FitResult> results, Parameter which) {
    std::vector<double> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(get(r.params, which));
    return out;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stdev(const std::vector<double>& v) {
    if (v.size() < 2) return v.empty() ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct WindowFit {
    ReferenceCurve ref;
    std::vector<FitResult> fits;
    std::map<std::size_t, std::size_t> row_of_beat;
};

WindowFit fit_window(const EcgRecord& record, std::span<const std::size_t> peaks, Window w,
                     const ReferenceCurve* reuse, const FitAllOptions& options) {
    const BeatMatrix m = extract_beat_matrix(record, peaks, w);
    WindowFit out{reuse ? *reuse : build_reference(m), {}, {}};
    out.fits = fit_all(out.ref, m, options);
    for (std::size_t i = 0; i < m.rows(); ++i) out.row_of_beat[m.beat_ids()[i]] = i;
    return out;
}

}  // namespace

RobustnessReport robustness_sweep(const EcgRecord& record, std::span<const std::size_t> peaks,
                                  Window window, std::span<const double> shifts_ms,
                                  ReferencePolicy policy, const FitAllOptions& fit_options) {
    if (!(window.start_ms < window.end_ms))
        throw Error(ErrorCode::InvalidWindow, "window start must precede window end");
    for (double s : shifts_ms)
        if (!(window.start_ms + s < window.end_ms - s))
            throw Error(ErrorCode::InvalidWindow,
                        "shift " + std::to_string(s) + " ms inverts the window");

    const WindowFit base = fit_window(record, peaks, window, nullptr, fit_options);
    std::vector<WindowFit> shifted;
    shifted.reserve(shifts_ms.size());
    for (double s : shifts_ms) {
        if (s == 0.0) {
            shifted.push_back(base);
            continue;
        }
        const Window w{window.start_ms + s, window.end_ms - s};
        shifted.push_back(fit_window(record, peaks, w,
                                     policy == ReferencePolicy::ReuseBase ? &base.ref : nullptr,
                                     fit_options));
    }

    RobustnessReport rep;
    rep.base_window = window;
    rep.shifts.assign(shifts_ms.begin(), shifts_ms.end());
    for (const auto& [beat, row] : base.row_of_beat) {
        const bool everywhere = std::all_of(shifted.begin(), shifted.end(), [&](const WindowFit& f) {
            return f.row_of_beat.count(beat) > 0;
        });
        if (everywhere) rep.beat_ids.push_back(beat);
    }

    constexpr double kMinShift = 1e-3;  // mV; smaller |h| makes relative h meaningless
    for (std::size_t k = 0; k < shifted.size(); ++k) {
        const WindowFit& f = shifted[k];
        std::vector<std::array<double, 4>> rel;
        std::vector<double> dm;
        std::array<std::vector<double>, 4> columns;
        ShiftSummary sum;
        sum.shift_ms = rep.shifts[k];
        for (std::size_t beat : rep.beat_ids) {
            const ShapeParams p0 = to_record_frame(base.ref, base.fits[base.row_of_beat.at(beat)].params);
            ShapeParams p1 = to_record_frame(f.ref, f.fits[f.row_of_beat.at(beat)].params);
            // restate h against the base reference's vertical centre
            p1.h += std::sqrt(p1.u * p1.d) * (base.ref.center_v() - f.ref.center_v());
            std::array<double, 4> r{};
            for (auto prm : kAllParameters) {
                const auto idx = static_cast<std::size_t>(prm);
                const double v0 = get(p0, prm);
                if (prm == Parameter::H && std::abs(v0) < kMinShift) {
                    r[idx] = std::numeric_limits<double>::quiet_NaN();
                    ++sum.h_excluded;
                    continue;
                }
                r[idx] = (get(p1, prm) - v0) / v0;
                columns[idx].push_back(r[idx]);
            }
            rel.push_back(r);
            dm.push_back(p1.m - p0.m);
        }
        sum.beats = rel.size();
        for (std::size_t i = 0; i < 4; ++i) {
            sum.median_rel[i] = median(columns[i]);
            sum.stdev_rel[i] = stdev(columns[i]);
        }
        sum.median_dm_ms = median(dm);
        sum.stdev_dm_ms = stdev(dm);
        rep.relative.push_back(std::move(rel));
        rep.dm_ms.push_back(std::move(dm));
        rep.summary.push_back(sum);
    }
    return rep;
}

double qt_quadratic(const QuadraticT& q) {
    if (!(q.a < 0.0) || !(q.c > 0.0))
        throw Error(ErrorCode::Domain, "quadratic T-wave needs a < 0 and c > 0");
    return q.b + std::sqrt(-q.c / q.a);
}

namespace {

double deformed_root(const QuadraticT& q, const ShapeParams& p, double slope) {
    if (!(q.a < 0.0) || !(q.c > 0.0))
        throw Error(ErrorCode::Domain, "quadratic T-wave needs a < 0 and c > 0");
    if (!p.valid()) throw Error(ErrorCode::Domain, "slope factors must be positive");
    const double radicand = -q.c / q.a - p.h / (q.a * std::sqrt(p.u * p.d));
    if (radicand < 0.0)
        throw Error(ErrorCode::NoCrossing, "deformed T-wave never returns to baseline");
    return p.m + q.b / slope + std::sqrt(radicand) / slope;
}

}  // namespace

double qt_deformed(const QuadraticT& q, const ShapeParams& p) { return deformed_root(q, p, p.d); }
double qt_deformed_uphill(const QuadraticT& q, const ShapeParams& p) {
    return deformed_root(q, p, p.u);
}

// ---------------------------------------------------------------------------

double match_rate(std::span<const int> assignments, std::span<const int> labels) {
    if (assignments.size() != labels.size())
        throw Error(ErrorCode::InvalidArgument, "assignments and labels differ in length");
    if (assignments.empty()) return 0.0;
    std::vector<int> clusters(assignments.begin(), assignments.end());
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(clusters.begin(), clusters.end());
    clusters.erase(std::unique(clusters.begin(), clusters.end()), clusters.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    const std::size_t nc = clusters.size(), nl = classes.size();
    std::vector<std::vector<std::size_t>> table(nc, std::vector<std::size_t>(nl, 0));
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const auto a = std::lower_bound(clusters.begin(), clusters.end(), assignments[i]) - clusters.begin();
        const auto l = std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin();
        ++table[static_cast<std::size_t>(a)][static_cast<std::size_t>(l)];
    }

    // Exhaustive one-to-one matching; cluster and class counts are small.
    std::vector<bool> taken(nl, false);
    std::size_t best = 0;
    auto search = [&](auto&& self, std::size_t c, std::size_t acc) -> void {
        if (c == nc) {
            best = std::max(best, acc);
            return;
        }
        self(self, c + 1, acc);  // cluster left unmatched
        for (std::size_t l = 0; l < nl; ++l) {
            if (taken[l]) continue;
            taken[l] = true;
            self(self, c + 1, acc + table[c][l]);
            taken[l] = false;
        }
    };
    search(search, 0, 0);
    return static_cast<double>(best) / static_cast<double>(assignments.size());
}

ClusterReport kmeans(const std::vector<std::vector<double>>& points, int k,
                     std::span<const int> labels, const KMeansOptions& options) {
    const std::size_t n = points.size();
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    if (n == 0) throw Error(ErrorCode::InsufficientData, "no observations to cluster");
    if (static_cast<std::size_t>(k) > n)
        throw Error(ErrorCode::Infeasible, "k = " + std::to_string(k) + " exceeds the " +
                                               std::to_string(n) + " observations");
    if (!labels.empty() && labels.size() != n)
        throw Error(ErrorCode::InvalidArgument, "labels and observations differ in length");
    const std::size_t dim = points.front().size();
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "no features selected");

    // Standardise.
    std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
    for (const auto& p : points)
        for (std::size_t f = 0; f < dim; ++f) mean[f] += p[f];
    for (double& m : mean) m /= static_cast<double>(n);
    for (const auto& p : points)
        for (std::size_t f = 0; f < dim; ++f) sd[f] += (p[f] - mean[f]) * (p[f] - mean[f]);
    bool degenerate = true;
    for (double& s : sd) {
        s = n > 1 ? std::sqrt(s / static_cast<double>(n - 1)) : 0.0;
        if (s > 0.0) degenerate = false;
        else s = 1.0;
    }
    std::vector<std::vector<double>> z(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < dim; ++f) z[i][f] = (points[i][f] - mean[f]) / sd[f];

    auto dist2 = [dim](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t f = 0; f < dim; ++f) s += (a[f] - b[f]) * (a[f] - b[f]);
        return s;
    };

    std::mt19937_64 rng(options.seed);
    const auto kk = static_cast<std::size_t>(k);
    std::vector<int> best_assign(n, 0);
    double best_ss = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
        // k-means++ seeding
        std::vector<std::vector<double>> centers;
        centers.push_back(z[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
        std::vector<double> d2(n);
        while (centers.size() < kk) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                d2[i] = std::numeric_limits<double>::infinity();
                for (const auto& c : centers) d2[i] = std::min(d2[i], dist2(z[i], c));
                total += d2[i];
            }
            std::size_t pick = 0;
            if (total > 0.0) {
                double target = std::uniform_real_distribution<double>(0.0, total)(rng);
                for (pick = 0; pick + 1 < n; ++pick) {
                    target -= d2[pick];
                    if (target <= 0.0 && d2[pick] > 0.0) break;
                }
            } else {
                pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
            }
            centers.push_back(z[pick]);
        }

        std::vector<int> assign(n, -1);
        for (int it = 0; it < options.max_iterations; ++it) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                int best_c = 0;
                double best_d = dist2(z[i], centers[0]);
                for (std::size_t c = 1; c < kk; ++c) {
                    const double d = dist2(z[i], centers[c]);
                    if (d < best_d) {
                        best_d = d;
                        best_c = static_cast<int>(c);
                    }
                }
                if (assign[i] != best_c) {
                    assign[i] = best_c;
                    changed = true;
                }
            }
            if (!changed) break;
            std::vector<std::vector<double>> sum(kk, std::vector<double>(dim, 0.0));
            std::vector<std::size_t> count(kk, 0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto c = static_cast<std::size_t>(assign[i]);
                ++count[c];
                for (std::size_t f = 0; f < dim; ++f) sum[c][f] += z[i][f];
            }
            for (std::size_t c = 0; c < kk; ++c) {
                if (count[c] == 0) continue;  // keep the old centre for an empty cluster
                for (std::size_t f = 0; f < dim; ++f) centers[c][f] = sum[c][f] / static_cast<double>(count[c]);
            }
        }
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += dist2(z[i], centers[static_cast<std::size_t>(assign[i])]);
        if (ss < best_ss) {
            best_ss = ss;
            best_assign = assign;
        }
    }

    ClusterReport rep;
    rep.assignments = best_assign;
    rep.within_ss = best_ss;
    rep.degenerate = degenerate;
    rep.centers.assign(kk, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(best_assign[i]);
        ++count[c];
        for (std::size_t f = 0; f < dim; ++f) rep.centers[c][f] += points[i][f];
    }
    for (std::size_t c = 0; c < kk; ++c)
        for (std::size_t f = 0; f < dim; ++f)
            rep.centers[c][f] = count[c] ? rep.centers[c][f] / static_cast<double>(count[c])
                                         : std::numeric_limits<double>::quiet_NaN();
    if (!labels.empty()) rep.match_rate = match_rate(rep.assignments, labels);
    return rep;
}

ClusterReport kmeans_params(std::span<const FitResult> results, std::span<const Parameter> features,
                            int k, std::span<const int> labels, const KMeansOptions& options) {
    if (features.empty()) throw Error(ErrorCode::InvalidArgument, "no features selected");
    std::vector<std::vector<double>> points;
    points.reserve(results.size());
    for (const auto& r : results) {
        std::vector<double> p;
        for (auto f : features) p.push_back(get(r.params, f));
        points.push_back(std::move(p));
    }
    return kmeans(points, k, labels, options);
}

// ---------------------------------------------------------------------------

std::size_t Spectrum::peak_bin() const {
    if (power.size() < 2) return 0;
    return static_cast<std::size_t>(std::max_element(power.begin() + 1, power.end()) - power.begin());
}

double Spectrum::bin_width_hz() const {
    return frequency_hz.size() > 1 ? frequency_hz[1] - frequency_hz[0] : 0.0;
}

Spectrum psd_series(std::span<const double> series, std::span<const double> beat_times_s) {
    const std::size_t n = series.size();
    if (n != beat_times_s.size())
        throw Error(ErrorCode::InvalidArgument, "series and beat times differ in length");
    if (n < 16) throw Error(ErrorCode::InsufficientData, "spectrum needs at least 16 beats");
    for (std::size_t i = 1; i < n; ++i)
        if (!(beat_times_s[i] > beat_times_s[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "beat times must be strictly increasing");

    const double t0 = beat_times_s.front();
    const double rate = static_cast<double>(n - 1) / (beat_times_s.back() - t0);
    std::vector<double> grid(n);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = std::min(t0 + static_cast<double>(k) / rate, beat_times_s.back());
        while (seg + 2 < n && beat_times_s[seg + 1] < t) ++seg;
        const double w = (t - beat_times_s[seg]) / (beat_times_s[seg + 1] - beat_times_s[seg]);
        grid[k] = series[seg] + w * (series[seg + 1] - series[seg]);
    }
    const double mean = std::accumulate(grid.begin(), grid.end(), 0.0) / static_cast<double>(n);

    std::vector<double> tapered(n);
    double window_power = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                              static_cast<double>(n - 1));
        tapered[k] = (grid[k] - mean) * w;
        window_power += w * w;
    }

    Spectrum out;
    out.sample_rate_hz = rate;
    const std::size_t bins = n / 2 + 1;
    out.frequency_hz.resize(bins);
    out.power.resize(bins);
    for (std::size_t f = 0; f < bins; ++f) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t k = 0; k < n; ++k) {
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(f * k % n) /
                                 static_cast<double>(n);
            acc += tapered[k] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        double p = std::norm(acc) / (rate * window_power);
        if (f != 0 && !(n % 2 == 0 && f == n / 2)) p *= 2.0;
        out.frequency_hz[f] = static_cast<double>(f) * rate / static_cast<double>(n);
        out.power[f] = p;
    }
    return out;
}

// ---------------------------------------------------------------------------

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

LagTable lag_correlations(std::span<const FitResult> results, const RrSeries& rr, int max_lag) {
    const std::size_t n = results.size();
    if (max_lag < 0) throw Error(ErrorCode::InvalidArgument, "max_lag must be non-negative");
    if (static_cast<std::size_t>(max_lag) + 2 >= n)
        throw Error(ErrorCode::InsufficientData, "series too short for max_lag " + std::to_string(max_lag));

    std::vector<std::optional<double>> rr_at(n);
    for (std::size_t k = 0; k < rr.rr.size(); ++k)
        if (rr.indices[k] < n) rr_at[rr.indices[k]] = rr.rr[k];

    LagTable table;
    table.max_lag = max_lag;
    for (auto prm : kAllParameters) {
        const auto idx = static_cast<std::size_t>(prm);
        const auto series = parameter_series(results, prm);
        double best_abs = -1.0;
        for (int lag = 0; lag <= max_lag; ++lag) {
            std::vector<double> x, y;
            for (std::size_t t = static_cast<std::size_t>(lag); t < n; ++t) {
                const auto& r = rr_at[t - static_cast<std::size_t>(lag)];
                if (!r) continue;
                x.push_back(series[t]);
                y.push_back(*r);
            }
            const auto r = pearson(x, y);
            table.r[idx].push_back(r);
            if (r && std::abs(*r) > best_abs) {
                best_abs = std::abs(*r);
                table.best_lag[idx] = lag;
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------

OutlierReport outlier_beats(std::span<const FitResult> results, double level) {
    const std::size_t n = results.size();
    if (n < 10) throw Error(ErrorCode::InsufficientData, "outlier detection needs at least 10 beats");
    if (!(level > 0.0 && level < 1.0))
        throw Error(ErrorCode::InvalidArgument, "threshold level must lie in (0, 1)");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 4);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = results[i].params;
        x.row(static_cast<Eigen::Index>(i)) << p.u, p.d, p.m, p.h;
    }
    const Eigen::RowVector4d mean = x.colwise().mean();
    const Eigen::MatrixXd centred = x.rowwise() - mean;
    const Eigen::Matrix4d cov = (centred.transpose() * centred) / static_cast<double>(n - 1);

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(cov);
    const double top = eig.eigenvalues().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * top) || !(top > 0.0))
        throw Error(ErrorCode::DegenerateCovariance,
                    "parameter covariance is singular; cluster or test a feature subset instead");
    const Eigen::LLT<Eigen::Matrix4d> llt(cov);

    OutlierReport rep;
    rep.threshold = boost::math::quantile(boost::math::chi_squared(4.0), level);
    rep.distance_sq.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector4d v = centred.row(static_cast<Eigen::Index>(i)).transpose();
        rep.distance_sq[i] = v.dot(llt.solve(v));
        if (rep.distance_sq[i] > rep.threshold) rep.flagged.push_back(i);
    }
    return rep;
}

}  // namespace twshape
