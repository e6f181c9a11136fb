// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <boost/math/tools/roots.hpp>

#include "support.hpp"
#include "twshape/analysis.hpp"
#include "twshape/error.hpp"
#include "twshape/estimation.hpp"
#include "twshape/gaussian_baseline.hpp"
#include "twshape/ingest.hpp"
#include "twshape/segmentation.hpp"
#include "twshape/synthgen.hpp"

using namespace twshape;
using twshape::testing::Fixture;
using twshape::testing::read_text;
using twshape::testing::TempDir;
using twshape::testing::write_text;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

double scaled_distance(const ShapeParams& a, const ShapeParams& b) {
    const double du = std::log(a.u / b.u), dd = std::log(a.d / b.d);
    const double dm = (a.m - b.m) / 10.0, dh = (a.h - b.h) / 0.1;
    return std::sqrt(du * du + dd * dd + dm * dm + dh * dh);
}

struct Fitted {
    synth::SynthRecord s;
    BeatMatrix matrix;
    ReferenceCurve ref;
    std::vector<FitResult> results;
};

Fitted fit_record(const synth::SynthSpec& spec) {
    Fitted f{synth::generate(spec), {}, {}, {}};
    const auto peaks = detect_r_peaks(f.s.record);
    f.matrix = extract_beat_matrix(f.s.record, peaks, Window{});
    f.ref = build_reference(f.matrix);
    f.results = fit_all(f.ref, f.matrix);
    return f;
}

// ---------------------------------------------------------------------------

Verdict identity_fit() {
    Fixture f;
    const auto t0 = Clock::now();
    const auto r = fit_beat(f.ref, f.k_values, f.t);
    const double elapsed = seconds_since(t0);
    const auto& p = r.params;
    const double dev = std::max({std::abs(p.u - 1.0), std::abs(p.d - 1.0), std::abs(p.m), std::abs(p.h)});
    const bool ok = dev <= 1e-6 && r.rss <= 1e-10 && elapsed < 1.0;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("max |theta - (1,1,0,0)| = %.2e (<= 1e-6), rss = %.2e (<= 1e-10), %.3f s (< 1 s)", dev, r.rss, elapsed)};
}

Verdict noiseless_recovery() {
    Fixture f;
    std::mt19937_64 rng(0xacce55);
    std::uniform_real_distribution<double> slope(0.6, 1.6), loc(-20.0, 20.0), shift(-0.2, 0.2);
    std::array<double, 4> worst{};
    int failures = 0;
    const auto t0 = Clock::now();
    for (int i = 0; i < 100; ++i) {
        const ShapeParams truth{slope(rng), slope(rng), loc(rng), shift(rng)};
        const auto r = fit_beat(f.ref, f.beat(truth), f.t);
        const std::array<double, 4> err{
            std::abs(r.params.u - truth.u) / truth.u, std::abs(r.params.d - truth.d) / truth.d,
            std::abs(r.params.m - truth.m) / std::max(std::abs(truth.m), 1.0),  // 1e-3 ms floor near 0
            std::abs(r.params.h - truth.h) / std::abs(truth.h)};
        bool bad = false;
        for (std::size_t c = 0; c < 4; ++c) {
            worst[c] = std::max(worst[c], err[c]);
            bad = bad || err[c] > 1e-3;
        }
        failures += bad;
    }
    const double elapsed = seconds_since(t0);
    const bool ok = failures == 0 && elapsed < 30.0;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("100 random theta, worst relative error u %.1e d %.1e m %.1e h %.1e (<= 1e-3), %d failed, %.2f s (< 30 s)",
                worst[0], worst[1], worst[2], worst[3], failures, elapsed)};
}

Verdict noisy_consistency() {
    Fixture f;
    std::mt19937_64 rng(0x5eed3);
    std::normal_distribution<double> noise(0.0, 0.02);
    constexpr int n = 200;
    std::array<std::vector<double>, 4> est;
    for (int rep = 0; rep < n; ++rep) {
        auto beat = f.k_values;
        for (double& v : beat) v += noise(rng);
        const auto p = fit_beat(f.ref, beat, f.t).params;
        est[0].push_back(p.u);
        est[1].push_back(p.d);
        est[2].push_back(p.m);
        est[3].push_back(p.h);
    }
    const std::array<double, 4> truth{1.0, 1.0, 0.0, 0.0};
    std::array<double, 4> z{};
    bool ok = true;
    for (std::size_t c = 0; c < 4; ++c) {
        const double mean = std::accumulate(est[c].begin(), est[c].end(), 0.0) / n;
        double ss = 0.0;
        for (double v : est[c]) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
        z[c] = std::abs(mean - truth[c]) / se;
        ok = ok && z[c] <= 3.0;
    }
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("200 fits at sigma 0.02 mV, |mean - truth| / SE: u %.2f d %.2f m %.2f h %.2f (<= 3)", z[0], z[1], z[2], z[3])};
}

Verdict robustness_band() {
    synth::SynthSpec spec;
    spec.n_beats = 60;
    spec.noise_sigma = 0.01;
    spec.jitter = {0.05, 0.05, 3.0, 0.01};
    spec.rr.jitter_ms = 30.0;
    spec.seed = 4;
    const auto s = synth::generate(spec);
    const auto peaks = detect_r_peaks(s.record);

    const std::vector<double> zero{0.0};
    const auto base = robustness_sweep(s.record, peaks, Window{}, zero);
    bool zeros = true;
    for (const auto& row : base.relative[0])
        for (double v : row) zeros = zeros && v == 0.0;
    for (double v : base.dm_ms[0]) zeros = zeros && v == 0.0;

    const std::vector<double> shifts{-12.0, -4.0, 4.0, 12.0};
    const auto rep = robustness_sweep(s.record, peaks, Window{}, shifts);
    double worst_median = 0.0, worst_sd = 0.0, worst_dm = 0.0;
    for (const auto& sum : rep.summary) {
        for (std::size_t c = 0; c < 4; ++c) {
            worst_median = std::max(worst_median, std::abs(sum.median_rel[c]));
            worst_sd = std::max(worst_sd, sum.stdev_rel[c]);
        }
        worst_dm = std::max(worst_dm, sum.stdev_dm_ms);
    }
    const bool ok = zeros && worst_median <= 0.01 && worst_sd <= 0.03 && worst_dm <= 1.0;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("60 beats, s = -12,-4,4,12 ms: max |median rel| %.4f (<= 0.01), max stdev rel %.4f (<= 0.03), "
                "max stdev dm %.3f ms (<= 1); s = 0 zeros: %s",
                worst_median, worst_sd, worst_dm, zeros ? "yes" : "no")};
}

Verdict qt_algebra() {
    std::mt19937_64 rng(0x97);
    std::uniform_real_distribution<double> ua(-4.0, -0.1), ub(0.0, 1.0), uc(0.01, 2.0);
    std::uniform_real_distribution<double> slope(0.5, 2.0), loc(-0.5, 0.5), shift(-0.005, 0.3);
    auto root = [](auto f, double lo, double hi) {
        boost::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
        return 0.5 * (r.first + r.second);
    };
    double worst = 0.0, worst_def = 0.0;
    bool exact = true;
    for (int i = 0; i < 1000; ++i) {
        const QuadraticT q{ua(rng), ub(rng), uc(rng)};
        const auto k = [&](double t) { return q.a * (t - q.b) * (t - q.b) + q.c; };
        const double width = std::sqrt(-q.c / q.a);
        worst = std::max(worst, std::abs(qt_quadratic(q) - root(k, q.b, q.b + 2.0 * width + 1.0)));
        const ShapeParams p{slope(rng), slope(rng), loc(rng), shift(rng)};
        const auto r = [&](double t) { return std::sqrt(p.u * p.d) * k(p.d * (t - p.m)) + p.h; };
        const double vertex = p.m + q.b / p.d;
        worst_def = std::max(worst_def, std::abs(qt_deformed(q, p) - root(r, vertex, vertex + (2.0 * width + 10.0) / p.d)));
        exact = exact && qt_deformed(q, ShapeParams::identity()) == qt_quadratic(q);
    }
    const bool ok = worst <= 1e-10 && worst_def <= 1e-10 && exact;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("1000 inputs vs bracketing root: quadratic %.1e, deformed %.1e (<= 1e-10); identity exact: %s", worst,
                worst_def, exact ? "yes" : "no")};
}

synth::SynthSpec two_regime_spec(std::uint64_t seed) {
    synth::SynthSpec spec;
    spec.theta = synth::TwoRegimeTheta{};
    spec.n_beats = 290;
    spec.noise_sigma = 0.02;
    spec.jitter = {0.03, 0.03, 3.0, 0.01};
    spec.rr.mean_ms = 820.0;
    spec.rr.jitter_ms = 40.0;
    spec.seed = seed;
    return spec;
}

Verdict clustering() {
    constexpr int runs = 20;
    int d_ok = 0, gauss_worse = 0;
    double min_d = 1.0, max_mu = 0.0;
    const std::vector<Parameter> features{Parameter::D};
    for (int seed = 1; seed <= runs; ++seed) {
        const auto f = fit_record(two_regime_spec(static_cast<std::uint64_t>(seed)));
        std::vector<int> labels;
        for (auto id : f.matrix.beat_ids()) labels.push_back(f.s.labels[id]);
        const double d_rate = *kmeans_params(f.results, features, 2, labels).match_rate;
        const auto pairs = fit_gaussian_all(f.matrix);
        const double mu_rate = std::max(*classify_by_mu(pairs, labels, 1).match_rate,
                                        *classify_by_mu(pairs, labels, 2).match_rate);
        d_ok += d_rate >= 0.95;
        gauss_worse += mu_rate < d_rate;
        min_d = std::min(min_d, d_rate);
        max_mu = std::max(max_mu, mu_rate);
    }
    const bool ok = d_ok == runs && gauss_worse >= 19;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("%d seeded 290-beat records: d-hat match >= 0.95 in %d (min %.4f); Gaussian mu strictly worse in %d "
                "(>= 95%%, best mu match %.4f)",
                runs, d_ok, min_d, gauss_worse, max_mu)};
}

Verdict gaussian_instability() {
    synth::SynthSpec spec;
    const auto t = twshape::testing::time_axis(100.0, 500.0, 250.0);
    const auto base = synth::twave_values(spec, {1.0, 0.8, 0.0, 0.0}, t);
    auto pert = base;
    for (std::size_t j = 0; j < t.size(); ++j)
        pert[j] += 0.002 * std::exp(-(t[j] - 440.0) * (t[j] - 440.0) / (2.0 * 225.0));
    const auto a = fit_gaussian_pair(base, t).scaled();
    const auto b = fit_gaussian_pair(pert, t).scaled();
    double dg = 0.0;
    for (std::size_t i = 0; i < 6; ++i) dg += (a[i] - b[i]) * (a[i] - b[i]);
    dg = std::sqrt(dg);

    const auto ref = reference_from_curve(t, synth::twave_values(spec, ShapeParams::identity(), t));
    const double dm = scaled_distance(fit_beat(ref, base, t).params, fit_beat(ref, pert, t).params);
    const bool ok = dg > 10.0 * dm;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("late-tail bump 0.002 mV: Gaussian distance %.4f vs model distance %.4f, ratio %.1f (> 10)", dg, dm,
                dg / dm)};
}

Verdict psd_tone() {
    bool ok = true;
    std::string detail = "0.14 Hz injected;";
    for (auto prm : kAllParameters) {
        synth::SynthSpec spec;
        spec.n_beats = 300;
        spec.noise_sigma = 0.01;
        spec.rr.jitter_ms = 30.0;
        ShapeParams amp{0.0, 0.0, 0.0, 0.0};
        if (prm == Parameter::U) amp.u = 0.1;
        if (prm == Parameter::D) amp.d = 0.1;
        if (prm == Parameter::M) amp.m = 5.0;
        if (prm == Parameter::H) amp.h = 0.03;
        spec.theta = synth::SinusoidalTheta{{}, amp, 0.14};
        const auto f = fit_record(spec);
        const auto s = psd_series(parameter_series(f.results, prm), beat_times_s(f.matrix));
        const auto peak = s.peak_bin();
        const double total = std::accumulate(s.power.begin(), s.power.end(), 0.0);
        double near = 0.0;
        for (std::size_t b = peak - 1; b <= peak + 1 && b < s.power.size(); ++b) near += s.power[b];
        const double off = std::abs(s.frequency_hz[peak] - 0.14) / s.bin_width_hz();
        ok = ok && off <= 1.0 && near / total >= 0.8;
        detail += fmt(" %s peak %.4f Hz (%.2f bins off, <= 1), %.1f%% in 3 bins;", name(prm), s.frequency_hz[peak], off,
                      100.0 * near / total);
    }
    detail += " (>= 80%)";
    return {ok ? Outcome::Pass : Outcome::Fail, detail};
}

Verdict lag_two() {
    synth::SynthSpec spec;
    spec.n_beats = 300;
    spec.noise_sigma = 0.01;
    spec.rr.jitter_ms = 60.0;
    spec.theta = synth::RrLagTheta{{}, {-0.002, 0.0, 0.05, 0.0}, 2};
    spec.jitter = {0.0, 0.02, 0.0, 0.005};
    const auto f = fit_record(spec);
    const auto rr = rr_for_rows(rr_series(detect_r_peaks(f.s.record), f.s.record.fs), f.matrix.beat_ids());
    const auto table = lag_correlations(f.results, rr, 3);
    bool ok = true;
    std::string detail = "coupled u, m:";
    for (auto prm : {Parameter::U, Parameter::M}) {
        const auto c = static_cast<std::size_t>(prm);
        const int best = table.best_lag[c].value_or(-1);
        const double r2 = table.r[c][2].value_or(0.0);
        ok = ok && best == 2 && std::abs(r2) >= 0.5;
        detail += fmt(" %s argmax lag %d, r(lag 2) = %.3f;", name(prm), best, r2);
    }
    detail += " (lag 2, |r| >= 0.5)";
    return {ok ? Outcome::Pass : Outcome::Fail, detail};
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(TWSHAPE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism_and_round_trips() {
    TempDir dir;
    write_text(dir / "spec.cfg",
               "theta = two_regime\nn_beats = 120\nnoise_sigma = 0.02\nrr_jitter_ms = 40\njitter_d = 0.03\nseed = 12\n");
    int identical = 0, compared = 0, failed_runs = 0;
    for (int k = 0; k < 2; ++k)
        failed_runs += run_cli("synth --config " + (dir / "spec.cfg").string() + " --out-dir " +
                               (dir / ("s" + std::to_string(k))).string()) != 0;
    const std::string input = " --input " + (dir / "s0" / "record.csv").string() + " --seed 3";
    const std::vector<std::string> commands{"fit", "robustness", "cluster", "psd", "lagcorr", "outliers", "gauss"};
    for (const auto& cmd : commands)
        for (int k = 0; k < 2; ++k)
            failed_runs += run_cli(cmd + input + " --out-dir " + (dir / (cmd + std::to_string(k))).string()) != 0;
    std::vector<std::string> dirs{"s"};
    dirs.insert(dirs.end(), commands.begin(), commands.end());
    for (const auto& d : dirs)
        for (const auto& entry : std::filesystem::directory_iterator(dir / (d + "0"))) {
            ++compared;
            identical += read_text(entry.path()) == read_text(dir / (d + "1") / entry.path().filename());
        }

    // CSV round trip
    synth::SynthSpec spec;
    spec.noise_sigma = 0.05;
    const auto rec = synth::generate(spec).record;
    synth::write_csv(rec, dir / "rt.csv");
    const bool csv_ok = read_csv_record(dir / "rt.csv").samples == rec.samples;

    // 212 round trip over every 12-bit value, through files
    std::vector<std::int16_t> all;
    for (int v = -2048; v < 2048; ++v) all.push_back(static_cast<std::int16_t>(v));
    write_wfdb212_record(dir / "rt.hea", {all}, 250.0, 1.0, 0);
    const auto back = read_wfdb212_record(dir / "rt.hea");
    bool codec_ok = back.samples.size() == all.size();
    for (std::size_t i = 0; codec_ok && i < all.size(); ++i) codec_ok = back.samples[i] == all[i];
    for (int a = -2048; codec_ok && a < 2048; ++a) {
        const auto bytes = encode212(static_cast<std::int16_t>(a), static_cast<std::int16_t>(-1 - a));
        const auto s = decode212(bytes[0], bytes[1], bytes[2]);
        codec_ok = s[0] == a && s[1] == -1 - a;
    }

    const bool ok = failed_runs == 0 && compared > 0 && identical == compared && csv_ok && codec_ok;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("CLI reruns: %d/%d artifacts byte-identical, %d failed runs; CSV round trip %s; 212 round trip %s",
                identical, compared, failed_runs, csv_ok ? "exact" : "differs", codec_ok ? "exact" : "differs")};
}

// Optional tier on locally supplied QT Database records. Expected layout in
// $TWSHAPE_QTDB_DIR: <rec>.hea/.dat (format 212), <rec>.ann (R-peak sample
// indices), sel104.labels (0/1 per annotated beat), sel103.qt (QT proxy in ms
// per annotated beat).
Verdict qtdb_tier() {
    const char* env = std::getenv("TWSHAPE_QTDB_DIR");
    if (!env) return {Outcome::Skip, "TWSHAPE_QTDB_DIR not set; dataset tier skipped"};
    const std::filesystem::path root(env);
    for (const char* f : {"sel104.hea", "sel103.hea", "sel123.hea", "sel104.ann", "sel103.ann", "sel123.ann",
                          "sel104.labels", "sel103.qt"})
        if (!std::filesystem::exists(root / f))
            return {Outcome::Skip, std::string("missing ") + f + " in " + root.string() + "; dataset tier skipped"};

    auto load = [&](const std::string& rec) {
        const auto r = read_annotations(root / (rec + ".ann"), read_wfdb212_record(root / (rec + ".hea"), 0));
        const auto m = extract_beat_matrix(r, *r.annotations, Window{});
        const auto ref = build_reference(m);
        return std::make_pair(m, fit_all(ref, m));
    };
    auto read_column = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        std::vector<double> v;
        for (double x; in >> x;) v.push_back(x);
        return v;
    };
    try {
        const auto [m123, r123] = load("sel123");
        const auto [m104, r104] = load("sel104");
        const auto raw = read_column(root / "sel104.labels");
        std::vector<int> labels;
        for (auto id : m104.beat_ids()) labels.push_back(static_cast<int>(raw.at(id)));
        const std::vector<Parameter> features{Parameter::D};
        const double match = *kmeans_params(r104, features, 2, labels).match_rate;

        const auto [m103, r103] = load("sel103");
        const auto qt = read_column(root / "sel103.qt");
        std::vector<double> q, mm, uu;
        for (std::size_t i = 0; i < r103.size(); ++i) {
            q.push_back(qt.at(m103.beat_ids()[i]));
            mm.push_back(r103[i].params.m);
            uu.push_back(r103[i].params.u);
        }
        const double rm = pearson(mm, q).value_or(0.0), ru = pearson(uu, q).value_or(0.0);
        const bool ok = r123.size() == m123.rows() && match >= 0.90 && rm > 0.0 && ru < 0.0;
        return {ok ? Outcome::Pass : Outcome::Fail,
                fmt("sel123 %zu beats fitted; sel104 d-hat match %.4f (>= 0.90); sel103 corr(m, QT) %.3f (> 0), "
                    "corr(u, QT) %.3f (< 0)",
                    r123.size(), match, rm, ru)};
    } catch (const std::exception& e) {
        return {Outcome::Fail, std::string("pipeline failed: ") + e.what()};
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"identity fit", identity_fit},
        {"noiseless parameter recovery", noiseless_recovery},
        {"noisy consistency", noisy_consistency},
        {"robustness band", robustness_band},
        {"QT algebra", qt_algebra},
        {"clustering analog", clustering},
        {"Gaussian instability", gaussian_instability},
        {"PSD", psd_tone},
        {"lag correlation", lag_two},
        {"determinism and round trips", determinism_and_round_trips},
        {"dataset tier", qtdb_tier},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        const auto t0 = Clock::now();
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {Outcome::Fail, std::string("threw: ") + e.what()};
        }
        const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
        failures += v.outcome == Outcome::Fail;
        std::printf("%s %2zu %s: %s [%.1f s]\n", tag, i + 1, criteria[i].first.c_str(), v.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
