#include "twshape/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <numbers>
#include <random>
#include <string>

#include "text_util.hpp"
#include "twshape/error.hpp"

namespace twshape::synth {

namespace {

struct ShapeVisitor {
    double t;
    double operator()(const RaisedCosine& s) const {
        if (std::abs(t) >= s.half_width_ms) return 0.0;
        return s.amplitude * 0.5 * (1.0 + std::cos(std::numbers::pi * t / s.half_width_ms));
    }
    double operator()(const Parabola& s) const {
        return std::max(0.0, s.a * (t - s.b) * (t - s.b) + s.c);
    }
    double operator()(const SplineShape& s) const { return s.curve.evaluate_unchecked(t); }
};

double deformed(const Shape& shape, const ShapeParams& p, double t) {
    const double arg = (t <= p.m ? p.u : p.d) * (t - p.m);
    return std::sqrt(p.u * p.d) * shape_value(shape, arg) + p.h;
}

ShapeParams add(ShapeParams a, const ShapeParams& b, double scale = 1.0) {
    a.u += scale * b.u;
    a.d += scale * b.d;
    a.m += scale * b.m;
    a.h += scale * b.h;
    return a;
}

std::vector<double> draw_rr(const SynthSpec& spec, std::mt19937_64& rng) {
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::vector<double> rr;
    rr.reserve(static_cast<std::size_t>(std::max(0, spec.n_beats - 1)));
    double t_s = spec.lead_ms / 1000.0;
    for (int k = 0; k + 1 < spec.n_beats; ++k) {
        double v = spec.rr.mean_ms;
        if (spec.rr.amplitude_ms != 0.0)
            v += spec.rr.amplitude_ms * std::sin(2.0 * std::numbers::pi * t_s / spec.rr.period_s);
        if (spec.rr.jitter_ms > 0.0) v += spec.rr.jitter_ms * jitter(rng);
        rr.push_back(v);
        t_s += v / 1000.0;
    }
    return rr;
}

}  // namespace

double shape_value(const Shape& shape, double t) { return std::visit(ShapeVisitor{t}, shape); }

std::vector<double> twave_values(const SynthSpec& spec, const ShapeParams& theta,
                                 std::span<const double> offsets_ms) {
    std::vector<double> out(offsets_ms.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = deformed(spec.shape, theta, offsets_ms[j] - spec.apex_ms);
    return out;
}

SynthRecord generate(const SynthSpec& spec) {
    if (spec.n_beats < 1) throw Error(ErrorCode::InvalidArgument, "n_beats must be at least 1");
    if (!(spec.fs > 0.0)) throw Error(ErrorCode::InvalidArgument, "fs must be positive");
    if (!(spec.noise_sigma >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "noise_sigma must be non-negative");
    if (!(spec.region_start_ms > spec.spike_half_width_ms) ||
        !(spec.region_end_ms > spec.region_start_ms))
        throw Error(ErrorCode::Infeasible, "T region must follow the R spike");
    if (const auto* p = std::get_if<Parabola>(&spec.shape); p && !(p->a < 0.0 && p->c > 0.0))
        throw Error(ErrorCode::InvalidArgument, "parabola shape needs a < 0 < c");

    std::mt19937_64 rng(spec.seed);
    SynthRecord out;
    out.rr_ms = draw_rr(spec, rng);
    for (double v : out.rr_ms)
        if (!(v > spec.region_end_ms + spec.spike_half_width_ms))
            throw Error(ErrorCode::Infeasible,
                        "RR of " + std::to_string(v) + " ms leaves no room for the T region");

    const double fs = spec.fs;
    auto to_sample = [fs](double ms) { return static_cast<std::size_t>(std::llround(ms * fs / 1000.0)); };

    // R positions on the sample grid; RR truth follows from them exactly.
    double t_ms = spec.lead_ms;
    out.r_indices.push_back(to_sample(t_ms));
    for (double v : out.rr_ms) {
        t_ms += v;
        out.r_indices.push_back(to_sample(t_ms));
    }
    for (std::size_t k = 0; k < out.rr_ms.size(); ++k)
        out.rr_ms[k] = static_cast<double>(out.r_indices[k + 1] - out.r_indices[k]) * 1000.0 / fs;
    const double mean_rr = out.rr_ms.empty()
                               ? spec.rr.mean_ms
                               : std::accumulate(out.rr_ms.begin(), out.rr_ms.end(), 0.0) /
                                     static_cast<double>(out.rr_ms.size());

    // Per-beat parameters.
    const auto n = static_cast<std::size_t>(spec.n_beats);
    out.theta.resize(n);
    out.labels.assign(n, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (const auto* two = std::get_if<TwoRegimeTheta>(&spec.theta)) {
        std::uniform_int_distribution<int> gap(two->min_gap, std::max(two->min_gap, two->max_gap));
        for (std::size_t next = static_cast<std::size_t>(gap(rng)); next < n;
             next += static_cast<std::size_t>(gap(rng)))
            out.labels[next] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double r_time_s = static_cast<double>(out.r_indices[i]) / fs;
        ShapeParams p = std::visit(
            [&](const auto& proc) -> ShapeParams {
                using T = std::decay_t<decltype(proc)>;
                if constexpr (std::is_same_v<T, ConstantTheta>) {
                    return proc.theta;
                } else if constexpr (std::is_same_v<T, TwoRegimeTheta>) {
                    return out.labels[i] ? proc.abnormal : proc.normal;
                } else if constexpr (std::is_same_v<T, SinusoidalTheta>) {
                    const double s = std::sin(2.0 * std::numbers::pi * proc.frequency_hz * r_time_s);
                    return add(proc.base, proc.amplitude, s);
                } else {
                    const long long src = static_cast<long long>(i) - proc.lag;
                    // RR ending at beat src is rr_ms[src - 1]
                    const double rr = src >= 1 ? out.rr_ms[static_cast<std::size_t>(src - 1)] : mean_rr;
                    return add(proc.base, proc.gain, rr - mean_rr);
                }
            },
            spec.theta);
        p.u += spec.jitter.u * gauss(rng);
        p.d += spec.jitter.d * gauss(rng);
        p.m += spec.jitter.m * gauss(rng);
        p.h += spec.jitter.h * gauss(rng);
        if (!p.valid())
            throw Error(ErrorCode::Infeasible, "beat " + std::to_string(i) + " drew non-positive slopes");
        out.theta[i] = p;
    }

    // Signal.
    const std::size_t length = to_sample(t_ms + spec.tail_ms) + 1;
    std::vector<double> x(length, 0.0);
    const auto spike_half = static_cast<long long>(std::floor(spec.spike_half_width_ms * fs / 1000.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<long long>(out.r_indices[i]);
        for (long long k = -spike_half; k <= spike_half; ++k) {
            const long long s = r + k;
            if (s < 0 || s >= static_cast<long long>(length)) continue;
            const double tau = static_cast<double>(k) * 1000.0 / fs;
            x[static_cast<std::size_t>(s)] +=
                spec.spike_amplitude * (1.0 - std::abs(tau) / spec.spike_half_width_ms);
        }
        const long long lo = r + std::llround(spec.region_start_ms * fs / 1000.0);
        const long long hi = r + std::llround(spec.region_end_ms * fs / 1000.0);
        for (long long s = lo; s <= hi && s < static_cast<long long>(length); ++s) {
            const double tau = static_cast<double>(s - r) * 1000.0 / fs;
            x[static_cast<std::size_t>(s)] += deformed(spec.shape, out.theta[i], tau - spec.apex_ms);
        }
    }
    if (spec.noise_sigma > 0.0)
        for (double& v : x) v += spec.noise_sigma * gauss(rng);

    out.record.samples = std::move(x);
    out.record.fs = fs;
    out.record.label = spec.label;
    return out;
}

void write_csv(const EcgRecord& record, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    if (!record.label.empty()) out << "# label=" << record.label << '\n';
    if (record.t0 != 0.0) out << "# t0=" << detail::format_exact(record.t0) << '\n';
    out << "fs=" << detail::format_exact(record.fs) << '\n';
    for (double v : record.samples) out << detail::format_exact(v) << '\n';
}

SynthSpec read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::map<std::string, std::size_t> where;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(line_no, path.string() + ":" + std::to_string(line_no) +
                                          ": expected key=value");
        const std::string key(detail::trim(body.substr(0, eq)));
        kv[key] = std::string(detail::trim(body.substr(eq + 1)));
        where[key] = line_no;
    }

    std::map<std::string, bool> used;
    auto text = [&](const std::string& key, const std::string& fallback) {
        used[key] = true;
        const auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };
    auto num = [&](const std::string& key, double fallback) {
        used[key] = true;
        const auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        auto v = detail::parse_number<double>(it->second);
        if (!v)
            throw ParseError(where[key], path.string() + ":" + std::to_string(where[key]) +
                                             ": invalid number for " + key);
        return *v;
    };
    auto params = [&](const std::string& prefix, ShapeParams fallback) {
        return ShapeParams{num(prefix + "u", fallback.u), num(prefix + "d", fallback.d),
                           num(prefix + "m", fallback.m), num(prefix + "h", fallback.h)};
    };

    SynthSpec spec;
    const std::string shape = text("shape", "raised_cosine");
    const RaisedCosine cosine{num("amplitude", 0.4), num("half_width_ms", 120.0)};
    const Parabola parabola{num("a", -1e-5), num("b", 0.0), num("c", 0.3)};
    const std::string shape_file = text("shape_file", "");
    if (shape == "raised_cosine") {
        spec.shape = cosine;
    } else if (shape == "parabola") {
        spec.shape = parabola;
    } else if (shape == "spline") {
        auto file = std::filesystem::path(shape_file);
        if (file.is_relative()) file = path.parent_path() / file;
        spec.shape = SplineShape{read_reference_csv(file)};
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown shape '" + shape + "'");
    }

    const ShapeParams base = params("", ShapeParams::identity());
    const ShapeParams abnormal = params("abnormal_", TwoRegimeTheta{}.abnormal);
    const ShapeParams amp = params("amp_", {0, 0, 0, 0});
    const ShapeParams gain = params("gain_", {0, 0, 0, 0});
    const double min_gap = num("min_gap", 7), max_gap = num("max_gap", 9);
    const double frequency = num("theta_frequency_hz", 0.14), lag = num("lag", 2);
    const std::string theta = text("theta", "constant");
    if (theta == "constant") {
        spec.theta = ConstantTheta{base};
    } else if (theta == "two_regime") {
        TwoRegimeTheta t;
        t.normal = base;
        t.abnormal = abnormal;
        t.min_gap = static_cast<int>(min_gap);
        t.max_gap = static_cast<int>(max_gap);
        spec.theta = t;
    } else if (theta == "sinusoidal") {
        spec.theta = SinusoidalTheta{base, amp, frequency};
    } else if (theta == "rr_lag") {
        spec.theta = RrLagTheta{base, gain, static_cast<int>(lag)};
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown theta process '" + theta + "'");
    }
    spec.jitter = params("jitter_", {0, 0, 0, 0});

    if (const double bpm = num("bpm", 0.0); bpm > 0.0) spec.rr.mean_ms = 60000.0 / bpm;
    spec.rr.mean_ms = num("rr_mean_ms", spec.rr.mean_ms);
    spec.rr.amplitude_ms = num("rr_amplitude_ms", 0.0);
    spec.rr.period_s = num("rr_period_s", spec.rr.period_s);
    spec.rr.jitter_ms = num("rr_jitter_ms", 0.0);

    spec.noise_sigma = num("noise_sigma", spec.noise_sigma);
    spec.n_beats = static_cast<int>(num("n_beats", spec.n_beats));
    spec.fs = num("fs", spec.fs);
    used["seed"] = true;
    if (const auto it = kv.find("seed"); it != kv.end()) {
        auto v = detail::parse_number<std::uint64_t>(it->second);
        if (!v)
            throw ParseError(where["seed"], path.string() + ":" + std::to_string(where["seed"]) +
                                                ": invalid seed");
        spec.seed = *v;
    }
    spec.apex_ms = num("apex_ms", spec.apex_ms);
    spec.region_start_ms = num("region_start_ms", spec.region_start_ms);
    spec.region_end_ms = num("region_end_ms", spec.region_end_ms);
    spec.spike_amplitude = num("spike_amplitude", spec.spike_amplitude);
    spec.spike_half_width_ms = num("spike_half_width_ms", spec.spike_half_width_ms);
    spec.lead_ms = num("lead_ms", spec.lead_ms);
    spec.tail_ms = num("tail_ms", spec.tail_ms);
    spec.label = text("label", spec.label);

    for (const auto& [key, value] : kv)
        if (!used.count(key))
            throw ParseError(where[key], path.string() + ":" + std::to_string(where[key]) +
                                             ": unknown key '" + key + "'");
    return spec;
}

}  // namespace twshape::synth
