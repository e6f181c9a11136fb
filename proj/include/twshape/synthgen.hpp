#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "twshape/ingest.hpp"
#include "twshape/reference.hpp"
#include "twshape/twave_model.hpp"

namespace twshape::synth {

/// A (1 + cos) / 2 bump: amplitude * (1 + cos(pi t / half_width)) / 2 on
/// |t| < half_width, zero elsewhere.
struct RaisedCosine {
    double amplitude = 0.4;       // mV
    double half_width_ms = 120.0;
};

/// a (t - b)^2 + c between its roots and zero outside (requires a < 0 < c).
struct Parabola {
    double a = -1e-5;
    double b = 0.0;
    double c = 0.3;
};

/// An arbitrary shape given as a saved reference curve.
struct SplineShape {
    ReferenceCurve curve;
};

using Shape = std::variant<RaisedCosine, Parabola, SplineShape>;

/// Value of the undeformed shape at t ms from its origin.
double shape_value(const Shape& shape, double t);

struct ConstantTheta {
    ShapeParams theta;
};

/// Normal beats with an abnormal beat every min_gap..max_gap beats
/// (gap drawn uniformly). Abnormal beats get label 1.
struct TwoRegimeTheta {
    ShapeParams normal;
    ShapeParams abnormal{1.25, 0.75, 0.0, -0.05};
    int min_gap = 7;
    int max_gap = 9;
};

/// base + amplitude * sin(2 pi f t) with t the beat's R time in seconds.
struct SinusoidalTheta {
    ShapeParams base;
    ShapeParams amplitude{0.0, 0.0, 0.0, 0.0};
    double frequency_hz = 0.14;
};

/// base + gain * (RR(i - lag) - mean RR); gain is per ms of RR deviation.
/// RR(i) is the interval ending at beat i.
struct RrLagTheta {
    ShapeParams base;
    ShapeParams gain{0.0, 0.0, 0.0, 0.0};
    int lag = 2;
};

using ThetaProcess = std::variant<ConstantTheta, TwoRegimeTheta, SinusoidalTheta, RrLagTheta>;

struct RrProcess {
    double mean_ms = 1000.0;
    double amplitude_ms = 0.0;  // sinusoidal modulation
    double period_s = 10.0;
    double jitter_ms = 0.0;     // white Gaussian jitter per interval
};

struct SynthSpec {
    Shape shape = RaisedCosine{};
    ThetaProcess theta = ConstantTheta{};
    /// Per-beat Gaussian jitter added to every component of the process.
    ShapeParams jitter{0.0, 0.0, 0.0, 0.0};
    RrProcess rr;
    double noise_sigma = 0.0;  // mV
    int n_beats = 60;
    double fs = 250.0;
    std::uint64_t seed = 1;
    double apex_ms = 300.0;           // shape origin, ms after R
    double region_start_ms = 60.0;    // T-wave drawn on [R + start, R + end]
    double region_end_ms = 560.0;
    double spike_amplitude = 1.5;     // mV
    double spike_half_width_ms = 16.0;
    double lead_ms = 500.0;           // signal before the first R
    double tail_ms = 600.0;           // signal after the last R
    std::string label = "synthetic";
};

struct SynthRecord {
    EcgRecord record;
    std::vector<ShapeParams> theta;       // per beat
    std::vector<std::size_t> r_indices;   // true R samples
    std::vector<double> rr_ms;            // rr_ms[k] ends at beat k + 1
    std::vector<int> labels;              // regime per beat (0 unless two-regime)
};

/// Throws Error(Infeasible) when T regions would collide with the next beat.
SynthRecord generate(const SynthSpec& spec);

/// Noise-free T-wave values of a beat with parameters theta at the given
/// offsets from R (ms), exactly as generate() draws them (no spike).
std::vector<double> twave_values(const SynthSpec& spec, const ShapeParams& theta,
                                 std::span<const double> offsets_ms);

/// Writes the CSV interchange format read by read_csv_record; values are
/// written in shortest round-trip form.
void write_csv(const EcgRecord& record, const std::filesystem::path& path);

/// Parses a key=value configuration file (see README for the keys).
SynthSpec read_config(const std::filesystem::path& path);

}  // namespace twshape::synth
