#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"
#include "twshape/error.hpp"
#include "twshape/segmentation.hpp"
#include "twshape/synthgen.hpp"

using namespace twshape;
using twshape::testing::read_text;
using twshape::testing::TempDir;
using twshape::testing::write_text;

TEST_CASE("identity beats without noise equal the true shape") {
    synth::SynthSpec spec;
    spec.rr.jitter_ms = 40.0;
    const auto s = synth::generate(spec);
    const auto m = extract_beat_matrix(s.record, s.r_indices, Window{});
    const std::vector<double> offsets(m.time_axis().begin(), m.time_axis().end());
    std::vector<double> truth;
    for (double t : offsets) truth.push_back(synth::shape_value(spec.shape, t - spec.apex_ms));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) REQUIRE(m(i, j) == truth[j]);
}

TEST_CASE("fixed seed gives byte-identical output") {
    TempDir dir;
    synth::SynthSpec spec;
    spec.noise_sigma = 0.02;
    spec.jitter = {0.05, 0.05, 3.0, 0.01};
    spec.rr.jitter_ms = 30.0;
    spec.seed = 99;
    synth::write_csv(synth::generate(spec).record, dir / "a.csv");
    synth::write_csv(synth::generate(spec).record, dir / "b.csv");
    CHECK(read_text(dir / "a.csv") == read_text(dir / "b.csv"));
    spec.seed = 100;
    synth::write_csv(synth::generate(spec).record, dir / "c.csv");
    CHECK(read_text(dir / "a.csv") != read_text(dir / "c.csv"));
}

TEST_CASE("two-regime labels follow the gap range") {
    synth::SynthSpec spec;
    spec.n_beats = 300;
    spec.theta = synth::TwoRegimeTheta{};
    const auto s = synth::generate(spec);
    std::vector<std::size_t> abnormal;
    for (std::size_t i = 0; i < s.labels.size(); ++i)
        if (s.labels[i]) abnormal.push_back(i);
    REQUIRE(abnormal.size() > 30);
    CHECK(abnormal.front() >= 7);
    for (std::size_t k = 1; k < abnormal.size(); ++k) {
        const auto gap = abnormal[k] - abnormal[k - 1];
        CHECK(gap >= 7);
        CHECK(gap <= 9);
    }
    for (auto i : abnormal) CHECK(s.theta[i] == synth::TwoRegimeTheta{}.abnormal);
}

TEST_CASE("rr-lag process follows the interval two beats back") {
    synth::SynthSpec spec;
    spec.n_beats = 40;
    spec.rr.jitter_ms = 50.0;
    spec.theta = synth::RrLagTheta{{}, {-0.001, 0.0, 0.0, 0.0}, 2};
    const auto s = synth::generate(spec);
    double mean = 0.0;
    for (double v : s.rr_ms) mean += v;
    mean /= static_cast<double>(s.rr_ms.size());
    for (std::size_t i = 3; i < s.theta.size(); ++i)
        CHECK(s.theta[i].u == doctest::Approx(1.0 - 0.001 * (s.rr_ms[i - 3] - mean)));
}

TEST_CASE("sinusoidal process uses the R time") {
    synth::SynthSpec spec;
    spec.theta = synth::SinusoidalTheta{{}, {0.0, 0.2, 0.0, 0.0}, 0.14};
    const auto s = synth::generate(spec);
    for (std::size_t i = 0; i < s.theta.size(); ++i) {
        const double t = static_cast<double>(s.r_indices[i]) / spec.fs;
        CHECK(s.theta[i].d == doctest::Approx(1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * 0.14 * t)));
    }
}

TEST_CASE("spike shape and parabola clipping") {
    const synth::Shape p = synth::Parabola{-1e-5, 0.0, 0.3};
    CHECK(synth::shape_value(p, 0.0) == 0.3);
    CHECK(synth::shape_value(p, 500.0) == 0.0);
    const synth::Shape c = synth::RaisedCosine{};
    CHECK(synth::shape_value(c, 0.0) == 0.4);
    CHECK(synth::shape_value(c, 120.0) == 0.0);
}

TEST_CASE("infeasible specs") {
    synth::SynthSpec spec;
    spec.rr.mean_ms = 400.0;
    try {
        synth::generate(spec);
        FAIL("expected infeasible");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Infeasible);
    }
    spec = {};
    spec.n_beats = 0;
    CHECK_THROWS_AS(synth::generate(spec), Error);
}

TEST_CASE("csv writer keeps header fields") {
    TempDir dir;
    EcgRecord rec;
    rec.fs = 360.0;
    rec.t0 = 0.25;
    rec.label = "hdr";
    rec.samples = {0.1, -0.2, 1.0 / 3.0};
    synth::write_csv(rec, dir / "r.csv");
    const auto text = read_text(dir / "r.csv");
    CHECK(text.find("# label=hdr") != std::string::npos);
    CHECK(text.find("fs=360") != std::string::npos);
    const auto back = read_csv_record(dir / "r.csv");
    CHECK(back.samples == rec.samples);
    CHECK(back.t0 == 0.25);
}

TEST_CASE("config file") {
    TempDir dir;
    write_text(dir / "spec.txt",
               "# two regimes\n"
               "theta = two_regime\n"
               "abnormal_d = 0.7\n"
               "n_beats = 120\n"
               "rr_mean_ms = 820\n"
               "rr_jitter_ms = 40\n"
               "noise_sigma = 0.02\n"
               "jitter_d = 0.03\n"
               "seed = 18446744073709551615\n");
    const auto spec = synth::read_config(dir / "spec.txt");
    CHECK(spec.n_beats == 120);
    CHECK(spec.seed == 18446744073709551615ull);
    CHECK(spec.rr.mean_ms == 820.0);
    CHECK(spec.jitter.d == 0.03);
    const auto* two = std::get_if<synth::TwoRegimeTheta>(&spec.theta);
    REQUIRE(two);
    CHECK(two->abnormal.d == 0.7);
    CHECK(two->abnormal.u == 1.25);

    write_text(dir / "bad.txt", "n_beats = 10\ncolour = red\n");
    try {
        synth::read_config(dir / "bad.txt");
        FAIL("expected unknown key");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    write_text(dir / "bad2.txt", "fs = fast\n");
    CHECK_THROWS_AS(synth::read_config(dir / "bad2.txt"), ParseError);
}
