#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "twshape/error.hpp"
#include "twshape/segmentation.hpp"
#include "twshape/synthgen.hpp"

using namespace twshape;

namespace {

// 60 s at 250 Hz with Gaussian R spikes exactly once per second.
EcgRecord spike_train(std::vector<std::size_t>* truth) {
    EcgRecord rec;
    rec.fs = 250.0;
    rec.samples.assign(60 * 250, 0.0);
    for (std::size_t k = 0; k < 60; ++k) {
        const std::size_t c = 100 + 250 * k;
        truth->push_back(c);
        for (long long j = -10; j <= 10; ++j) {
            const long long s = static_cast<long long>(c) + j;
            if (s < 0 || s >= static_cast<long long>(rec.samples.size())) continue;
            const double tau = static_cast<double>(j) * 4.0;  // ms
            rec.samples[static_cast<std::size_t>(s)] += 1.2 * std::exp(-tau * tau / (2.0 * 8.0 * 8.0));
        }
    }
    return rec;
}

}  // namespace

TEST_CASE("detector finds a 60 bpm Gaussian spike train") {
    std::vector<std::size_t> truth;
    const auto rec = spike_train(&truth);
    const auto peaks = detect_r_peaks(rec);
    REQUIRE(peaks.size() == 60);
    for (std::size_t k = 1; k < peaks.size(); ++k) {
        const auto diff = static_cast<long long>(peaks[k] - peaks[k - 1]);
        CHECK(std::llabs(diff - 250) <= 1);
    }
    for (std::size_t k = 0; k < peaks.size(); ++k)
        CHECK(std::llabs(static_cast<long long>(peaks[k]) - static_cast<long long>(truth[k])) <= 1);
}

TEST_CASE("detector finds synthgen R spikes among T-waves") {
    synth::SynthSpec spec;
    spec.rr.jitter_ms = 60.0;
    spec.noise_sigma = 0.02;
    const auto s = synth::generate(spec);
    const auto peaks = detect_r_peaks(s.record);
    REQUIRE(peaks.size() == s.r_indices.size());
    for (std::size_t k = 0; k < peaks.size(); ++k)
        CHECK(std::llabs(static_cast<long long>(peaks[k]) - static_cast<long long>(s.r_indices[k])) <= 1);
}

TEST_CASE("annotations bypass the detector") {
    EcgRecord rec;
    rec.fs = 250.0;
    rec.samples.assign(1000, 0.0);
    rec.annotations = std::vector<std::size_t>{3, 400, 999};
    CHECK(detect_r_peaks(rec) == *rec.annotations);
}

TEST_CASE("flat signal fails detection") {
    EcgRecord rec;
    rec.fs = 250.0;
    rec.samples.assign(2500, 0.0);
    try {
        detect_r_peaks(rec);
        FAIL("expected detection failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DetectionFailure);
        CHECK(std::string(e.what()).find("annotation") != std::string::npos);
    }
    rec.samples.assign(400, 0.0);
    CHECK_THROWS_AS(detect_r_peaks(rec), Error);
}

TEST_CASE("alignment invariance under a whole-record shift") {
    synth::SynthSpec spec;
    spec.noise_sigma = 0.01;
    spec.rr.jitter_ms = 30.0;
    const auto s = synth::generate(spec);
    auto shifted = s.record;
    const std::size_t k = 37;
    shifted.samples.insert(shifted.samples.begin(), k, 0.0);
    const auto p0 = detect_r_peaks(s.record);
    const auto p1 = detect_r_peaks(shifted);
    REQUIRE(p0.size() == p1.size());
    for (std::size_t i = 0; i < p0.size(); ++i) CHECK(p1[i] == p0[i] + k);
    const auto m0 = extract_beat_matrix(s.record, p0, Window{});
    const auto m1 = extract_beat_matrix(shifted, p1, Window{});
    CHECK(std::vector<double>(m0.values().begin(), m0.values().end()) ==
          std::vector<double>(m1.values().begin(), m1.values().end()));
}

TEST_CASE("beat matrix shape from window arithmetic") {
    EcgRecord rec;
    rec.fs = 250.0;
    rec.samples.resize(1000);
    for (std::size_t i = 0; i < rec.samples.size(); ++i) rec.samples[i] = static_cast<double>(i);
    const std::vector<std::size_t> peaks{250, 500, 750};
    const auto m = extract_beat_matrix(rec, peaks, Window{100.0, 400.0});
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 76);
    CHECK(window_length(Window{100.0, 400.0}, 250.0) == 76);
    for (std::size_t j = 1; j < m.cols(); ++j)
        CHECK(m.time_axis()[j] - m.time_axis()[j - 1] == doctest::Approx(4.0));

    // window identity
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const auto off = std::llround(m.time_axis()[j] * rec.fs / 1000.0);
            CHECK(m(i, j) == rec.samples[static_cast<std::size_t>(
                                 static_cast<long long>(m.r_indices()[i]) + off)]);
        }
}

TEST_CASE("beats overrunning the record edge are dropped") {
    EcgRecord rec;
    rec.fs = 250.0;
    rec.samples.assign(1000, 0.0);
    const std::vector<std::size_t> peaks{10, 500, 750};
    const auto m = extract_beat_matrix(rec, peaks, Window{-100.0, 200.0});
    CHECK(m.rows() == 2);
    REQUIRE(m.dropped().size() == 1);
    CHECK(m.dropped()[0] == 0);
    CHECK(m.beat_ids()[0] == 1);

    CHECK_THROWS_AS(extract_beat_matrix(rec, std::vector<std::size_t>{995}, Window{}), Error);
    CHECK_THROWS_AS(extract_beat_matrix(rec, peaks, Window{300.0, 200.0}), Error);
}

TEST_CASE("extracted rows equal the generator's windows") {
    synth::SynthSpec spec;
    spec.rr.jitter_ms = 25.0;
    spec.theta = synth::SinusoidalTheta{{}, {0.1, 0.1, 5.0, 0.02}, 0.1};
    const auto s = synth::generate(spec);
    const auto m = extract_beat_matrix(s.record, s.r_indices, Window{100.0, 500.0});
    REQUIRE(m.rows() == s.theta.size());
    const std::vector<double> offsets(m.time_axis().begin(), m.time_axis().end());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto want = synth::twave_values(spec, s.theta[i], offsets);
        for (std::size_t j = 0; j < m.cols(); ++j) REQUIRE(m(i, j) == doctest::Approx(want[j]).epsilon(1e-12));
    }
}

TEST_CASE("rr series") {
    const std::vector<std::size_t> a{0, 250, 500};
    CHECK(rr_series(a, 250.0).rr == std::vector<double>{1000.0, 1000.0});
    const std::vector<std::size_t> b{0, 200, 500};
    const auto rr = rr_series(b, 250.0);
    CHECK(rr.rr == std::vector<double>{800.0, 1200.0});
    CHECK(rr.indices == std::vector<std::size_t>{1, 2});
    CHECK_THROWS_AS(rr_series(std::vector<std::size_t>{5}, 250.0), Error);

    std::vector<std::size_t> truth;
    const auto rec = spike_train(&truth);
    for (double v : rr_series(detect_r_peaks(rec), rec.fs).rr) {
        CHECK(v >= 996.0);
        CHECK(v <= 1004.0);
    }
}

TEST_CASE("rr truth matches detected peaks without noise") {
    synth::SynthSpec spec;
    spec.rr = {900.0, 80.0, 12.0, 20.0};
    const auto s = synth::generate(spec);
    const auto rr = rr_series(detect_r_peaks(s.record), s.record.fs);
    REQUIRE(rr.rr.size() == s.rr_ms.size());
    for (std::size_t k = 0; k < rr.rr.size(); ++k) CHECK(std::abs(rr.rr[k] - s.rr_ms[k]) <= 4.0);
}

TEST_CASE("rr re-indexed onto matrix rows") {
    const std::vector<std::size_t> peaks{0, 250, 500, 750};
    const auto rr = rr_series(peaks, 250.0);
    const std::vector<std::size_t> ids{0, 2, 3};
    const auto rows = rr_for_rows(rr, ids);
    CHECK(rows.indices == std::vector<std::size_t>{1, 2});
    CHECK(rows.rr.size() == 2);
}
