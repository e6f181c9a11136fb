#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "twshape/error.hpp"
#include "twshape/twave_model.hpp"

using namespace twshape;
using twshape::testing::Fixture;

TEST_CASE("identity and pure vertical shift") {
    Fixture f;
    for (double t = -150.0; t <= 150.0; t += 2.5) {
        CHECK(deform(f.ref, ShapeParams::identity(), t) == f.ref.evaluate(t));
        CHECK(deform(f.ref, {1.0, 1.0, 0.0, 0.1}, t) == doctest::Approx(f.ref.evaluate(t) + 0.1));
    }
}

TEST_CASE("doubled slopes compress by two and scale by two") {
    Fixture f;
    for (double t = -100.0; t <= 100.0; t += 1.7)
        CHECK(deform(f.ref, {2.0, 2.0, 0.0, 0.0}, t) == doctest::Approx(2.0 * f.ref.evaluate(2.0 * t)).epsilon(1e-14));
}

TEST_CASE("branches split at m and meet continuously") {
    Fixture f;
    const ShapeParams p{1.4, 0.6, 12.0, -0.03};
    const double at = std::sqrt(p.u * p.d) * f.ref.evaluate(0.0) + p.h;
    CHECK(deform(f.ref, p, p.m) == doctest::Approx(at));
    CHECK(deform(f.ref, p, p.m + 1e-9) == doctest::Approx(at).epsilon(1e-9));
    CHECK(deform(f.ref, p, p.m - 1e-9) == doctest::Approx(at).epsilon(1e-9));
    for (double t = -80.0; t <= 120.0; t += 3.0) {
        const double slope = t <= p.m ? p.u : p.d;
        CHECK(deform(f.ref, p, t) ==
              doctest::Approx(std::sqrt(p.u * p.d) * f.ref.evaluate(slope * (t - p.m)) + p.h));
    }
}

TEST_CASE("equal slopes reduce to the shape-invariant form") {
    Fixture f;
    const double w = 1.3, m = -7.0, h = 0.02;
    for (double t = -60.0; t <= 60.0; t += 2.0)
        CHECK(deform(f.ref, {w, w, m, h}, t) == doctest::Approx(w * f.ref.evaluate(w * (t - m)) + h));
}

TEST_CASE("larger uphill slope compresses the uphill branch") {
    Fixture f;
    const ShapeParams a{1.0, 1.0, 0.0, 0.0}, b{1.5, 1.0, 0.0, 0.0};
    for (double t = -120.0; t <= 0.0; t += 4.0) {
        const double ka = deform(f.ref, a, t) / std::sqrt(a.u * a.d);
        const double kb = deform(f.ref, b, t * a.u / b.u) / std::sqrt(b.u * b.d);
        CHECK(ka == doctest::Approx(kb));
    }
}

TEST_CASE("out of support names the branch") {
    Fixture f;
    const double lo = f.ref.support().lo;
    const double hi = f.ref.support().hi;
    try {
        deform(f.ref, {1.0, 1.0, 0.0, 0.0}, lo - 10.0);
        FAIL("expected out of support");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfSupport);
        CHECK(std::string(e.what()).find("uphill") != std::string::npos);
    }
    try {
        deform(f.ref, {1.0, 3.0, 0.0, 0.0}, hi / 2.0);
        FAIL("expected out of support");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("downhill") != std::string::npos);
    }
    double excess = 0.0;
    const double v = deform_unchecked(f.ref, {1.0, 3.0, 0.0, 0.0}, hi / 2.0, &excess);
    CHECK(std::isfinite(v));
    CHECK(excess == doctest::Approx(std::pow(1.5 * hi - hi, 2)));
}

TEST_CASE("residuals vanish at the generating parameters") {
    Fixture f;
    const ShapeParams p{1.2, 0.8, 5.0, 0.05};
    auto beat = f.beat(p);
    for (double r : residuals(f.ref, p, beat, f.t)) CHECK(std::abs(r) <= 1e-14);
    for (double& v : beat) v += 0.3;
    ShapeParams q = p;
    q.h += 0.3;
    for (double r : residuals(f.ref, q, beat, f.t)) CHECK(std::abs(r) <= 1e-12);
}

TEST_CASE("rss equals a direct sum of squared differences") {
    Fixture f;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> slope(0.6, 1.6), loc(-20.0, 20.0), shift(-0.2, 0.2);
    synth::SynthSpec spec;
    for (int trial = 0; trial < 50; ++trial) {
        const ShapeParams truth{slope(rng), slope(rng), loc(rng), shift(rng)};
        const ShapeParams probe{slope(rng), slope(rng), loc(rng), shift(rng)};
        const auto beat = synth::twave_values(spec, truth, f.t);
        double direct = 0.0;
        for (std::size_t j = 0; j < f.t.size(); ++j) {
            const double tc = f.t[j] - f.ref.center_t();
            const double slope_j = tc <= probe.m ? probe.u : probe.d;
            const double model =
                std::sqrt(probe.u * probe.d) * f.ref.evaluate(slope_j * (tc - probe.m)) + probe.h;
            const double diff = (beat[j] - f.ref.center_v()) - model;
            direct += diff * diff;
        }
        CHECK(residual_sum_of_squares(f.ref, probe, beat, f.t) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("record frame adds the centring offsets") {
    Fixture f;
    const auto r = to_record_frame(f.ref, {1.1, 0.9, 3.0, 0.01});
    CHECK(r.u == 1.1);
    CHECK(r.d == 0.9);
    CHECK(r.m == doctest::Approx(3.0 + f.ref.center_t()));
    CHECK(r.h == doctest::Approx(0.01 + f.ref.center_v()));
    CHECK(ShapeParams{1, 1, 0, 0}.valid());
    CHECK_FALSE(ShapeParams{0, 1, 0, 0}.valid());
}
