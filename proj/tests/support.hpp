#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "twshape/reference.hpp"
#include "twshape/synthgen.hpp"
#include "twshape/twave_model.hpp"

namespace twshape::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("twshape-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Time axis in ms after R for a window at a sampling rate.
inline std::vector<double> time_axis(double start_ms, double end_ms, double fs) {
    std::vector<double> t;
    const double step = 1000.0 / fs;
    const auto first = std::llround(start_ms / step);
    const auto last = std::llround(end_ms / step);
    for (auto k = first; k <= last; ++k) t.push_back(static_cast<double>(k) * step);
    return t;
}

/// The default synthetic T-wave sampled on [100, 500] ms at 250 Hz, and the
/// reference built from it.
struct Fixture {
    synth::SynthSpec spec;
    std::vector<double> t = time_axis(100.0, 500.0, 250.0);
    std::vector<double> k_values = synth::twave_values(spec, ShapeParams::identity(), t);
    ReferenceCurve ref = reference_from_curve(t, k_values);

    /// Beat drawn from the reference itself, in the record frame.
    std::vector<double> beat(const ShapeParams& centred) const {
        std::vector<double> out(t.size());
        for (std::size_t j = 0; j < t.size(); ++j)
            out[j] = deform(ref, centred, t[j] - ref.center_t()) + ref.center_v();
        return out;
    }
};

inline double rel_err(double got, double want, double floor = 0.0) {
    return std::abs(got - want) / std::max(std::abs(want), floor);
}

}  // namespace twshape::testing
