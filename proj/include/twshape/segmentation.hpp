#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "twshape/ingest.hpp"

namespace twshape {

/// Offsets from the R peak, in milliseconds.
struct Window {
    double start_ms = 100.0;
    double end_ms = 500.0;
};

/// I aligned T-wave segments sharing one time axis (ms relative to R).
class BeatMatrix {
public:
    BeatMatrix() = default;
    BeatMatrix(std::vector<double> values, std::size_t rows, std::vector<double> time_axis,
               std::vector<std::size_t> r_indices, std::vector<std::size_t> beat_ids,
               Window window, double fs);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return time_axis_.size(); }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * cols(), cols()};
    }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> time_axis() const noexcept { return time_axis_; }
    std::span<const std::size_t> r_indices() const noexcept { return r_indices_; }
    /// Position of each row's peak in the peak list handed to extraction.
    std::span<const std::size_t> beat_ids() const noexcept { return beat_ids_; }
    std::span<const std::size_t> dropped() const noexcept { return dropped_; }
    const Window& window() const noexcept { return window_; }
    double fs() const noexcept { return fs_; }

    /// Column means.
    std::vector<double> mean_curve() const;

    /// Rows in the given order, as a new matrix (used for permutation checks).
    BeatMatrix select_rows(std::span<const std::size_t> order) const;

    void set_dropped(std::vector<std::size_t> dropped) { dropped_ = std::move(dropped); }

private:
    std::vector<double> values_;
    std::size_t rows_ = 0;
    std::vector<double> time_axis_;
    std::vector<std::size_t> r_indices_;
    std::vector<std::size_t> beat_ids_;
    std::vector<std::size_t> dropped_;
    Window window_;
    double fs_ = 0.0;
};

/// RR intervals; rr[k] is the interval ending at beat indices[k].
struct RrSeries {
    std::vector<double> rr;            // ms
    std::vector<std::size_t> indices;  // beat index the interval ends at
};

struct DetectorConfig {
    double integration_ms = 120.0;
    double refractory_ms = 200.0;
    double threshold_fraction = 0.5;
    std::size_t median_span = 8;  // accepted peaks feeding the running median
    double refine_ms = 60.0;      // search radius for the raw-signal maximum
};

/// R-peak sample indices. Annotations on the record take precedence and are
/// returned verbatim.
std::vector<std::size_t> detect_r_peaks(const EcgRecord& record, const DetectorConfig& cfg = {});

/// Cuts the window around every peak; beats whose window leaves the record
/// are dropped and listed in BeatMatrix::dropped().
BeatMatrix extract_beat_matrix(const EcgRecord& record, std::span<const std::size_t> peaks,
                               Window window);

/// Number of samples in a window: round((end - start) * fs / 1000) + 1.
std::size_t window_length(Window window, double fs);

RrSeries rr_series(std::span<const std::size_t> peaks, double fs);

/// Re-indexes an RR series onto beat-matrix rows: entry k of the result
/// belongs to row indices[k]. Rows whose preceding interval is unknown are
/// omitted.
RrSeries rr_for_rows(const RrSeries& rr, std::span<const std::size_t> beat_ids);

/// R-peak times in seconds for each row (r_index / fs).
std::vector<double> beat_times_s(const BeatMatrix& matrix);

}  // namespace twshape
