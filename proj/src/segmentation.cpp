#include "twshape/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twshape/error.hpp"

namespace twshape {

BeatMatrix::BeatMatrix(std::vector<double> values, std::size_t rows, std::vector<double> time_axis,
                       std::vector<std::size_t> r_indices, std::vector<std::size_t> beat_ids,
                       Window window, double fs)
    : values_(std::move(values)),
      rows_(rows),
      time_axis_(std::move(time_axis)),
      r_indices_(std::move(r_indices)),
      beat_ids_(std::move(beat_ids)),
      window_(window),
      fs_(fs) {
    if (rows_ == 0) throw Error(ErrorCode::EmptyMatrix, "beat matrix has no rows");
    if (values_.size() != rows_ * time_axis_.size() || r_indices_.size() != rows_ ||
        beat_ids_.size() != rows_)
        throw Error(ErrorCode::InvalidArgument, "beat matrix dimensions are inconsistent");
}

std::vector<double> BeatMatrix::mean_curve() const {
    std::vector<double> mean(cols(), 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const auto r = row(i);
        for (std::size_t j = 0; j < r.size(); ++j) mean[j] += r[j];
    }
    for (double& v : mean) v /= static_cast<double>(rows_);
    return mean;
}

BeatMatrix BeatMatrix::select_rows(std::span<const std::size_t> order) const {
    std::vector<double> vals;
    vals.reserve(order.size() * cols());
    std::vector<std::size_t> r, ids;
    for (std::size_t i : order) {
        const auto src = row(i);
        vals.insert(vals.end(), src.begin(), src.end());
        r.push_back(r_indices_[i]);
        ids.push_back(beat_ids_[i]);
    }
    return BeatMatrix(std::move(vals), order.size(), time_axis_, std::move(r), std::move(ids),
                      window_, fs_);
}

namespace {

double median_of(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

std::size_t ms_to_samples(double ms, double fs) {
    return static_cast<std::size_t>(std::lround(ms * fs / 1000.0));
}

}  // namespace

std::vector<std::size_t> detect_r_peaks(const EcgRecord& record, const DetectorConfig& cfg) {
    if (record.annotations) return *record.annotations;
    const auto& x = record.samples;
    const double fs = record.fs;
    if (!(fs > 0.0)) throw Error(ErrorCode::InvalidArgument, "sampling frequency must be positive");
    if (record.duration_s() < 2.0)
        throw Error(ErrorCode::InsufficientData, "R-peak detection needs at least 2 s of signal");
    const std::size_t n = x.size();

    // Squared first difference, then a centred moving average.
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double dv = x[i] - x[i - 1];
        prefix[i + 1] = prefix[i] + dv * dv;
    }
    const std::size_t half = std::max<std::size_t>(1, ms_to_samples(cfg.integration_ms, fs) / 2);
    const double width = static_cast<double>(2 * half + 1);
    std::vector<double> energy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        energy[i] = (prefix[hi] - prefix[lo]) / width;
    }

    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (energy[i] > energy[i - 1] && energy[i] >= energy[i + 1] && energy[i] > 0.0)
            candidates.push_back(i);
    if (candidates.empty())
        throw Error(ErrorCode::DetectionFailure,
                    "no R peaks found; supply an annotation file (--annotations)");

    // Seed the running median with the typical height of the strongest
    // candidates (at least one beat every two seconds is assumed).
    std::vector<double> heights;
    heights.reserve(candidates.size());
    for (auto c : candidates) heights.push_back(energy[c]);
    std::sort(heights.begin(), heights.end(), std::greater<>());
    const std::size_t top = std::clamp<std::size_t>(
        static_cast<std::size_t>(record.duration_s() / 2.0), 1, heights.size());
    std::vector<double> accepted_heights{median_of({heights.begin(), heights.begin() + top})};

    const std::size_t refractory = ms_to_samples(cfg.refractory_ms, fs);
    std::vector<std::size_t> peaks;
    for (auto c : candidates) {
        const std::size_t span = std::min(cfg.median_span, accepted_heights.size());
        const double threshold =
            cfg.threshold_fraction *
            median_of({accepted_heights.end() - static_cast<std::ptrdiff_t>(span),
                       accepted_heights.end()});
        if (energy[c] < threshold) continue;
        if (!peaks.empty() && c - peaks.back() < refractory) {
            if (energy[c] > energy[peaks.back()]) {
                peaks.back() = c;
                accepted_heights.back() = energy[c];
            }
            continue;
        }
        peaks.push_back(c);
        accepted_heights.push_back(energy[c]);
    }

    // Move each peak to the raw-signal maximum nearby.
    const std::size_t radius = ms_to_samples(cfg.refine_ms, fs);
    std::vector<std::size_t> refined;
    refined.reserve(peaks.size());
    for (auto p : peaks) {
        const std::size_t lo = p >= radius ? p - radius : 0;
        const std::size_t hi = std::min(n - 1, p + radius);
        std::size_t best = lo;
        for (std::size_t i = lo; i <= hi; ++i)
            if (x[i] > x[best]) best = i;
        if (!refined.empty() && best - refined.back() < refractory) {
            if (x[best] > x[refined.back()]) refined.back() = best;
            continue;
        }
        refined.push_back(best);
    }
    if (refined.empty())
        throw Error(ErrorCode::DetectionFailure,
                    "no R peaks found; supply an annotation file (--annotations)");
    return refined;
}

std::size_t window_length(Window window, double fs) {
    return static_cast<std::size_t>(std::lround((window.end_ms - window.start_ms) * fs / 1000.0)) + 1;
}

BeatMatrix extract_beat_matrix(const EcgRecord& record, std::span<const std::size_t> peaks,
                               Window window) {
    if (!(window.start_ms < window.end_ms))
        throw Error(ErrorCode::InvalidWindow, "window start must precede window end");
    const double fs = record.fs;
    const std::size_t cols = window_length(window, fs);
    const long long first_offset = std::llround(window.start_ms * fs / 1000.0);

    std::vector<double> time_axis(cols);
    for (std::size_t j = 0; j < cols; ++j)
        time_axis[j] = static_cast<double>(first_offset + static_cast<long long>(j)) * 1000.0 / fs;

    std::vector<double> values;
    std::vector<std::size_t> r_idx, ids, dropped;
    const long long n = static_cast<long long>(record.samples.size());
    for (std::size_t k = 0; k < peaks.size(); ++k) {
        const long long lo = static_cast<long long>(peaks[k]) + first_offset;
        const long long hi = lo + static_cast<long long>(cols) - 1;
        if (lo < 0 || hi >= n) {
            dropped.push_back(k);
            continue;
        }
        values.insert(values.end(), record.samples.begin() + lo, record.samples.begin() + hi + 1);
        r_idx.push_back(peaks[k]);
        ids.push_back(k);
    }
    if (r_idx.empty())
        throw Error(ErrorCode::EmptyMatrix, "no beat has a complete window inside the record");
    const std::size_t rows = r_idx.size();
    BeatMatrix m(std::move(values), rows, std::move(time_axis), std::move(r_idx), std::move(ids),
                 window, fs);
    m.set_dropped(std::move(dropped));
    return m;
}

RrSeries rr_series(std::span<const std::size_t> peaks, double fs) {
    if (peaks.size() < 2)
        throw Error(ErrorCode::InsufficientData, "RR series needs at least two peaks");
    RrSeries out;
    out.rr.reserve(peaks.size() - 1);
    for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
        if (peaks[k + 1] <= peaks[k])
            throw Error(ErrorCode::InvalidArgument, "peaks must be strictly increasing");
        out.rr.push_back(static_cast<double>(peaks[k + 1] - peaks[k]) * 1000.0 / fs);
        out.indices.push_back(k + 1);
    }
    return out;
}

RrSeries rr_for_rows(const RrSeries& rr, std::span<const std::size_t> beat_ids) {
    RrSeries out;
    for (std::size_t row = 0; row < beat_ids.size(); ++row) {
        const auto it = std::lower_bound(rr.indices.begin(), rr.indices.end(), beat_ids[row]);
        if (it == rr.indices.end() || *it != beat_ids[row]) continue;
        out.rr.push_back(rr.rr[static_cast<std::size_t>(it - rr.indices.begin())]);
        out.indices.push_back(row);
    }
    return out;
}

std::vector<double> beat_times_s(const BeatMatrix& matrix) {
    std::vector<double> t;
    t.reserve(matrix.rows());
    for (auto r : matrix.r_indices()) t.push_back(static_cast<double>(r) / matrix.fs());
    return t;
}

}  // namespace twshape
