#include "twshape/reference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "text_util.hpp"
#include "twshape/error.hpp"

namespace twshape {

ReferenceCurve::ReferenceCurve(std::vector<double> knots, std::vector<double> values,
                               double center_t, double center_v, Support support)
    : spline_(std::move(knots), std::move(values)),
      center_t_(center_t),
      center_v_(center_v),
      support_(support) {
    const auto k = spline_.knots();
    if (!(support_.lo < k.front() && support_.hi > k.back()))
        throw Error(ErrorCode::InvalidArgument, "support must strictly contain the knot span");
    front_slope_ = spline_.front_slope();
    back_slope_ = spline_.back_slope();
}

double ReferenceCurve::evaluate_unchecked(double t) const noexcept {
    const auto k = spline_.knots();
    const auto v = spline_.values();
    if (t < k.front()) return v.front() + front_slope_ * (t - k.front());
    if (t > k.back()) return v.back() + back_slope_ * (t - k.back());
    return spline_(t);
}

double ReferenceCurve::evaluate(double t) const {
    if (!support_.contains(t))
        throw Error(ErrorCode::OutOfSupport, "t = " + std::to_string(t) + " ms outside support [" +
                                                 std::to_string(support_.lo) + ", " +
                                                 std::to_string(support_.hi) + "]");
    return evaluate_unchecked(t);
}

double ReferenceCurve::support_excess(double t) const noexcept {
    if (t < support_.lo) return support_.lo - t;
    if (t > support_.hi) return t - support_.hi;
    return 0.0;
}

double ReferenceCurve::amplitude() const noexcept {
    const auto v = spline_.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

ReferenceCurve reference_from_curve(std::span<const double> time_axis,
                                    std::span<const double> values) {
    if (time_axis.size() != values.size())
        throw Error(ErrorCode::InvalidArgument, "time axis and values differ in length");
    if (time_axis.size() < 4)
        throw Error(ErrorCode::TooFewPoints, "reference curve needs at least 4 points");
    const auto apex = static_cast<std::size_t>(
        std::max_element(values.begin(), values.end()) - values.begin());
    const double center_t = time_axis[apex];
    const double center_v =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());

    std::vector<double> knots(time_axis.size()), vals(values.size());
    for (std::size_t j = 0; j < knots.size(); ++j) {
        knots[j] = time_axis[j] - center_t;
        vals[j] = values[j] - center_v;
    }
    const double span = knots.back() - knots.front();
    const Support support{knots.front() - span, knots.back() + span};
    return ReferenceCurve(std::move(knots), std::move(vals), center_t, center_v, support);
}

ReferenceCurve build_reference(const BeatMatrix& matrix) {
    const auto mean = matrix.mean_curve();
    return reference_from_curve(matrix.time_axis(), mean);
}

ReferenceCurve build_hyper_reference(std::span<const ReferenceCurve> refs) {
    if (refs.empty()) throw Error(ErrorCode::InvalidArgument, "no reference curves given");
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& r : refs) {
        lo = std::max(lo, r.knots().front());
        hi = std::min(hi, r.knots().back());
    }
    if (!(lo < hi))
        throw Error(ErrorCode::IncompatibleSupports, "reference curves share no common support");

    // Grid step: the finest median knot spacing among the inputs.
    double step = std::numeric_limits<double>::infinity();
    for (const auto& r : refs) {
        const auto k = r.knots();
        std::vector<double> gaps(k.size() - 1);
        for (std::size_t j = 0; j + 1 < k.size(); ++j) gaps[j] = k[j + 1] - k[j];
        std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2),
                         gaps.end());
        step = std::min(step, gaps[gaps.size() / 2]);
    }
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    if (n < 4) throw Error(ErrorCode::TooFewPoints, "common support holds fewer than 4 grid points");

    std::vector<double> grid(n), mean(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) grid[j] = lo + static_cast<double>(j) * step;
    double mean_ct = 0.0, mean_cv = 0.0;
    for (const auto& r : refs) {
        for (std::size_t j = 0; j < n; ++j) mean[j] += r.evaluate(grid[j]);
        mean_ct += r.center_t();
        mean_cv += r.center_v();
    }
    const double count = static_cast<double>(refs.size());
    for (double& v : mean) v /= count;

    const ReferenceCurve centred = reference_from_curve(grid, mean);
    std::vector<double> knots(centred.knots().begin(), centred.knots().end());
    std::vector<double> vals(centred.values().begin(), centred.values().end());
    return ReferenceCurve(std::move(knots), std::move(vals), mean_ct / count + centred.center_t(),
                          mean_cv / count + centred.center_v(), centred.support());
}

void write_reference_csv(const ReferenceCurve& ref, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    using detail::format_exact;
    out << "# center_t=" << format_exact(ref.center_t()) << '\n'
        << "# center_v=" << format_exact(ref.center_v()) << '\n'
        << "# support=" << format_exact(ref.support().lo) << ',' << format_exact(ref.support().hi)
        << '\n'
        << "t,value\n";
    const auto k = ref.knots();
    const auto v = ref.values();
    for (std::size_t j = 0; j < k.size(); ++j)
        out << format_exact(k[j]) << ',' << format_exact(v[j]) << '\n';
}

ReferenceCurve read_reference_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    using detail::parse_number;
    using detail::trim;
    std::optional<double> ct, cv, slo, shi;
    std::vector<double> knots, vals;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        return ParseError(line_no, path.string() + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        if (body.front() == '#') {
            const auto meta = trim(body.substr(1));
            if (meta.starts_with("center_t=")) {
                ct = parse_number<double>(meta.substr(9));
                if (!ct) throw fail("invalid center_t");
            } else if (meta.starts_with("center_v=")) {
                cv = parse_number<double>(meta.substr(9));
                if (!cv) throw fail("invalid center_v");
            } else if (meta.starts_with("support=")) {
                const auto rest = meta.substr(8);
                const auto comma = rest.find(',');
                if (comma == std::string_view::npos) throw fail("support needs lo,hi");
                slo = parse_number<double>(rest.substr(0, comma));
                shi = parse_number<double>(rest.substr(comma + 1));
                if (!slo || !shi) throw fail("invalid support");
            }
            continue;
        }
        if (body == "t,value") continue;
        const auto comma = body.find(',');
        if (comma == std::string_view::npos) throw fail("expected t,value");
        auto t = parse_number<double>(body.substr(0, comma));
        auto v = parse_number<double>(body.substr(comma + 1));
        if (!t || !v) throw fail("malformed row '" + std::string(body) + "'");
        knots.push_back(*t);
        vals.push_back(*v);
    }
    if (!ct || !cv || !slo || !shi)
        throw Error(ErrorCode::InvalidHeader, path.string() + ": missing reference header fields");
    if (knots.size() < 4)
        throw Error(ErrorCode::TooFewPoints, path.string() + ": fewer than 4 knots");
    return ReferenceCurve(std::move(knots), std::move(vals), *ct, *cv, Support{*slo, *shi});
}

}  // namespace twshape
