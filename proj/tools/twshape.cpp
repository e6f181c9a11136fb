// twshape: command-line front end for the T-wave shape pipeline.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "twshape/analysis.hpp"
#include "twshape/error.hpp"
#include "twshape/estimation.hpp"
#include "twshape/gaussian_baseline.hpp"
#include "twshape/ingest.hpp"
#include "twshape/reference.hpp"
#include "twshape/segmentation.hpp"
#include "twshape/synthgen.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace twshape;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitModule = 3;

struct RunConfig {
    std::vector<std::string> inputs;
    std::string format = "csv";
    int channel = 0;
    double fs = 0.0;
    std::string annotations;
    bool use_annotations = false;
    double window_start_ms = 100.0;
    double window_end_ms = 500.0;
    std::string reference = "per-record";
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    unsigned threads = 1;

    std::string shifts = "-12,-4,4,12";
    std::string policy = "rebuild";
    int k = 2;
    std::string features = "d";
    std::string labels;
    std::string parameter = "all";
    int max_lag = 3;
    double level = 0.999;
    std::string config;
    std::optional<std::uint64_t> synth_seed;

    Window window() const { return {window_start_ms, window_end_ms}; }
};

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        double v = 0.0;
        const auto* end = item.data() + item.size();
        auto [ptr, ec] = std::from_chars(item.data(), end, v);
        if (ec != std::errc{} || ptr != end)
            throw Error(ErrorCode::Parse, "invalid number '" + item + "' in list");
        out.push_back(v);
    }
    return out;
}

std::vector<Parameter> parse_features(const std::string& text) {
    std::vector<Parameter> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_parameter(item));
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no features selected");
    return out;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    const fs::path path = fs::path(cfg.out_dir) / name;
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j) {
    open_out(cfg, name) << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// pipeline pieces

EcgRecord load_record(const RunConfig& cfg, const std::string& input) {
    EcgRecord rec;
    if (cfg.format == "csv") {
        rec = read_csv_record(input, cfg.fs);
    } else if (cfg.format == "wfdb212") {
        rec = read_wfdb212_record(input, cfg.channel);
    } else {
        throw Error(ErrorCode::UnsupportedFormat, "unknown format '" + cfg.format + "'");
    }
    if (rec.label.empty()) rec.label = fs::path(input).stem().string();
    if (!cfg.annotations.empty()) {
        rec = read_annotations(cfg.annotations, rec);
    } else if (cfg.use_annotations) {
        const fs::path sibling = fs::path(input).replace_extension(".ann");
        if (!fs::exists(sibling))
            throw Error(ErrorCode::Io, "--use-annotations given but " + sibling.string() + " is missing");
        rec = read_annotations(sibling, rec);
    }
    return rec;
}

std::vector<int> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open labels file " + path);
    std::vector<int> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        int v = 0;
        const auto* end = line.data() + line.size();
        auto [ptr, ec] = std::from_chars(line.data(), end, v);
        while (ptr != end && (*ptr == '\r' || *ptr == ' ')) ++ptr;
        if (ec != std::errc{} || ptr != end)
            throw ParseError(line_no, path + ":" + std::to_string(line_no) + ": invalid label");
        out.push_back(v);
    }
    return out;
}

/// Labels follow the peak list; pick the ones belonging to matrix rows.
std::vector<int> labels_for_rows(const std::vector<int>& labels, const BeatMatrix& m) {
    std::vector<int> out;
    for (auto id : m.beat_ids()) {
        if (id >= labels.size())
            throw Error(ErrorCode::OutOfRange, "labels file has no entry for beat " + std::to_string(id));
        out.push_back(labels[id]);
    }
    return out;
}

struct Fitted {
    EcgRecord record;
    std::vector<std::size_t> peaks;
    BeatMatrix matrix;
    ReferenceCurve ref;
    std::vector<FitResult> results;
};

Fitted prepare(const RunConfig& cfg, const std::string& input) {
    Fitted f;
    f.record = load_record(cfg, input);
    f.peaks = detect_r_peaks(f.record);
    f.matrix = extract_beat_matrix(f.record, f.peaks, cfg.window());
    return f;
}

ReferenceCurve reference_for(const RunConfig& cfg, const Fitted& f) {
    if (cfg.reference == "per-record") return build_reference(f.matrix);
    if (cfg.reference.rfind("from-file:", 0) == 0) return read_reference_csv(cfg.reference.substr(10));
    throw Error(ErrorCode::InvalidArgument, "unknown reference policy '" + cfg.reference + "'");
}

FitAllOptions fit_options(const RunConfig& cfg) {
    FitAllOptions o;
    o.threads = std::max(1u, cfg.threads);
    return o;
}

/// Loads, segments, references and fits every input. The hyper policy
/// builds one reference over all inputs and fits each record against it.
std::vector<Fitted> fit_inputs(const RunConfig& cfg) {
    if (cfg.inputs.empty()) throw Error(ErrorCode::Io, "no --input given");
    std::vector<Fitted> out;
    for (const auto& input : cfg.inputs) out.push_back(prepare(cfg, input));
    if (cfg.reference == "hyper") {
        std::vector<ReferenceCurve> refs;
        for (const auto& f : out) refs.push_back(build_reference(f.matrix));
        const auto hyper = build_hyper_reference(refs);
        for (auto& f : out) f.ref = hyper;
    } else {
        if (out.size() > 1)
            throw Error(ErrorCode::InvalidArgument, "several inputs need --reference hyper");
        out[0].ref = reference_for(cfg, out[0]);
    }
    for (auto& f : out) f.results = fit_all(f.ref, f.matrix, fit_options(cfg));
    return out;
}

Fitted fit_single(const RunConfig& cfg) {
    if (cfg.inputs.size() != 1) throw Error(ErrorCode::InvalidArgument, "this command takes one --input");
    return std::move(fit_inputs(cfg)[0]);
}

json window_json(const Window& w) { return json{{"start_ms", w.start_ms}, {"end_ms", w.end_ms}}; }

json run_meta(const RunConfig& cfg, const Fitted& f) {
    json j;
    j["record"] = f.record.label;
    j["fs_hz"] = f.record.fs;
    j["window"] = window_json(f.matrix.window());
    j["reference_policy"] = cfg.reference;
    j["peaks_from"] = f.record.annotations ? "annotations" : "detector";
    j["beats"] = f.matrix.rows();
    j["dropped_beats"] = std::vector<std::size_t>(f.matrix.dropped().begin(), f.matrix.dropped().end());
    j["seed"] = cfg.seed;
    return j;
}

void write_fits_csv(std::ostream& out, const Fitted& f) {
    out << "beat,u,d,m,h,rss,sigma,converged,iterations\n";
    for (std::size_t i = 0; i < f.results.size(); ++i) {
        const auto& r = f.results[i];
        out << f.matrix.beat_ids()[i] << ',' << num(r.params.u) << ',' << num(r.params.d) << ','
            << num(r.params.m) << ',' << num(r.params.h) << ',' << num(r.rss) << ',' << num(r.sigma)
            << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << '\n';
    }
}

json fit_summary(const RunConfig& cfg, const Fitted& f) {
    json j = run_meta(cfg, f);
    const double n = static_cast<double>(f.results.size());
    const auto ok = std::count_if(f.results.begin(), f.results.end(), [](const FitResult& r) { return r.converged; });
    j["convergence_rate"] = static_cast<double>(ok) / n;
    j["reference"] = {{"center_t_ms", f.ref.center_t()},
                      {"center_v_mv", f.ref.center_v()},
                      {"support_ms", {f.ref.support().lo, f.ref.support().hi}},
                      {"knots", f.ref.knots().size()}};
    json params;
    for (auto p : kAllParameters) {
        const auto s = parameter_series(f.results, p);
        const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : s) ss += (v - mean) * (v - mean);
        params[name(p)] = {{"mean", mean}, {"sd", s.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0}};
    }
    j["parameters"] = params;
    return j;
}

// ---------------------------------------------------------------------------
// commands

int cmd_fit(const RunConfig& cfg) {
    const auto all = fit_inputs(cfg);
    fs::create_directories(cfg.out_dir);
    if (all.size() == 1) {
        write_reference_csv(all[0].ref, fs::path(cfg.out_dir) / "reference.csv");
        auto out = open_out(cfg, "fits.csv");
        write_fits_csv(out, all[0]);
        write_json(cfg, "summary.json", fit_summary(cfg, all[0]));
        return 0;
    }
    write_reference_csv(all[0].ref, fs::path(cfg.out_dir) / "reference.csv");
    json records = json::array();
    for (std::size_t k = 0; k < all.size(); ++k) {
        const std::string file = "fits_" + std::to_string(k) + ".csv";
        auto out = open_out(cfg, file);
        write_fits_csv(out, all[k]);
        json s = fit_summary(cfg, all[k]);
        s["fits"] = file;
        records.push_back(s);
    }
    write_json(cfg, "summary.json", json{{"records", records}});
    return 0;
}

int cmd_robustness(const RunConfig& cfg) {
    if (cfg.inputs.size() != 1) throw Error(ErrorCode::InvalidArgument, "robustness takes one --input");
    const auto record = load_record(cfg, cfg.inputs[0]);
    const auto peaks = detect_r_peaks(record);
    auto shifts = parse_list(cfg.shifts);
    if (std::find(shifts.begin(), shifts.end(), 0.0) == shifts.end()) shifts.push_back(0.0);
    std::sort(shifts.begin(), shifts.end());
    ReferencePolicy policy;
    if (cfg.policy == "rebuild") policy = ReferencePolicy::RebuildPerWindow;
    else if (cfg.policy == "reuse") policy = ReferencePolicy::ReuseBase;
    else throw Error(ErrorCode::InvalidArgument, "unknown policy '" + cfg.policy + "'");

    const auto rep = robustness_sweep(record, peaks, cfg.window(), shifts, policy, fit_options(cfg));

    auto out = open_out(cfg, "robustness.csv");
    out << "statistic";
    for (double s : shifts) out << ',' << num(s);
    out << '\n';
    for (auto p : kAllParameters) {
        const auto c = static_cast<std::size_t>(p);
        out << "median_rel_" << name(p);
        for (const auto& s : rep.summary) out << ',' << num(s.median_rel[c]);
        out << "\nstdev_rel_" << name(p);
        for (const auto& s : rep.summary) out << ',' << num(s.stdev_rel[c]);
        out << '\n';
    }
    out << "median_dm_ms";
    for (const auto& s : rep.summary) out << ',' << num(s.median_dm_ms);
    out << "\nstdev_dm_ms";
    for (const auto& s : rep.summary) out << ',' << num(s.stdev_dm_ms);
    out << '\n';

    json j;
    j["record"] = record.label;
    j["window"] = window_json(cfg.window());
    j["shifts_ms"] = shifts;
    j["policy"] = cfg.policy == "rebuild" ? "rebuild-per-window" : "reuse-base";
    j["common_beats"] = rep.beat_ids.size();
    json per = json::array();
    for (const auto& s : rep.summary)
        per.push_back({{"shift_ms", s.shift_ms}, {"beats", s.beats}, {"h_excluded", s.h_excluded}});
    j["per_shift"] = per;
    write_json(cfg, "robustness.json", j);
    return 0;
}

int cmd_cluster(const RunConfig& cfg) {
    const auto f = fit_single(cfg);
    const auto features = parse_features(cfg.features);
    std::vector<int> labels;
    if (!cfg.labels.empty()) labels = labels_for_rows(load_labels(cfg.labels), f.matrix);
    KMeansOptions ko;
    ko.seed = cfg.seed;
    const auto rep = kmeans_params(f.results, features, cfg.k, labels, ko);

    auto out = open_out(cfg, "clusters.csv");
    out << "beat,cluster" << (labels.empty() ? "" : ",label");
    for (auto p : features) out << ',' << name(p);
    out << '\n';
    for (std::size_t i = 0; i < rep.assignments.size(); ++i) {
        out << f.matrix.beat_ids()[i] << ',' << rep.assignments[i];
        if (!labels.empty()) out << ',' << labels[i];
        for (auto p : features) out << ',' << num(get(f.results[i].params, p));
        out << '\n';
    }
    json j = run_meta(cfg, f);
    json feats = json::array();
    for (auto p : features) feats.push_back(name(p));
    j["features"] = feats;
    j["k"] = cfg.k;
    j["centers"] = rep.centers;
    j["within_ss"] = rep.within_ss;
    j["degenerate"] = rep.degenerate;
    j["match_rate"] = rep.match_rate ? json(*rep.match_rate) : json(nullptr);
    write_json(cfg, "cluster.json", j);
    return 0;
}

int cmd_psd(const RunConfig& cfg) {
    const auto f = fit_single(cfg);
    std::vector<Parameter> params;
    if (cfg.parameter == "all") params.assign(kAllParameters.begin(), kAllParameters.end());
    else params = parse_features(cfg.parameter);
    const auto times = beat_times_s(f.matrix);
    std::vector<Spectrum> spectra;
    for (auto p : params) spectra.push_back(psd_series(parameter_series(f.results, p), times));

    auto out = open_out(cfg, "psd.csv");
    out << "frequency_hz";
    for (auto p : params) out << ',' << name(p);
    out << '\n';
    for (std::size_t b = 0; b < spectra[0].frequency_hz.size(); ++b) {
        out << num(spectra[0].frequency_hz[b]);
        for (const auto& s : spectra) out << ',' << num(s.power[b]);
        out << '\n';
    }
    json j = run_meta(cfg, f);
    j["sample_rate_hz"] = spectra[0].sample_rate_hz;
    j["bin_width_hz"] = spectra[0].bin_width_hz();
    json peaks;
    const double beats_per_s = spectra[0].sample_rate_hz;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto bin = spectra[k].peak_bin();
        const double fhz = spectra[k].frequency_hz[bin];
        peaks[name(params[k])] = {{"frequency_hz", fhz},
                                  {"period_s", 1.0 / fhz},
                                  {"period_beats", beats_per_s / fhz},
                                  {"power", spectra[k].power[bin]}};
    }
    j["peaks"] = peaks;
    write_json(cfg, "psd.json", j);
    return 0;
}

int cmd_lagcorr(const RunConfig& cfg) {
    const auto f = fit_single(cfg);
    const auto rr = rr_for_rows(rr_series(f.peaks, f.record.fs), f.matrix.beat_ids());
    const auto table = lag_correlations(f.results, rr, cfg.max_lag);

    auto out = open_out(cfg, "lagcorr.csv");
    out << "parameter";
    for (int L = 0; L <= cfg.max_lag; ++L) out << (L == 0 ? ",RR(t)" : ",RR(t-" + std::to_string(L) + ")");
    out << '\n';
    json j = run_meta(cfg, f);
    j["max_lag"] = cfg.max_lag;
    json best;
    for (auto p : kAllParameters) {
        const auto c = static_cast<std::size_t>(p);
        out << name(p);
        for (const auto& r : table.r[c]) out << ',' << (r ? num(*r) : "nan");
        out << '\n';
        best[name(p)] = table.best_lag[c] ? json(*table.best_lag[c]) : json(nullptr);
    }
    j["best_lag"] = best;
    write_json(cfg, "lagcorr.json", j);
    return 0;
}

int cmd_outliers(const RunConfig& cfg) {
    const auto f = fit_single(cfg);
    const auto rep = outlier_beats(f.results, cfg.level);
    auto out = open_out(cfg, "outliers.csv");
    out << "beat,distance_sq,flagged\n";
    std::vector<std::size_t> flagged_ids;
    for (auto i : rep.flagged) flagged_ids.push_back(f.matrix.beat_ids()[i]);
    for (std::size_t i = 0; i < rep.distance_sq.size(); ++i) {
        const bool flag = std::binary_search(rep.flagged.begin(), rep.flagged.end(), i);
        out << f.matrix.beat_ids()[i] << ',' << num(rep.distance_sq[i]) << ',' << (flag ? 1 : 0) << '\n';
    }
    json j = run_meta(cfg, f);
    j["level"] = cfg.level;
    j["threshold"] = rep.threshold;
    j["flagged"] = flagged_ids;
    write_json(cfg, "outliers.json", j);
    return 0;
}

int cmd_gauss(const RunConfig& cfg) {
    if (cfg.inputs.size() != 1) throw Error(ErrorCode::InvalidArgument, "gauss takes one --input");
    auto f = prepare(cfg, cfg.inputs[0]);
    const auto pairs = fit_gaussian_all(f.matrix);
    auto out = open_out(cfg, "gauss.csv");
    out << "beat,lambda1,sigma2_1,mu1,lambda2,sigma2_2,mu2,rss\n";
    double energy = 0.0, rss = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& g = pairs[i];
        out << f.matrix.beat_ids()[i];
        for (const auto& c : g.components) out << ',' << num(c.lambda) << ',' << num(c.sigma2) << ',' << num(c.mu);
        out << ',' << num(g.rss) << '\n';
        rss += g.rss;
        for (double v : f.matrix.row(i)) energy += v * v;
    }
    json j = run_meta(cfg, f);
    j.erase("reference_policy");
    j["relative_rss"] = energy > 0.0 ? rss / energy : 0.0;
    j["converged"] = std::count_if(pairs.begin(), pairs.end(), [](const GaussianPair& g) { return g.converged; });
    if (!cfg.labels.empty()) {
        const auto labels = labels_for_rows(load_labels(cfg.labels), f.matrix);
        KMeansOptions ko;
        ko.seed = cfg.seed;
        for (int c : {1, 2}) {
            const auto rep = classify_by_mu(pairs, labels, c, ko);
            j["match_rate_mu" + std::to_string(c)] = rep.match_rate ? json(*rep.match_rate) : json(nullptr);
        }
    }
    write_json(cfg, "gauss.json", j);
    return 0;
}

int cmd_synth(const RunConfig& cfg) {
    synth::SynthSpec spec = cfg.config.empty() ? synth::SynthSpec{} : synth::read_config(cfg.config);
    if (cfg.synth_seed) spec.seed = *cfg.synth_seed;
    const auto s = synth::generate(spec);
    fs::create_directories(cfg.out_dir);
    if (cfg.format == "wfdb212") {
        constexpr double gain = 200.0;
        std::vector<std::int16_t> adc;
        for (double v : s.record.samples)
            adc.push_back(static_cast<std::int16_t>(std::clamp(std::lround(v * gain), -2048L, 2047L)));
        write_wfdb212_record(fs::path(cfg.out_dir) / "record.hea", {adc}, spec.fs, gain, 0);
    } else {
        synth::write_csv(s.record, fs::path(cfg.out_dir) / "record.csv");
    }
    {
        auto out = open_out(cfg, "record.ann");
        for (auto r : s.r_indices) out << r << '\n';
    }
    {
        auto out = open_out(cfg, "labels.txt");
        for (int l : s.labels) out << l << '\n';
    }
    auto out = open_out(cfg, "truth.csv");
    out << "beat,r_index,rr_ms,u,d,m,h,label\n";
    for (std::size_t i = 0; i < s.theta.size(); ++i) {
        const auto& p = s.theta[i];
        out << i << ',' << s.r_indices[i] << ',' << (i == 0 ? "nan" : num(s.rr_ms[i - 1])) << ','
            << num(p.u) << ',' << num(p.d) << ',' << num(p.m) << ',' << num(p.h) << ',' << s.labels[i]
            << '\n';
    }
    json j;
    j["label"] = spec.label;
    j["seed"] = spec.seed;
    j["n_beats"] = spec.n_beats;
    j["fs_hz"] = spec.fs;
    j["noise_sigma_mv"] = spec.noise_sigma;
    j["apex_ms"] = spec.apex_ms;
    j["format"] = cfg.format;
    j["samples"] = s.record.samples.size();
    write_json(cfg, "synth.json", j);
    return 0;
}

int cmd_hyperref(const RunConfig& cfg) {
    if (cfg.inputs.empty()) throw Error(ErrorCode::Io, "no --input given");
    std::vector<ReferenceCurve> refs;
    json records = json::array();
    fs::create_directories(cfg.out_dir);
    for (std::size_t k = 0; k < cfg.inputs.size(); ++k) {
        const auto f = prepare(cfg, cfg.inputs[k]);
        refs.push_back(build_reference(f.matrix));
        const std::string file = "reference_" + std::to_string(k) + ".csv";
        write_reference_csv(refs.back(), fs::path(cfg.out_dir) / file);
        records.push_back({{"record", f.record.label}, {"beats", f.matrix.rows()}, {"reference", file},
                           {"center_t_ms", refs.back().center_t()}, {"center_v_mv", refs.back().center_v()}});
    }
    const auto hyper = build_hyper_reference(refs);
    write_reference_csv(hyper, fs::path(cfg.out_dir) / "hyper_reference.csv");
    json j;
    j["window"] = window_json(cfg.window());
    j["records"] = records;
    j["hyper"] = {{"center_t_ms", hyper.center_t()},
                  {"center_v_mv", hyper.center_v()},
                  {"support_ms", {hyper.support().lo, hyper.support().hi}},
                  {"knots", hyper.knots().size()}};
    write_json(cfg, "hyperref.json", j);
    return 0;
}

void add_input_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--input", cfg.inputs, "record path (CSV file or WFDB header)");
    sub->add_option("--format", cfg.format, "csv or wfdb212")->check(CLI::IsMember({"csv", "wfdb212"}));
    sub->add_option("--channel", cfg.channel, "signal index for WFDB records");
    sub->add_option("--fs", cfg.fs, "sampling rate when the CSV has no fs= header");
    sub->add_option("--annotations", cfg.annotations, "R-peak sample indices, one per line");
    sub->add_flag("--use-annotations", cfg.use_annotations,
                  "take R peaks from annotations (default file: <input>.ann)");
    sub->add_option("--window-start-ms", cfg.window_start_ms, "window start after R");
    sub->add_option("--window-end-ms", cfg.window_end_ms, "window end after R");
    sub->add_option("--reference", cfg.reference, "per-record | from-file:<path> | hyper");
    sub->add_option("--out-dir", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "seed for randomised steps");
    sub->add_option("--threads", cfg.threads, "worker threads for per-beat fits");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-parameter T-wave shape analysis"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* fit = app.add_subcommand("fit", "reference curve and per-beat parameters");
    auto* robust = app.add_subcommand("robustness", "window boundary sweep");
    auto* cluster = app.add_subcommand("cluster", "k-means on parameter estimates");
    auto* psd = app.add_subcommand("psd", "power spectra of parameter series");
    auto* lag = app.add_subcommand("lagcorr", "correlation with current and previous RR");
    auto* outl = app.add_subcommand("outliers", "Mahalanobis outlier beats");
    auto* gauss = app.add_subcommand("gauss", "two-Gaussian baseline fits");
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic record");
    auto* hyper = app.add_subcommand("hyperref", "reference over several records");

    for (auto* sub : {fit, robust, cluster, psd, lag, outl, gauss, hyper}) add_input_options(sub, cfg);
    robust->add_option("--shifts", cfg.shifts, "comma-separated shifts s in ms");
    robust->add_option("--policy", cfg.policy, "rebuild or reuse the reference per window");
    cluster->add_option("--k", cfg.k, "number of clusters");
    cluster->add_option("--features", cfg.features, "comma-separated subset of u,d,m,h");
    cluster->add_option("--labels", cfg.labels, "beat labels, one per line");
    gauss->add_option("--labels", cfg.labels, "beat labels, one per line");
    psd->add_option("--param", cfg.parameter, "u, d, m, h or all");
    lag->add_option("--max-lag", cfg.max_lag, "largest RR lag");
    outl->add_option("--level", cfg.level, "chi-square quantile level");
    synth_cmd->add_option("--config", cfg.config, "key=value spec file");
    synth_cmd->add_option("--seed", cfg.synth_seed, "overrides the config seed");
    synth_cmd->add_option("--format", cfg.format, "csv or wfdb212")->check(CLI::IsMember({"csv", "wfdb212"}));
    synth_cmd->add_option("--out-dir", cfg.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    try {
        if (*fit) return cmd_fit(cfg);
        if (*robust) return cmd_robustness(cfg);
        if (*cluster) return cmd_cluster(cfg);
        if (*psd) return cmd_psd(cfg);
        if (*lag) return cmd_lagcorr(cfg);
        if (*outl) return cmd_outliers(cfg);
        if (*gauss) return cmd_gauss(cfg);
        if (*synth_cmd) return cmd_synth(cfg);
        if (*hyper) return cmd_hyperref(cfg);
    } catch (const Error& e) {
        std::cerr << "twshape: " << e.what() << '\n';
        return e.is_input_error() ? kExitInput : kExitModule;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "twshape: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "twshape: " << e.what() << '\n';
        return kExitModule;
    }
    return kExitModule;
}
