#include "twshape/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "text_util.hpp"
#include "twshape/error.hpp"

namespace twshape {

namespace fs = std::filesystem;
using detail::parse_number;
using detail::trim;

void validate(const EcgRecord& record) {
    if (!(record.fs > 0.0) || !std::isfinite(record.fs))
        throw Error(ErrorCode::InvalidArgument, "sampling frequency must be positive");
    if (record.samples.empty()) throw Error(ErrorCode::EmptyRecord, "record has no samples");
    for (std::size_t i = 0; i < record.samples.size(); ++i) {
        if (!std::isfinite(record.samples[i]))
            throw Error(ErrorCode::InvalidArgument,
                        "non-finite sample at index " + std::to_string(i));
    }
    if (record.annotations) {
        const auto& ann = *record.annotations;
        for (std::size_t k = 0; k < ann.size(); ++k) {
            if (ann[k] >= record.samples.size())
                throw Error(ErrorCode::OutOfRange,
                            "annotation index " + std::to_string(ann[k]) + " out of range");
            if (k > 0 && ann[k] <= ann[k - 1])
                throw Error(ErrorCode::InvalidArgument, "annotations must be strictly increasing");
        }
    }
}

EcgRecord read_csv_record(const fs::path& path, double fs_hz) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

    EcgRecord rec;
    rec.label = path.stem().string();
    std::optional<double> header_fs;
    bool first_pair = true;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        if (body.front() == '#') {
            const auto meta = trim(body.substr(1));
            if (meta.starts_with("label=")) {
                rec.label = std::string(trim(meta.substr(6)));
            } else if (meta.starts_with("t0=")) {
                if (auto v = parse_number<double>(meta.substr(3))) rec.t0 = *v;
            }
            continue;
        }
        if (body.starts_with("fs=")) {
            auto v = parse_number<double>(body.substr(3));
            if (!v || !(*v > 0.0))
                throw ParseError(line_no, path.string() + ":" + std::to_string(line_no) +
                                              ": invalid fs header");
            header_fs = *v;
            continue;
        }
        const auto comma = body.find(',');
        std::optional<double> value;
        if (comma == std::string_view::npos) {
            value = parse_number<double>(body);
        } else {
            auto t = parse_number<double>(body.substr(0, comma));
            value = parse_number<double>(body.substr(comma + 1));
            if (!t) value.reset();
            if (value && first_pair) rec.t0 = *t;
            first_pair = false;
        }
        if (!value || !std::isfinite(*value))
            throw ParseError(line_no, path.string() + ":" + std::to_string(line_no) +
                                          ": malformed value '" + std::string(body) + "'");
        rec.samples.push_back(*value);
    }
    if (rec.samples.empty()) throw Error(ErrorCode::EmptyRecord, path.string() + ": no samples");
    rec.fs = header_fs.value_or(fs_hz);
    if (!(rec.fs > 0.0))
        throw Error(ErrorCode::InvalidHeader,
                    path.string() + ": no fs header and no sampling frequency given");
    return rec;
}

std::array<std::int16_t, 2> decode212(std::uint8_t b0, std::uint8_t b1, std::uint8_t b2) noexcept {
    auto sign_extend = [](int v) { return static_cast<std::int16_t>(v >= 0x800 ? v - 0x1000 : v); };
    const int first = b0 | ((b1 & 0x0F) << 8);
    const int second = b2 | ((b1 & 0xF0) << 4);
    return {sign_extend(first), sign_extend(second)};
}

std::array<std::uint8_t, 3> encode212(std::int16_t first, std::int16_t second) noexcept {
    const unsigned a = static_cast<unsigned>(first) & 0xFFFu;
    const unsigned b = static_cast<unsigned>(second) & 0xFFFu;
    return {static_cast<std::uint8_t>(a & 0xFF),
            static_cast<std::uint8_t>(((a >> 8) & 0x0F) | ((b >> 4) & 0xF0)),
            static_cast<std::uint8_t>(b & 0xFF)};
}

std::vector<std::int16_t> unpack212(std::span<const std::uint8_t> bytes, std::size_t n_samples) {
    const std::size_t needed = (3 * n_samples + 1) / 2;
    if (bytes.size() < needed)
        throw TruncationError(bytes.size(), "format-212 stream truncated at byte offset " +
                                                std::to_string(bytes.size()) + " (need " +
                                                std::to_string(needed) + " bytes)");
    std::vector<std::int16_t> out;
    out.reserve(n_samples);
    for (std::size_t k = 0; out.size() < n_samples; k += 3) {
        const std::uint8_t b2 = k + 2 < bytes.size() ? bytes[k + 2] : 0;
        const auto pair = decode212(bytes[k], bytes[k + 1], b2);
        out.push_back(pair[0]);
        if (out.size() < n_samples) out.push_back(pair[1]);
    }
    return out;
}

std::vector<std::uint8_t> pack212(std::span<const std::int16_t> samples) {
    std::vector<std::uint8_t> out;
    out.reserve((3 * samples.size() + 1) / 2);
    for (std::size_t k = 0; k < samples.size(); k += 2) {
        const bool has_second = k + 1 < samples.size();
        const auto bytes = encode212(samples[k], has_second ? samples[k + 1] : std::int16_t{0});
        out.push_back(bytes[0]);
        out.push_back(bytes[1]);
        if (has_second) out.push_back(bytes[2]);
    }
    return out;
}

WfdbHeader parse_wfdb_header(const fs::path& header_path) {
    std::ifstream in(header_path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + header_path.string());

    auto bad = [&](const std::string& msg) {
        return Error(ErrorCode::InvalidHeader, header_path.string() + ": " + msg);
    };

    WfdbHeader hdr;
    std::string line;
    bool have_record_line = false;
    while (std::getline(in, line)) {
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto fields = detail::split_ws(body);
        if (!have_record_line) {
            if (fields.size() < 2) throw bad("record line needs at least name and signal count");
            hdr.record_name = std::string(fields[0].substr(0, fields[0].find('/')));
            auto nsig = parse_number<int>(fields[1]);
            if (!nsig || *nsig < 1) throw bad("invalid signal count");
            hdr.n_signals = *nsig;
            hdr.fs = 250.0;
            if (fields.size() > 2) {
                // "fs/counter_freq(base_counter)" is allowed; only fs matters here
                auto fs_text = fields[2].substr(0, fields[2].find_first_of("/("));
                auto fs_val = parse_number<double>(fs_text);
                if (!fs_val || !(*fs_val > 0.0)) throw bad("invalid sampling frequency");
                hdr.fs = *fs_val;
            }
            if (fields.size() > 3) {
                auto n = parse_number<std::size_t>(fields[3]);
                if (!n) throw bad("invalid sample count");
                hdr.n_samples = *n;
            }
            have_record_line = true;
            continue;
        }
        if (static_cast<int>(hdr.signals.size()) >= hdr.n_signals) break;
        if (fields.size() < 2) throw bad("signal line needs file name and format");
        WfdbSignalSpec sig;
        sig.file_name = std::string(fields[0]);
        auto fmt_text = fields[1].substr(0, fields[1].find_first_of("x:+"));
        auto fmt = parse_number<int>(fmt_text);
        if (!fmt) throw bad("invalid format code '" + std::string(fields[1]) + "'");
        sig.format = *fmt;
        sig.gain = 200.0;
        std::optional<int> explicit_baseline;
        if (fields.size() > 2) {
            auto g = fields[2];
            g = g.substr(0, g.find('/'));
            const auto paren = g.find('(');
            if (paren != std::string_view::npos) {
                const auto close = g.find(')', paren);
                if (close == std::string_view::npos) throw bad("unterminated baseline in gain field");
                explicit_baseline = parse_number<int>(g.substr(paren + 1, close - paren - 1));
                if (!explicit_baseline) throw bad("invalid baseline");
                g = g.substr(0, paren);
            }
            auto gain = parse_number<double>(g);
            if (!gain) throw bad("invalid gain '" + std::string(fields[2]) + "'");
            sig.gain = *gain;
        }
        if (!(sig.gain != 0.0) || !std::isfinite(sig.gain)) throw bad("gain must be nonzero");
        // ADC zero (field 5) is the baseline unless the gain field gave one
        int baseline = 0;
        if (fields.size() > 4) {
            auto z = parse_number<int>(fields[4]);
            if (!z) throw bad("invalid ADC zero");
            baseline = *z;
        }
        sig.baseline = explicit_baseline.value_or(baseline);
        if (fields.size() > 8) {
            std::string desc;
            for (std::size_t k = 8; k < fields.size(); ++k) {
                if (!desc.empty()) desc += ' ';
                desc += fields[k];
            }
            sig.description = desc;
        }
        hdr.signals.push_back(std::move(sig));
    }
    if (!have_record_line) throw bad("missing record line");
    if (static_cast<int>(hdr.signals.size()) != hdr.n_signals)
        throw bad("expected " + std::to_string(hdr.n_signals) + " signal lines, found " +
                  std::to_string(hdr.signals.size()));
    return hdr;
}

EcgRecord read_wfdb212_record(const fs::path& header_path, int channel) {
    const WfdbHeader hdr = parse_wfdb_header(header_path);
    if (channel < 0 || channel >= hdr.n_signals)
        throw Error(ErrorCode::OutOfRange, "channel " + std::to_string(channel) +
                                               " not present (record has " +
                                               std::to_string(hdr.n_signals) + ")");
    const WfdbSignalSpec& sig = hdr.signals[static_cast<std::size_t>(channel)];
    if (sig.format != 212)
        throw Error(ErrorCode::UnsupportedFormat,
                    "unsupported signal format " + std::to_string(sig.format) + " (only 212)");

    // Signals stored in the same file are interleaved frame by frame.
    std::size_t frame = 0;
    std::size_t position = 0;
    for (int k = 0; k < hdr.n_signals; ++k) {
        if (hdr.signals[static_cast<std::size_t>(k)].file_name != sig.file_name) continue;
        if (k == channel) position = frame;
        ++frame;
    }

    const fs::path data_path = header_path.parent_path() / sig.file_name;
    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open signal file " + data_path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    std::size_t total = 0;
    if (hdr.n_samples > 0) {
        total = hdr.n_samples * frame;
    } else {
        total = (bytes.size() * 2) / 3;
        total -= total % frame;
    }
    const auto adc = unpack212(bytes, total);

    EcgRecord rec;
    rec.label = hdr.record_name;
    rec.fs = hdr.fs;
    rec.samples.reserve(total / frame);
    for (std::size_t k = position; k < adc.size(); k += frame)
        rec.samples.push_back((adc[k] - sig.baseline) / sig.gain);
    if (rec.samples.empty()) throw Error(ErrorCode::EmptyRecord, data_path.string() + ": no samples");
    return rec;
}

void write_wfdb212_record(const fs::path& header_path,
                          const std::vector<std::vector<std::int16_t>>& channels, double fs_hz,
                          double gain, int baseline) {
    if (channels.empty()) throw Error(ErrorCode::InvalidArgument, "no channels to write");
    const std::size_t n = channels.front().size();
    for (const auto& c : channels)
        if (c.size() != n) throw Error(ErrorCode::InvalidArgument, "channel lengths differ");

    const std::string name = header_path.stem().string();
    const std::string dat_name = name + ".dat";
    std::vector<std::int16_t> interleaved;
    interleaved.reserve(n * channels.size());
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& c : channels) interleaved.push_back(c[i]);

    std::ofstream hdr(header_path);
    if (!hdr) throw Error(ErrorCode::Io, "cannot write " + header_path.string());
    hdr << name << ' ' << channels.size() << ' ' << detail::format_exact(fs_hz) << ' ' << n << '\n';
    for (std::size_t k = 0; k < channels.size(); ++k)
        hdr << dat_name << " 212 " << detail::format_exact(gain) << '(' << baseline
            << ")/mV 12 " << baseline << " 0 0 0 ch" << k << '\n';

    const auto bytes = pack212(interleaved);
    std::ofstream dat(header_path.parent_path() / dat_name, std::ios::binary);
    if (!dat) throw Error(ErrorCode::Io, "cannot write signal file for " + header_path.string());
    dat.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

EcgRecord read_annotations(const fs::path& path, const EcgRecord& record) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::size_t> idx;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        auto v = parse_number<long long>(body);
        if (!v)
            throw ParseError(line_no, path.string() + ":" + std::to_string(line_no) +
                                          ": malformed sample index '" + std::string(body) + "'");
        if (*v < 0 || static_cast<std::size_t>(*v) >= record.samples.size())
            throw Error(ErrorCode::OutOfRange, "annotation index " + std::to_string(*v) +
                                                   " outside record of " +
                                                   std::to_string(record.samples.size()) +
                                                   " samples");
        idx.push_back(static_cast<std::size_t>(*v));
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    EcgRecord out = record;
    out.annotations = std::move(idx);
    return out;
}

}  // namespace twshape
