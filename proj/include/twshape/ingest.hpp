#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace twshape {

/// A uniformly sampled single-lead ECG trace in millivolts.
struct EcgRecord {
    std::vector<double> samples;  // mV
    double fs = 0.0;              // Hz
    double t0 = 0.0;              // s
    std::string label;
    std::optional<std::vector<std::size_t>> annotations;  // R-peak sample indices

    std::size_t size() const noexcept { return samples.size(); }
    double duration_s() const noexcept { return fs > 0.0 ? samples.size() / fs : 0.0; }
};

/// Throws Error if the record violates its invariants (fs > 0, non-empty,
/// finite samples, strictly increasing in-range annotations).
void validate(const EcgRecord& record);

/// Reads the CSV interchange format:
///
///     # comment lines start with '#'; "# label=<text>" and "# t0=<s>" are recognised
///     fs=<Hz>        (optional; overrides the fs argument)
///     <v>            one voltage per line, or
///     <t>,<v>        time/voltage pairs (t in seconds; the first t becomes t0)
///
/// An fs argument <= 0 means "header required".
EcgRecord read_csv_record(const std::filesystem::path& path, double fs = 0.0);

/// Format-212 packing: two 12-bit two's-complement samples in three bytes.
/// Byte 0 holds the low 8 bits of the first sample, the low nibble of byte 1
/// its high 4 bits, the high nibble of byte 1 the high 4 bits of the second
/// sample and byte 2 its low 8 bits.
std::array<std::int16_t, 2> decode212(std::uint8_t b0, std::uint8_t b1, std::uint8_t b2) noexcept;
std::array<std::uint8_t, 3> encode212(std::int16_t first, std::int16_t second) noexcept;

/// Decodes as many samples as the byte stream holds; a trailing pair of bytes
/// yields one sample (odd sample counts).
std::vector<std::int16_t> unpack212(std::span<const std::uint8_t> bytes, std::size_t n_samples);
std::vector<std::uint8_t> pack212(std::span<const std::int16_t> samples);

struct WfdbSignalSpec {
    std::string file_name;
    int format = 0;
    double gain = 0.0;      // ADC units per mV
    int baseline = 0;       // ADC units
    std::string description;
};

struct WfdbHeader {
    std::string record_name;
    int n_signals = 0;
    double fs = 0.0;
    std::size_t n_samples = 0;  // per signal; 0 means "read what the file holds"
    std::vector<WfdbSignalSpec> signals;
};

WfdbHeader parse_wfdb_header(const std::filesystem::path& header_path);

/// Reads one channel of a format-212 record. The signal file is resolved
/// relative to the header's directory.
EcgRecord read_wfdb212_record(const std::filesystem::path& header_path, int channel = 0);

/// Writes a header and a 212 signal file holding the given channels, all
/// sharing one gain and baseline. Used for exporting synthetic records.
void write_wfdb212_record(const std::filesystem::path& header_path,
                          const std::vector<std::vector<std::int16_t>>& channels, double fs,
                          double gain, int baseline);

/// Attaches R-peak annotations (one sample index per line) to a copy of
/// the record. Indices are sorted and deduplicated.
EcgRecord read_annotations(const std::filesystem::path& path, const EcgRecord& record);

}  // namespace twshape
