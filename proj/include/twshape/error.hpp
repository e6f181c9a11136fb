#pragma once

#include <stdexcept>
#include <string>

namespace twshape {

enum class ErrorCode {
    Io,
    Parse,
    EmptyRecord,
    UnsupportedFormat,
    Truncated,
    InvalidHeader,
    OutOfRange,
    DetectionFailure,
    EmptyMatrix,
    InsufficientData,
    TooFewPoints,
    OutOfSupport,
    IncompatibleSupports,
    InvalidWindow,
    Domain,
    NoCrossing,
    Infeasible,
    DegenerateCovariance,
    InvalidArgument,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// True for failures caused by unreadable or malformed input files.
    bool is_input_error() const noexcept;

private:
    ErrorCode code_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorCode::Parse, what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class TruncationError : public Error {
public:
    TruncationError(std::size_t byte_offset, const std::string& what)
        : Error(ErrorCode::Truncated, what), offset_(byte_offset) {}
    std::size_t byte_offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace twshape
