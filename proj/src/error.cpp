#include "twshape/error.hpp"

namespace twshape {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Io: return "io";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::EmptyRecord: return "empty-record";
        case ErrorCode::UnsupportedFormat: return "unsupported-format";
        case ErrorCode::Truncated: return "truncated";
        case ErrorCode::InvalidHeader: return "invalid-header";
        case ErrorCode::OutOfRange: return "out-of-range";
        case ErrorCode::DetectionFailure: return "detection-failure";
        case ErrorCode::EmptyMatrix: return "empty-matrix";
        case ErrorCode::InsufficientData: return "insufficient-data";
        case ErrorCode::TooFewPoints: return "too-few-points";
        case ErrorCode::OutOfSupport: return "out-of-support";
        case ErrorCode::IncompatibleSupports: return "incompatible-supports";
        case ErrorCode::InvalidWindow: return "invalid-window";
        case ErrorCode::Domain: return "domain";
        case ErrorCode::NoCrossing: return "no-crossing";
        case ErrorCode::Infeasible: return "infeasible";
        case ErrorCode::DegenerateCovariance: return "degenerate-covariance";
        case ErrorCode::InvalidArgument: return "invalid-argument";
    }
    return "unknown";
}

bool Error::is_input_error() const noexcept {
    switch (code_) {
        case ErrorCode::Io:
        case ErrorCode::Parse:
        case ErrorCode::EmptyRecord:
        case ErrorCode::UnsupportedFormat:
        case ErrorCode::Truncated:
        case ErrorCode::InvalidHeader:
        case ErrorCode::OutOfRange:
            return true;
        default:
            return false;
    }
}

}  // namespace twshape
