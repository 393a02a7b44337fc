#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hjlab {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    SingularPoint,
    NonFinite,
    GridTooSmall,
    EmptyInterior,
    InconsistentGrids,
    QuadratureTooCoarse,
    BoundaryLeak,
    ConfigParse,
    JobFailure,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SingularPoint: return "SingularPoint";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::GridTooSmall: return "GridTooSmall";
        case ErrorCode::EmptyInterior: return "EmptyInterior";
        case ErrorCode::InconsistentGrids: return "InconsistentGrids";
        case ErrorCode::QuadratureTooCoarse: return "QuadratureTooCoarse";
        case ErrorCode::BoundaryLeak: return "BoundaryLeak";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::JobFailure: return "JobFailure";
    }
    return "Unknown";
}

/// Every failure raised by the library. The code identifies the contract
/// that was violated; the message carries the specifics.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) {
        fail(code, message);
    }
}

}  // namespace hjlab
