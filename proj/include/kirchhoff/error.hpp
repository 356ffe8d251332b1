#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kirchhoff {

/// Error classes raised by the library. Each maps to one CLI exit status
/// (see exit_status()).
enum class ErrorCode {
    InvalidArgument,
    InvalidConfig,
    InvalidDomain,
    DimensionMismatch,
    OutOfBranch,
    OutOfRange,
    ValidationFailed,
    NoConvergence,
    DegenerateLimit,
    NoCrossing,
    SaddleViolation,
    VerificationFailed,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidDomain: return "InvalidDomain";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OutOfBranch: return "OutOfBranch";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateLimit: return "DegenerateLimit";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::SaddleViolation: return "SaddleViolation";
    case ErrorCode::VerificationFailed: return "VerificationFailed";
    }
    return "Unknown";
}

/// Process exit status for each error class. 0 is success, 1 is reserved
/// for unexpected failures (e.g. I/O).
inline int exit_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidConfig: return 2;
    case ErrorCode::ValidationFailed: return 3;
    case ErrorCode::NoCrossing: return 4;
    case ErrorCode::NoConvergence: return 5;
    case ErrorCode::SaddleViolation: return 6;
    case ErrorCode::DegenerateLimit: return 7;
    case ErrorCode::VerificationFailed: return 8;
    case ErrorCode::InvalidDomain: return 9;
    case ErrorCode::DimensionMismatch: return 10;
    case ErrorCode::OutOfBranch: return 11;
    case ErrorCode::OutOfRange: return 12;
    case ErrorCode::InvalidArgument: return 13;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

/// Appends a note to a "; "-separated list.
inline void append_note(std::string& notes, const std::string& note) {
    if (!notes.empty()) notes += "; ";
    notes += note;
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) fail(code, what);
}

} // namespace detail

} // namespace kirchhoff
