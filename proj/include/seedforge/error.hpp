#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seedforge {

enum class ErrorCode {
    // data errors
    BadMagic,
    TruncatedPayload,
    UnsupportedDtype,
    ChecksumMismatch,
    InvalidShape,
    IoFailure,
    UnsupportedPng,
    DimMismatch,
    ShapeMismatch,
    SizeMismatch,
    ClassMismatch,
    ClassOutOfRange,
    EmptyList,
    TooSmall,
    // parameter errors
    KTooLarge,
    InvalidArgument,
    Config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Raised by every module on contract violations; `code()` identifies the case.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Parameter and configuration problems, as opposed to bad input data.
    bool is_config_error() const noexcept {
        return code_ == ErrorCode::KTooLarge || code_ == ErrorCode::InvalidArgument ||
               code_ == ErrorCode::Config;
    }

private:
    ErrorCode code_;
};

}  // namespace seedforge
