#include "seedforge/error.hpp"

namespace seedforge {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::BadMagic:         return "BadMagic";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::InvalidShape:     return "InvalidShape";
        case ErrorCode::IoFailure:        return "IoFailure";
        case ErrorCode::UnsupportedPng:   return "UnsupportedPng";
        case ErrorCode::DimMismatch:      return "DimMismatch";
        case ErrorCode::ShapeMismatch:    return "ShapeMismatch";
        case ErrorCode::SizeMismatch:     return "SizeMismatch";
        case ErrorCode::ClassMismatch:    return "ClassMismatch";
        case ErrorCode::ClassOutOfRange:  return "ClassOutOfRange";
        case ErrorCode::EmptyList:        return "EmptyList";
        case ErrorCode::TooSmall:         return "TooSmall";
        case ErrorCode::KTooLarge:        return "KTooLarge";
        case ErrorCode::InvalidArgument:  return "InvalidArgument";
        case ErrorCode::Config:           return "Config";
    }
    return "Unknown";
}

}  // namespace seedforge
