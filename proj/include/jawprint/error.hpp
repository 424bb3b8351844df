#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace jawprint {

enum class ErrorKind {
    MissingFile,
    MalformedRow,
    NonMonotoneTimestamp,
    RateMismatch,
    StreamTooShort,
    MissingLocation,
    MissingSession,
    SeriesTooShort,
    EmptyMatrix,
    DegenerateClass,
    KTooLarge,
    SingleClass,
    NonConvergence,
    DimensionMismatch,
    ShapeMismatch,
    CorruptModelFile,
    VersionMismatch,
    NotEnoughImpostors,
    EmptyScores,
    TooFewFrames,
    NonIntegerDecimation,
    Upscaling,
    InvalidQuality,
    UnknownUser,
    SessionNotFound,
    SessionNotActive,
    UnknownLocation,
    InvalidTransition,
    InvalidArgument,
    Io,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorKind::RateMismatch: return "RateMismatch";
    case ErrorKind::StreamTooShort: return "StreamTooShort";
    case ErrorKind::MissingLocation: return "MissingLocation";
    case ErrorKind::MissingSession: return "MissingSession";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::CorruptModelFile: return "CorruptModelFile";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::NotEnoughImpostors: return "NotEnoughImpostors";
    case ErrorKind::EmptyScores: return "EmptyScores";
    case ErrorKind::TooFewFrames: return "TooFewFrames";
    case ErrorKind::NonIntegerDecimation: return "NonIntegerDecimation";
    case ErrorKind::Upscaling: return "Upscaling";
    case ErrorKind::InvalidQuality: return "InvalidQuality";
    case ErrorKind::UnknownUser: return "UnknownUser";
    case ErrorKind::SessionNotFound: return "SessionNotFound";
    case ErrorKind::SessionNotActive: return "SessionNotActive";
    case ErrorKind::UnknownLocation: return "UnknownLocation";
    case ErrorKind::InvalidTransition: return "InvalidTransition";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure in the library surfaces as this exception. `line` carries the
/// 1-based data row for file-parsing errors.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line = std::nullopt)
        : std::runtime_error(format(kind, message, line)), kind_(kind), line_(line) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    static std::string format(ErrorKind kind, const std::string& message, std::optional<std::size_t> line) {
        std::string out(to_string(kind));
        if (line) out += "(" + std::to_string(*line) + ")";
        if (!message.empty()) out += ": " + message;
        return out;
    }

    ErrorKind kind_;
    std::optional<std::size_t> line_;
};

} // namespace jawprint
