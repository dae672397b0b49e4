#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tvff {

enum class ErrorCode {
    NoOverlap,
    GapInSeries,
    MissingSeries,
    TooShort,
    RaggedRow,
    NoMonthlySection,
    FetchFailed,
    CorruptDataset,
    ShapeError,
    Singular,
    SelectionFailed,
    ConfigError,
    ReplicateFailed,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NoOverlap: return "NoOverlap";
        case ErrorCode::GapInSeries: return "GapInSeries";
        case ErrorCode::MissingSeries: return "MissingSeries";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::RaggedRow: return "RaggedRow";
        case ErrorCode::NoMonthlySection: return "NoMonthlySection";
        case ErrorCode::FetchFailed: return "FetchFailed";
        case ErrorCode::CorruptDataset: return "CorruptDataset";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::Singular: return "Singular";
        case ErrorCode::SelectionFailed: return "SelectionFailed";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::ReplicateFailed: return "ReplicateFailed";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

    /// Configuration problems map to CLI exit code 2; everything else is a data error.
    [[nodiscard]] bool is_config_error() const noexcept { return code_ == ErrorCode::ConfigError; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace tvff
