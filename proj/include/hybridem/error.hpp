#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hybridem {

enum class ErrorKind {
    NonSquare,
    NegativeOffDiagonal,
    RowSumViolation,
    Reducible,
    JumpBudgetExceeded,
    OutOfHorizon,
    InvalidArgument,
    HorizonMismatch,
    NotRefinement,
    NonFinite,
    DimensionMismatch,
    RegimeOutOfRange,
    GridMismatch,
    LengthMismatch,
    TimeNotRealized,
    RegimeNotConstant,
    DegenerateFit,
    NonPositiveError,
    Config,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::NonSquare: return "NonSquare";
    case ErrorKind::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case ErrorKind::RowSumViolation: return "RowSumViolation";
    case ErrorKind::Reducible: return "Reducible";
    case ErrorKind::JumpBudgetExceeded: return "JumpBudgetExceeded";
    case ErrorKind::OutOfHorizon: return "OutOfHorizon";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::HorizonMismatch: return "HorizonMismatch";
    case ErrorKind::NotRefinement: return "NotRefinement";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RegimeOutOfRange: return "RegimeOutOfRange";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TimeNotRealized: return "TimeNotRealized";
    case ErrorKind::RegimeNotConstant: return "RegimeNotConstant";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::NonPositiveError: return "NonPositiveError";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// Library-wide exception; `kind()` lets callers (the CLI in particular)
/// map failures onto stable exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace hybridem
