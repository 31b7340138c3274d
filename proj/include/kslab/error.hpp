#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kslab {

enum class ErrorCode {
    InvalidArgument,
    MissingInnerMass,
    TooCoarse,
    InvalidInitialData,
    SingularDenominator,
    Diverged,
    DegenerateTail,
    NotConverged,
    StepFailed,
    EstimateUnreliable,
    InvalidFrame,
    IncompatibleRuns,
    NotEnoughData,
    InvalidWindow,
    Io,
    Schema,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised by the first-order V right-hand side when 1/2 + (5-N)s^2 - V s^2 vanishes.
class SingularDenominatorError : public Error {
public:
    SingularDenominatorError(double s, double v);

    double s() const noexcept { return s_; }
    double v() const noexcept { return v_; }

private:
    double s_;
    double v_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingInnerMass: return "MissingInnerMass";
    case ErrorCode::TooCoarse: return "TooCoarse";
    case ErrorCode::InvalidInitialData: return "InvalidInitialData";
    case ErrorCode::SingularDenominator: return "SingularDenominator";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::DegenerateTail: return "DegenerateTail";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::StepFailed: return "StepFailed";
    case ErrorCode::EstimateUnreliable: return "EstimateUnreliable";
    case ErrorCode::InvalidFrame: return "InvalidFrame";
    case ErrorCode::IncompatibleRuns: return "IncompatibleRuns";
    case ErrorCode::NotEnoughData: return "NotEnoughData";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Schema: return "Schema";
    }
    return "Unknown";
}

inline SingularDenominatorError::SingularDenominatorError(double s, double v)
    : Error(ErrorCode::SingularDenominator,
            "denominator vanishes at s=" + std::to_string(s) + ", V=" + std::to_string(v)),
      s_(s), v_(v) {}

}  // namespace kslab
