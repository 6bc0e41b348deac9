#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fluxgauge {

enum class ErrorCode {
    EmptyBoundary,
    ResolutionTooCoarse,
    BadParams,
    DimensionMismatch,
    DegenerateGradient,
    NotDivergenceFree,
    NotConvex,
    EmptyMesh,
    PreconditionFailed,
    StepUnderflow,
    CrossingUnresolved,
    NotSimple,
    ConfigInvalid,
    RuntimeFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyBoundary: return "EMPTY_BOUNDARY";
        case ErrorCode::ResolutionTooCoarse: return "RESOLUTION_TOO_COARSE";
        case ErrorCode::BadParams: return "BAD_PARAMS";
        case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
        case ErrorCode::DegenerateGradient: return "DEGENERATE_GRADIENT";
        case ErrorCode::NotDivergenceFree: return "NOT_DIVERGENCE_FREE";
        case ErrorCode::NotConvex: return "NOT_CONVEX";
        case ErrorCode::EmptyMesh: return "EMPTY_MESH";
        case ErrorCode::PreconditionFailed: return "PRECONDITION_FAILED";
        case ErrorCode::StepUnderflow: return "STEP_UNDERFLOW";
        case ErrorCode::CrossingUnresolved: return "CROSSING_UNRESOLVED";
        case ErrorCode::NotSimple: return "NOT_SIMPLE";
        case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
        case ErrorCode::RuntimeFailure: return "RUNTIME_FAILURE";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace fluxgauge
