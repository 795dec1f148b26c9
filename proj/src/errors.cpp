#include "smot/errors.hpp"

namespace smot {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::IterationLimitExceeded: return "IterationLimitExceeded";
        case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
        case ErrorCode::MixedKind: return "MixedKind";
        case ErrorCode::NegativeMass: return "NegativeMass";
        case ErrorCode::PathCountExceeded: return "PathCountExceeded";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::UnknownSpec: return "UnknownSpec";
        case ErrorCode::NoAnalyticBeta: return "NoAnalyticBeta";
        case ErrorCode::NoTailProxies: return "NoTailProxies";
        case ErrorCode::GrowthBoundViolated: return "GrowthBoundViolated";
        case ErrorCode::InfeasibleModel: return "InfeasibleModel";
        case ErrorCode::UnboundedHedge: return "UnboundedHedge";
        case ErrorCode::InfeasibleInput: return "InfeasibleInput";
        case ErrorCode::UnboundedGBeta: return "UnboundedGBeta";
        case ErrorCode::CertificateVerificationFailed: return "CertificateVerificationFailed";
        case ErrorCode::InvalidInput: return "InvalidInput";
    }
    return "UnknownError";
}

}  // namespace smot
