#pragma once

#include <stdexcept>
#include <string>

namespace smot {

enum class ErrorCode {
    // solver
    IterationLimitExceeded,
    NumericalBreakdown,
    // marginals
    MixedKind,
    NegativeMass,
    // lattice
    PathCountExceeded,
    EmptyMask,
    // payoffs
    UnknownSpec,
    NoAnalyticBeta,
    NoTailProxies,
    GrowthBoundViolated,
    // pricing
    InfeasibleModel,
    UnboundedHedge,
    InfeasibleInput,
    UnboundedGBeta,
    CertificateVerificationFailed,
    // config / general
    InvalidInput,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace smot
