#pragma once

#include <optional>

#include "smot/lattice.hpp"
#include "smot/lp.hpp"
#include "smot/marginals.hpp"
#include "smot/payoffs.hpp"

namespace smot {

enum class CouplingMode { Supermartingale, Martingale, PlainCoupling };
enum class DeltaSign { Nonnegative, Free };

struct SolveDiagnostics {
    int iterations = 0;
    double max_eq_residual = 0.0;
    double max_ub_violation = 0.0;
    double max_bound_violation = 0.0;
    double duality_mismatch = 0.0;
};

/// Largest model price over calibrated couplings on the masked lattice.
struct PrimalResult {
    double value = 0.0;
    CouplingMode mode = CouplingMode::Supermartingale;
    std::vector<std::pair<std::int64_t, double>> coupling;  // (path rank, probability)
    SolveDiagnostics diagnostics;
    double max_marginal_residual = 0.0;
    double max_increment_violation = 0.0;
};

struct StaticPosition {
    int maturity = 1;  // 1-based
    double strike = 0.0;
    double coefficient = 0.0;
    double quoted_price = 0.0;
};

/// Cheapest semi-static superhedge: cash, signed option positions, and a
/// nonnegative (or free) asset holding per history node.
struct DualResult {
    double value = 0.0;
    double cash = 0.0;
    std::vector<StaticPosition> statics;
    std::vector<std::vector<double>> deltas;  // deltas[j] over history ranks of period j
    CurveKind kind = CurveKind::Call;
    DeltaSign delta_sign = DeltaSign::Nonnegative;
    SolveDiagnostics diagnostics;
    double min_slack = 0.0;       // pathwise re-verification, independent of the LP
    double max_violation = 0.0;
};

struct ArbitrageCertificate {
    double cash = 0.0;
    std::vector<StaticPosition> statics;
    std::vector<std::vector<double>> deltas;
    double cost = 0.0;           // < 0, normalized to -1
    double worst_payoff = 0.0;   // min over mask-feasible paths
};

struct GammaPoint {
    double penalty = 0.0;
    double dual_value = 0.0;    // unrestricted-path superhedge of the penalized claim
    double primal_value = 0.0;  // unrestricted-path model price of the penalized claim
    double gamma = 0.0;
};

struct PricingOptions {
    LpOptions lp;
    DeltaSign delta_sign = DeltaSign::Nonnegative;
    /// Raise deltas at proxy-ended histories to their maximal feasible value;
    /// zero-cost, resolves dual degeneracy at the lattice boundary.
    bool lift_deltas = true;
    std::int64_t max_tableau_entries = 40000000;
};

PrimalResult primal_price(const PathLattice& lattice, const PredictionMask& mask,
                          const Payoff& payoff, CouplingMode mode,
                          const PricingOptions& options = {});

/// Static strikes default to the mass levels per maturity (plus strike zero
/// for calls); quotes are read off the market's piecewise-linear curves.
DualResult superhedge(const MarketInput& market, const PathLattice& lattice,
                      const PredictionMask& mask, const Payoff& payoff,
                      const PricingOptions& options = {});

/// Model price of the slope-modified claim; with valid slopes this equals the
/// put-market superhedging price. Throws UnboundedGBeta when the modified
/// claim still grows along the tail proxies.
double gap_via_beta(const PathLattice& lattice, const PredictionMask& mask, const Payoff& payoff,
                    const BetaFunctions& beta, const PricingOptions& options = {});

/// Penalization route: both unrestricted-path values of G - N * offmask penalty
/// per scheduled N, with gamma_N their difference.
std::vector<GammaPoint> gap_asymptotic(const PathLattice& lattice, const PredictionMask& mask,
                                       const Payoff& payoff, const std::vector<double>& schedule,
                                       const PricingOptions& options = {});

/// Feasibility of the calibration program on a lattice built from the quoted
/// strikes; on infeasibility the Farkas ray is converted into a strategy with
/// negative cost and pathwise nonnegative payoff, verified by enumeration.
std::optional<ArbitrageCertificate> arbitrage_certificate(const MarketInput& market,
                                                          const PredicateSpec& mask_spec,
                                                          TailProxySpec proxy_spec = {},
                                                          const PricingOptions& options = {});

struct ReportRequest {
    bool route_beta = false;
    bool route_gamma = false;
    bool prefer_analytic_beta = true;
    std::vector<double> gamma_schedule = {1.0, 10.0, 100.0, 1000.0};
};

struct DualityReportResult {
    CurveKind kind = CurveKind::Call;
    double primal_value = 0.0;
    double dual_value = 0.0;
    double gap = 0.0;
    std::optional<double> beta_route_value;  // model price of the modified claim
    std::optional<double> gap_via_beta;      // beta_route_value - primal_value
    std::vector<GammaPoint> gamma_points;
    std::vector<double> bubbles;  // s0 - mean(mu_i) per maturity
    PrimalResult primal;
    DualResult dual;
};

DualityReportResult duality_report(const MarketInput& market, const PathLattice& lattice,
                                   const PredictionMask& mask, const Payoff& payoff,
                                   const ReportRequest& request = {},
                                   const PricingOptions& options = {});

}  // namespace smot
