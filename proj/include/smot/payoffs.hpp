#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "smot/lattice.hpp"

namespace smot {

struct PayoffSpec {
    enum class Kind { Asian, LookbackKnockIn, Forward, EuropeanCall, EuropeanPut, Basket, Table };
    Kind kind = Kind::Forward;
    double strike = 0.0;
    double barrier = 0.0;
    std::vector<std::pair<double, PayoffSpec>> components;  // Basket
    std::vector<double> values;                             // Table, one per path rank
    double declared_growth_bound = 0.0;                     // Table

    static PayoffSpec asian(double strike) { return {Kind::Asian, strike}; }
    static PayoffSpec lookback_knock_in(double strike, double barrier) {
        return {Kind::LookbackKnockIn, strike, barrier};
    }
    static PayoffSpec forward() { return {Kind::Forward}; }
    static PayoffSpec european_call(double strike) { return {Kind::EuropeanCall, strike}; }
    static PayoffSpec european_put(double strike) { return {Kind::EuropeanPut, strike}; }
    static PayoffSpec basket(std::vector<std::pair<double, PayoffSpec>> parts) {
        PayoffSpec s;
        s.kind = Kind::Basket;
        s.components = std::move(parts);
        return s;
    }
    static PayoffSpec table(std::vector<double> vals, double growth_bound) {
        PayoffSpec s;
        s.kind = Kind::Table;
        s.values = std::move(vals);
        s.declared_growth_bound = growth_bound;
        return s;
    }
};

/// A claim on lattice paths. The evaluator receives the level-index tuple and
/// the decoded prices (s_0, ..., s_n); growth_bound is a constant K with
/// G <= K (1 + s_1 + ... + s_n), checked against the lattice on demand.
struct Payoff {
    std::string name;
    double growth_bound = 1.0;
    PayoffSpec spec;
    std::function<double(std::span<const int>, std::span<const double>)> eval;

    double operator()(std::span<const int> idx, std::span<const double> values) const {
        return eval(idx, values);
    }
};

/// Asymptotic hedge slopes per history: values[i] maps every history rank of
/// period i to beta_i >= 0, for i = 0..n-1; beta_n = 0 is implicit.
struct BetaFunctions {
    int periods = 0;
    bool approximate = false;
    std::vector<std::vector<double>> values;

    double at(int i, std::int64_t history_rank) const {
        if (i >= periods) return 0.0;
        return values[static_cast<size_t>(i)][static_cast<size_t>(history_rank)];
    }
};

/// Table payoffs need the lattice to resolve path ranks.
Payoff make_payoff(const PayoffSpec& spec, const PathLattice* lattice = nullptr);

/// Throws GrowthBoundViolated when some lattice path exceeds the declared bound.
void verify_growth_bound(const Payoff& payoff, const PathLattice& lattice);

/// Closed-form hedge slopes for the catalog payoffs; NoAnalyticBeta otherwise.
BetaFunctions analytic_beta(const Payoff& payoff, const PathLattice& lattice);

/// Finite surrogate of the backward slope recursion: each limit direction is
/// evaluated at a tail-proxy level assigned to its period, with later periods
/// on strictly larger proxies when available, and the supremum over future
/// coordinates taken over mask-feasible mass-level continuations.
BetaFunctions numeric_beta(const Payoff& payoff, const PathLattice& lattice,
                           const PredictionMask& mask);

/// G minus the beta-weighted increments; growth bound recomputed on the lattice.
Payoff modified_payoff_g_beta(const Payoff& payoff, const BetaFunctions& beta,
                              const PathLattice& lattice);

/// Equals G on mask-feasible paths, G - N (1 + s_1 + ... + s_n) elsewhere.
Payoff penalized_payoff(const Payoff& payoff, double penalty, const PredictionMask& mask,
                        const PathLattice& lattice);

}  // namespace smot
