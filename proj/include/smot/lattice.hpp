#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smot/marginals.hpp"

namespace smot {

struct TailProxySpec {
    int count = 3;
    double growth_factor = 10.0;
};

/// Finite path space over per-period level sets with a fixed start. Each
/// period's levels are ascending: first the support of its marginal, then the
/// shared tail-proxy levels, which sit strictly above every mass level of
/// every period and carry zero marginal mass.
struct PathLattice {
    double spot = 0.0;
    int periods = 0;
    std::vector<std::vector<double>> levels;
    std::vector<std::vector<double>> mass_weights;  // aligned with the mass prefix
    std::vector<int> mass_counts;
    std::vector<double> proxy_levels;

    int level_count(int period) const { return static_cast<int>(levels[period].size()); }
    bool is_proxy(int period, int idx) const { return idx >= mass_counts[period]; }
    std::int64_t path_count() const;
    /// Number of distinct level tuples for periods 1..j; 1 when j = 0.
    std::int64_t history_count(int j) const;

    /// Paths are ranked lexicographically by their level-index tuples.
    std::int64_t rank(std::span<const int> idx) const;
    void decode(std::int64_t rank, std::vector<int>& idx) const;
    /// Full price path (s_0, s_1, ..., s_n) for an index tuple.
    void decode_values(std::span<const int> idx, std::vector<double>& values) const;

    std::int64_t history_rank(int j, std::span<const int> idx) const;
    double top_proxy() const;
};

PathLattice build_lattice(double spot, const std::vector<Marginal>& marginals,
                          TailProxySpec proxy_spec, std::int64_t path_cap = 200000);

struct PredicateSpec {
    enum class Kind {
        AllPaths,
        MaxAbsIncrement,
        BoundedSquaredVariation,
        MaxDrawdown,
        CustomTable,
    };
    Kind kind = Kind::AllPaths;
    double param = 0.0;
    std::vector<std::int64_t> feasible_ranks;  // CustomTable only

    static PredicateSpec all_paths() { return {}; }
    static PredicateSpec max_abs_increment(double delta) {
        return {Kind::MaxAbsIncrement, delta, {}};
    }
    static PredicateSpec bounded_squared_variation(double q) {
        return {Kind::BoundedSquaredVariation, q, {}};
    }
    static PredicateSpec max_drawdown(double d) { return {Kind::MaxDrawdown, d, {}}; }
    static PredicateSpec custom(std::vector<std::int64_t> ranks) {
        return {Kind::CustomTable, 0.0, std::move(ranks)};
    }
};

/// Boolean feasibility per path, in path-rank order.
struct PredictionMask {
    std::string description;
    std::vector<char> feasible;
    std::int64_t feasible_count = 0;

    bool operator[](std::int64_t rank) const { return feasible[static_cast<size_t>(rank)]; }
};

PredictionMask build_mask(const PathLattice& lattice, const PredicateSpec& spec);

/// Feasible path ranks in lexicographic order.
std::vector<std::int64_t> enumerate(const PathLattice& lattice, const PredictionMask& mask);

}  // namespace smot
