#include "smot/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace smot {

std::int64_t PathLattice::path_count() const {
    std::int64_t n = 1;
    for (int i = 0; i < periods; ++i) n *= level_count(i);
    return n;
}

std::int64_t PathLattice::history_count(int j) const {
    std::int64_t n = 1;
    for (int i = 0; i < j; ++i) n *= level_count(i);
    return n;
}

std::int64_t PathLattice::rank(std::span<const int> idx) const {
    std::int64_t r = 0;
    for (int i = 0; i < periods; ++i) r = r * level_count(i) + idx[static_cast<size_t>(i)];
    return r;
}

void PathLattice::decode(std::int64_t rank, std::vector<int>& idx) const {
    idx.resize(static_cast<size_t>(periods));
    for (int i = periods - 1; i >= 0; --i) {
        int width = level_count(i);
        idx[static_cast<size_t>(i)] = static_cast<int>(rank % width);
        rank /= width;
    }
}

void PathLattice::decode_values(std::span<const int> idx, std::vector<double>& values) const {
    values.resize(static_cast<size_t>(periods) + 1);
    values[0] = spot;
    for (int i = 0; i < periods; ++i)
        values[static_cast<size_t>(i) + 1] = levels[i][static_cast<size_t>(idx[i])];
}

std::int64_t PathLattice::history_rank(int j, std::span<const int> idx) const {
    std::int64_t r = 0;
    for (int i = 0; i < j; ++i) r = r * level_count(i) + idx[static_cast<size_t>(i)];
    return r;
}

double PathLattice::top_proxy() const {
    if (proxy_levels.empty())
        throw Error(ErrorCode::NoTailProxies, "lattice has no tail-proxy levels");
    return proxy_levels.back();
}

PathLattice build_lattice(double spot, const std::vector<Marginal>& marginals,
                          TailProxySpec proxy_spec, std::int64_t path_cap) {
    if (spot <= 0.0) throw Error(ErrorCode::InvalidInput, "spot must be positive");
    if (marginals.empty()) throw Error(ErrorCode::InvalidInput, "at least one marginal required");
    if (proxy_spec.count < 0) throw Error(ErrorCode::InvalidInput, "proxy count must be >= 0");
    if (proxy_spec.count > 0 && proxy_spec.growth_factor <= 1.0)
        throw Error(ErrorCode::InvalidInput, "proxy growth factor must exceed 1");

    PathLattice lat;
    lat.spot = spot;
    lat.periods = static_cast<int>(marginals.size());

    double top_mass = 0.0;
    for (const auto& m : marginals) {
        std::vector<double> lv, w;
        for (size_t j = 0; j < m.weights.size(); ++j) {
            if (m.weights[j] > 0.0) {
                lv.push_back(m.grid.points[j]);
                w.push_back(m.weights[j]);
            }
        }
        if (lv.empty()) throw Error(ErrorCode::InvalidInput, "marginal carries no mass");
        top_mass = std::max(top_mass, lv.back());
        lat.mass_counts.push_back(static_cast<int>(lv.size()));
        lat.levels.push_back(std::move(lv));
        lat.mass_weights.push_back(std::move(w));
    }
    for (int k = 1; k <= proxy_spec.count; ++k)
        lat.proxy_levels.push_back(top_mass * std::pow(proxy_spec.growth_factor, k));
    for (auto& lv : lat.levels) lv.insert(lv.end(), lat.proxy_levels.begin(), lat.proxy_levels.end());

    std::int64_t count = 1;
    for (int i = 0; i < lat.periods; ++i) {
        count *= lat.level_count(i);
        if (count > path_cap)
            throw Error(ErrorCode::PathCountExceeded,
                        "lattice would have more than " + std::to_string(path_cap) + " paths");
    }
    return lat;
}

namespace {

bool evaluate_predicate(const PredicateSpec& spec, std::span<const double> path) {
    switch (spec.kind) {
        case PredicateSpec::Kind::AllPaths:
            return true;
        case PredicateSpec::Kind::MaxAbsIncrement: {
            for (size_t i = 0; i + 1 < path.size(); ++i)
                if (std::abs(path[i + 1] - path[i]) > spec.param) return false;
            return true;
        }
        case PredicateSpec::Kind::BoundedSquaredVariation: {
            double q = 0.0;
            for (size_t i = 0; i + 1 < path.size(); ++i) {
                double d = path[i + 1] - path[i];
                q += d * d;
            }
            return q <= spec.param;
        }
        case PredicateSpec::Kind::MaxDrawdown: {
            double runmax = path[0];
            for (size_t i = 1; i < path.size(); ++i) {
                runmax = std::max(runmax, path[i]);
                if (runmax - path[i] > spec.param) return false;
            }
            return true;
        }
        case PredicateSpec::Kind::CustomTable:
            return false;  // handled by rank lookup
    }
    return false;
}

std::string describe(const PredicateSpec& spec) {
    switch (spec.kind) {
        case PredicateSpec::Kind::AllPaths: return "all_paths";
        case PredicateSpec::Kind::MaxAbsIncrement:
            return "max_abs_increment(" + std::to_string(spec.param) + ")";
        case PredicateSpec::Kind::BoundedSquaredVariation:
            return "bounded_squared_variation(" + std::to_string(spec.param) + ")";
        case PredicateSpec::Kind::MaxDrawdown:
            return "max_drawdown(" + std::to_string(spec.param) + ")";
        case PredicateSpec::Kind::CustomTable:
            return "custom_table(" + std::to_string(spec.feasible_ranks.size()) + " paths)";
    }
    return "unknown";
}

}  // namespace

PredictionMask build_mask(const PathLattice& lattice, const PredicateSpec& spec) {
    PredictionMask mask;
    mask.description = describe(spec);
    const std::int64_t total = lattice.path_count();
    mask.feasible.assign(static_cast<size_t>(total), 0);

    if (spec.kind == PredicateSpec::Kind::CustomTable) {
        for (std::int64_t r : spec.feasible_ranks) {
            if (r < 0 || r >= total)
                throw Error(ErrorCode::InvalidInput, "custom mask rank out of range");
            mask.feasible[static_cast<size_t>(r)] = 1;
        }
    } else {
        std::vector<int> idx;
        std::vector<double> values;
        for (std::int64_t r = 0; r < total; ++r) {
            lattice.decode(r, idx);
            lattice.decode_values(idx, values);
            mask.feasible[static_cast<size_t>(r)] = evaluate_predicate(spec, values) ? 1 : 0;
        }
    }
    for (char f : mask.feasible) mask.feasible_count += f;
    if (mask.feasible_count == 0)
        throw Error(ErrorCode::EmptyMask, "prediction set excludes every lattice path");
    return mask;
}

std::vector<std::int64_t> enumerate(const PathLattice& lattice, const PredictionMask& mask) {
    if (static_cast<std::int64_t>(mask.feasible.size()) != lattice.path_count())
        throw Error(ErrorCode::InvalidInput, "mask does not match lattice");
    std::vector<std::int64_t> out;
    out.reserve(static_cast<size_t>(mask.feasible_count));
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(mask.feasible.size()); ++r)
        if (mask.feasible[static_cast<size_t>(r)]) out.push_back(r);
    return out;
}

}  // namespace smot
