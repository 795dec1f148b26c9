#include "smot/payoffs.hpp"

#include <algorithm>
#include <cmath>

namespace smot {

namespace {

double eval_spec(const PayoffSpec& spec, std::span<const int> idx,
                 std::span<const double> values, const std::vector<int>& radices) {
    const int n = static_cast<int>(values.size()) - 1;
    switch (spec.kind) {
        case PayoffSpec::Kind::Asian: {
            double avg = 0.0;
            for (int i = 1; i <= n; ++i) avg += values[static_cast<size_t>(i)];
            avg /= n;
            return std::max(avg - spec.strike, 0.0);
        }
        case PayoffSpec::Kind::LookbackKnockIn: {
            double mx = values[0], mn = values[0];
            for (int i = 1; i <= n; ++i) {
                mx = std::max(mx, values[static_cast<size_t>(i)]);
                mn = std::min(mn, values[static_cast<size_t>(i)]);
            }
            return mn <= spec.barrier ? std::max(mx - spec.strike, 0.0) : 0.0;
        }
        case PayoffSpec::Kind::Forward:
            return values[static_cast<size_t>(n)];
        case PayoffSpec::Kind::EuropeanCall:
            return std::max(values[static_cast<size_t>(n)] - spec.strike, 0.0);
        case PayoffSpec::Kind::EuropeanPut:
            return std::max(spec.strike - values[static_cast<size_t>(n)], 0.0);
        case PayoffSpec::Kind::Basket: {
            double sum = 0.0;
            for (const auto& [w, part] : spec.components)
                sum += w * eval_spec(part, idx, values, radices);
            return sum;
        }
        case PayoffSpec::Kind::Table: {
            std::int64_t r = 0;
            for (size_t i = 0; i < radices.size(); ++i) r = r * radices[i] + idx[i];
            return spec.values[static_cast<size_t>(r)];
        }
    }
    throw Error(ErrorCode::UnknownSpec, "unhandled payoff kind");
}

double default_growth_bound(const PayoffSpec& spec) {
    switch (spec.kind) {
        case PayoffSpec::Kind::Asian:
        case PayoffSpec::Kind::LookbackKnockIn:
        case PayoffSpec::Kind::Forward:
        case PayoffSpec::Kind::EuropeanCall:
            return 1.0;
        case PayoffSpec::Kind::EuropeanPut:
            return std::max(1.0, spec.strike);
        case PayoffSpec::Kind::Basket: {
            double k = 0.0;
            for (const auto& [w, part] : spec.components)
                k += std::abs(w) * default_growth_bound(part);
            return std::max(k, 1.0);
        }
        case PayoffSpec::Kind::Table:
            return spec.declared_growth_bound;
    }
    return 1.0;
}

std::string spec_name(const PayoffSpec& spec) {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };
    switch (spec.kind) {
        case PayoffSpec::Kind::Asian: return "asian(" + num(spec.strike) + ")";
        case PayoffSpec::Kind::LookbackKnockIn:
            return "lookback_knock_in(" + num(spec.strike) + "," + num(spec.barrier) + ")";
        case PayoffSpec::Kind::Forward: return "forward";
        case PayoffSpec::Kind::EuropeanCall: return "european_call(" + num(spec.strike) + ")";
        case PayoffSpec::Kind::EuropeanPut: return "european_put(" + num(spec.strike) + ")";
        case PayoffSpec::Kind::Basket: {
            std::string s = "basket(";
            for (size_t i = 0; i < spec.components.size(); ++i) {
                if (i) s += ",";
                s += num(spec.components[i].first) + "*" + spec_name(spec.components[i].second);
            }
            return s + ")";
        }
        case PayoffSpec::Kind::Table: return "table";
    }
    return "unknown";
}

void validate_spec(const PayoffSpec& spec, const PathLattice* lattice) {
    switch (spec.kind) {
        case PayoffSpec::Kind::Asian:
        case PayoffSpec::Kind::EuropeanCall:
        case PayoffSpec::Kind::EuropeanPut:
            if (spec.strike < 0.0)
                throw Error(ErrorCode::UnknownSpec, "strike must be nonnegative");
            break;
        case PayoffSpec::Kind::LookbackKnockIn:
            if (spec.strike < 0.0 || spec.barrier < 0.0)
                throw Error(ErrorCode::UnknownSpec, "strike and barrier must be nonnegative");
            break;
        case PayoffSpec::Kind::Forward:
            break;
        case PayoffSpec::Kind::Basket:
            if (spec.components.empty())
                throw Error(ErrorCode::UnknownSpec, "basket needs at least one component");
            for (const auto& [w, part] : spec.components) validate_spec(part, lattice);
            break;
        case PayoffSpec::Kind::Table: {
            if (lattice == nullptr)
                throw Error(ErrorCode::UnknownSpec, "table payoffs require a lattice");
            if (static_cast<std::int64_t>(spec.values.size()) != lattice->path_count())
                throw Error(ErrorCode::UnknownSpec, "table size must equal the path count");
            if (!(spec.declared_growth_bound >= 0.0))
                throw Error(ErrorCode::UnknownSpec, "table payoffs must declare a growth bound");
            for (double v : spec.values)
                if (!std::isfinite(v))
                    throw Error(ErrorCode::UnknownSpec, "table values must be finite");
            break;
        }
    }
}

bool contains_table(const PayoffSpec& spec) {
    if (spec.kind == PayoffSpec::Kind::Table) return true;
    for (const auto& [w, part] : spec.components)
        if (contains_table(part)) return true;
    return false;
}

}  // namespace

Payoff make_payoff(const PayoffSpec& spec, const PathLattice* lattice) {
    validate_spec(spec, lattice);
    Payoff p;
    p.name = spec_name(spec);
    p.spec = spec;
    p.growth_bound = default_growth_bound(spec);
    std::vector<int> radices;
    if (lattice != nullptr)
        for (int i = 0; i < lattice->periods; ++i) radices.push_back(lattice->level_count(i));
    if (contains_table(spec) && radices.empty())
        throw Error(ErrorCode::UnknownSpec, "table payoffs require a lattice");
    p.eval = [spec = p.spec, radices](std::span<const int> idx, std::span<const double> values) {
        return eval_spec(spec, idx, values, radices);
    };
    return p;
}

void verify_growth_bound(const Payoff& payoff, const PathLattice& lattice) {
    std::vector<int> idx;
    std::vector<double> values;
    const std::int64_t total = lattice.path_count();
    for (std::int64_t r = 0; r < total; ++r) {
        lattice.decode(r, idx);
        lattice.decode_values(idx, values);
        double sum = 0.0;
        for (int i = 1; i <= lattice.periods; ++i) sum += values[static_cast<size_t>(i)];
        double cap = payoff.growth_bound * (1.0 + sum);
        double g = payoff(idx, values);
        if (g > cap + 1e-9 * (1.0 + std::abs(cap)))
            throw Error(ErrorCode::GrowthBoundViolated,
                        payoff.name + " exceeds its growth bound on the lattice");
    }
}

namespace {

void fill_analytic(const PayoffSpec& spec, const PathLattice& lattice, BetaFunctions& beta,
                   double weight) {
    const int n = lattice.periods;
    switch (spec.kind) {
        case PayoffSpec::Kind::Asian: {
            for (int i = 0; i < n; ++i) {
                double b = weight * static_cast<double>(n - i) / n;
                for (auto& v : beta.values[static_cast<size_t>(i)]) v += b;
            }
            return;
        }
        case PayoffSpec::Kind::Forward:
        case PayoffSpec::Kind::EuropeanCall: {
            for (int i = 0; i < n; ++i)
                for (auto& v : beta.values[static_cast<size_t>(i)]) v += weight;
            return;
        }
        case PayoffSpec::Kind::EuropeanPut:
            return;  // bounded payoff, zero slope
        case PayoffSpec::Kind::LookbackKnockIn: {
            std::vector<int> idx;
            for (int i = 0; i < n; ++i) {
                auto& vals = beta.values[static_cast<size_t>(i)];
                for (std::int64_t h = 0; h < static_cast<std::int64_t>(vals.size()); ++h) {
                    // Decode the history tuple for periods 1..i.
                    double mn = lattice.spot;
                    std::int64_t rest = h;
                    idx.assign(static_cast<size_t>(i), 0);
                    for (int k = i - 1; k >= 0; --k) {
                        int width = lattice.level_count(k);
                        idx[static_cast<size_t>(k)] = static_cast<int>(rest % width);
                        rest /= width;
                    }
                    for (int k = 0; k < i; ++k)
                        mn = std::min(mn, lattice.levels[k][static_cast<size_t>(idx[k])]);
                    double b = (n - 1 - i) + (mn <= spec.barrier ? 1.0 : 0.0);
                    vals[static_cast<size_t>(h)] += weight * b;
                }
            }
            return;
        }
        case PayoffSpec::Kind::Basket: {
            for (const auto& [w, part] : spec.components) {
                if (w < 0.0 && default_growth_bound(part) > 0.0 &&
                    part.kind != PayoffSpec::Kind::EuropeanPut)
                    throw Error(ErrorCode::NoAnalyticBeta,
                                "negative weight on an unbounded basket component");
                fill_analytic(part, lattice, beta, weight * w);
            }
            return;
        }
        case PayoffSpec::Kind::Table:
            throw Error(ErrorCode::NoAnalyticBeta, "table payoffs have no closed-form slopes");
    }
}

}  // namespace

BetaFunctions analytic_beta(const Payoff& payoff, const PathLattice& lattice) {
    BetaFunctions beta;
    beta.periods = lattice.periods;
    beta.approximate = false;
    beta.values.resize(static_cast<size_t>(lattice.periods));
    for (int i = 0; i < lattice.periods; ++i)
        beta.values[static_cast<size_t>(i)].assign(
            static_cast<size_t>(lattice.history_count(i)), 0.0);
    fill_analytic(payoff.spec, lattice, beta, 1.0);
    for (const auto& level : beta.values)
        for (double v : level)
            if (v < 0.0)
                throw Error(ErrorCode::NoAnalyticBeta, "analytic slopes must be nonnegative");
    return beta;
}

BetaFunctions numeric_beta(const Payoff& payoff, const PathLattice& lattice,
                           const PredictionMask& mask) {
    const int n = lattice.periods;
    const int n_proxy = static_cast<int>(lattice.proxy_levels.size());
    if (n_proxy == 0)
        throw Error(ErrorCode::NoTailProxies, "numeric slopes need at least one tail proxy");

    BetaFunctions beta;
    beta.periods = n;
    beta.approximate = true;
    beta.values.resize(static_cast<size_t>(n));

    std::vector<int> idx(static_cast<size_t>(n), 0);
    std::vector<double> values;
    for (int i = n - 1; i >= 0; --i) {
        auto& out = beta.values[static_cast<size_t>(i)];
        out.assign(static_cast<size_t>(lattice.history_count(i)), 0.0);
        // The limit direction is evaluated at the top proxy; the growth slope is
        // the difference quotient over the two largest proxies, which is exact
        // for payoffs that are eventually linear in the substituted coordinate.
        const int top_idx = lattice.level_count(i) - 1;
        const int prev_idx = n_proxy >= 2 ? top_idx - 1 : -1;
        const double x_top = lattice.levels[static_cast<size_t>(i)].back();
        const double x_prev =
            prev_idx >= 0 ? lattice.levels[static_cast<size_t>(i)][static_cast<size_t>(prev_idx)]
                          : 0.0;

        for (std::int64_t h = 0; h < static_cast<std::int64_t>(out.size()); ++h) {
            std::int64_t rest = h;
            for (int k = i - 1; k >= 0; --k) {
                int width = lattice.level_count(k);
                idx[static_cast<size_t>(k)] = static_cast<int>(rest % width);
                rest /= width;
            }
            idx[static_cast<size_t>(i)] = top_idx;
            double next_beta =
                (i + 1 < n) ? beta.at(i + 1, lattice.history_rank(i + 1, idx)) : 0.0;

            // Supremum over mask-feasible mass-level continuations at i+2..n.
            double best = 0.0;
            std::function<void(int)> rec = [&](int period) {
                if (period == n) {
                    idx[static_cast<size_t>(i)] = top_idx;
                    std::int64_t r = lattice.rank(idx);
                    if (!mask[r]) return;
                    lattice.decode_values(idx, values);
                    double g_top = payoff(idx, values);
                    double slope;
                    if (prev_idx >= 0) {
                        idx[static_cast<size_t>(i)] = prev_idx;
                        lattice.decode_values(idx, values);
                        double g_prev = payoff(idx, values);
                        slope = (g_top - g_prev) / (x_top - x_prev);
                    } else {
                        slope = g_top / x_top;
                    }
                    best = std::max(best, next_beta + slope);
                    return;
                }
                for (int j = 0; j < lattice.mass_counts[static_cast<size_t>(period)]; ++j) {
                    idx[static_cast<size_t>(period)] = j;
                    rec(period + 1);
                }
            };
            rec(i + 1);
            out[static_cast<size_t>(h)] = best;
        }
    }
    return beta;
}

Payoff modified_payoff_g_beta(const Payoff& payoff, const BetaFunctions& beta,
                              const PathLattice& lattice) {
    if (beta.periods != lattice.periods)
        throw Error(ErrorCode::InvalidInput, "beta functions do not match the lattice");
    Payoff p;
    p.name = "g_beta(" + payoff.name + ")";
    p.spec = payoff.spec;
    std::vector<int> radices;
    for (int i = 0; i < lattice.periods; ++i) radices.push_back(lattice.level_count(i));
    auto base = payoff.eval;
    auto betas = beta;
    p.eval = [base, betas, radices](std::span<const int> idx, std::span<const double> values) {
        double g = base(idx, values);
        std::int64_t h = 0;
        for (size_t i = 0; i + 1 < values.size(); ++i) {
            g -= betas.at(static_cast<int>(i), h) * (values[i + 1] - values[i]);
            if (i < radices.size())
                h = h * radices[i] + idx[i];
        }
        return g;
    };
    // Tight growth constant on this lattice.
    double k = 0.0;
    std::vector<int> idx;
    std::vector<double> values;
    for (std::int64_t r = 0; r < lattice.path_count(); ++r) {
        lattice.decode(r, idx);
        lattice.decode_values(idx, values);
        double sum = 0.0;
        for (int i = 1; i <= lattice.periods; ++i) sum += values[static_cast<size_t>(i)];
        k = std::max(k, p.eval(idx, values) / (1.0 + sum));
    }
    p.growth_bound = std::max(k, 0.0);
    return p;
}

Payoff penalized_payoff(const Payoff& payoff, double penalty, const PredictionMask& mask,
                        const PathLattice& lattice) {
    if (penalty < 0.0) throw Error(ErrorCode::InvalidInput, "penalty must be nonnegative");
    Payoff p;
    p.name = payoff.name + " - " + std::to_string(penalty) + "*off_mask";
    p.spec = payoff.spec;
    p.growth_bound = payoff.growth_bound;
    std::vector<int> radices;
    for (int i = 0; i < lattice.periods; ++i) radices.push_back(lattice.level_count(i));
    auto base = payoff.eval;
    auto feasible = mask.feasible;
    p.eval = [base, feasible, radices, penalty](std::span<const int> idx,
                                                std::span<const double> values) {
        double g = base(idx, values);
        std::int64_t r = 0;
        for (size_t i = 0; i < radices.size(); ++i) r = r * radices[i] + idx[i];
        if (!feasible[static_cast<size_t>(r)]) {
            double sum = 0.0;
            for (size_t i = 1; i < values.size(); ++i) sum += values[i];
            g -= penalty * (1.0 + sum);
        }
        return g;
    };
    return p;
}

}  // namespace smot
