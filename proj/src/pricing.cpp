#include "smot/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace smot {

namespace {

struct PathData {
    std::vector<std::int64_t> ranks;
    std::vector<std::vector<int>> idx;
    std::vector<std::vector<double>> values;
    std::vector<double> g;
};

PathData collect_paths(const PathLattice& lattice, const PredictionMask& mask,
                       const Payoff* payoff, bool mass_only) {
    PathData out;
    std::vector<int> idx;
    std::vector<double> values;
    const std::int64_t total = lattice.path_count();
    for (std::int64_t r = 0; r < total; ++r) {
        if (!mask[r]) continue;
        lattice.decode(r, idx);
        if (mass_only) {
            bool ok = true;
            for (int i = 0; i < lattice.periods && ok; ++i)
                if (lattice.is_proxy(i, idx[static_cast<size_t>(i)])) ok = false;
            if (!ok) continue;
        }
        lattice.decode_values(idx, values);
        out.ranks.push_back(r);
        out.idx.push_back(idx);
        out.values.push_back(values);
        out.g.push_back(payoff != nullptr ? (*payoff)(idx, values) : 0.0);
    }
    return out;
}

void guard_tableau(std::int64_t rows, std::int64_t cols_structural, std::int64_t ub_rows,
                   const PricingOptions& options) {
    std::int64_t cols = cols_structural + ub_rows + rows + 1;
    if ((rows + 1) * cols > options.max_tableau_entries)
        throw Error(ErrorCode::PathCountExceeded,
                    "assembled LP is too large for the dense solver (" +
                        std::to_string((rows + 1) * cols) + " tableau entries)");
}

SolveDiagnostics make_diagnostics(const LpProblem& lp, const LpSolution& sol) {
    SolveDiagnostics d;
    d.iterations = sol.iterations;
    auto audit = check_solution(lp, sol);
    d.max_eq_residual = audit.max_eq_residual;
    d.max_ub_violation = audit.max_ub_violation;
    d.max_bound_violation = audit.max_bound_violation;
    d.duality_mismatch = audit.duality_mismatch;
    return d;
}

// Active histories per period: those that prefix at least one collected path.
struct HistoryIndex {
    std::vector<std::vector<std::int64_t>> row_of;  // per period j: history rank -> row, -1 absent
    std::vector<std::pair<int, std::int64_t>> rows;  // row -> (period, history rank)
};

HistoryIndex index_histories(const PathLattice& lattice, const PathData& paths) {
    HistoryIndex hi;
    hi.row_of.resize(static_cast<size_t>(lattice.periods));
    for (int j = 0; j < lattice.periods; ++j)
        hi.row_of[static_cast<size_t>(j)].assign(
            static_cast<size_t>(lattice.history_count(j)), -1);
    for (const auto& idx : paths.idx) {
        for (int j = 0; j < lattice.periods; ++j) {
            std::int64_t h = lattice.history_rank(j, idx);
            auto& slot = hi.row_of[static_cast<size_t>(j)][static_cast<size_t>(h)];
            if (slot < 0) slot = 0;  // mark
        }
    }
    for (int j = 0; j < lattice.periods; ++j) {
        auto& level = hi.row_of[static_cast<size_t>(j)];
        for (std::int64_t h = 0; h < static_cast<std::int64_t>(level.size()); ++h) {
            if (level[static_cast<size_t>(h)] == 0) {
                level[static_cast<size_t>(h)] = static_cast<std::int64_t>(hi.rows.size());
                hi.rows.emplace_back(j, h);
            }
        }
    }
    return hi;
}

std::vector<std::vector<std::pair<double, double>>> default_menu(const MarketInput& market,
                                                                 const PathLattice& lattice) {
    std::vector<std::vector<std::pair<double, double>>> menu;
    for (int i = 0; i < lattice.periods; ++i) {
        const auto& curve = market.curves[static_cast<size_t>(i)];
        std::vector<std::pair<double, double>> entries;
        if (market.kind() == CurveKind::Call &&
            lattice.levels[static_cast<size_t>(i)].front() > 0.0)
            entries.emplace_back(0.0, curve.value_at(0.0));
        for (int j = 0; j < lattice.mass_counts[static_cast<size_t>(i)]; ++j) {
            double k = lattice.levels[static_cast<size_t>(i)][static_cast<size_t>(j)];
            entries.emplace_back(k, curve.value_at(k));
        }
        menu.push_back(std::move(entries));
    }
    return menu;
}

std::vector<std::vector<std::pair<double, double>>> quoted_menu(const MarketInput& market) {
    std::vector<std::vector<std::pair<double, double>>> menu;
    for (const auto& curve : market.curves) {
        std::vector<std::pair<double, double>> entries;
        for (int j = 0; j < curve.strikes.size(); ++j)
            entries.emplace_back(curve.strikes.points[static_cast<size_t>(j)],
                                 curve.prices[static_cast<size_t>(j)]);
        menu.push_back(std::move(entries));
    }
    return menu;
}

double instrument_payoff(CurveKind kind, double level, double strike) {
    return kind == CurveKind::Call ? std::max(level - strike, 0.0)
                                   : std::max(strike - level, 0.0);
}

// Calibration program over mask-feasible lattice paths: the hedge instruments
// appear as rows, so its multipliers are the superhedge portfolio.
struct Qlp {
    LpProblem lp;
    PathData paths;
    std::vector<StaticPosition> statics;  // aligned with eq rows 1..
    HistoryIndex histories;
    std::vector<double> col_weight;  // 1/(1 + sum of path prices), per column
    int n_eq = 0;
    DeltaSign sign = DeltaSign::Nonnegative;
};

Qlp build_qlp(const MarketInput& market, const PathLattice& lattice, const PredictionMask& mask,
              const Payoff* payoff,
              const std::vector<std::vector<std::pair<double, double>>>& menu, DeltaSign sign,
              const PricingOptions& options) {
    Qlp q;
    q.sign = sign;
    q.paths = collect_paths(lattice, mask, payoff, /*mass_only=*/false);
    q.histories = index_histories(lattice, q.paths);
    const int np = static_cast<int>(q.paths.ranks.size());
    const int n_inc = static_cast<int>(q.histories.rows.size());
    const CurveKind kind = market.kind();

    int n_statics = 0;
    for (const auto& m : menu) n_statics += static_cast<int>(m.size());
    const bool inc_as_eq = sign == DeltaSign::Free;
    q.n_eq = 1 + n_statics + (inc_as_eq ? n_inc : 0);
    const int n_ub = inc_as_eq ? 0 : n_inc;
    guard_tableau(q.n_eq + n_ub, np, n_ub, options);

    q.lp.sense = Sense::Max;
    q.lp.c = Eigen::Map<const Eigen::VectorXd>(q.paths.g.data(), np);
    q.lp.a_eq.setZero(q.n_eq, np);
    q.lp.b_eq.setZero(q.n_eq);
    q.lp.a_ub.setZero(n_ub, np);
    q.lp.b_ub.setZero(n_ub);

    q.lp.a_eq.row(0).setOnes();
    q.lp.b_eq(0) = 1.0;

    int row = 1;
    for (int mat = 0; mat < lattice.periods; ++mat) {
        for (const auto& [strike, price] : menu[static_cast<size_t>(mat)]) {
            for (int p = 0; p < np; ++p) {
                double level = q.paths.values[static_cast<size_t>(p)][static_cast<size_t>(mat) + 1];
                double pay = instrument_payoff(kind, level, strike);
                if (pay != 0.0) q.lp.a_eq(row, p) = pay;
            }
            q.lp.b_eq(row) = price;
            q.statics.push_back({mat + 1, strike, 0.0, price});
            ++row;
        }
    }

    for (int p = 0; p < np; ++p) {
        const auto& idx = q.paths.idx[static_cast<size_t>(p)];
        const auto& values = q.paths.values[static_cast<size_t>(p)];
        for (int j = 0; j < lattice.periods; ++j) {
            std::int64_t h = lattice.history_rank(j, idx);
            std::int64_t inc_row = q.histories.row_of[static_cast<size_t>(j)][static_cast<size_t>(h)];
            double inc = values[static_cast<size_t>(j) + 1] - values[static_cast<size_t>(j)];
            if (inc == 0.0) continue;
            if (inc_as_eq)
                q.lp.a_eq(q.n_eq - n_inc + inc_row, p) = inc;
            else
                q.lp.a_ub(inc_row, p) = inc;
        }
    }

    // Per-column growth normalization: dividing the measure of a path by one
    // plus its price sum keeps every entry and objective coefficient O(1) even
    // with far tail proxies, without touching the dual side.
    q.col_weight.assign(static_cast<size_t>(np), 1.0);
    for (int p = 0; p < np; ++p) {
        const auto& values = q.paths.values[static_cast<size_t>(p)];
        double sum = 0.0;
        for (size_t i = 1; i < values.size(); ++i) sum += values[i];
        double w = 1.0 / (1.0 + sum);
        q.col_weight[static_cast<size_t>(p)] = w;
        q.lp.c(p) *= w;
        q.lp.a_eq.col(p) *= w;
        if (n_ub > 0) q.lp.a_ub.col(p) *= w;
    }
    return q;
}

struct Portfolio {
    double cash = 0.0;
    std::vector<StaticPosition> statics;
    std::vector<std::vector<double>> deltas;
};

Portfolio portfolio_from_multipliers(const Qlp& q, const PathLattice& lattice,
                                     const Eigen::VectorXd& y, double scale) {
    Portfolio pf;
    pf.cash = scale * y(0);
    pf.statics = q.statics;
    for (size_t s = 0; s < pf.statics.size(); ++s)
        pf.statics[s].coefficient = scale * y(1 + static_cast<int>(s));
    pf.deltas.resize(static_cast<size_t>(lattice.periods));
    for (int j = 0; j < lattice.periods; ++j)
        pf.deltas[static_cast<size_t>(j)].assign(
            static_cast<size_t>(lattice.history_count(j)), 0.0);
    const int n_inc = static_cast<int>(q.histories.rows.size());
    const int base = q.sign == DeltaSign::Free ? q.n_eq - n_inc : q.n_eq;
    for (int r = 0; r < n_inc; ++r) {
        auto [j, h] = q.histories.rows[static_cast<size_t>(r)];
        double v = scale * y(base + r);
        if (q.sign == DeltaSign::Nonnegative && v < 0.0) v = 0.0;  // roundoff clamp
        pf.deltas[static_cast<size_t>(j)][static_cast<size_t>(h)] = v;
    }
    return pf;
}

double portfolio_cost(const Portfolio& pf) {
    double c = pf.cash;
    for (const auto& s : pf.statics) c += s.coefficient * s.quoted_price;
    return c;
}

// Pathwise payoff of the semi-static strategy on one collected path.
double strategy_payoff(const Portfolio& pf, const PathLattice& lattice, CurveKind kind,
                       const std::vector<int>& idx, const std::vector<double>& values,
                       double* magnitude = nullptr) {
    double psi = pf.cash;
    double mag = std::abs(pf.cash);
    for (const auto& s : pf.statics) {
        double pay = instrument_payoff(kind, values[static_cast<size_t>(s.maturity)], s.strike);
        psi += s.coefficient * pay;
        mag += std::abs(s.coefficient * pay);
    }
    for (int j = 0; j < lattice.periods; ++j) {
        std::int64_t h = lattice.history_rank(j, idx);
        double term = pf.deltas[static_cast<size_t>(j)][static_cast<size_t>(h)] *
                      (values[static_cast<size_t>(j) + 1] - values[static_cast<size_t>(j)]);
        psi += term;
        mag += std::abs(term);
    }
    if (magnitude != nullptr) *magnitude = mag;
    return psi;
}

// Above the top tail proxy there is no price level left to force the
// asymptotic asset holding, so the first solve may return hedges that lock in
// the proxy value and drop the asset there. Among the portfolios that
// superhedge at (essentially) the optimal cost, a second solve picks the one
// with lexicographically maximal period-summed holdings, earliest period
// first; holdings are boxed by the claim's growth constant. The selection
// program is solved in the same transposed orientation as the pricing
// program, with the portfolio read off the multipliers:
//
//   maximize  sum_h w_h Delta_h   over (a0, alpha, Delta >= 0)
//   s.t.      Psi(p) >= G(p) on every feasible path,
//             a0 + alpha'quotes <= V + eps,   Delta_h <= cap.
Portfolio select_max_delta_portfolio(const Qlp& q, const PathLattice& lattice, double v_opt,
                                     double delta_cap, double budget_slack,
                                     const LpOptions& lpopt, const PricingOptions& options) {
    const int np = static_cast<int>(q.paths.ranks.size());
    const int n = lattice.periods;
    const int n_statics = static_cast<int>(q.statics.size());
    // Wide enough to admit hedges whose asymptotic-slope profile costs the
    // tiny tail-proxy truncation premium, yet within the reported cost check.
    const double eps = 5e-7 * (1.0 + std::abs(v_opt)) + budget_slack;

    Portfolio result;
    result.statics = q.statics;
    result.deltas.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
        result.deltas[static_cast<size_t>(j)].assign(
            static_cast<size_t>(lattice.history_count(j)), 0.0);

    std::vector<double> g_adj = q.paths.g;

    for (int round = 0; round < n; ++round) {
        // Rows for periods >= round, in the pricing program's order.
        std::vector<int> live_rows;
        for (int r = 0; r < static_cast<int>(q.histories.rows.size()); ++r)
            if (q.histories.rows[static_cast<size_t>(r)].first >= round) live_rows.push_back(r);
        const int n_live = static_cast<int>(live_rows.size());

        const int n_eq = 1 + n_statics;
        const int ncols = np + 1 + n_live;
        const int mu_col = np;
        const int nu_base = np + 1;
        guard_tableau(n_eq + n_live, ncols, n_live, options);

        LpProblem lp;
        lp.sense = Sense::Max;
        lp.c.setZero(ncols);
        for (int p = 0; p < np; ++p)
            lp.c(p) = g_adj[static_cast<size_t>(p)] * q.col_weight[static_cast<size_t>(p)];
        for (int r = 0; r < n_live; ++r) lp.c(nu_base + r) = -delta_cap;

        lp.a_eq.setZero(n_eq, ncols);
        lp.b_eq.setZero(n_eq);
        lp.a_ub.setZero(n_live, ncols);
        lp.b_ub.setZero(n_live);

        for (int p = 0; p < np; ++p) lp.a_eq(0, p) = q.col_weight[static_cast<size_t>(p)];
        lp.a_eq(0, mu_col) = -1.0;
        for (int s = 0; s < n_statics; ++s) {
            for (int p = 0; p < np; ++p) lp.a_eq(1 + s, p) = q.lp.a_eq(1 + s, p);
            lp.a_eq(1 + s, mu_col) = -q.statics[static_cast<size_t>(s)].quoted_price;
        }
        std::vector<std::int64_t> live_index(q.histories.rows.size(), -1);
        for (int r = 0; r < n_live; ++r) live_index[static_cast<size_t>(live_rows[r])] = r;
        for (int p = 0; p < np; ++p) {
            const auto& idx = q.paths.idx[static_cast<size_t>(p)];
            const auto& values = q.paths.values[static_cast<size_t>(p)];
            double w = q.col_weight[static_cast<size_t>(p)];
            for (int j = round; j < n; ++j) {
                std::int64_t h = lattice.history_rank(j, idx);
                std::int64_t row =
                    q.histories.row_of[static_cast<size_t>(j)][static_cast<size_t>(h)];
                std::int64_t live = live_index[static_cast<size_t>(row)];
                double inc = values[static_cast<size_t>(j) + 1] - values[static_cast<size_t>(j)];
                if (inc != 0.0) lp.a_ub(live, p) = inc * w;
            }
        }
        for (int r = 0; r < n_live; ++r) {
            lp.a_ub(r, nu_base + r) = -1.0;
            int period = q.histories.rows[static_cast<size_t>(live_rows[r])].first;
            lp.b_ub(r) = period == round ? -1.0 : 0.0;
        }

        // The budget tolerance absorbs the frozen rounds' precision; widen it
        // a few times before giving up on the round.
        LpSolution sol;
        double round_eps = eps;
        for (int attempt = 0;; ++attempt) {
            lp.c(mu_col) = -(v_opt + round_eps);
            sol = solve_lp(lp, lpopt);
            if (sol.status == LpStatus::Optimal) break;
            if (attempt >= 2 || sol.status == LpStatus::Infeasible)
                throw Error(ErrorCode::NumericalBreakdown,
                            "portfolio selection round " + std::to_string(round) +
                                (sol.status == LpStatus::Infeasible ? " infeasible"
                                                                    : " unbounded"));
            round_eps = std::max(round_eps * 100.0, 1e-12 * (1.0 + std::abs(v_opt)) *
                                                        std::pow(100.0, attempt + 1));
        }

        // Freeze this round's holdings and fold them into the claim.
        result.cash = sol.y(0);
        for (int s = 0; s < n_statics; ++s)
            result.statics[static_cast<size_t>(s)].coefficient = sol.y(1 + s);
        // Freeze this round's period and fold it into the claim; deeper
        // periods are reoptimized next round.
        for (int r = 0; r < n_live; ++r) {
            auto [period, h] = q.histories.rows[static_cast<size_t>(live_rows[r])];
            if (period != round && round + 1 < n) continue;
            double v = std::max(sol.y(n_eq + r), 0.0);
            result.deltas[static_cast<size_t>(period)][static_cast<size_t>(h)] =
                std::min(v, delta_cap);
        }
        if (round + 1 < n) {
            for (int p = 0; p < np; ++p) {
                const auto& idx = q.paths.idx[static_cast<size_t>(p)];
                const auto& values = q.paths.values[static_cast<size_t>(p)];
                std::int64_t h = lattice.history_rank(round, idx);
                g_adj[static_cast<size_t>(p)] -=
                    result.deltas[static_cast<size_t>(round)][static_cast<size_t>(h)] *
                    (values[static_cast<size_t>(round) + 1] -
                     values[static_cast<size_t>(round)]);
            }
        }
    }
    return result;
}

}  // namespace

PrimalResult primal_price(const PathLattice& lattice, const PredictionMask& mask,
                          const Payoff& payoff, CouplingMode mode,
                          const PricingOptions& options) {
    verify_growth_bound(payoff, lattice);
    PathData paths = collect_paths(lattice, mask, &payoff, /*mass_only=*/true);
    const int np = static_cast<int>(paths.ranks.size());
    if (np == 0)
        throw Error(ErrorCode::InfeasibleModel,
                    "prediction set excludes every mass-level path");

    int n_marg = 0;
    std::vector<int> marg_row_base(static_cast<size_t>(lattice.periods));
    for (int i = 0; i < lattice.periods; ++i) {
        marg_row_base[static_cast<size_t>(i)] = n_marg;
        n_marg += lattice.mass_counts[static_cast<size_t>(i)];
    }

    HistoryIndex hist;
    int n_inc = 0;
    if (mode != CouplingMode::PlainCoupling) {
        hist = index_histories(lattice, paths);
        n_inc = static_cast<int>(hist.rows.size());
    }
    const bool inc_as_eq = mode == CouplingMode::Martingale;
    const int n_eq = n_marg + (inc_as_eq ? n_inc : 0);
    const int n_ub = inc_as_eq || mode == CouplingMode::PlainCoupling ? 0 : n_inc;
    guard_tableau(n_eq + n_ub, np, n_ub, options);

    LpProblem lp;
    lp.sense = Sense::Max;
    lp.c = Eigen::Map<const Eigen::VectorXd>(paths.g.data(), np);
    lp.a_eq.setZero(n_eq, np);
    lp.b_eq.setZero(n_eq);
    lp.a_ub.setZero(n_ub, np);
    lp.b_ub.setZero(n_ub);

    for (int i = 0; i < lattice.periods; ++i)
        for (int j = 0; j < lattice.mass_counts[static_cast<size_t>(i)]; ++j)
            lp.b_eq(marg_row_base[static_cast<size_t>(i)] + j) =
                lattice.mass_weights[static_cast<size_t>(i)][static_cast<size_t>(j)];

    for (int p = 0; p < np; ++p) {
        const auto& idx = paths.idx[static_cast<size_t>(p)];
        const auto& values = paths.values[static_cast<size_t>(p)];
        for (int i = 0; i < lattice.periods; ++i)
            lp.a_eq(marg_row_base[static_cast<size_t>(i)] + idx[static_cast<size_t>(i)], p) = 1.0;
        if (mode != CouplingMode::PlainCoupling) {
            for (int j = 0; j < lattice.periods; ++j) {
                std::int64_t h = lattice.history_rank(j, idx);
                std::int64_t row = hist.row_of[static_cast<size_t>(j)][static_cast<size_t>(h)];
                double inc = values[static_cast<size_t>(j) + 1] - values[static_cast<size_t>(j)];
                if (inc == 0.0) continue;
                if (inc_as_eq)
                    lp.a_eq(n_marg + row, p) = inc;
                else
                    lp.a_ub(row, p) = inc;
            }
        }
    }

    LpSolution sol = solve_lp(lp, options.lp);
    if (sol.status == LpStatus::Infeasible)
        throw Error(ErrorCode::InfeasibleModel,
                    "no calibrated coupling matches the marginals on the prediction set");
    if (sol.status == LpStatus::Unbounded)
        throw Error(ErrorCode::NumericalBreakdown,
                    "coupling program reported unbounded; this cannot happen");

    PrimalResult res;
    res.value = sol.objective;
    res.mode = mode;
    res.diagnostics = make_diagnostics(lp, sol);
    for (int p = 0; p < np; ++p)
        res.coupling.emplace_back(paths.ranks[static_cast<size_t>(p)],
                                  std::max(sol.x(p), 0.0));

    // Invariant audits straight from the coupling.
    for (int i = 0; i < lattice.periods; ++i) {
        for (int j = 0; j < lattice.mass_counts[static_cast<size_t>(i)]; ++j) {
            double total = 0.0;
            for (int p = 0; p < np; ++p)
                if (paths.idx[static_cast<size_t>(p)][static_cast<size_t>(i)] == j)
                    total += res.coupling[static_cast<size_t>(p)].second;
            double want = lattice.mass_weights[static_cast<size_t>(i)][static_cast<size_t>(j)];
            res.max_marginal_residual =
                std::max(res.max_marginal_residual, std::abs(total - want));
        }
    }
    if (mode != CouplingMode::PlainCoupling) {
        for (int r = 0; r < n_inc; ++r) {
            auto [j, h] = hist.rows[static_cast<size_t>(r)];
            double drift = 0.0;
            for (int p = 0; p < np; ++p) {
                const auto& idx = paths.idx[static_cast<size_t>(p)];
                if (lattice.history_rank(j, idx) != h) continue;
                const auto& values = paths.values[static_cast<size_t>(p)];
                drift += res.coupling[static_cast<size_t>(p)].second *
                         (values[static_cast<size_t>(j) + 1] - values[static_cast<size_t>(j)]);
            }
            double viol = inc_as_eq ? std::abs(drift) : std::max(drift, 0.0);
            res.max_increment_violation = std::max(res.max_increment_violation, viol);
        }
    }
    return res;
}

DualResult superhedge(const MarketInput& market, const PathLattice& lattice,
                      const PredictionMask& mask, const Payoff& payoff,
                      const PricingOptions& options) {
    market.validate();
    verify_growth_bound(payoff, lattice);
    auto menu = default_menu(market, lattice);
    Qlp q = build_qlp(market, lattice, mask, &payoff, menu, options.delta_sign, options);

    LpSolution sol = solve_lp(q.lp, options.lp);
    if (sol.status == LpStatus::Infeasible)
        throw Error(ErrorCode::InfeasibleInput,
                    "quoted prices admit no calibrated measure on the prediction set");
    if (sol.status == LpStatus::Unbounded)
        throw Error(ErrorCode::UnboundedHedge,
                    "no static menu dominates the claim's growth along the tail proxies");

    DualResult res;
    res.value = sol.objective;
    res.kind = market.kind();
    res.delta_sign = options.delta_sign;
    res.diagnostics = make_diagnostics(q.lp, sol);

    Portfolio pf = portfolio_from_multipliers(q, lattice, sol.y, 1.0);
    if (options.delta_sign == DeltaSign::Nonnegative && options.lift_deltas) {
        double cap = 1.0;
        for (const auto& level : pf.deltas)
            for (double v : level) cap = std::max(cap, 1.5 * v);
        cap = std::max(cap, payoff.growth_bound * (lattice.periods + 2.0));
        // The budget must admit the reference portfolio at its achieved
        // precision, which scales with the tail-proxy magnitudes.
        double budget_slack = 2.0 * std::abs(portfolio_cost(pf) - res.value);
        try {
            Portfolio selected = select_max_delta_portfolio(q, lattice, res.value, cap,
                                                            budget_slack, options.lp, options);
            bool ok = true;
            for (size_t p = 0; p < q.paths.ranks.size() && ok; ++p) {
                double mag = 0.0;
                double psi = strategy_payoff(selected, lattice, res.kind, q.paths.idx[p],
                                             q.paths.values[p], &mag);
                if (psi - q.paths.g[p] < -1e-6 * (1.0 + mag + std::abs(q.paths.g[p])))
                    ok = false;
            }
            if (ok) pf = std::move(selected);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NumericalBreakdown) throw;
            if (std::getenv("SMOT_DEBUG_SELECT") != nullptr)
                std::fprintf(stderr, "[select] fallback: %s\n", e.what());
            // keep the raw multiplier portfolio
        }
    }

    // Exhaustive pathwise re-verification, independent of the LP residuals.
    res.min_slack = std::numeric_limits<double>::infinity();
    for (size_t p = 0; p < q.paths.ranks.size(); ++p) {
        double mag = 0.0;
        double psi = strategy_payoff(pf, lattice, res.kind, q.paths.idx[p], q.paths.values[p],
                                     &mag);
        double slack = psi - q.paths.g[p];
        res.min_slack = std::min(res.min_slack, slack);
        double tol = 1e-6 * (1.0 + mag + std::abs(q.paths.g[p]));
        if (slack < -tol)
            throw Error(ErrorCode::NumericalBreakdown,
                        "superhedge verification failed at path rank " +
                            std::to_string(q.paths.ranks[p]) + " (slack " +
                            std::to_string(slack) + ", tol " + std::to_string(tol) + ")");
        res.max_violation = std::max(res.max_violation, std::max(0.0, -slack));
    }
    double cost = portfolio_cost(pf);
    if (std::abs(cost - res.value) > 1e-6 * (1.0 + std::abs(res.value)))
        throw Error(ErrorCode::NumericalBreakdown,
                    "portfolio cost " + std::to_string(cost) +
                        " does not reproduce the dual value " + std::to_string(res.value));

    res.cash = pf.cash;
    res.statics = std::move(pf.statics);
    res.deltas = std::move(pf.deltas);
    return res;
}

double gap_via_beta(const PathLattice& lattice, const PredictionMask& mask, const Payoff& payoff,
                    const BetaFunctions& beta, const PricingOptions& options) {
    Payoff gb = modified_payoff_g_beta(payoff, beta, lattice);

    // The modified claim must stop growing along the tail proxies.
    if (!lattice.proxy_levels.empty()) {
        double top = lattice.top_proxy();
        double top_max = -std::numeric_limits<double>::infinity();
        double rest_max = -std::numeric_limits<double>::infinity();
        std::vector<int> idx;
        std::vector<double> values;
        for (std::int64_t r = 0; r < lattice.path_count(); ++r) {
            if (!mask[r]) continue;
            lattice.decode(r, idx);
            lattice.decode_values(idx, values);
            bool at_top = false;
            for (int i = 0; i < lattice.periods; ++i)
                if (values[static_cast<size_t>(i) + 1] == top) at_top = true;
            double v = gb(idx, values);
            (at_top ? top_max : rest_max) = std::max(at_top ? top_max : rest_max, v);
        }
        double scale = 1.0 + std::max(std::abs(top_max), std::abs(rest_max));
        if (top_max > rest_max + 1e-7 * scale)
            throw Error(ErrorCode::UnboundedGBeta,
                        "modified claim keeps growing at the tail proxies; slopes too small");
    }
    return primal_price(lattice, mask, gb, CouplingMode::Supermartingale, options).value;
}

std::vector<GammaPoint> gap_asymptotic(const PathLattice& lattice, const PredictionMask& mask,
                                       const Payoff& payoff, const std::vector<double>& schedule,
                                       const PricingOptions& options) {
    std::vector<Marginal> marginals;
    for (int i = 0; i < lattice.periods; ++i) {
        std::vector<double> pts(
            lattice.levels[static_cast<size_t>(i)].begin(),
            lattice.levels[static_cast<size_t>(i)].begin() +
                lattice.mass_counts[static_cast<size_t>(i)]);
        marginals.emplace_back(Grid(pts), lattice.mass_weights[static_cast<size_t>(i)]);
    }
    MarketInput puts = market_from_marginals(lattice.spot, marginals, CurveKind::Put);
    PredictionMask all = build_mask(lattice, PredicateSpec::all_paths());

    std::vector<GammaPoint> out;
    for (double n : schedule) {
        Payoff gn = penalized_payoff(payoff, n, mask, lattice);
        GammaPoint pt;
        pt.penalty = n;
        pt.dual_value = superhedge(puts, lattice, all, gn, options).value;
        pt.primal_value = primal_price(lattice, all, gn, CouplingMode::Supermartingale,
                                       options).value;
        pt.gamma = pt.dual_value - pt.primal_value;
        out.push_back(pt);
    }
    return out;
}

std::optional<ArbitrageCertificate> arbitrage_certificate(const MarketInput& market,
                                                          const PredicateSpec& mask_spec,
                                                          TailProxySpec proxy_spec,
                                                          const PricingOptions& options) {
    market.validate();

    // Lattice straight from the quoted strikes; weights are irrelevant here.
    PathLattice lat;
    lat.spot = market.spot;
    lat.periods = market.n;
    double top = 0.0;
    for (const auto& curve : market.curves) {
        lat.levels.push_back(curve.strikes.points);
        lat.mass_counts.push_back(curve.strikes.size());
        lat.mass_weights.emplace_back(static_cast<size_t>(curve.strikes.size()),
                                      1.0 / curve.strikes.size());
        top = std::max(top, curve.strikes.back());
    }
    for (int k = 1; k <= proxy_spec.count; ++k)
        lat.proxy_levels.push_back(top * std::pow(proxy_spec.growth_factor, k));
    for (auto& lv : lat.levels) lv.insert(lv.end(), lat.proxy_levels.begin(), lat.proxy_levels.end());
    if (lat.path_count() > 200000)
        throw Error(ErrorCode::PathCountExceeded, "strike lattice exceeds the path cap");

    PredictionMask mask = build_mask(lat, mask_spec);
    auto menu = quoted_menu(market);
    Qlp q = build_qlp(market, lat, mask, nullptr, menu, DeltaSign::Nonnegative, options);

    LpSolution sol = solve_lp(q.lp, options.lp);
    if (sol.status != LpStatus::Infeasible) return std::nullopt;

    // The Farkas ray, negated, is a strategy with negative cost and
    // nonnegative payoff on every feasible path.
    Portfolio pf = portfolio_from_multipliers(q, lat, sol.farkas_ray, -1.0);
    double cost = portfolio_cost(pf);
    if (!(cost < 0.0))
        throw Error(ErrorCode::CertificateVerificationFailed,
                    "infeasibility ray does not yield a negative-cost strategy");
    double scale = 1.0 / std::abs(cost);
    pf.cash *= scale;
    for (auto& s : pf.statics) s.coefficient *= scale;
    for (auto& level : pf.deltas)
        for (auto& v : level) v *= scale;

    ArbitrageCertificate cert;
    cert.worst_payoff = std::numeric_limits<double>::infinity();
    for (size_t p = 0; p < q.paths.ranks.size(); ++p) {
        double psi = strategy_payoff(pf, lat, market.kind(), q.paths.idx[p], q.paths.values[p]);
        cert.worst_payoff = std::min(cert.worst_payoff, psi);
    }
    if (cert.worst_payoff < 0.0) {
        // Roundoff shim: a cash sliver restores pathwise dominance; anything
        // larger than a sliver is a genuine conversion failure.
        if (cert.worst_payoff < -1e-3)
            throw Error(ErrorCode::CertificateVerificationFailed,
                        "infeasibility ray does not dominate zero on the prediction set");
        pf.cash -= cert.worst_payoff;
        cert.worst_payoff = std::numeric_limits<double>::infinity();
        for (size_t p = 0; p < q.paths.ranks.size(); ++p) {
            double psi =
                strategy_payoff(pf, lat, market.kind(), q.paths.idx[p], q.paths.values[p]);
            cert.worst_payoff = std::min(cert.worst_payoff, psi);
        }
        if (cert.worst_payoff < -1e-9)
            throw Error(ErrorCode::CertificateVerificationFailed,
                        "pathwise dominance lost to roundoff beyond repair");
    }
    cert.cost = portfolio_cost(pf);
    if (cert.cost > -1e-6)
        throw Error(ErrorCode::CertificateVerificationFailed,
                    "strategy cost is not materially negative after verification");
    cert.cash = pf.cash;
    cert.statics = std::move(pf.statics);
    cert.deltas = std::move(pf.deltas);
    return cert;
}

DualityReportResult duality_report(const MarketInput& market, const PathLattice& lattice,
                                   const PredictionMask& mask, const Payoff& payoff,
                                   const ReportRequest& request, const PricingOptions& options) {
    DualityReportResult rep;
    rep.kind = market.kind();
    rep.primal = primal_price(lattice, mask, payoff, CouplingMode::Supermartingale, options);
    rep.dual = superhedge(market, lattice, mask, payoff, options);
    rep.primal_value = rep.primal.value;
    rep.dual_value = rep.dual.value;
    rep.gap = rep.dual_value - rep.primal_value;
    if (rep.gap < -1e-7 * (1.0 + std::abs(rep.primal_value)))
        throw Error(ErrorCode::NumericalBreakdown, "weak duality violated; solver bug");

    for (int i = 0; i < lattice.periods; ++i) {
        double m = 0.0;
        for (int j = 0; j < lattice.mass_counts[static_cast<size_t>(i)]; ++j)
            m += lattice.levels[static_cast<size_t>(i)][static_cast<size_t>(j)] *
                 lattice.mass_weights[static_cast<size_t>(i)][static_cast<size_t>(j)];
        rep.bubbles.push_back(lattice.spot - m);
    }

    if (request.route_beta) {
        BetaFunctions beta;
        bool have = false;
        if (request.prefer_analytic_beta) {
            try {
                beta = analytic_beta(payoff, lattice);
                have = true;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoAnalyticBeta) throw;
            }
        }
        if (!have && !lattice.proxy_levels.empty()) {
            beta = numeric_beta(payoff, lattice, mask);
            have = true;
        }
        if (have) {
            rep.beta_route_value = gap_via_beta(lattice, mask, payoff, beta, options);
            rep.gap_via_beta = *rep.beta_route_value - rep.primal_value;
        }
    }
    if (request.route_gamma)
        rep.gamma_points = gap_asymptotic(lattice, mask, payoff, request.gamma_schedule, options);
    return rep;
}

}  // namespace smot
