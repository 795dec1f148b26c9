#include "smot/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

namespace smot {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& message) {
    throw Error(ErrorCode::InvalidInput, "config field '" + field + "': " + message);
}

double need_number(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_number()) config_error(field, "expected a number");
    return j[field].get<double>();
}

double opt_number(const json& j, const std::string& field, double fallback) {
    if (!j.contains(field)) return fallback;
    if (!j[field].is_number()) config_error(field, "expected a number");
    return j[field].get<double>();
}

std::vector<double> need_array(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_array()) config_error(field, "expected an array");
    std::vector<double> out;
    for (const auto& v : j[field]) {
        if (!v.is_number()) config_error(field, "expected numeric entries");
        out.push_back(v.get<double>());
    }
    return out;
}

// Acklam's rational approximation of the standard normal quantile.
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (!(p > 0.0 && p < 1.0))
        throw Error(ErrorCode::InvalidInput, "quantile argument outside (0,1)");
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

/// Lognormal family discretized at equally likely cells, tails lumped into the
/// end levels, then an end-level mass transfer restores the configured mean.
Marginal lognormal_marginal(double mean, double log_variance, int grid_size,
                            double truncation_quantile) {
    if (mean <= 0.0) config_error("lognormal.mean", "must be positive");
    if (log_variance <= 0.0) config_error("lognormal.log_variance", "must be positive");
    if (grid_size < 2) config_error("lognormal.grid_size", "must be at least 2");
    if (!(truncation_quantile > 0.5 && truncation_quantile < 1.0))
        config_error("lognormal.truncation_quantile", "must lie in (0.5, 1)");

    double sigma = std::sqrt(log_variance);
    double mu_ln = std::log(mean) - 0.5 * log_variance;
    double lo = 1.0 - truncation_quantile;
    double hi = truncation_quantile;
    std::vector<double> levels(static_cast<size_t>(grid_size));
    std::vector<double> weights(static_cast<size_t>(grid_size), (hi - lo) / grid_size);
    for (int j = 0; j < grid_size; ++j) {
        double pj = lo + (j + 0.5) * (hi - lo) / grid_size;
        levels[static_cast<size_t>(j)] = std::exp(mu_ln + sigma * normal_quantile(pj));
    }
    weights.front() += lo;
    weights.back() += 1.0 - hi;

    double m_hat = 0.0;
    for (int j = 0; j < grid_size; ++j)
        m_hat += levels[static_cast<size_t>(j)] * weights[static_cast<size_t>(j)];
    double shift = (mean - m_hat) / (levels.back() - levels.front());
    weights.front() -= shift;
    weights.back() += shift;
    if (weights.front() < 0.0 || weights.back() < 0.0)
        config_error("lognormal", "mean correction would need negative mass; widen the grid");
    return Marginal(Grid(levels), weights);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct ParsedConfig {
    double spot = 0.0;
    int maturities = 0;
    CurveKind kind = CurveKind::Call;
    std::vector<Marginal> marginals;
    MarketInput market;
    PredicateSpec mask_spec;
    json payoff_spec;
    TailProxySpec proxies;
    std::int64_t path_cap = 200000;
    PricingOptions pricing;
    bool route_beta = false;
    bool route_gamma = false;
    std::vector<double> gamma_schedule = {1.0, 10.0, 100.0, 1000.0};
    std::uint64_t seed = 0;
    int workers = 1;
};

PredicateSpec parse_mask(const json& j) {
    if (!j.contains("prediction_set")) return PredicateSpec::all_paths();
    const json& m = j["prediction_set"];
    std::string kind = m.value("kind", "all_paths");
    if (kind == "all_paths") return PredicateSpec::all_paths();
    if (kind == "max_abs_increment") return PredicateSpec::max_abs_increment(need_number(m, "delta"));
    if (kind == "bounded_squared_variation")
        return PredicateSpec::bounded_squared_variation(need_number(m, "q"));
    if (kind == "max_drawdown") return PredicateSpec::max_drawdown(need_number(m, "d"));
    if (kind == "custom") {
        if (!m.contains("feasible_paths") || !m["feasible_paths"].is_array())
            config_error("prediction_set.feasible_paths", "expected an array of path ranks");
        std::vector<std::int64_t> ranks;
        for (const auto& v : m["feasible_paths"]) ranks.push_back(v.get<std::int64_t>());
        return PredicateSpec::custom(std::move(ranks));
    }
    config_error("prediction_set.kind", "unknown kind '" + kind + "'");
}

PayoffSpec parse_payoff_spec(const json& p, const PathLattice* lattice, std::uint64_t seed) {
    std::string kind = p.value("kind", "");
    if (kind == "asian") return PayoffSpec::asian(need_number(p, "strike"));
    if (kind == "lookback_knock_in")
        return PayoffSpec::lookback_knock_in(need_number(p, "strike"), need_number(p, "barrier"));
    if (kind == "forward") return PayoffSpec::forward();
    if (kind == "european_call") return PayoffSpec::european_call(need_number(p, "strike"));
    if (kind == "european_put") return PayoffSpec::european_put(need_number(p, "strike"));
    if (kind == "basket") {
        if (!p.contains("components") || !p["components"].is_array())
            config_error("payoff.components", "expected an array");
        std::vector<std::pair<double, PayoffSpec>> parts;
        for (const auto& comp : p["components"])
            parts.emplace_back(need_number(comp, "weight"),
                               parse_payoff_spec(comp.at("payoff"), lattice, seed));
        return PayoffSpec::basket(std::move(parts));
    }
    if (kind == "table") {
        auto values = need_array(p, "values");
        return PayoffSpec::table(values, need_number(p, "growth_bound"));
    }
    if (kind == "random_table") {
        if (lattice == nullptr) config_error("payoff", "random_table needs a lattice");
        std::uint64_t local_seed = static_cast<std::uint64_t>(opt_number(p, "seed", 1.0));
        double lo = 0.0, hi = 100.0;
        if (p.contains("clamp")) {
            auto clamp = need_array(p, "clamp");
            if (clamp.size() != 2) config_error("payoff.clamp", "expected [low, high]");
            lo = clamp[0];
            hi = clamp[1];
        }
        std::vector<double> values(static_cast<size_t>(lattice->path_count()));
        double bound = 0.0;
        std::vector<int> idx;
        std::vector<double> path;
        for (std::int64_t r = 0; r < lattice->path_count(); ++r) {
            std::uint64_t bits = splitmix64(splitmix64(seed ^ local_seed) ^
                                            static_cast<std::uint64_t>(r));
            double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
            double v = lo + u * (hi - lo);
            values[static_cast<size_t>(r)] = v;
            lattice->decode(r, idx);
            lattice->decode_values(idx, path);
            double sum = 0.0;
            for (int i = 1; i <= lattice->periods; ++i) sum += path[static_cast<size_t>(i)];
            bound = std::max(bound, v / (1.0 + sum));
        }
        return PayoffSpec::table(std::move(values), std::max(bound, 0.0));
    }
    config_error("payoff.kind", "unknown kind '" + kind + "'");
}

ParsedConfig parse_config(const json& cfg) {
    ParsedConfig out;
    out.spot = need_number(cfg, "spot");
    if (out.spot <= 0.0) config_error("spot", "must be positive");
    out.maturities = static_cast<int>(need_number(cfg, "maturities"));
    std::string kind = cfg.value("instrument_kind", "call");
    if (kind == "call") out.kind = CurveKind::Call;
    else if (kind == "put") out.kind = CurveKind::Put;
    else config_error("instrument_kind", "must be 'call' or 'put'");

    if (!cfg.contains("marginals") || !cfg["marginals"].is_array() ||
        static_cast<int>(cfg["marginals"].size()) != out.maturities)
        config_error("marginals", "expected one source per maturity");

    std::vector<PriceCurve> quoted(static_cast<size_t>(out.maturities));
    std::vector<bool> has_quote(static_cast<size_t>(out.maturities), false);
    int mat = 1;
    for (const auto& src : cfg["marginals"]) {
        int sources = static_cast<int>(src.contains("pmf")) +
                      static_cast<int>(src.contains("call_curve")) +
                      static_cast<int>(src.contains("put_curve")) +
                      static_cast<int>(src.contains("lognormal"));
        if (sources != 1)
            config_error("marginals[" + std::to_string(mat - 1) + "]",
                         "exactly one source required (pmf | call_curve | put_curve | lognormal)");
        if (src.contains("pmf")) {
            const json& pmf = src["pmf"];
            out.marginals.emplace_back(Grid(need_array(pmf, "levels")),
                                       need_array(pmf, "weights"));
        } else if (src.contains("call_curve") || src.contains("put_curve")) {
            bool is_call = src.contains("call_curve");
            if ((is_call && out.kind != CurveKind::Call) ||
                (!is_call && out.kind != CurveKind::Put))
                throw Error(ErrorCode::MixedKind, "curve source disagrees with instrument_kind");
            const json& c = src[is_call ? "call_curve" : "put_curve"];
            PriceCurve curve;
            curve.kind = out.kind;
            curve.maturity = mat;
            curve.strikes = Grid(need_array(c, "strikes"));
            curve.prices = need_array(c, "prices");
            curve.validate();
            quoted[static_cast<size_t>(mat - 1)] = curve;
            has_quote[static_cast<size_t>(mat - 1)] = true;
            out.marginals.push_back(is_call ? marginal_from_call_curve(curve, curve.strikes)
                                            : marginal_from_put_curve(curve, curve.strikes));
        } else {
            const json& ln = src["lognormal"];
            out.marginals.push_back(lognormal_marginal(
                need_number(ln, "mean"), need_number(ln, "log_variance"),
                static_cast<int>(opt_number(ln, "grid_size", 9.0)),
                opt_number(ln, "truncation_quantile", 0.995)));
        }
        ++mat;
    }

    out.market.spot = out.spot;
    out.market.n = out.maturities;
    for (int i = 0; i < out.maturities; ++i) {
        if (has_quote[static_cast<size_t>(i)]) {
            out.market.curves.push_back(quoted[static_cast<size_t>(i)]);
        } else {
            std::vector<double> ks = out.marginals[static_cast<size_t>(i)].grid.points;
            if (ks.front() > 0.0) ks.insert(ks.begin(), 0.0);
            Grid strikes(ks);
            out.market.curves.push_back(
                out.kind == CurveKind::Call
                    ? call_curve_from_marginal(out.marginals[static_cast<size_t>(i)], strikes,
                                               i + 1)
                    : put_curve_from_marginal(out.marginals[static_cast<size_t>(i)], strikes,
                                              i + 1));
        }
    }
    out.market.validate();

    out.mask_spec = parse_mask(cfg);
    if (!cfg.contains("payoff")) config_error("payoff", "required");
    out.payoff_spec = cfg["payoff"];

    if (cfg.contains("proxies")) {
        out.proxies.count = static_cast<int>(opt_number(cfg["proxies"], "count", 3.0));
        out.proxies.growth_factor = opt_number(cfg["proxies"], "growth_factor", 10.0);
    }
    out.path_cap = static_cast<std::int64_t>(opt_number(cfg, "path_cap", 200000.0));
    if (cfg.contains("solver")) {
        const json& s = cfg["solver"];
        out.pricing.lp.pivot_tol = opt_number(s, "pivot_tol", out.pricing.lp.pivot_tol);
        out.pricing.lp.feas_tol = opt_number(s, "feas_tol", out.pricing.lp.feas_tol);
        out.pricing.lp.dual_tol = opt_number(s, "dual_tol", out.pricing.lp.dual_tol);
        out.pricing.lp.max_iterations =
            static_cast<int>(opt_number(s, "max_iterations", 0.0));
    }
    if (cfg.contains("routes")) {
        for (const auto& r : cfg["routes"]) {
            std::string name = r.get<std::string>();
            if (name == "direct") continue;
            if (name == "beta") out.route_beta = true;
            else if (name == "gammaN") out.route_gamma = true;
            else config_error("routes", "unknown route '" + name + "'");
        }
    }
    if (cfg.contains("gamma_schedule")) out.gamma_schedule = need_array(cfg, "gamma_schedule");
    out.seed = static_cast<std::uint64_t>(opt_number(cfg, "seed", 0.0));
    out.workers = static_cast<int>(opt_number(cfg, "workers", 1.0));
    return out;
}

ordered_json condition_json(const ConditionReport& rep) {
    static const char* names[] = {"shape", "chain", "decay", "maturity_monotonicity"};
    ordered_json out;
    out["pass"] = rep.pass();
    ordered_json clauses = ordered_json::array();
    for (size_t i = 0; i < rep.clauses.size(); ++i) {
        const auto& c = rep.clauses[i];
        ordered_json cj;
        cj["name"] = names[i];
        cj["pass"] = c.pass;
        if (!c.pass) {
            cj["maturity"] = c.maturity;
            if (c.maturity_next > 0) cj["maturity_next"] = c.maturity_next;
            cj["strike"] = c.strike;
            cj["magnitude"] = c.magnitude;
        }
        clauses.push_back(cj);
    }
    out["clauses"] = clauses;
    return out;
}

ordered_json order_json(const OrderReport& rep) {
    ordered_json out;
    out["ok"] = rep.ok;
    out["means_ok"] = rep.means_ok;
    out["means"] = rep.means;
    ordered_json v = ordered_json::array();
    for (const auto& viol : rep.violations) {
        v.push_back({{"transition", viol.transition}, {"k", viol.k},
                     {"magnitude", viol.magnitude}});
    }
    out["violations"] = v;
    return out;
}

ordered_json portfolio_json(const DualResult& dual, const PathLattice& lattice) {
    ordered_json out;
    out["cash"] = dual.cash;
    ordered_json statics = ordered_json::array();
    for (const auto& s : dual.statics) {
        if (std::abs(s.coefficient) < 1e-12) continue;
        statics.push_back({{"maturity", s.maturity},
                           {"strike", s.strike},
                           {"coefficient", s.coefficient},
                           {"quoted_price", s.quoted_price}});
    }
    out["statics"] = statics;
    ordered_json deltas = ordered_json::array();
    std::vector<int> idx;
    for (int j = 0; j < lattice.periods; ++j) {
        for (std::int64_t h = 0; h < lattice.history_count(j); ++h) {
            double v = dual.deltas[static_cast<size_t>(j)][static_cast<size_t>(h)];
            if (std::abs(v) < 1e-12) continue;
            // Decode the history levels for readability.
            std::vector<double> hist;
            std::int64_t rest = h;
            idx.assign(static_cast<size_t>(j), 0);
            for (int k = j - 1; k >= 0; --k) {
                int width = lattice.level_count(k);
                idx[static_cast<size_t>(k)] = static_cast<int>(rest % width);
                rest /= width;
            }
            for (int k = 0; k < j; ++k)
                hist.push_back(lattice.levels[k][static_cast<size_t>(idx[k])]);
            deltas.push_back({{"period", j}, {"history", hist}, {"delta", v}});
        }
    }
    out["deltas"] = deltas;
    return out;
}

ordered_json certificate_json(const ArbitrageCertificate& cert) {
    ordered_json out;
    out["cost"] = cert.cost;
    out["worst_payoff"] = cert.worst_payoff;
    out["cash"] = cert.cash;
    ordered_json statics = ordered_json::array();
    for (const auto& s : cert.statics) {
        if (std::abs(s.coefficient) < 1e-12) continue;
        statics.push_back({{"maturity", s.maturity},
                           {"strike", s.strike},
                           {"coefficient", s.coefficient},
                           {"quoted_price", s.quoted_price}});
    }
    out["statics"] = statics;
    ordered_json deltas = ordered_json::array();
    for (size_t j = 0; j < cert.deltas.size(); ++j)
        for (size_t h = 0; h < cert.deltas[j].size(); ++h)
            if (std::abs(cert.deltas[j][h]) > 1e-12)
                deltas.push_back({{"period", j}, {"history_rank", h},
                                  {"delta", cert.deltas[j][h]}});
    out["deltas"] = deltas;
    return out;
}

ordered_json diagnostics_json(const SolveDiagnostics& d) {
    return {{"iterations", d.iterations},
            {"max_eq_residual", d.max_eq_residual},
            {"max_ub_violation", d.max_ub_violation},
            {"max_bound_violation", d.max_bound_violation},
            {"duality_mismatch", d.duality_mismatch}};
}

}  // namespace

RunOutcome run_config(const json& config) {
    RunOutcome out;
    auto t0 = std::chrono::steady_clock::now();
    ordered_json& rep = out.report;
    rep["config_hash"] = "fnv1a64:" + [&] {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a_hash(config.dump())));
        return std::string(buf);
    }();

    try {
        ParsedConfig cfg = parse_config(config);
        rep["spot"] = cfg.spot;
        rep["maturities"] = cfg.maturities;
        rep["instrument_kind"] = cfg.kind == CurveKind::Call ? "call" : "put";

        ordered_json marginals = ordered_json::array();
        for (const auto& m : cfg.marginals)
            marginals.push_back({{"levels", m.grid.points},
                                 {"weights", m.weights},
                                 {"mean", m.mean()}});
        rep["marginals"] = marginals;

        ConditionReport cond = cfg.kind == CurveKind::Call
                                   ? check_call_conditions(cfg.market)
                                   : check_put_conditions(cfg.market);
        rep["conditions"] = condition_json(cond);
        OrderReport order = check_supermartingale_order(cfg.marginals, cfg.spot);
        rep["order"] = order_json(order);
        double forward = cfg.marginals.back().mean();
        rep["forward_price"] = forward;
        ordered_json bubbles = ordered_json::array();
        for (const auto& m : cfg.marginals) bubbles.push_back(cfg.spot - m.mean());
        rep["bubbles"] = bubbles;

        auto try_certificate = [&]() -> bool {
            PredicateSpec cert_mask = cfg.mask_spec.kind == PredicateSpec::Kind::CustomTable
                                          ? PredicateSpec::all_paths()
                                          : cfg.mask_spec;
            auto cert =
                arbitrage_certificate(cfg.market, cert_mask, cfg.proxies, cfg.pricing);
            if (!cert.has_value()) return false;
            rep["certificate"] = certificate_json(*cert);
            out.exit_code = 2;
            return true;
        };

        if (!cond.pass() || !order.ok) {
            if (try_certificate()) return out;
            rep["error"] = "market conditions fail but no certificate was found";
            out.exit_code = 3;
            return out;
        }

        PathLattice lattice = build_lattice(cfg.spot, cfg.marginals, cfg.proxies, cfg.path_cap);
        rep["lattice"] = {{"path_count", lattice.path_count()},
                          {"proxy_levels", lattice.proxy_levels},
                          {"mass_counts", lattice.mass_counts}};
        PredictionMask mask = build_mask(lattice, cfg.mask_spec);
        rep["prediction_set"] = {{"description", mask.description},
                                 {"feasible_paths", mask.feasible_count}};

        Payoff payoff = make_payoff(
            parse_payoff_spec(cfg.payoff_spec, &lattice, cfg.seed), &lattice);
        rep["payoff"] = {{"name", payoff.name}, {"growth_bound", payoff.growth_bound}};

        ReportRequest req;
        req.route_beta = cfg.route_beta;
        req.route_gamma = cfg.route_gamma;
        req.gamma_schedule = cfg.gamma_schedule;

        DualityReportResult result;
        try {
            result = duality_report(cfg.market, lattice, mask, payoff, req, cfg.pricing);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InfeasibleModel || e.code() == ErrorCode::InfeasibleInput) {
                if (try_certificate()) return out;
                rep["error"] = e.what();
                out.exit_code = 3;
                return out;
            }
            throw;
        }

        ordered_json pricing;
        pricing["primal_value"] = result.primal_value;
        pricing["dual_value"] = result.dual_value;
        pricing["gap"] = result.gap;
        if (result.beta_route_value.has_value()) {
            pricing["beta_route_value"] = *result.beta_route_value;
            pricing["gap_via_beta"] = *result.gap_via_beta;
        }
        if (!result.gamma_points.empty()) {
            ordered_json gamma = ordered_json::array();
            for (const auto& pt : result.gamma_points)
                gamma.push_back({{"penalty", pt.penalty},
                                 {"dual_value", pt.dual_value},
                                 {"primal_value", pt.primal_value},
                                 {"gamma", pt.gamma}});
            pricing["gamma"] = gamma;
        }
        rep["pricing"] = pricing;
        rep["portfolio"] = portfolio_json(result.dual, lattice);

        ordered_json coupling = ordered_json::array();
        std::vector<int> idx;
        std::vector<double> values;
        for (const auto& [rank, prob] : result.primal.coupling) {
            if (prob < 1e-12) continue;
            lattice.decode(rank, idx);
            lattice.decode_values(idx, values);
            coupling.push_back({{"path", std::vector<double>(values.begin() + 1, values.end())},
                                {"probability", prob}});
        }
        rep["coupling"] = coupling;
        rep["diagnostics"] = {{"primal", diagnostics_json(result.primal.diagnostics)},
                              {"dual", diagnostics_json(result.dual.diagnostics)},
                              {"dual_min_slack", result.dual.min_slack}};
        out.exit_code = 0;
    } catch (const Error& e) {
        rep["error"] = e.what();
        switch (e.code()) {
            case ErrorCode::IterationLimitExceeded:
            case ErrorCode::NumericalBreakdown:
            case ErrorCode::CertificateVerificationFailed:
                out.exit_code = 4;
                break;
            default:
                out.exit_code = 3;
                break;
        }
    }
    auto t1 = std::chrono::steady_clock::now();
    rep["timings_ms"] = {
        {"total", std::chrono::duration<double, std::milli>(t1 - t0).count()}};
    rep["exit_code"] = out.exit_code;
    return out;
}

RunOutcome run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        RunOutcome out;
        out.exit_code = 3;
        out.report["error"] = "cannot open config file: " + path;
        return out;
    }
    json config;
    try {
        config = json::parse(in);
    } catch (const json::parse_error& e) {
        RunOutcome out;
        out.exit_code = 3;
        out.report["error"] = std::string("config parse error: ") + e.what();
        return out;
    }
    return run_config(config);
}

std::string SweepOutcome::csv() const {
    std::ostringstream os;
    os << "axis,P,V,gap,status\n";
    for (const auto& row : rows)
        os << format_double(row.axis) << ',' << format_double(row.primal) << ','
           << format_double(row.dual) << ',' << format_double(row.gap) << ',' << row.status
           << '\n';
    os << "# gap_monotone_nondecreasing=" << (gap_monotone_nondecreasing ? "true" : "false")
       << '\n';
    return os.str();
}

SweepOutcome sweep_config(const json& config, const std::string& axis,
                          const std::vector<double>& values, int workers) {
    SweepOutcome out;
    out.axis = axis;
    if (axis != "proxy_factor" && axis != "grid_size" && axis != "N")
        throw Error(ErrorCode::InvalidInput,
                    "sweep axis must be proxy_factor, grid_size, or N");

    auto run_point = [&](double v) -> SweepRow {
        SweepRow row;
        row.axis = v;
        json point = config;
        if (axis == "proxy_factor") {
            point["proxies"] = {{"count", 1}, {"growth_factor", v}};
        } else if (axis == "grid_size") {
            bool any = false;
            for (auto& src : point["marginals"]) {
                if (src.contains("lognormal")) {
                    src["lognormal"]["grid_size"] = static_cast<int>(v);
                    any = true;
                }
            }
            if (!any)
                throw Error(ErrorCode::InvalidInput,
                            "grid_size sweeps need a parametric marginal source");
        } else {
            point["routes"] = {"direct", "gammaN"};
            point["gamma_schedule"] = {v};
        }
        RunOutcome res = run_config(point);
        if (res.exit_code == 0) {
            row.status = "optimal";
            if (axis == "N") {
                const auto& gamma = res.report["pricing"]["gamma"][0];
                row.primal = gamma["primal_value"].get<double>();
                row.dual = gamma["dual_value"].get<double>();
                row.gap = gamma["gamma"].get<double>();
            } else {
                row.primal = res.report["pricing"]["primal_value"].get<double>();
                row.dual = res.report["pricing"]["dual_value"].get<double>();
                row.gap = res.report["pricing"]["gap"].get<double>();
            }
        } else {
            row.status = res.report.contains("error")
                             ? std::string("error_exit_") + std::to_string(res.exit_code)
                             : "error";
        }
        return row;
    };

    workers = std::max(1, workers);
    out.rows.resize(values.size());
    for (size_t begin = 0; begin < values.size(); begin += static_cast<size_t>(workers)) {
        size_t end = std::min(values.size(), begin + static_cast<size_t>(workers));
        std::vector<std::future<SweepRow>> batch;
        for (size_t i = begin; i < end; ++i)
            batch.push_back(std::async(std::launch::async, run_point, values[i]));
        for (size_t i = begin; i < end; ++i) out.rows[i] = batch[i - begin].get();
    }

    for (size_t i = 1; i < out.rows.size(); ++i) {
        if (std::isnan(out.rows[i].gap) || std::isnan(out.rows[i - 1].gap)) continue;
        if (out.rows[i].gap < out.rows[i - 1].gap - 1e-9) out.gap_monotone_nondecreasing = false;
    }
    for (const auto& row : out.rows)
        if (row.status != "optimal") out.exit_code = std::max(out.exit_code, 3);
    return out;
}

}  // namespace smot
