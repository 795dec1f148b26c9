#include "smot/marginals.hpp"

#include <algorithm>
#include <numeric>

namespace smot {

namespace {

constexpr double kWeightSumTol = 1e-12;

std::vector<double> union_strikes(const MarketInput& input) {
    std::vector<double> all;
    for (const auto& c : input.curves)
        all.insert(all.end(), c.strikes.points.begin(), c.strikes.points.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

}  // namespace

Grid::Grid(std::vector<double> pts) : points(std::move(pts)) {
    if (points.empty()) throw Error(ErrorCode::InvalidInput, "grid must have at least one point");
    if (points.front() < 0.0)
        throw Error(ErrorCode::InvalidInput, "grid points must be nonnegative");
    for (size_t i = 0; i + 1 < points.size(); ++i)
        if (!(points[i] < points[i + 1]))
            throw Error(ErrorCode::InvalidInput, "grid points must be strictly increasing");
    for (double p : points)
        if (!std::isfinite(p)) throw Error(ErrorCode::InvalidInput, "grid points must be finite");
}

int Grid::find(double x) const {
    auto it = std::lower_bound(points.begin(), points.end(), x - 1e-12);
    if (it == points.end()) return -1;
    double scale = std::max(1.0, std::abs(x));
    if (std::abs(*it - x) > 1e-12 * scale) return -1;
    return static_cast<int>(it - points.begin());
}

Marginal::Marginal(Grid g, std::vector<double> w) : grid(std::move(g)), weights(std::move(w)) {
    if (weights.size() != grid.points.size())
        throw Error(ErrorCode::InvalidInput, "weight count must match grid size");
    double sum = 0.0;
    for (double v : weights) {
        if (!(v >= 0.0)) throw Error(ErrorCode::NegativeMass, "marginal weight below zero");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kWeightSumTol)
        throw Error(ErrorCode::InvalidInput,
                    "marginal weights sum to " + std::to_string(sum) + ", expected 1");
}

double Marginal::mean() const {
    double s = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) s += grid.points[i] * weights[i];
    return s;
}

double Marginal::expected_min(double k) const {
    double s = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) s += std::min(grid.points[i], k) * weights[i];
    return s;
}

double mean(const Marginal& m) { return m.mean(); }

void PriceCurve::validate() const {
    if (prices.size() != strikes.points.size())
        throw Error(ErrorCode::InvalidInput, "price count must match strike count");
    for (double p : prices)
        if (!std::isfinite(p)) throw Error(ErrorCode::InvalidInput, "curve prices must be finite");
}

double PriceCurve::value_at(double x) const {
    const auto& ks = strikes.points;
    if (x <= ks.front()) return prices.front();
    if (x >= ks.back()) return prices.back();
    auto it = std::upper_bound(ks.begin(), ks.end(), x);
    int hi = static_cast<int>(it - ks.begin());
    int lo = hi - 1;
    double t = (x - ks[lo]) / (ks[hi] - ks[lo]);
    return prices[lo] + t * (prices[hi] - prices[lo]);
}

double PriceCurve::segment_slope(int j) const {
    return (prices[j + 1] - prices[j]) / (strikes.points[j + 1] - strikes.points[j]);
}

CurveKind MarketInput::kind() const {
    if (curves.empty()) throw Error(ErrorCode::InvalidInput, "market has no curves");
    return curves.front().kind;
}

void MarketInput::validate() const {
    if (spot <= 0.0) throw Error(ErrorCode::InvalidInput, "spot must be positive");
    if (n != static_cast<int>(curves.size()))
        throw Error(ErrorCode::InvalidInput, "curve count must equal number of maturities");
    std::vector<bool> seen(static_cast<size_t>(n), false);
    for (const auto& c : curves) {
        c.validate();
        if (c.maturity < 1 || c.maturity > n)
            throw Error(ErrorCode::InvalidInput, "curve maturity index out of range");
        if (seen[static_cast<size_t>(c.maturity - 1)])
            throw Error(ErrorCode::InvalidInput, "duplicate curve maturity");
        seen[static_cast<size_t>(c.maturity - 1)] = true;
    }
    for (size_t i = 1; i < curves.size(); ++i)
        if (curves[i].maturity != curves[i - 1].maturity + 1)
            throw Error(ErrorCode::InvalidInput, "curves must be sorted by maturity");
}

namespace {

void require_kind(const MarketInput& input, CurveKind kind) {
    for (const auto& c : input.curves)
        if (c.kind != kind) throw Error(ErrorCode::MixedKind, "curve kind mismatch in market");
}

}  // namespace

ConditionReport check_call_conditions(const MarketInput& input, ConditionTolerances tols) {
    input.validate();
    require_kind(input, CurveKind::Call);
    ConditionReport rep;
    auto& [shape, chain, decay, mono] = rep.clauses;

    // (i) nonnegative, convex, decreasing in strike.
    for (const auto& c : input.curves) {
        const int m = c.strikes.size();
        for (int j = 0; j < m && shape.pass; ++j) {
            if (c.prices[j] < -tols.tol)
                shape = {false, c.maturity, 0, c.strikes.points[j], -c.prices[j]};
        }
        for (int j = 0; j + 1 < m && shape.pass; ++j) {
            double d1 = c.prices[j + 1] - c.prices[j];
            if (d1 > tols.tol) shape = {false, c.maturity, 0, c.strikes.points[j + 1], d1};
        }
        for (int j = 0; j + 2 < m && shape.pass; ++j) {
            double jump = c.segment_slope(j + 1) - c.segment_slope(j);
            if (jump < -tols.tol)
                shape = {false, c.maturity, 0, c.strikes.points[j + 1], -jump};
        }
        if (!shape.pass) break;
    }

    // (ii) spot >= c_1(0) >= ... >= c_n(0) >= 0 and right slope at zero >= -1.
    double prev = input.spot;
    int prev_mat = 0;
    for (const auto& c : input.curves) {
        if (c.strikes.find(0.0) != 0)
            throw Error(ErrorCode::InvalidInput, "call curves must quote strike 0");
        double c0 = c.prices.front();
        if (c0 > prev + tols.tol && chain.pass)
            chain = {false, prev_mat, c.maturity, 0.0, c0 - prev};
        prev = c0;
        prev_mat = c.maturity;
        if (c0 < -tols.tol && chain.pass) chain = {false, c.maturity, 0, 0.0, -c0};
        if (c.strikes.size() >= 2 && chain.pass) {
            double s0 = c.segment_slope(0);
            if (s0 < -1.0 - tols.tol) chain = {false, c.maturity, 0, 0.0, -1.0 - s0};
        }
    }

    // (iii) decay at the largest quoted strike.
    for (const auto& c : input.curves) {
        double tail = c.prices.back();
        if (tail > tols.decay_tol && decay.pass)
            decay = {false, c.maturity, 0, c.strikes.back(), tail};
    }

    // (iv) c_i(0) - c_i(x) nonincreasing in maturity, on the union strike grid.
    auto all = union_strikes(input);
    for (size_t i = 0; i + 1 < input.curves.size() && mono.pass; ++i) {
        const auto& a = input.curves[i];
        const auto& b = input.curves[i + 1];
        double a0 = a.prices.front();
        double b0 = b.prices.front();
        for (double x : all) {
            double da = a0 - a.value_at(x);
            double db = b0 - b.value_at(x);
            if (db > da + tols.tol) {
                mono = {false, a.maturity, b.maturity, x, db - da};
                break;
            }
        }
    }
    return rep;
}

ConditionReport check_put_conditions(const MarketInput& input, ConditionTolerances tols) {
    input.validate();
    require_kind(input, CurveKind::Put);
    ConditionReport rep;
    auto& [shape, chain, decay, mono] = rep.clauses;

    // (i) nonnegative, convex, increasing in strike.
    for (const auto& c : input.curves) {
        const int m = c.strikes.size();
        for (int j = 0; j < m && shape.pass; ++j) {
            if (c.prices[j] < -tols.tol)
                shape = {false, c.maturity, 0, c.strikes.points[j], -c.prices[j]};
        }
        for (int j = 0; j + 1 < m && shape.pass; ++j) {
            double d1 = c.prices[j + 1] - c.prices[j];
            if (d1 < -tols.tol) shape = {false, c.maturity, 0, c.strikes.points[j + 1], -d1};
        }
        for (int j = 0; j + 2 < m && shape.pass; ++j) {
            double jump = c.segment_slope(j + 1) - c.segment_slope(j);
            if (jump < -tols.tol)
                shape = {false, c.maturity, 0, c.strikes.points[j + 1], -jump};
        }
        if (!shape.pass) break;
    }

    // (ii) spot >= lim(x - p_1(x)) >= ... >= 0, the limit proxied by the top
    // quote, and 0 <= p'(0+) <= 1.
    double prev = input.spot;
    int prev_mat = 0;
    for (const auto& c : input.curves) {
        if (c.strikes.find(0.0) != 0)
            throw Error(ErrorCode::InvalidInput, "put curves must quote strike 0");
        if (c.strikes.size() >= 2 && chain.pass) {
            double s0 = c.segment_slope(0);
            if (s0 < -tols.tol) chain = {false, c.maturity, 0, 0.0, -s0};
            else if (s0 > 1.0 + tols.tol) chain = {false, c.maturity, 0, 0.0, s0 - 1.0};
        }
        double implied = c.strikes.back() - c.prices.back();
        if (implied > prev + tols.tol && chain.pass)
            chain = {false, prev_mat, c.maturity, c.strikes.back(), implied - prev};
        if (implied < -tols.tol && chain.pass)
            chain = {false, c.maturity, 0, c.strikes.back(), -implied};
        prev = implied;
        prev_mat = c.maturity;
    }

    // (iii) p_i(0) = 0.
    for (const auto& c : input.curves) {
        double low = c.prices.front();
        if (low > tols.decay_tol && decay.pass)
            decay = {false, c.maturity, 0, c.strikes.front(), low};
    }

    // (iv) p_i(x) nondecreasing in maturity on the union strike grid.
    auto all = union_strikes(input);
    for (size_t i = 0; i + 1 < input.curves.size() && mono.pass; ++i) {
        const auto& a = input.curves[i];
        const auto& b = input.curves[i + 1];
        for (double x : all) {
            double pa = a.value_at(x);
            double pb = b.value_at(x);
            if (pb < pa - tols.tol) {
                mono = {false, a.maturity, b.maturity, x, pa - pb};
                break;
            }
        }
    }
    return rep;
}

namespace {

Marginal masses_to_marginal(const Grid& grid, const PriceCurve& curve,
                            const std::vector<double>& masses) {
    std::vector<double> w(static_cast<size_t>(grid.size()), 0.0);
    double sum = 0.0;
    for (int j = 0; j < curve.strikes.size(); ++j) {
        double mass = std::max(masses[static_cast<size_t>(j)], 0.0);
        int at = grid.find(curve.strikes.points[static_cast<size_t>(j)]);
        if (at < 0)
            throw Error(ErrorCode::InvalidInput, "extraction grid must contain every strike");
        w[static_cast<size_t>(at)] += mass;
        sum += mass;
    }
    // Clamp tiny negative-mass roundoff so the weights sum to one exactly.
    if (sum > 0.0)
        for (auto& v : w) v /= sum;
    return Marginal(grid, std::move(w));
}

}  // namespace

Marginal marginal_from_call_curve(const PriceCurve& curve, const Grid& grid) {
    curve.validate();
    if (curve.kind != CurveKind::Call) throw Error(ErrorCode::MixedKind, "expected a call curve");
    const int m = curve.strikes.size();
    std::vector<double> masses(static_cast<size_t>(m), 0.0);
    if (m == 1) {
        masses[0] = 1.0;
    } else {
        // Slope runs from -1 below the first quote (unit forward delta) to 0 above the last.
        const double tol = 1e-9;
        double prev_slope = -1.0;
        for (int j = 0; j < m; ++j) {
            double next_slope = (j + 1 < m) ? curve.segment_slope(j) : 0.0;
            double jump = next_slope - prev_slope;
            if (jump < -tol)
                throw Error(ErrorCode::NegativeMass,
                            "call curve convexity violated at strike " +
                                std::to_string(curve.strikes.points[static_cast<size_t>(j)]));
            masses[static_cast<size_t>(j)] = jump;
            prev_slope = next_slope;
        }
    }
    return masses_to_marginal(grid, curve, masses);
}

Marginal marginal_from_put_curve(const PriceCurve& curve, const Grid& grid) {
    curve.validate();
    if (curve.kind != CurveKind::Put) throw Error(ErrorCode::MixedKind, "expected a put curve");
    const int m = curve.strikes.size();
    std::vector<double> masses(static_cast<size_t>(m), 0.0);
    if (m == 1) {
        masses[0] = 1.0;
    } else {
        // Slope runs from 0 below the first quote to +1 above the last.
        const double tol = 1e-9;
        double prev_slope = 0.0;
        for (int j = 0; j < m; ++j) {
            double next_slope = (j + 1 < m) ? curve.segment_slope(j) : 1.0;
            double jump = next_slope - prev_slope;
            if (jump < -tol)
                throw Error(ErrorCode::NegativeMass,
                            "put curve convexity violated at strike " +
                                std::to_string(curve.strikes.points[static_cast<size_t>(j)]));
            masses[static_cast<size_t>(j)] = jump;
            prev_slope = next_slope;
        }
    }
    return masses_to_marginal(grid, curve, masses);
}

PriceCurve call_curve_from_marginal(const Marginal& m, const Grid& strikes, int maturity) {
    PriceCurve c;
    c.kind = CurveKind::Call;
    c.maturity = maturity;
    c.strikes = strikes;
    c.prices.resize(static_cast<size_t>(strikes.size()));
    for (int j = 0; j < strikes.size(); ++j) {
        double k = strikes.points[static_cast<size_t>(j)];
        double price = 0.0;
        for (size_t i = 0; i < m.weights.size(); ++i)
            price += std::max(m.grid.points[i] - k, 0.0) * m.weights[i];
        c.prices[static_cast<size_t>(j)] = price;
    }
    return c;
}

PriceCurve put_curve_from_marginal(const Marginal& m, const Grid& strikes, int maturity) {
    PriceCurve c;
    c.kind = CurveKind::Put;
    c.maturity = maturity;
    c.strikes = strikes;
    c.prices.resize(static_cast<size_t>(strikes.size()));
    for (int j = 0; j < strikes.size(); ++j) {
        double k = strikes.points[static_cast<size_t>(j)];
        double price = 0.0;
        for (size_t i = 0; i < m.weights.size(); ++i)
            price += std::max(k - m.grid.points[i], 0.0) * m.weights[i];
        c.prices[static_cast<size_t>(j)] = price;
    }
    return c;
}

OrderReport check_supermartingale_order(const std::vector<Marginal>& marginals, double spot,
                                        double tol) {
    OrderReport rep;
    rep.means_ok = true;
    double prev = spot;
    for (size_t i = 0; i < marginals.size(); ++i) {
        double m = marginals[i].mean();
        rep.means.push_back(m);
        if (m > prev + tol && rep.means_ok) rep.means_ok = false;
        prev = m;
    }
    std::vector<double> ks;
    for (const auto& m : marginals)
        ks.insert(ks.end(), m.grid.points.begin(), m.grid.points.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    for (size_t i = 0; i + 1 < marginals.size(); ++i) {
        for (double k : ks) {
            double lo = marginals[i].expected_min(k);
            double hi = marginals[i + 1].expected_min(k);
            if (hi > lo + tol)
                rep.violations.push_back({static_cast<int>(i + 1), k, hi - lo});
        }
    }
    rep.ok = rep.means_ok && rep.violations.empty();
    return rep;
}

MarketInput market_from_marginals(double spot, const std::vector<Marginal>& marginals,
                                  CurveKind kind) {
    MarketInput market;
    market.spot = spot;
    market.n = static_cast<int>(marginals.size());
    for (size_t i = 0; i < marginals.size(); ++i) {
        std::vector<double> ks = marginals[i].grid.points;
        if (ks.front() > 0.0) ks.insert(ks.begin(), 0.0);
        Grid strikes(ks);
        PriceCurve c = kind == CurveKind::Call
                           ? call_curve_from_marginal(marginals[i], strikes,
                                                      static_cast<int>(i + 1))
                           : put_curve_from_marginal(marginals[i], strikes,
                                                     static_cast<int>(i + 1));
        market.curves.push_back(std::move(c));
    }
    market.validate();
    return market;
}

std::vector<Marginal> extract_marginals(const MarketInput& market) {
    market.validate();
    std::vector<Marginal> out;
    for (const auto& c : market.curves) {
        out.push_back(c.kind == CurveKind::Call ? marginal_from_call_curve(c, c.strikes)
                                                : marginal_from_put_curve(c, c.strikes));
    }
    return out;
}

}  // namespace smot
