#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "smot/errors.hpp"

namespace smot {

/// Strictly increasing list of nonnegative price levels.
struct Grid {
    std::vector<double> points;

    Grid() = default;
    explicit Grid(std::vector<double> pts);

    int size() const { return static_cast<int>(points.size()); }
    double front() const { return points.front(); }
    double back() const { return points.back(); }
    /// Index of a point matching x exactly (tiny tolerance), -1 if absent.
    int find(double x) const;
};

/// Probability mass function on a grid.
struct Marginal {
    Grid grid;
    std::vector<double> weights;

    Marginal() = default;
    Marginal(Grid g, std::vector<double> w);

    double mean() const;
    /// E[min(X, k)], the extremal concave nondecreasing test function.
    double expected_min(double k) const;
};

double mean(const Marginal& m);

enum class CurveKind { Call, Put };

/// Quoted option prices for one maturity, interpreted piecewise-linearly in strike.
struct PriceCurve {
    CurveKind kind = CurveKind::Call;
    int maturity = 1;  // 1-based index
    Grid strikes;
    std::vector<double> prices;

    void validate() const;
    /// Piecewise-linear value, flat beyond the last quoted strike.
    double value_at(double x) const;
    /// Right slope on segment j (between strikes j and j+1).
    double segment_slope(int j) const;
};

struct MarketInput {
    double spot = 0.0;
    int n = 0;
    std::vector<PriceCurve> curves;  // one per maturity, sorted by maturity index

    CurveKind kind() const;
    void validate() const;
};

struct ClauseReport {
    bool pass = true;
    int maturity = 0;        // first offending maturity (1-based), 0 if none
    int maturity_next = 0;   // second maturity for cross-maturity clauses
    double strike = std::nan("");
    double magnitude = 0.0;
};

/// Clause-by-clause verdicts for the call or put market conditions.
struct ConditionReport {
    std::array<ClauseReport, 4> clauses;
    bool pass() const {
        for (const auto& c : clauses)
            if (!c.pass) return false;
        return true;
    }
};

struct OrderViolation {
    int transition = 0;  // i for the step mu_i -> mu_{i+1}; 0 for spot -> mu_1
    double k = std::nan("");
    double magnitude = 0.0;
};

struct OrderReport {
    bool ok = false;
    bool means_ok = false;
    std::vector<double> means;
    std::vector<OrderViolation> violations;
};

struct ConditionTolerances {
    double tol = 1e-9;
    double decay_tol = 1e-6;
};

ConditionReport check_call_conditions(const MarketInput& input, ConditionTolerances tols = {});
ConditionReport check_put_conditions(const MarketInput& input, ConditionTolerances tols = {});

/// Slope-jump masses of the piecewise-linear extension of a call curve.
Marginal marginal_from_call_curve(const PriceCurve& curve, const Grid& grid);
Marginal marginal_from_put_curve(const PriceCurve& curve, const Grid& grid);

PriceCurve call_curve_from_marginal(const Marginal& m, const Grid& strikes, int maturity = 1);
PriceCurve put_curve_from_marginal(const Marginal& m, const Grid& strikes, int maturity = 1);

/// Decreasing convex order: means nonincreasing from the spot down, and
/// E[min(X, k)] nonincreasing across maturities at every grid point k.
OrderReport check_supermartingale_order(const std::vector<Marginal>& marginals, double spot,
                                        double tol = 1e-9);

/// Quotes every marginal's support (plus strike 0) at exact model prices.
MarketInput market_from_marginals(double spot, const std::vector<Marginal>& marginals,
                                  CurveKind kind);

/// One marginal per maturity, each on its own curve's strike grid.
std::vector<Marginal> extract_marginals(const MarketInput& market);

}  // namespace smot
