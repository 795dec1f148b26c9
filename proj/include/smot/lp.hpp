#pragma once

#include <Eigen/Dense>
#include <vector>

#include "smot/errors.hpp"

namespace smot {

enum class Sense { Min, Max };

enum class LpStatus { Optimal, Infeasible, Unbounded };

/// Dense linear program in block form:
///
///     optimize   c' x
///     subject to a_eq x  = b_eq
///                a_ub x <= b_ub
///                x_j >= 0 where nonneg[j], x_j free otherwise.
struct LpProblem {
    Sense sense = Sense::Min;
    Eigen::VectorXd c;
    Eigen::MatrixXd a_eq;  // may have zero rows
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd a_ub;  // may have zero rows
    Eigen::VectorXd b_ub;
    std::vector<bool> nonneg;  // one flag per variable; empty means all nonnegative

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_eq() const { return static_cast<int>(b_eq.size()); }
    int num_ub() const { return static_cast<int>(b_ub.size()); }
    int num_rows() const { return num_eq() + num_ub(); }

    void validate() const;
};

struct LpOptions {
    double pivot_tol = 1e-10;
    double feas_tol = 1e-9;
    double dual_tol = 1e-8;
    int max_iterations = 0;  // 0: derived from problem size
};

/// Solver output. Dual conventions, with rows ordered [eq block; ub block]:
///
///  - Optimal: y holds one multiplier per row and satisfies
///        b_eq'y_eq + b_ub'y_ub = objective,
///    with y_ub <= 0 for Min problems and y_ub >= 0 for Max problems, and
///    componentwise dual feasibility a'y <= c (Min) / a'y >= c (Max) on
///    nonnegative columns, equality on free columns.
///  - Infeasible: farkas_ray y satisfies y'A <= tol componentwise, y'b > tol,
///    with y <= 0 on ub rows. No feasible x >= 0 can exist under such a ray.
struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    Eigen::VectorXd x;
    double objective = 0.0;
    Eigen::VectorXd y;           // size num_rows() when Optimal
    Eigen::VectorXd farkas_ray;  // size num_rows() when Infeasible
    int iterations = 0;
};

/// Residuals of an Optimal solution, each the exact maximum over its class.
struct LpDiagnostics {
    double max_eq_residual = 0.0;
    double max_ub_violation = 0.0;
    double max_bound_violation = 0.0;
    double duality_mismatch = 0.0;
};

/// Two-phase dense simplex. Deterministic: Dantzig pricing with Bland's rule
/// as the anti-cycling guard, smallest-index tie-breaks throughout.
/// Throws Error(IterationLimitExceeded) or Error(NumericalBreakdown).
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

LpDiagnostics check_solution(const LpProblem& problem, const LpSolution& solution);

}  // namespace smot
