#include "smot/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Working state of the tableau simplex in "flipped" standard form:
//   rows scaled so the max-abs structural coefficient is 1 and rhs >= 0.
struct Tableau {
    Eigen::MatrixXd a;   // m x ncols, kept in basis coordinates (B^-1 A)
    Eigen::VectorXd b;   // m, current basic values
    Eigen::VectorXd r;   // reduced costs for the active phase
    std::vector<int> basis;
    std::vector<char> in_basis;
    int m = 0;
    int ncols = 0;
    int art_begin = 0;  // columns [art_begin, ncols) are artificials
    double obj = 0.0;   // current phase objective value
    int iterations = 0;

    bool basis_mask_has(int j) const { return in_basis[j] != 0; }
    void set_basis(int row, int col) {
        if (basis[row] >= 0) in_basis[basis[row]] = 0;
        basis[row] = col;
        in_basis[col] = 1;
    }
};

class SimplexSolver {
  public:
    SimplexSolver(const LpProblem& p, const LpOptions& opt) : p_(p), opt_(opt) { assemble(); }

    LpSolution run() {
        phase_one();
        for (int round = 0; round < 3 && !infeasible_ && phase1_premature(); ++round) iterate();
        if (!infeasible_ && t_.obj > opt_.feas_tol) infeasible_ = true;
        if (infeasible_) return make_infeasible();
        phase_two();
        for (int round = 0; round < 3 && !unbounded_ && phase2_premature(); ++round) iterate();
        if (unbounded_) {
            LpSolution s;
            s.status = LpStatus::Unbounded;
            s.iterations = t_.iterations;
            return s;
        }
        return make_optimal();
    }

  private:
    const LpProblem& p_;
    LpOptions opt_;

    int n_orig_ = 0;
    int n_split_ = 0;   // structural columns after free-variable splitting
    int n_slack_ = 0;
    std::vector<int> split_pos_;  // per original var: positive-part column
    std::vector<int> split_neg_;  // per original var: negative-part column, -1 if nonneg
    std::vector<int> col_var_;    // structural column -> original variable
    std::vector<double> col_sign_;

    Eigen::VectorXd row_scale_;  // e_i > 0
    Eigen::VectorXd col_scale_;  // d_j > 0 on structural columns
    Eigen::VectorXd row_sign_;   // sigma_i in {+1,-1}
    Eigen::VectorXd rhs0_;       // pristine rhs in flipped-scaled coordinates
    Eigen::VectorXd cost_;       // phase-2 costs on structural+slack columns (min form)
    double cost_scale_ = 1.0;
    double sense_sign_ = 1.0;  // +1 min, -1 max

    Tableau t_;
    bool infeasible_ = false;
    bool unbounded_ = false;
    bool phase_one_active_ = true;
    bool bland_ = false;
    int stall_count_ = 0;
    double last_obj_ = kInf;
    int max_iter_ = 0;

    void assemble() {
        p_.validate();
        n_orig_ = p_.num_vars();
        sense_sign_ = (p_.sense == Sense::Max) ? -1.0 : 1.0;

        split_pos_.resize(n_orig_);
        split_neg_.assign(n_orig_, -1);
        int col = 0;
        for (int j = 0; j < n_orig_; ++j) {
            split_pos_[j] = col++;
            col_var_.push_back(j);
            col_sign_.push_back(1.0);
            bool nn = p_.nonneg.empty() ? true : p_.nonneg[j];
            if (!nn) {
                split_neg_[j] = col++;
                col_var_.push_back(j);
                col_sign_.push_back(-1.0);
            }
        }
        n_split_ = col;

        const int m_eq = p_.num_eq();
        const int m_ub = p_.num_ub();
        const int m = m_eq + m_ub;
        n_slack_ = m_ub;
        t_.m = m;
        t_.art_begin = n_split_ + n_slack_;
        t_.ncols = t_.art_begin + m;

        t_.a.setZero(m, t_.ncols);
        t_.b.setZero(m);
        row_scale_.setOnes(m);
        row_sign_.setOnes(m);

        auto fill_row = [&](int i, const Eigen::MatrixXd& block, int bi, double rhs) {
            for (int j = 0; j < n_orig_; ++j) {
                double v = block(bi, j);
                t_.a(i, split_pos_[j]) = v;
                if (split_neg_[j] >= 0) t_.a(i, split_neg_[j]) = -v;
            }
            t_.b(i) = rhs;
        };
        for (int i = 0; i < m_eq; ++i) fill_row(i, p_.a_eq, i, p_.b_eq(i));
        for (int i = 0; i < m_ub; ++i) fill_row(m_eq + i, p_.a_ub, i, p_.b_ub(i));

        // Two-sided equilibration: alternating square-root row/column scaling
        // compresses within-row magnitude spread (probability rows against
        // tail-proxy price rows), then a final row pass caps each row at one.
        // Slack columns are inserted afterwards so their pivots stay unit-size.
        col_scale_.setOnes(n_split_);
        auto structural = t_.a.leftCols(n_split_);
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i < m; ++i) {
                double mx = n_split_ > 0 ? structural.row(i).cwiseAbs().maxCoeff() : 0.0;
                if (mx > 0.0) {
                    double e = 1.0 / std::sqrt(mx);
                    structural.row(i) *= e;
                    row_scale_(i) *= e;
                }
            }
            for (int j = 0; j < n_split_; ++j) {
                double mx = m > 0 ? structural.col(j).cwiseAbs().maxCoeff() : 0.0;
                if (mx > 0.0) {
                    double d = 1.0 / std::sqrt(mx);
                    structural.col(j) *= d;
                    col_scale_(j) *= d;
                }
            }
        }
        for (int i = 0; i < m; ++i) {
            double mx = n_split_ > 0 ? structural.row(i).cwiseAbs().maxCoeff() : 0.0;
            if (mx > 0.0) {
                structural.row(i) /= mx;
                row_scale_(i) /= mx;
            }
            t_.b(i) *= row_scale_(i);
            if (i >= m_eq) t_.a(i, n_split_ + i - m_eq) = 1.0;
            if (t_.b(i) < 0.0) {
                row_sign_(i) = -1.0;
                t_.a.row(i) *= -1.0;
                t_.b(i) *= -1.0;
            }
            t_.a(i, t_.art_begin + i) = 1.0;
        }
        rhs0_ = t_.b;

        // Phase-2 cost vector in min form, column-scaled and normalized.
        cost_.setZero(t_.art_begin);
        for (int j = 0; j < n_orig_; ++j) {
            double cj = sense_sign_ * p_.c(j);
            cost_(split_pos_[j]) = cj * col_scale_(split_pos_[j]);
            if (split_neg_[j] >= 0) cost_(split_neg_[j]) = -cj * col_scale_(split_neg_[j]);
        }
        double cmax = cost_.size() > 0 ? cost_.cwiseAbs().maxCoeff() : 0.0;
        cost_scale_ = std::max(1.0, cmax);
        cost_ /= cost_scale_;

        max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations
                                            : std::max(2000, 20 * (t_.m + t_.ncols));
    }

    // Crash: slack basic where the ub row kept its +e_i slack sign, artificial otherwise.
    void phase_one() {
        const int m = t_.m;
        t_.basis.assign(m, -1);
        t_.in_basis.assign(t_.ncols, 0);
        std::vector<bool> art_needed(m, false);
        for (int i = 0; i < m; ++i) {
            int slack_col = -1;
            if (i >= p_.num_eq() && row_sign_(i) > 0) slack_col = n_split_ + (i - p_.num_eq());
            if (slack_col >= 0) {
                t_.set_basis(i, slack_col);
            } else {
                t_.set_basis(i, t_.art_begin + i);
                art_needed[i] = true;
            }
        }
        // Phase-1 reduced costs: cost 1 on artificials, basics priced out.
        t_.r.setZero(t_.ncols);
        t_.r.segment(t_.art_begin, m).setOnes();
        t_.obj = 0.0;
        for (int i = 0; i < m; ++i) {
            if (art_needed[i]) {
                t_.r -= t_.a.row(i).transpose();
                t_.obj += t_.b(i);
            }
        }
        phase_one_active_ = true;
        bland_ = false;
        stall_count_ = 0;
        last_obj_ = kInf;
        iterate();
        if (unbounded_)
            throw Error(ErrorCode::NumericalBreakdown, "phase-1 objective reported unbounded");
        if (t_.obj > opt_.feas_tol) {
            infeasible_ = true;
            return;
        }
        purge_basic_artificials();
    }

    void phase_two() {
        // Rebuild reduced costs for the real objective.
        t_.r.setZero(t_.ncols);
        t_.r.head(t_.art_begin) = cost_;
        t_.obj = 0.0;
        for (int i = 0; i < t_.m; ++i) {
            int bj = t_.basis[i];
            double cb = bj < t_.art_begin ? cost_(bj) : 0.0;
            if (cb != 0.0) {
                t_.r -= cb * t_.a.row(i).transpose();
                t_.obj += cb * t_.b(i);
            }
        }
        phase_one_active_ = false;
        bland_ = false;
        stall_count_ = 0;
        last_obj_ = kInf;
        iterate();
    }

    bool col_priced(int j) const {
        if (j >= t_.art_begin) return phase_one_active_;
        return true;
    }

    void iterate() {
        const double rc_tol = 1e-9;
        while (true) {
            if (t_.iterations >= max_iter_)
                throw Error(ErrorCode::IterationLimitExceeded,
                            "simplex exceeded " + std::to_string(max_iter_) + " iterations");

            int enter = -1;
            if (bland_) {
                for (int j = 0; j < t_.ncols; ++j) {
                    if (col_priced(j) && t_.basis_mask_has(j) == false && t_.r(j) < -rc_tol) {
                        enter = j;
                        break;
                    }
                }
            } else {
                double best = -rc_tol;
                for (int j = 0; j < t_.ncols; ++j) {
                    if (col_priced(j) && t_.r(j) < best && !t_.basis_mask_has(j)) {
                        best = t_.r(j);
                        enter = j;
                    }
                }
            }
            if (enter < 0) return;  // optimal for this phase

            int leave = select_leaving(enter);
            if (leave == -2) {  // no positive pivot at all
                unbounded_ = true;
                return;
            }
            if (leave == -1)
                throw Error(ErrorCode::NumericalBreakdown,
                            "no acceptable pivot above pivot_tol in entering column");

            pivot(leave, enter);
            ++t_.iterations;

            if (std::abs(last_obj_ - t_.obj) <= 1e-13 * (1.0 + std::abs(t_.obj))) {
                if (++stall_count_ >= 100) bland_ = true;
            } else {
                stall_count_ = 0;
            }
            last_obj_ = t_.obj;
        }
    }

    // Returns row index, -1 for numerical trouble, -2 for unbounded.
    // Two passes: find the minimum ratio, then break near-ties by pivot
    // magnitude (Harris-style) or by Bland's smallest-index rule.
    int select_leaving(int enter) const {
        double best_ratio = kInf;
        bool saw_positive = false;
        for (int i = 0; i < t_.m; ++i) {
            double aie = t_.a(i, enter);
            if (aie > 0.0) saw_positive = true;
            if (aie <= opt_.pivot_tol) continue;
            best_ratio = std::min(best_ratio, t_.b(i) / aie);
        }
        if (best_ratio == kInf) return saw_positive ? -1 : -2;

        const double ratio_tol = 1e-9 * (1.0 + std::abs(best_ratio));
        int best = -1;
        double best_piv = 0.0;
        for (int i = 0; i < t_.m; ++i) {
            double aie = t_.a(i, enter);
            if (aie <= opt_.pivot_tol) continue;
            if (t_.b(i) / aie > best_ratio + ratio_tol) continue;
            if (bland_) {
                if (best < 0 || t_.basis[i] < t_.basis[best]) best = i;
                continue;
            }
            bool cand_art = t_.basis[i] >= t_.art_begin;
            bool best_art = best >= 0 && t_.basis[best] >= t_.art_begin;
            if (best < 0 || (cand_art && !best_art) ||
                (cand_art == best_art && aie > best_piv)) {
                best = i;
                best_piv = aie;
            }
        }
        return best;
    }

    void pivot(int row, int col) {
        double piv = t_.a(row, col);
        t_.a.row(row) /= piv;
        t_.b(row) /= piv;
        for (int i = 0; i < t_.m; ++i) {
            if (i == row) continue;
            double f = t_.a(i, col);
            if (f != 0.0) {
                t_.a.row(i) -= f * t_.a.row(row);
                t_.b(i) -= f * t_.b(row);
                t_.a(i, col) = 0.0;
            }
        }
        double fr = t_.r(col);
        if (fr != 0.0) {
            t_.r -= fr * t_.a.row(row).transpose();
            t_.obj += fr * t_.b(row);
            t_.r(col) = 0.0;
        }
        t_.set_basis(row, col);
    }

    void purge_basic_artificials() {
        for (int i = 0; i < t_.m; ++i) {
            if (t_.basis[i] < t_.art_begin) continue;
            int pick = -1;
            double best = opt_.pivot_tol;
            for (int j = 0; j < t_.art_begin; ++j) {
                double v = std::abs(t_.a(i, j));
                if (v > best && !t_.basis_mask_has(j)) {
                    best = v;
                    pick = j;
                }
            }
            if (pick >= 0) pivot(i, pick);
            // else: redundant row; the artificial stays basic at zero.
        }
    }

    // Exact optimality audit at a tentative stop: multipliers re-solved from
    // the pristine basis expose reduced costs without tableau drift. When the
    // stop was premature the whole working tableau is rebuilt exactly.
    bool premature_stop(bool phase1) {
        auto lu = factor_basis();
        Eigen::VectorXd cb(t_.m);
        for (int i = 0; i < t_.m; ++i) {
            int bj = t_.basis[i];
            if (phase1)
                cb(i) = bj >= t_.art_begin ? 1.0 : 0.0;
            else
                cb(i) = bj < t_.art_begin ? cost_(bj) : 0.0;
        }
        Eigen::VectorXd y = lu.transpose().solve(cb);
        Eigen::VectorXd rexact(t_.ncols);
        Eigen::VectorXd col;
        double worst = 0.0;
        for (int j = 0; j < t_.ncols; ++j) {
            double cj = phase1 ? (j >= t_.art_begin ? 1.0 : 0.0)
                               : (j < t_.art_begin ? cost_(j) : 0.0);
            pristine_column(j, col);
            rexact(j) = cj - y.dot(col);
            bool priced = phase1 || j < t_.art_begin;
            if (priced && !t_.basis_mask_has(j)) worst = std::min(worst, rexact(j));
        }
        // Exact state refresh; cheap relative to the solve and always sound.
        t_.b = lu.solve(rhs0_);
        for (int i = 0; i < t_.m; ++i)
            if (t_.b(i) < 0.0) t_.b(i) = 0.0;  // basis values, clamped roundoff
        t_.r = rexact;
        t_.obj = cb.dot(t_.b);
        if (worst >= -1e-9) return false;
        Eigen::MatrixXd pristine(t_.m, t_.ncols);
        for (int j = 0; j < t_.ncols; ++j) {
            pristine_column(j, col);
            pristine.col(j) = col;
        }
        t_.a = lu.solve(pristine);
        return true;
    }

    bool phase1_premature() { return premature_stop(true); }
    bool phase2_premature() { return premature_stop(false); }

    // Pristine column of the flipped-scaled system: structural columns from
    // the problem blocks, slacks as +-1, artificials as unit vectors.
    void pristine_column(int j, Eigen::VectorXd& col) const {
        col.setZero(t_.m);
        if (j < n_split_) {
            int var = col_var_[static_cast<size_t>(j)];
            double sign = col_sign_[static_cast<size_t>(j)] * col_scale_(j);
            for (int i = 0; i < p_.num_eq(); ++i)
                col(i) = sign * p_.a_eq(i, var) * row_scale_(i) * row_sign_(i);
            for (int k = 0; k < p_.num_ub(); ++k) {
                int i = p_.num_eq() + k;
                col(i) = sign * p_.a_ub(k, var) * row_scale_(i) * row_sign_(i);
            }
        } else if (j < t_.art_begin) {
            int i = p_.num_eq() + (j - n_split_);
            col(i) = row_sign_(i);
        } else {
            col(j - t_.art_begin) = 1.0;
        }
    }

    // The incrementally maintained tableau accumulates roundoff; the final
    // basis system is re-solved from pristine data for the reported point,
    // multipliers, and Farkas ray.
    Eigen::PartialPivLU<Eigen::MatrixXd> factor_basis() const {
        Eigen::MatrixXd basis(t_.m, t_.m);
        Eigen::VectorXd col;
        for (int i = 0; i < t_.m; ++i) {
            pristine_column(t_.basis[i], col);
            basis.col(i) = col;
        }
        return Eigen::PartialPivLU<Eigen::MatrixXd>(basis);
    }

    LpSolution make_infeasible() {
        LpSolution s;
        s.status = LpStatus::Infeasible;
        s.iterations = t_.iterations;
        auto lu = factor_basis();
        Eigen::VectorXd cb(t_.m);  // phase-1 costs of the basis
        for (int i = 0; i < t_.m; ++i) cb(i) = t_.basis[i] >= t_.art_begin ? 1.0 : 0.0;
        Eigen::VectorXd y_flip = lu.transpose().solve(cb);
        s.farkas_ray.resize(t_.m);
        for (int i = 0; i < t_.m; ++i)
            s.farkas_ray(i) = y_flip(i) * row_sign_(i) * row_scale_(i);
        return s;
    }

    LpSolution make_optimal() {
        LpSolution s;
        s.status = LpStatus::Optimal;
        s.iterations = t_.iterations;
        auto lu = factor_basis();

        Eigen::VectorXd xb = lu.solve(rhs0_);
        Eigen::VectorXd xfull = Eigen::VectorXd::Zero(t_.ncols);
        for (int i = 0; i < t_.m; ++i) xfull(t_.basis[i]) = xb(i);
        s.x.resize(n_orig_);
        for (int j = 0; j < n_orig_; ++j) {
            double v = xfull(split_pos_[j]) * col_scale_(split_pos_[j]);
            if (split_neg_[j] >= 0) v -= xfull(split_neg_[j]) * col_scale_(split_neg_[j]);
            s.x(j) = v;
        }
        s.objective = p_.c.dot(s.x);

        Eigen::VectorXd cb(t_.m);
        for (int i = 0; i < t_.m; ++i)
            cb(i) = t_.basis[i] < t_.art_begin ? cost_(t_.basis[i]) : 0.0;
        Eigen::VectorXd y_flip = lu.transpose().solve(cb);
        s.y.resize(t_.m);
        for (int i = 0; i < t_.m; ++i)
            s.y(i) = sense_sign_ * cost_scale_ * y_flip(i) * row_sign_(i) * row_scale_(i);
        return s;
    }
};

}  // namespace

void LpProblem::validate() const {
    const int n = num_vars();
    if (n <= 0) throw Error(ErrorCode::InvalidInput, "LP has no variables");
    if (a_eq.rows() != b_eq.size() || a_ub.rows() != b_ub.size())
        throw Error(ErrorCode::InvalidInput, "LP block row counts disagree with rhs sizes");
    if ((a_eq.rows() > 0 && a_eq.cols() != n) || (a_ub.rows() > 0 && a_ub.cols() != n))
        throw Error(ErrorCode::InvalidInput, "LP block column counts disagree with |c|");
    if (!nonneg.empty() && static_cast<int>(nonneg.size()) != n)
        throw Error(ErrorCode::InvalidInput, "nonneg flag count disagrees with |c|");
    if (!c.allFinite() || !all_finite(a_eq) || !all_finite(a_ub) || !b_eq.allFinite() ||
        !b_ub.allFinite())
        throw Error(ErrorCode::InvalidInput, "LP data contains non-finite entries");
}

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
    SimplexSolver solver(problem, options);
    return solver.run();
}

LpDiagnostics check_solution(const LpProblem& problem, const LpSolution& solution) {
    LpDiagnostics d;
    if (solution.status != LpStatus::Optimal || solution.x.size() != problem.num_vars())
        throw Error(ErrorCode::InvalidInput, "check_solution requires an Optimal solution");
    const Eigen::VectorXd& x = solution.x;
    if (problem.num_eq() > 0)
        d.max_eq_residual = (problem.a_eq * x - problem.b_eq).cwiseAbs().maxCoeff();
    if (problem.num_ub() > 0)
        d.max_ub_violation = std::max(0.0, (problem.a_ub * x - problem.b_ub).maxCoeff());
    for (int j = 0; j < problem.num_vars(); ++j) {
        bool nn = problem.nonneg.empty() ? true : problem.nonneg[j];
        if (nn) d.max_bound_violation = std::max(d.max_bound_violation, -x(j));
    }
    d.max_bound_violation = std::max(0.0, d.max_bound_violation);
    double dual_value = 0.0;
    if (solution.y.size() == problem.num_rows()) {
        dual_value += problem.b_eq.dot(solution.y.head(problem.num_eq()));
        dual_value += problem.b_ub.dot(solution.y.tail(problem.num_ub()));
        d.duality_mismatch = std::abs(problem.c.dot(x) - dual_value);
    }
    return d;
}

}  // namespace smot
