#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sbbd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, Equal };

struct SparseRow {
    std::vector<int> index;
    std::vector<double> value;

    void push(int j, double v) {
        index.push_back(j);
        value.push_back(v);
    }
};

/// max c.v  s.t.  a_r.v <= b_r (or = b_r),  lower <= v <= upper.
struct LpProblem {
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<SparseRow> rows;
    std::vector<RowSense> sense;
    std::vector<double> rhs;

    int n_vars() const { return static_cast<int>(objective.size()); }
    int n_rows() const { return static_cast<int>(rows.size()); }

    int add_variable(double obj, double lo, double hi);
    int add_row(SparseRow row, RowSense s, double b);
    /// Dense convenience form; exact zeros are dropped.
    int add_dense_row(std::span<const double> coeffs, RowSense s, double b);

    /// Throws std::invalid_argument on inconsistent sizes, bad indices, non-finite
    /// coefficients, or lower > upper.
    void validate() const;

    /// CPLEX-LP style text dump for debugging.
    std::string to_lp_string() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string to_string(LpStatus status);

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> primal;
    std::vector<double> duals;          // one per row; >= 0 on <= rows at optimum
    std::vector<double> reduced_costs;  // c - A^T y per variable
    double objective = 0.0;
    std::int64_t iterations = 0;
};

/// Raised when the factorization cannot be repaired or the iteration limit is hit.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimplexOptions {
    double pivot_tol = 1e-9;
    double primal_tol = 1e-9;
    double dual_tol = 1e-9;
    int refactor_interval = 100;
    int stall_threshold = 50;
    std::int64_t max_iterations = 0;  // 0 = automatic
};

enum class VarStatus : signed char { Basic, AtLower, AtUpper, FreeZero };

/// Snapshot of variable statuses (structurals then slacks) for warm starts.
struct LpBasis {
    std::vector<VarStatus> status;
};

/// Bounded-variable primal revised simplex with a persistent factorization.
///
/// Variables 0..n-1 are structural, n..n+m-1 are row slacks s_r = b_r - a_r.v with
/// bounds [0, inf) for <= rows and [0, 0] for equality rows. Phase 1 minimizes the
/// sum of bound violations of the basic variables. The basis matrix is factored as
/// a row/column-singleton triangular frame around a dense LU bump, updated by
/// product-form etas between refactorizations. A warm basis that is dual feasible
/// but primal infeasible (after bound changes or added rows) is repaired with the
/// dual simplex before the primal loop runs.
class LpSolver {
public:
    explicit LpSolver(LpProblem problem, SimplexOptions options = {});

    LpSolution solve();

    void set_bounds(int j, double lo, double hi);
    int add_row(SparseRow row, RowSense s, double b);

    LpBasis basis() const;
    /// Restores a snapshot; rows added after it was taken start with basic slacks.
    void set_basis(const LpBasis &b);

    const LpProblem &problem() const { return prob_; }
    int n_vars() const { return n_; }
    int n_rows() const { return m_; }

private:
    struct Pivot {
        int row;
        int col;
        double value;
    };
    struct Eta {
        int pos;
        double pivot;
        std::vector<int> idx;
        std::vector<double> val;
    };

    void reset_slack_basis();
    void place_nonbasic(int j);
    void refactor();
    bool factor_once(std::vector<int> &dependent_cols, std::vector<int> &uncovered_rows);
    void compute_primal();
    void ftran(std::vector<double> &v);
    void btran(std::vector<double> &v);
    void ftran_base(std::vector<double> &v);
    void btran_base(std::vector<double> &v);
    void load_column(int j, std::vector<double> &v) const;
    double column_dot(int j, const std::vector<double> &y) const;
    LpSolution make_solution(LpStatus status, const std::vector<double> &y);
    LpSolution solve_once();
    bool eta_file_full() const;
    void pivot(int leave, int q, const std::vector<double> &alpha);
    enum class DualOutcome { PrimalFeasible, Infeasible, Abandoned };
    DualOutcome dual_phase(std::int64_t &iter, std::int64_t max_iter, std::vector<double> &y);

    LpProblem prob_;
    SimplexOptions opt_;
    int n_ = 0;
    int m_ = 0;

    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<double> lo_, up_, cost_, x_;
    std::vector<VarStatus> status_;
    std::vector<int> head_;   // position -> variable
    std::vector<int> where_;  // variable -> position, -1 if nonbasic

    // Factorization of the basis at the last refactor.
    std::vector<Pivot> lpiv_, upiv_;
    std::vector<int> bump_rows_, bump_cols_;
    Eigen::FullPivLU<Eigen::MatrixXd> bump_lu_;
    std::vector<signed char> role_;  // per structural: 0 nonbasic, 1 L, 2 bump, 3 U
    std::vector<char> row_in_r_;     // row whose slack was basic at refactor
    std::vector<int> pair_row_;      // per basic structural: its position
    std::vector<int> basic_structs_;
    std::vector<Eta> etas_;
    std::size_t eta_nnz_ = 0;
    bool factor_valid_ = false;
    bool primal_valid_ = false;

    std::vector<double> work_;  // length n scratch
};

/// One-shot solve from a slack basis.
LpSolution solve_lp(const LpProblem &p, const SimplexOptions &options = {});

struct KktTolerances {
    double primal = 1e-7;
    double dual = 1e-7;
    double complementarity = 1e-7;
    double gap_rel = 1e-6;
};

/// Checks primal feasibility, dual sign feasibility, stationarity of the reported
/// reduced costs, complementary slackness, and equality of primal and dual objectives.
bool verify_kkt(const LpProblem &p, const LpSolution &s, const KktTolerances &tol = {});

}  // namespace sbbd
