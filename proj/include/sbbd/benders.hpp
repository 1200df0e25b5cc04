#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "sbbd/model.hpp"
#include "sbbd/simplex.hpp"

namespace sbbd {

/// theta_i <= intercept + coeffs . x for one scenario.
struct BendersCut {
    std::size_t scenario = 0;
    double intercept = 0.0;
    std::vector<double> coeffs;

    double rhs(std::span<const double> x) const;
    double rhs(std::span<const int> x) const;
    bool operator==(const BendersCut &) const = default;
};

/// Closed-form optimal dual of the integer choice subproblem.
struct IntegerDual {
    double lambda = 0.0;
    std::vector<double> mu;
    std::vector<double> nu;
    int chosen = -1;

    /// lambda + sum(mu) + (nu - mu) . x
    double objective(std::span<const int> x) const;
};

IntegerDual integer_dual(std::span<const int> x, std::size_t i, const Instance &inst);
BendersCut integer_cut(std::span<const int> x, std::size_t i, const Instance &inst);

/// beta_ij = min{x_j, min_k (1 - delta_ijk x_k)} with delta_ijk = 1 iff u_ik > u_ij.
std::vector<double> beta_weights(std::span<const double> x, std::size_t i, const Instance &inst);

/// Raised when the knapsack capacity cannot be filled (sum of beta below 1).
class UnderfilledError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KnapsackDual {
    double lambda_prime = 0.0;
    std::vector<double> eta;
    int critical = -1;
    /// Primal optimum of the fractional knapsack with unit capacity.
    double primal_value = 0.0;

    double objective(std::span<const double> beta) const;
};

/// Dual of the unit-capacity LP knapsack with values r_i. and weights beta; the
/// critical item is the first, by reward descending, where cumulative beta reaches 1.
KnapsackDual knapsack_dual(std::span<const double> beta, std::size_t i, const Instance &inst);

/// Knapsack dual at x_frac linearized through the binding branch of each beta min.
/// A tie between the x_j branch and a blocking option goes to the x_j branch; ties
/// among blocking options go to the lowest index.
BendersCut fractional_cut(std::span<const double> x_frac, std::size_t i, const Instance &inst);

struct StabilizerConfig {
    bool enabled = false;
    std::vector<double> center;  // empty: default_stabilizer_center
    double step0 = 0.5;
    double step_increment = 0.05;
};

/// Interior point of the relaxed space: fixed options at 1, the remaining
/// cardinality budget spread evenly over the free options.
std::vector<double> default_stabilizer_center(const DecisionSpace &space);

struct Stage1Config {
    double rho = 1e-4;
    double mrv = 1e-5;
    int max_iterations = 500;
    double time_limit = kInf;  // seconds
    StabilizerConfig stabilizer;
};

/// Stage-1 defaults for an application: rho 1e-2 and stabilization for CAOP,
/// rho 1e-4 and no stabilization otherwise.
Stage1Config default_stage1_config(AppTag tag);

struct Stage1Result {
    std::vector<BendersCut> cuts;
    double upper_bound = 0.0;
    double lower_bound = 0.0;
    std::vector<double> x_frac;
    BinaryDecision best_rounded;
    int iterations = 0;
    bool converged = false;      // relaxation solved or tolerance met
    bool hit_iteration_cap = false;
    bool hit_time_limit = false;
    std::vector<double> step_trace;  // step size used at each iteration
    std::vector<double> ub_trace;
};

/// theta_i cannot exceed the row's maximum reward and is at least its minimum.
double theta_upper(const Instance &inst, std::size_t i);
double theta_lower(const Instance &inst, std::size_t i);

/// Relative violation used for cut admission: (theta - rhs) / max(1, |rhs|).
double relative_violation(double theta, double rhs);

/// Relaxed master: x_j in [0,1] (fixed options at 1) at columns 0..|J|-1, theta_i
/// at column |J| + i with objective 1/N, and the rows of the decision space.
LpProblem build_master(const Instance &inst);

/// theta_i - coeffs . x <= intercept, with coefficients below 1e-12 dropped.
SparseRow cut_row(const BendersCut &cut, int n_options);

/// Iterative Benders loop on the continuous relaxation with fractional cuts.
/// Throws InfeasibleError when the relaxed space is empty.
Stage1Result stage1(const Instance &inst, const Stage1Config &cfg);

nlohmann::ordered_json cuts_to_json(const std::vector<BendersCut> &cuts);
std::vector<BendersCut> cuts_from_json(const nlohmann::ordered_json &j);

}  // namespace sbbd
