#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace sbbd {

/// Raised when a request exceeds a configured size cap (enumeration, extensive form).
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when the decision space admits no feasible point.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AppTag { CAOP, FLoP, MSMFLP, GENERIC };

std::string to_string(AppTag tag);
AppTag app_tag_from_string(const std::string &name);

/// 0/1 assignment over the options; index 0 is the outside option when one exists.
using BinaryDecision = std::vector<int>;

struct LinearRow {
    std::vector<double> coeffs;
    double rhs = 0.0;

    double activity(std::span<const double> x) const;
    double activity(std::span<const int> x) const;
    bool operator==(const LinearRow &) const = default;
};

/// The planner's feasible set: c x <= d, h x = g, fixed ones, over binary x.
struct DecisionSpace {
    int n_options = 0;
    std::vector<LinearRow> ineq;
    std::vector<LinearRow> eq;
    std::vector<int> fixed_ones;
    AppTag app_tag = AppTag::GENERIC;
    /// FLoP only: option indices grouped per facility (one price level per group).
    std::vector<std::vector<int>> groups;

    void validate() const;
    bool is_fixed_one(int j) const;
    bool is_feasible(std::span<const int> x, double tol = 1e-9) const;
    /// Same test for fractional points of the box relaxation.
    bool is_relaxed_feasible(std::span<const double> x, double tol = 1e-9) const;
    /// Number of offered options implied by a cardinality row (unit coefficients on
    /// all free options; omitted fixed options count as offered).
    /// Returns -1 when there is no such row.
    int offer_limit() const;

    bool operator==(const DecisionSpace &) const = default;
};

/// Realized utilities and rewards, row-major N x |J|.
struct ScenarioSet {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> u;
    std::vector<double> r;

    ScenarioSet() = default;
    ScenarioSet(std::size_t n_scenarios, std::size_t n_options)
        : n(n_scenarios), m(n_options), u(n_scenarios * n_options), r(n_scenarios * n_options) {}

    double &util(std::size_t i, std::size_t j) { return u[i * m + j]; }
    double util(std::size_t i, std::size_t j) const { return u[i * m + j]; }
    double &reward(std::size_t i, std::size_t j) { return r[i * m + j]; }
    double reward(std::size_t i, std::size_t j) const { return r[i * m + j]; }
    std::span<const double> util_row(std::size_t i) const { return {u.data() + i * m, m}; }
    std::span<const double> reward_row(std::size_t i) const { return {r.data() + i * m, m}; }

    bool operator==(const ScenarioSet &) const = default;
};

/// Separates utilities closer than 1e-12 within a row by adding k * 1e-9 * max(1, |u|)
/// to column k. Returns the number of rows that were touched.
std::size_t repair_utility_ties(ScenarioSet &scenarios);

/// True when every row has pairwise distinct utilities.
bool utilities_distinct(const ScenarioSet &scenarios);

struct Instance {
    DecisionSpace space;
    ScenarioSet scenarios;
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();

    std::size_t n_scenarios() const { return scenarios.n; }
    int n_options() const { return space.n_options; }
    void validate() const;

    bool operator==(const Instance &) const = default;
};

struct Choice {
    int option = -1;
    double reward = 0.0;
};

/// The offered option with maximum utility in scenario i; ties go to the higher
/// reward and then to the lower index.
Choice choose(std::span<const int> x, std::size_t i, const Instance &inst);

/// Mean over scenarios of the chosen option's reward.
double sample_objective(std::span<const int> x, const Instance &inst);

/// Fraction of scenarios where the reward-maximizing offered option coincides with
/// the utility-maximizing one.
double cooperative_fraction(std::span<const int> x, const Instance &inst);

inline constexpr int kDefaultEnumerationCap = 24;

/// Visits every feasible x exactly once in lexicographic order. The callback may
/// return false to stop early. Throws CapacityError above the free-variable cap.
void for_each_feasible(const DecisionSpace &space, const std::function<bool(const BinaryDecision &)> &visit,
                       int cap = kDefaultEnumerationCap);

std::vector<BinaryDecision> enumerate_feasible(const DecisionSpace &space, int cap = kDefaultEnumerationCap);

struct EnumerationResult {
    BinaryDecision x;
    double value = 0.0;
    std::size_t n_feasible = 0;
};

/// Exhaustive maximizer of sample_objective; ties go to the lexicographically
/// smallest x. Throws InfeasibleError if no feasible x exists.
EnumerationResult enumerate_optimal(const Instance &inst, int cap = kDefaultEnumerationCap);

}  // namespace sbbd
