#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbbd/benders.hpp"
#include "sbbd/model.hpp"

namespace sbbd {

enum class Method { SBBD, EXTENSIVE, ENUM };

std::string to_string(Method m);
Method method_from_string(const std::string &name);

enum class SolveStatus { Optimal, TimeLimit, Infeasible };

std::string to_string(SolveStatus s);

struct SolveConfig {
    Method method = Method::SBBD;
    double time_limit = 3600.0;  // seconds
    double mrv = 1e-5;
    int heuristic_period = 200;  // nodes between heuristic separations after the root
    double int_tol = 1e-6;
    int max_root_passes = 50;
    /// Stage-1 settings; unset means default_stage1_config for the instance's tag.
    std::optional<Stage1Config> stage1;
    /// Extensive form only: drop the dominance rows (valid when every scenario is cooperative).
    bool reduced_model = false;
    /// Extensive form only: cap on N * |J|.
    std::size_t extensive_cap = 400000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SolveStats {
    double t_seconds = 0.0;
    std::int64_t n_nodes = 0;
    std::int64_t n_cuts = 0;
    double rgap_percent = 0.0;
    double ogap_percent = 0.0;
    double root_bound = 0.0;
    std::int64_t lp_iterations = 0;
    int stage1_iterations = 0;
    std::int64_t incumbent_checks = 0;
    std::int64_t y_integrality_failures = 0;
    std::int64_t sandwich_failures = 0;
};

struct Solution {
    BinaryDecision x;
    double objective = 0.0;
    double bound = 0.0;
    SolveStats stats;
    SolveStatus status = SolveStatus::Infeasible;
    Method method = Method::SBBD;
};

/// (bound - objective) / |bound| * 100, clamped at 0 for bound == objective.
double gap_percent(double bound, double objective);

/// Most fractional x_j (|x_j - 0.5| minimal); ties go to the lowest index.
/// Returns -1 when every entry is within tol of an integer.
int branch_select(std::span<const double> x, double tol = 1e-6);

/// Two-stage Benders branch-and-cut.
Solution solve_sbbd(const Instance &inst, const SolveConfig &cfg);

/// Branch-and-bound over the full choice formulation with y variables.
/// Throws CapacityError when N * |J| exceeds cfg.extensive_cap.
Solution solve_extensive(const Instance &inst, const SolveConfig &cfg);

/// Exhaustive enumeration wrapped as a Solution.
Solution solve_enum(const Instance &inst, const SolveConfig &cfg);

/// Dispatches on cfg.method.
Solution solve(const Instance &inst, const SolveConfig &cfg);

/// The extensive LP relaxation (x in the box, y >= 0). Columns: x then y (row-major
/// over scenarios); objective 1/N r_ij on y.
LpProblem build_extensive(const Instance &inst, bool reduced);

inline constexpr const char *kSolveCsvHeader =
    "instance,method,t_s,nodes,cuts,rgap_pct,ogap_pct,objective,bound,status";

std::string solve_csv_row(const std::string &instance_id, const Solution &s);
nlohmann::ordered_json to_json(const Solution &s);

}  // namespace sbbd
