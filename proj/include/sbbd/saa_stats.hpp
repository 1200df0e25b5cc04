#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbbd/apps.hpp"
#include "sbbd/engine.hpp"

namespace sbbd {

/// One SAA replication: the scenario seed it used and the solver's answer.
struct Replication {
    std::uint64_t scenario_seed = 0;
    int n = 0;
    double value = 0.0;
    BinaryDecision x;
    SolveStatus status = SolveStatus::Optimal;
    SolveStats stats;
};

/// Raised when a replication has no feasible answer.
class ReplicationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solves M independent instances of size N; replication m (1-based) draws its
/// scenarios with seed base_seed + m, keeping the instance seed of params.
std::vector<Replication> replicate_solve(const AppParams &params, int n, int m, std::uint64_t base_seed,
                                         const SolveConfig &cfg);

/// Standard normal quantile at alpha; z_score(0.95) is about 1.645.
double z_score(double alpha);

struct GapReport {
    double v_bar = 0.0;
    double s2_vbar = 0.0;
    double v_hat = 0.0;
    double s2_vhat = 0.0;
    double sigma2 = 0.0;
    double sigma = 0.0;
    double delta_percent = 0.0;
    double delta_alpha_percent = 0.0;
    double alpha = 0.95;
    int m = 0;
    int n = 0;
    std::size_t n_prime = 0;
    BinaryDecision best_x;
    int best_replication = -1;  // 0-based index of the replication that produced best_x
    int time_limited = 0;       // replications that stopped on the time limit
};

/// Mean of the replication optima and the variance of that mean, sum (v - v_bar)^2 / (M (M - 1)).
std::pair<double, double> replication_moments(const std::vector<double> &values);

/// (v_bar - v_hat) / v_hat * 100 and the same plus z(alpha) sigma / v_hat * 100.
std::pair<double, double> gap_percentages(double v_bar, double v_hat, double sigma, double alpha);

/// Evaluates each distinct replication solution on n_prime fresh scenarios drawn
/// with seed and reports the gap against the best of them.
GapReport estimate_gap(const std::vector<Replication> &reps, const AppParams &params, std::size_t n_prime,
                       double alpha, std::uint64_t seed);

inline constexpr const char *kGapCsvHeader = "v_hat,v_bar,sigma,delta_pct,delta_alpha_pct,sigma2,M,N,N_prime,alpha";

std::string gap_csv_row(const GapReport &r);
nlohmann::ordered_json to_json(const GapReport &r);

}  // namespace sbbd
