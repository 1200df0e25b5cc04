#include "sbbd/saa_stats.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sbbd/sampling.hpp"

namespace sbbd {

std::vector<Replication> replicate_solve(const AppParams &params, int n, int m, std::uint64_t base_seed,
                                         const SolveConfig &cfg) {
    if (n < 1) throw std::invalid_argument("N must be >= 1");
    if (m < 2) throw std::invalid_argument("variance needs M >= 2");
    validate(params);
    const auto model = make_model(params);
    const auto s = scheme(params);
    std::vector<Replication> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
        Replication rep;
        rep.scenario_seed = base_seed + static_cast<std::uint64_t>(k);
        rep.n = n;
        const auto inst = model->instance(static_cast<std::size_t>(n), rep.scenario_seed, s);
        const auto sol = solve(inst, cfg);
        if (sol.status == SolveStatus::Infeasible || sol.x.empty()) {
            throw ReplicationError("replication " + std::to_string(k) + " returned no feasible solution");
        }
        rep.value = sol.objective;
        rep.x = sol.x;
        rep.status = sol.status;
        rep.stats = sol.stats;
        out.push_back(std::move(rep));
    }
    return out;
}

double z_score(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    return standard_normal_quantile(alpha);
}

std::pair<double, double> replication_moments(const std::vector<double> &values) {
    const std::size_t m = values.size();
    if (m < 2) throw std::invalid_argument("variance needs M >= 2");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, ss / (static_cast<double>(m) * static_cast<double>(m - 1))};
}

std::pair<double, double> gap_percentages(double v_bar, double v_hat, double sigma, double alpha) {
    if (v_hat == 0.0) throw std::domain_error("gap undefined for v_hat = 0");
    const double delta = (v_bar - v_hat) / v_hat * 100.0;
    return {delta, delta + z_score(alpha) * sigma / v_hat * 100.0};
}

GapReport estimate_gap(const std::vector<Replication> &reps, const AppParams &params, std::size_t n_prime,
                       double alpha, std::uint64_t seed) {
    if (reps.empty()) throw std::invalid_argument("no replications");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (n_prime < 2) throw std::invalid_argument("N' must be >= 2");
    GapReport r;
    r.alpha = alpha;
    r.m = static_cast<int>(reps.size());
    r.n_prime = n_prime;
    std::vector<double> values;
    for (const auto &rep : reps) {
        values.push_back(rep.value);
        r.time_limited += rep.status == SolveStatus::TimeLimit;
    }
    std::tie(r.v_bar, r.s2_vbar) = replication_moments(values);

    const auto model = make_model(params);
    r.n = reps.front().n;
    std::map<BinaryDecision, TrueEstimate> seen;
    for (std::size_t k = 0; k < reps.size(); ++k) {
        auto it = seen.find(reps[k].x);
        if (it == seen.end()) it = seen.emplace(reps[k].x, evaluate_true(*model, reps[k].x, n_prime, seed)).first;
        if (r.best_replication < 0 || it->second.v_hat > r.v_hat) {
            r.best_replication = static_cast<int>(k);
            r.v_hat = it->second.v_hat;
            r.s2_vhat = it->second.var_hat;
            r.best_x = reps[k].x;
        }
    }
    r.sigma2 = r.s2_vbar + r.s2_vhat;
    r.sigma = std::sqrt(r.sigma2);
    std::tie(r.delta_percent, r.delta_alpha_percent) = gap_percentages(r.v_bar, r.v_hat, r.sigma, alpha);
    return r;
}

std::string gap_csv_row(const GapReport &r) {
    std::ostringstream os;
    os.precision(10);
    os << r.v_hat << ',' << r.v_bar << ',' << r.sigma << ',' << r.delta_percent << ',' << r.delta_alpha_percent << ','
       << r.sigma2 << ',' << r.m << ',' << r.n << ',' << r.n_prime << ',' << r.alpha;
    return os.str();
}

nlohmann::ordered_json to_json(const GapReport &r) {
    nlohmann::ordered_json j;
    j["v_hat"] = r.v_hat;
    j["v_bar"] = r.v_bar;
    j["sigma"] = r.sigma;
    j["delta_pct"] = r.delta_percent;
    j["delta_alpha_pct"] = r.delta_alpha_percent;
    j["s2_vbar"] = r.s2_vbar;
    j["s2_vhat"] = r.s2_vhat;
    j["sigma2"] = r.sigma2;
    j["alpha"] = r.alpha;
    j["M"] = r.m;
    j["N"] = r.n;
    j["N_prime"] = r.n_prime;
    j["best_x"] = r.best_x;
    j["best_replication"] = r.best_replication;
    j["time_limited"] = r.time_limited;
    return j;
}

}  // namespace sbbd
