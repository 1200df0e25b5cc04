#include "sbbd/benders.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "sbbd/apps.hpp"

namespace sbbd {

namespace {

void require(bool ok, const char *what) {
    if (!ok) throw std::invalid_argument(what);
}

// Options of scenario i by utility, highest first.
std::vector<int> utility_order(std::size_t i, const Instance &inst) {
    const auto u = inst.scenarios.util_row(i);
    std::vector<int> order(u.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return u[a] > u[b]; });
    return order;
}

}  // namespace

double BendersCut::rhs(std::span<const double> x) const {
    double v = intercept;
    for (std::size_t j = 0; j < coeffs.size(); ++j) v += coeffs[j] * x[j];
    return v;
}

double BendersCut::rhs(std::span<const int> x) const {
    double v = intercept;
    for (std::size_t j = 0; j < coeffs.size(); ++j) v += coeffs[j] * x[j];
    return v;
}

double IntegerDual::objective(std::span<const int> x) const {
    double v = lambda;
    for (std::size_t j = 0; j < mu.size(); ++j) v += mu[j] + (nu[j] - mu[j]) * x[j];
    return v;
}

IntegerDual integer_dual(std::span<const int> x, std::size_t i, const Instance &inst) {
    const int m = inst.n_options();
    require(static_cast<int>(x.size()) == m, "decision has the wrong length");
    const auto u = inst.scenarios.util_row(i);
    const auto r = inst.scenarios.reward_row(i);
    const int star = choose(x, i, inst).option;
    IntegerDual d;
    d.chosen = star;
    d.lambda = r[star];
    d.mu.assign(m, 0.0);
    d.nu.assign(m, 0.0);
    double best_other = -kInf;
    for (int j = 0; j < m; ++j) {
        if (x[j] == 1 && j != star) best_other = std::max(best_other, r[j]);
    }
    if (best_other > -kInf) d.mu[star] = std::max(0.0, best_other - d.lambda);
    for (int j = 0; j < m; ++j) {
        if (x[j] == 1) continue;
        const double blocked = u[star] > u[j] ? d.mu[star] : 0.0;
        d.nu[j] = std::max(0.0, r[j] - d.lambda - blocked);
    }
    return d;
}

BendersCut integer_cut(std::span<const int> x, std::size_t i, const Instance &inst) {
    const auto d = integer_dual(x, i, inst);
    BendersCut c;
    c.scenario = i;
    c.intercept = d.lambda + std::accumulate(d.mu.begin(), d.mu.end(), 0.0);
    c.coeffs.resize(d.mu.size());
    for (std::size_t j = 0; j < d.mu.size(); ++j) c.coeffs[j] = d.nu[j] - d.mu[j];
    return c;
}

namespace {

// beta together with the binding blocker of each option (-1 when none dominates).
struct BetaDetail {
    std::vector<double> x;  // the point clamped into the box
    std::vector<double> beta;
    std::vector<int> blocker;
};

BetaDetail beta_detail(std::span<const double> x_in, std::size_t i, const Instance &inst) {
    const int m = inst.n_options();
    require(static_cast<int>(x_in.size()) == m, "point has the wrong length");
    const auto u = inst.scenarios.util_row(i);
    const auto order = utility_order(i, inst);
    BetaDetail out{std::vector<double>(m), std::vector<double>(m), std::vector<int>(m, -1)};
    for (int j = 0; j < m; ++j) out.x[j] = std::clamp(x_in[j], 0.0, 1.0);
    const auto &x = out.x;
    // Running maximum of x over strictly higher utilities, lowest index on ties.
    int best = -1;
    std::size_t p = 0;
    while (p < order.size()) {
        std::size_t q = p;
        while (q < order.size() && u[order[q]] == u[order[p]]) ++q;
        for (std::size_t t = p; t < q; ++t) {
            const int j = order[t];
            out.blocker[j] = best;
            out.beta[j] = best < 0 ? x[j] : std::min(x[j], 1.0 - x[best]);
        }
        for (std::size_t t = p; t < q; ++t) {
            const int j = order[t];
            if (best < 0 || x[j] > x[best] || (x[j] == x[best] && j < best)) best = j;
        }
        p = q;
    }
    return out;
}

}  // namespace

std::vector<double> beta_weights(std::span<const double> x, std::size_t i, const Instance &inst) {
    return beta_detail(x, i, inst).beta;
}

double KnapsackDual::objective(std::span<const double> beta) const {
    double v = lambda_prime;
    for (std::size_t j = 0; j < eta.size(); ++j) v += eta[j] * beta[j];
    return v;
}

KnapsackDual knapsack_dual(std::span<const double> beta, std::size_t i, const Instance &inst) {
    const int m = inst.n_options();
    require(static_cast<int>(beta.size()) == m, "weights have the wrong length");
    const auto r = inst.scenarios.reward_row(i);
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r[a] > r[b]; });
    KnapsackDual d;
    double filled = 0.0;
    for (int j : order) {
        if (filled + beta[j] >= 1.0 - 1e-12) {
            d.critical = j;
            d.primal_value += r[j] * (1.0 - filled);
            break;
        }
        filled += beta[j];
        d.primal_value += r[j] * beta[j];
    }
    if (d.critical < 0) throw UnderfilledError("subproblem underfilled");
    d.lambda_prime = r[d.critical];
    d.eta.resize(m);
    for (int j = 0; j < m; ++j) d.eta[j] = std::max(0.0, r[j] - d.lambda_prime);
    return d;
}

BendersCut fractional_cut(std::span<const double> x_frac, std::size_t i, const Instance &inst) {
    const int m = inst.n_options();
    const auto bd = beta_detail(x_frac, i, inst);
    const auto kd = knapsack_dual(bd.beta, i, inst);
    BendersCut c;
    c.scenario = i;
    c.intercept = kd.lambda_prime;
    c.coeffs.assign(m, 0.0);
    for (int j = 0; j < m; ++j) {
        const double eta = kd.eta[j];
        if (eta == 0.0) continue;
        if (bd.blocker[j] < 0 || bd.beta[j] == bd.x[j]) {
            c.coeffs[j] += eta;
        } else {
            c.intercept += eta;
            c.coeffs[bd.blocker[j]] -= eta;
        }
    }
    return c;
}

std::vector<double> default_stabilizer_center(const DecisionSpace &space) {
    const int n = space.n_options;
    std::vector<double> c(n, 0.5);
    int free = 0;
    for (int j = 0; j < n; ++j) {
        if (space.is_fixed_one(j)) {
            c[j] = 1.0;
        } else {
            ++free;
        }
    }
    const int limit = space.offer_limit();
    if (limit >= 0 && free > 0) {
        const double share = std::clamp(
            static_cast<double>(limit - static_cast<int>(space.fixed_ones.size())) / free, 0.0, 1.0);
        for (int j = 0; j < n; ++j) {
            if (!space.is_fixed_one(j)) c[j] = share;
        }
    }
    return c;
}

Stage1Config default_stage1_config(AppTag tag) {
    Stage1Config cfg;
    if (tag == AppTag::CAOP) {
        cfg.rho = 1e-2;
        cfg.stabilizer.enabled = true;
    }
    return cfg;
}

double theta_upper(const Instance &inst, std::size_t i) {
    const auto r = inst.scenarios.reward_row(i);
    return *std::max_element(r.begin(), r.end());
}

double theta_lower(const Instance &inst, std::size_t i) {
    const auto r = inst.scenarios.reward_row(i);
    return *std::min_element(r.begin(), r.end());
}

double relative_violation(double theta, double rhs) { return (theta - rhs) / std::max(1.0, std::abs(rhs)); }

LpProblem build_master(const Instance &inst) {
    const int m = inst.n_options();
    const std::size_t n = inst.n_scenarios();
    LpProblem p;
    for (int j = 0; j < m; ++j) p.add_variable(0.0, inst.space.is_fixed_one(j) ? 1.0 : 0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        p.add_variable(1.0 / static_cast<double>(n), theta_lower(inst, i), theta_upper(inst, i));
    }
    for (const auto &row : inst.space.ineq) p.add_dense_row(row.coeffs, RowSense::LessEqual, row.rhs);
    for (const auto &row : inst.space.eq) p.add_dense_row(row.coeffs, RowSense::Equal, row.rhs);
    return p;
}

SparseRow cut_row(const BendersCut &cut, int n_options) {
    SparseRow row;
    for (int j = 0; j < n_options; ++j) {
        if (std::abs(cut.coeffs[j]) >= 1e-12) row.push(j, -cut.coeffs[j]);
    }
    row.push(n_options + static_cast<int>(cut.scenario), 1.0);
    return row;
}

Stage1Result stage1(const Instance &inst, const Stage1Config &cfg) {
    inst.validate();
    require(cfg.rho >= 0.0 && cfg.max_iterations >= 1, "invalid stage-1 configuration");
    const int m = inst.n_options();
    const std::size_t n = inst.n_scenarios();
    const auto &stab = cfg.stabilizer;
    std::vector<double> center = stab.center.empty() ? default_stabilizer_center(inst.space) : stab.center;
    require(static_cast<int>(center.size()) == m, "stabilizer center has the wrong length");
    require(stab.step0 > 0.0 && stab.step0 <= 1.0, "stabilizer step must lie in (0, 1]");

    LpSolver solver(build_master(inst));
    Stage1Result res;
    res.lower_bound = -kInf;
    const bool can_round = inst.space.app_tag != AppTag::GENERIC;
    double step = stab.step0;
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    auto try_round = [&](std::span<const double> x) {
        if (!can_round) return;
        auto xr = round_to_feasible(inst.space.app_tag, x, inst.space);
        if (!inst.space.is_feasible(xr)) return;
        const double v = sample_objective(xr, inst);
        if (v > res.lower_bound) {
            res.lower_bound = v;
            res.best_rounded = std::move(xr);
        }
    };

    // Adds cuts at point xs that the master point (x, theta) violates.
    auto separate = [&](std::span<const double> xs, const std::vector<double> &primal) {
        int added = 0;
        for (std::size_t i = 0; i < n; ++i) {
            auto cut = fractional_cut(xs, i, inst);
            const double theta = primal[m + i];
            if (relative_violation(theta, cut.rhs(std::span<const double>(primal.data(), m))) <= cfg.mrv) continue;
            solver.add_row(cut_row(cut, m), RowSense::LessEqual, cut.intercept);
            res.cuts.push_back(std::move(cut));
            ++added;
        }
        return added;
    };

    for (int it = 0; it < cfg.max_iterations; ++it) {
        const auto sol = solver.solve();
        if (sol.status == LpStatus::Infeasible) throw InfeasibleError("relaxed decision space is empty");
        if (sol.status != LpStatus::Optimal) throw NumericalError("stage-1 master is not bounded");
        res.iterations = it + 1;
        res.upper_bound = sol.objective;
        res.ub_trace.push_back(sol.objective);
        res.x_frac.assign(sol.primal.begin(), sol.primal.begin() + m);
        try_round(res.x_frac);

        const double gap = std::abs(res.upper_bound - res.lower_bound) /
                           std::max(std::abs(res.lower_bound), 1e-12);
        if (std::isfinite(res.lower_bound) && gap <= cfg.rho) {
            res.converged = true;
            res.step_trace.push_back(0.0);
            break;
        }

        int added = 0;
        if (stab.enabled) {
            std::vector<double> xs(m);
            for (int j = 0; j < m; ++j) xs[j] = step * res.x_frac[j] + (1.0 - step) * center[j];
            for (int j = 0; j < m; ++j) center[j] = 0.5 * (center[j] + xs[j]);
            res.step_trace.push_back(step);
            step = std::min(step + stab.step_increment, 1.0);
            try_round(xs);
            added = separate(xs, sol.primal);
        } else {
            res.step_trace.push_back(1.0);
        }
        if (added == 0) added = separate(res.x_frac, sol.primal);
        if (added == 0) {
            res.converged = true;
            break;
        }
        if (it + 1 == cfg.max_iterations) res.hit_iteration_cap = true;
        if (elapsed() > cfg.time_limit) {
            res.hit_time_limit = true;
            break;
        }
    }
    return res;
}

nlohmann::ordered_json cuts_to_json(const std::vector<BendersCut> &cuts) {
    auto out = nlohmann::ordered_json::array();
    for (const auto &c : cuts) {
        nlohmann::ordered_json j;
        j["scenario"] = c.scenario;
        j["intercept"] = c.intercept;
        j["coeffs"] = c.coeffs;
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<BendersCut> cuts_from_json(const nlohmann::ordered_json &j) {
    require(j.is_array(), "cut pool must be a JSON array");
    std::vector<BendersCut> out;
    for (const auto &e : j) {
        BendersCut c;
        c.scenario = e.at("scenario").get<std::size_t>();
        c.intercept = e.at("intercept").get<double>();
        c.coeffs = e.at("coeffs").get<std::vector<double>>();
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace sbbd
