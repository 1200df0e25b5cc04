#include "sbbd/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "sbbd/apps.hpp"

namespace sbbd {

std::string to_string(Method m) {
    switch (m) {
        case Method::SBBD:
            return "sbbd";
        case Method::EXTENSIVE:
            return "extensive";
        case Method::ENUM:
            return "enum";
    }
    return "?";
}

Method method_from_string(const std::string &name) {
    if (name == "sbbd") return Method::SBBD;
    if (name == "extensive" || name == "milp") return Method::EXTENSIVE;
    if (name == "enum") return Method::ENUM;
    throw std::invalid_argument("unknown method: " + name);
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal:
            return "Optimal";
        case SolveStatus::TimeLimit:
            return "TimeLimit";
        case SolveStatus::Infeasible:
            return "Infeasible";
    }
    return "?";
}

void SolveConfig::validate() const {
    if (!(time_limit > 0.0)) throw std::invalid_argument("time limit must be > 0");
    if (!(mrv >= 0.0)) throw std::invalid_argument("MRV must be >= 0");
    if (heuristic_period < 1) throw std::invalid_argument("heuristic period must be >= 1");
    if (!(int_tol > 0.0 && int_tol < 0.5)) throw std::invalid_argument("integrality tolerance must lie in (0, 0.5)");
    if (max_root_passes < 0) throw std::invalid_argument("root pass limit must be >= 0");
}

double gap_percent(double bound, double objective) {
    if (!std::isfinite(bound) || !std::isfinite(objective)) return kInf;
    const double diff = bound - objective;
    if (std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(bound))) return 0.0;
    return diff / std::max(std::abs(bound), 1e-12) * 100.0;
}

int branch_select(std::span<const double> x, double tol) {
    int best = -1;
    double best_dist = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double frac = x[j] - std::floor(x[j]);
        if (frac <= tol || frac >= 1.0 - tol) continue;
        const double dist = std::abs(frac - 0.5);
        if (best < 0 || dist < best_dist) {
            best = static_cast<int>(j);
            best_dist = dist;
        }
    }
    return best;
}

namespace {

using Clock = std::chrono::steady_clock;

// Admission threshold for lazy cuts at integer nodes; tighter than MRV so that
// fathomed integer nodes carry exact values.
constexpr double kLazyTol = 1e-9;

struct Node {
    std::vector<signed char> fix;  // -1 free, else the fixed value
    double bound = kInf;
    LpBasis basis;
    std::int64_t order = 0;
};

struct NodeLess {
    bool operator()(const Node &a, const Node &b) const {
        if (a.bound != b.bound) return a.bound < b.bound;
        return a.order > b.order;
    }
};

// Best-bound branch-and-bound with depth-first plunging over the x columns of an
// LP relaxation. Subclasses add cuts through the hooks.
class TreeSearch {
public:
    TreeSearch(const Instance &inst, const SolveConfig &cfg, LpProblem relaxation, Clock::time_point start)
        : inst_(inst), cfg_(cfg), m_(inst.n_options()), lp_(std::move(relaxation)), start_(start) {
        for (int j = 0; j < m_; ++j) {
            lo_.push_back(lp_.problem().lower[j]);
            up_.push_back(lp_.problem().upper[j]);
        }
    }
    virtual ~TreeSearch() = default;

    Solution run(Method method);

protected:
    // Cut rounds at the root; returns the number of rows added.
    virtual int root_pass(const LpSolution &) { return 0; }
    // Cuts at an integer node; returns the number of rows added.
    virtual int lazy(const BinaryDecision &, const LpSolution &) { return 0; }
    // Separation on the heuristic schedule after the root.
    virtual int periodic(const LpSolution &s) { return root_pass(s); }
    // Whether the choice variables implied at integer x are integral.
    virtual bool y_integral(const BinaryDecision &, const LpSolution &) { return true; }

    double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
    bool out_of_time() const { return elapsed() > cfg_.time_limit; }

    void offer_incumbent(const BinaryDecision &x) {
        if (!inst_.space.is_feasible(x)) return;
        const double v = sample_objective(x, inst_);
        if (incumbent_.empty() || v > incumbent_value_) {
            incumbent_ = x;
            incumbent_value_ = v;
        }
    }

    // Rounds the LP point with the application heuristic and offers it.
    BinaryDecision heuristic_round(const LpSolution &s) {
        if (inst_.space.app_tag == AppTag::GENERIC) return {};
        std::vector<double> xb(s.primal.begin(), s.primal.begin() + m_);
        auto xr = round_to_feasible(inst_.space.app_tag, xb, inst_.space);
        offer_incumbent(xr);
        return xr;
    }

    const Instance &inst_;
    const SolveConfig &cfg_;
    int m_;
    LpSolver lp_;
    Clock::time_point start_;
    std::vector<double> lo_, up_;
    BinaryDecision incumbent_;
    double incumbent_value_ = -kInf;
    SolveStats stats_;

private:
    enum class Outcome { Pruned, Branch };
    Outcome process(Node &node, bool root, int &branch_var, std::vector<double> &xbar);
    void apply(const Node &node);
};

void TreeSearch::apply(const Node &node) {
    for (int j = 0; j < m_; ++j) {
        if (node.fix[j] < 0) {
            lp_.set_bounds(j, lo_[j], up_[j]);
        } else {
            lp_.set_bounds(j, node.fix[j], node.fix[j]);
        }
    }
    if (!node.basis.status.empty()) lp_.set_basis(node.basis);
}

TreeSearch::Outcome TreeSearch::process(Node &node, bool root, int &branch_var, std::vector<double> &xbar) {
    apply(node);
    int passes = 0;
    bool periodic_done = false;
    while (true) {
        const auto sol = lp_.solve();
        stats_.lp_iterations += sol.iterations;
        if (sol.status == LpStatus::Infeasible) {
            node.bound = -kInf;
            return Outcome::Pruned;
        }
        if (sol.status != LpStatus::Optimal) throw NumericalError("master relaxation is unbounded");
        node.bound = std::min(node.bound, sol.objective);
        if (root) stats_.root_bound = sol.objective;
        const double prune_tol = 1e-9 * std::max(1.0, std::abs(incumbent_value_));
        if (!incumbent_.empty() && sol.objective <= incumbent_value_ + prune_tol) return Outcome::Pruned;

        xbar.assign(sol.primal.begin(), sol.primal.begin() + m_);
        const int j = branch_select(xbar, cfg_.int_tol);
        if (j < 0) {
            BinaryDecision x(m_);
            for (int t = 0; t < m_; ++t) x[t] = static_cast<int>(std::lround(xbar[t]));
            if (lazy(x, sol) > 0) continue;
            ++stats_.incumbent_checks;
            if (!y_integral(x, sol)) ++stats_.y_integrality_failures;
            offer_incumbent(x);
            return Outcome::Pruned;
        }
        if (root && passes < cfg_.max_root_passes) {
            ++passes;
            if (root_pass(sol) > 0 && !out_of_time()) continue;
        }
        if (!root && !periodic_done && stats_.n_nodes % cfg_.heuristic_period == 0) {
            periodic_done = true;
            if (periodic(sol) > 0) continue;
        }
        branch_var = j;
        return Outcome::Branch;
    }
}

Solution TreeSearch::run(Method method) {
    std::priority_queue<Node, std::vector<Node>, NodeLess> open;
    std::int64_t order = 0;
    Node current;
    current.fix.assign(m_, -1);
    bool have_current = true;
    bool root = true;
    bool timed_out = false;
    double global_bound = kInf;
    bool infeasible = false;

    while (have_current || !open.empty()) {
        if (!have_current) {
            current = open.top();
            open.pop();
            if (!incumbent_.empty() &&
                current.bound <= incumbent_value_ + 1e-9 * std::max(1.0, std::abs(incumbent_value_))) {
                have_current = false;
                continue;
            }
        }
        if (out_of_time()) {
            timed_out = true;
            break;
        }
        const double parent_bound = current.bound;
        // Bound sandwich: the incumbent never exceeds the best open bound.
        double open_bound = parent_bound;
        if (!open.empty()) open_bound = std::max(open_bound, open.top().bound);
        if (!incumbent_.empty() && std::isfinite(open_bound) &&
            incumbent_value_ > open_bound + 1e-7 * std::max(1.0, std::abs(open_bound))) {
            ++stats_.sandwich_failures;
        }

        ++stats_.n_nodes;
        int branch_var = -1;
        std::vector<double> xbar;
        const auto outcome = process(current, root, branch_var, xbar);
        if (root) {
            if (!std::isfinite(current.bound) && current.bound < 0) infeasible = incumbent_.empty();
            global_bound = current.bound;
        }
        root = false;
        if (outcome == Outcome::Pruned) {
            have_current = false;
            continue;
        }
        // Plunge toward the rounding direction; park the sibling.
        const int up_first = xbar[branch_var] >= 0.5 ? 1 : 0;
        Node sibling;
        sibling.fix = current.fix;
        sibling.fix[branch_var] = static_cast<signed char>(1 - up_first);
        sibling.bound = current.bound;
        sibling.basis = lp_.basis();
        sibling.order = order++;
        open.push(std::move(sibling));
        current.fix[branch_var] = static_cast<signed char>(up_first);
        current.basis.status.clear();
        have_current = true;
    }

    Solution out;
    out.method = method;
    out.stats = stats_;
    out.stats.t_seconds = elapsed();
    if (infeasible) {
        out.status = SolveStatus::Infeasible;
        out.objective = -kInf;
        out.bound = -kInf;
        return out;
    }
    double bound = incumbent_.empty() ? -kInf : incumbent_value_;
    if (timed_out) {
        bound = std::max(bound, current.bound);
        while (!open.empty()) {
            bound = std::max(bound, open.top().bound);
            open.pop();
        }
        if (std::isfinite(global_bound)) bound = std::min(bound, std::max(global_bound, incumbent_value_));
    }
    out.x = incumbent_;
    out.objective = incumbent_value_;
    out.bound = bound;
    out.stats.ogap_percent = gap_percent(bound, incumbent_value_);
    out.stats.rgap_percent = gap_percent(out.stats.root_bound, incumbent_value_);
    out.status = out.stats.ogap_percent < 0.01 ? SolveStatus::Optimal : SolveStatus::TimeLimit;
    if (incumbent_.empty()) out.status = timed_out ? SolveStatus::TimeLimit : SolveStatus::Infeasible;
    return out;
}

class BendersSearch final : public TreeSearch {
public:
    BendersSearch(const Instance &inst, const SolveConfig &cfg, Clock::time_point start)
        : TreeSearch(inst, cfg, build_master(inst), start) {}

    void seed(const Stage1Result &s1) {
        for (const auto &c : s1.cuts) add_cut(c);
        if (!s1.best_rounded.empty()) offer_incumbent(s1.best_rounded);
        stats_.stage1_iterations = s1.iterations;
    }

    SolveStats &stats() { return stats_; }
    double incumbent_value() const { return incumbent_value_; }
    const BinaryDecision &incumbent() const { return incumbent_; }

protected:
    int root_pass(const LpSolution &s) override {
        std::vector<double> xb(s.primal.begin(), s.primal.begin() + m_);
        int added = 0;
        for (std::size_t i = 0; i < inst_.n_scenarios(); ++i) {
            auto cut = fractional_cut(xb, i, inst_);
            if (violated(cut, s, xb, cfg_.mrv)) added += add_cut(cut);
        }
        const auto xr = heuristic_round(s);
        if (!xr.empty()) {
            for (std::size_t i = 0; i < inst_.n_scenarios(); ++i) {
                auto cut = integer_cut(xr, i, inst_);
                if (violated(cut, s, xb, cfg_.mrv)) added += add_cut(cut);
            }
        }
        return added;
    }

    int lazy(const BinaryDecision &x, const LpSolution &s) override {
        std::vector<double> xb(s.primal.begin(), s.primal.begin() + m_);
        int added = 0;
        for (std::size_t i = 0; i < inst_.n_scenarios(); ++i) {
            auto cut = integer_cut(x, i, inst_);
            if (violated(cut, s, xb, kLazyTol)) added += add_cut(cut);
        }
        return added;
    }

    bool y_integral(const BinaryDecision &x, const LpSolution &) override {
        const std::vector<double> xd(x.begin(), x.end());
        for (std::size_t i = 0; i < inst_.n_scenarios(); ++i) {
            const auto beta = beta_weights(xd, i, inst_);
            int ones = 0;
            for (double b : beta) {
                if (b != 0.0 && b != 1.0) return false;
                ones += b == 1.0;
            }
            if (ones != 1) return false;
        }
        return true;
    }

private:
    bool violated(const BendersCut &cut, const LpSolution &s, std::span<const double> xb, double tol) const {
        return relative_violation(s.primal[m_ + cut.scenario], cut.rhs(xb)) > tol;
    }

    int add_cut(const BendersCut &cut) {
        std::vector<double> key(cut.coeffs);
        key.push_back(cut.intercept);
        if (!pool_.insert({cut.scenario, std::move(key)}).second) return 0;
        lp_.add_row(cut_row(cut, m_), RowSense::LessEqual, cut.intercept);
        ++stats_.n_cuts;
        return 1;
    }

    std::set<std::pair<std::size_t, std::vector<double>>> pool_;
};

class ExtensiveSearch final : public TreeSearch {
public:
    ExtensiveSearch(const Instance &inst, const SolveConfig &cfg, Clock::time_point start)
        : TreeSearch(inst, cfg, build_extensive(inst, cfg.reduced_model), start) {}

protected:
    int root_pass(const LpSolution &s) override {
        heuristic_round(s);
        return 0;
    }

    bool y_integral(const BinaryDecision &, const LpSolution &s) override {
        for (std::size_t k = m_; k < s.primal.size(); ++k) {
            const double v = s.primal[k];
            if (std::abs(v - std::round(v)) > 1e-6) return false;
        }
        return true;
    }
};

}  // namespace

LpProblem build_extensive(const Instance &inst, bool reduced) {
    const int m = inst.n_options();
    const std::size_t n = inst.n_scenarios();
    LpProblem p;
    for (int j = 0; j < m; ++j) p.add_variable(0.0, inst.space.is_fixed_one(j) ? 1.0 : 0.0, 1.0);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) p.add_variable(w * inst.scenarios.reward(i, j), 0.0, kInf);
    }
    auto y = [&](std::size_t i, int j) { return m + static_cast<int>(i) * m + j; };
    for (const auto &row : inst.space.ineq) p.add_dense_row(row.coeffs, RowSense::LessEqual, row.rhs);
    for (const auto &row : inst.space.eq) p.add_dense_row(row.coeffs, RowSense::Equal, row.rhs);
    for (std::size_t i = 0; i < n; ++i) {
        SparseRow one;
        for (int j = 0; j < m; ++j) one.push(y(i, j), 1.0);
        p.add_row(std::move(one), RowSense::Equal, 1.0);
        for (int j = 0; j < m; ++j) {
            SparseRow link;
            link.push(y(i, j), 1.0);
            link.push(j, -1.0);
            p.add_row(std::move(link), RowSense::LessEqual, 0.0);
        }
        if (reduced) continue;
        const auto u = inst.scenarios.util_row(i);
        for (int k = 0; k < m; ++k) {
            SparseRow dom;
            for (int j = 0; j < m; ++j) {
                if (u[j] < u[k]) dom.push(y(i, j), 1.0);
            }
            if (dom.index.empty()) continue;
            dom.push(k, 1.0);
            p.add_row(std::move(dom), RowSense::LessEqual, 1.0);
        }
    }
    return p;
}

Solution solve_sbbd(const Instance &inst, const SolveConfig &cfg) {
    cfg.validate();
    inst.validate();
    const auto start = Clock::now();
    Stage1Config s1cfg = cfg.stage1 ? *cfg.stage1 : default_stage1_config(inst.space.app_tag);
    s1cfg.mrv = cfg.mrv;
    s1cfg.time_limit = std::min(s1cfg.time_limit, cfg.time_limit);
    Stage1Result s1;
    try {
        s1 = stage1(inst, s1cfg);
    } catch (const InfeasibleError &) {
        Solution out;
        out.method = Method::SBBD;
        out.status = SolveStatus::Infeasible;
        out.objective = out.bound = -kInf;
        out.stats.t_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        return out;
    }
    BendersSearch search(inst, cfg, start);
    search.seed(s1);
    if (s1.hit_time_limit) {
        Solution out;
        out.method = Method::SBBD;
        out.x = search.incumbent();
        out.objective = search.incumbent_value();
        out.bound = std::max(s1.upper_bound, out.objective);
        out.stats = search.stats();
        out.stats.root_bound = s1.upper_bound;
        out.stats.t_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        out.stats.ogap_percent = gap_percent(out.bound, out.objective);
        out.stats.rgap_percent = gap_percent(s1.upper_bound, out.objective);
        out.status = out.stats.ogap_percent < 0.01 ? SolveStatus::Optimal : SolveStatus::TimeLimit;
        return out;
    }
    auto out = search.run(Method::SBBD);
    out.stats.stage1_iterations = s1.iterations;
    return out;
}

Solution solve_extensive(const Instance &inst, const SolveConfig &cfg) {
    cfg.validate();
    inst.validate();
    const std::size_t size = inst.n_scenarios() * static_cast<std::size_t>(inst.n_options());
    if (size > cfg.extensive_cap) {
        throw CapacityError("extensive form has N * |J| = " + std::to_string(size) + " above the cap of " +
                            std::to_string(cfg.extensive_cap));
    }
    const auto start = Clock::now();
    ExtensiveSearch search(inst, cfg, start);
    return search.run(Method::EXTENSIVE);
}

Solution solve_enum(const Instance &inst, const SolveConfig &cfg) {
    cfg.validate();
    inst.validate();
    const auto start = Clock::now();
    Solution out;
    out.method = Method::ENUM;
    try {
        const auto best = enumerate_optimal(inst);
        out.x = best.x;
        out.objective = best.value;
        out.bound = best.value;
        out.status = SolveStatus::Optimal;
        out.stats.n_nodes = static_cast<std::int64_t>(best.n_feasible);
        out.stats.root_bound = best.value;
    } catch (const InfeasibleError &) {
        out.status = SolveStatus::Infeasible;
        out.objective = out.bound = -kInf;
    }
    out.stats.t_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

Solution solve(const Instance &inst, const SolveConfig &cfg) {
    switch (cfg.method) {
        case Method::SBBD:
            return solve_sbbd(inst, cfg);
        case Method::EXTENSIVE:
            return solve_extensive(inst, cfg);
        case Method::ENUM:
            return solve_enum(inst, cfg);
    }
    throw std::invalid_argument("unknown method");
}

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::string solve_csv_row(const std::string &instance_id, const Solution &s) {
    std::ostringstream os;
    os << instance_id << ',' << to_string(s.method) << ',' << fmt(s.stats.t_seconds) << ',' << s.stats.n_nodes
       << ',' << s.stats.n_cuts << ',' << fmt(s.stats.rgap_percent) << ',' << fmt(s.stats.ogap_percent) << ','
       << fmt(s.objective) << ',' << fmt(s.bound) << ',' << to_string(s.status);
    return os.str();
}

nlohmann::ordered_json to_json(const Solution &s) {
    auto num = [](double v) -> nlohmann::ordered_json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::ordered_json j;
    j["method"] = to_string(s.method);
    j["status"] = to_string(s.status);
    j["objective"] = num(s.objective);
    j["bound"] = num(s.bound);
    j["x"] = s.x;
    nlohmann::ordered_json st;
    st["t_seconds"] = s.stats.t_seconds;
    st["nodes"] = s.stats.n_nodes;
    st["cuts"] = s.stats.n_cuts;
    st["rgap_pct"] = num(s.stats.rgap_percent);
    st["ogap_pct"] = num(s.stats.ogap_percent);
    st["root_bound"] = num(s.stats.root_bound);
    st["lp_iterations"] = s.stats.lp_iterations;
    st["stage1_iterations"] = s.stats.stage1_iterations;
    st["incumbent_checks"] = s.stats.incumbent_checks;
    st["y_integrality_failures"] = s.stats.y_integrality_failures;
    st["sandwich_failures"] = s.stats.sandwich_failures;
    j["stats"] = st;
    return j;
}

}  // namespace sbbd
