#include "sbbd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sbbd {

std::string to_string(AppTag tag) {
    switch (tag) {
        case AppTag::CAOP: return "CAOP";
        case AppTag::FLoP: return "FLoP";
        case AppTag::MSMFLP: return "MSMFLP";
        case AppTag::GENERIC: return "GENERIC";
    }
    return "GENERIC";
}

AppTag app_tag_from_string(const std::string &name) {
    for (auto t : {AppTag::CAOP, AppTag::FLoP, AppTag::MSMFLP, AppTag::GENERIC}) {
        if (to_string(t) == name) return t;
    }
    throw std::invalid_argument("unknown app tag: " + name);
}

double LinearRow::activity(std::span<const double> x) const {
    return std::inner_product(coeffs.begin(), coeffs.end(), x.begin(), 0.0);
}

double LinearRow::activity(std::span<const int> x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) s += coeffs[j] * x[j];
    return s;
}

void DecisionSpace::validate() const {
    if (n_options <= 0) throw std::invalid_argument("decision space needs at least one option");
    for (const auto *rows : {&ineq, &eq}) {
        for (const auto &row : *rows) {
            if (row.coeffs.size() != static_cast<std::size_t>(n_options)) {
                throw std::invalid_argument("constraint row length differs from n_options");
            }
            for (double c : row.coeffs) {
                if (!std::isfinite(c)) throw std::invalid_argument("non-finite constraint coefficient");
            }
            if (!std::isfinite(row.rhs)) throw std::invalid_argument("non-finite right-hand side");
        }
    }
    for (int j : fixed_ones) {
        if (j < 0 || j >= n_options) throw std::invalid_argument("fixed option index out of range");
    }
    for (const auto &g : groups) {
        for (int j : g) {
            if (j < 0 || j >= n_options) throw std::invalid_argument("group option index out of range");
        }
    }
}

bool DecisionSpace::is_fixed_one(int j) const {
    return std::find(fixed_ones.begin(), fixed_ones.end(), j) != fixed_ones.end();
}

bool DecisionSpace::is_feasible(std::span<const int> x, double tol) const {
    if (x.size() != static_cast<std::size_t>(n_options)) return false;
    for (int v : x) {
        if (v != 0 && v != 1) return false;
    }
    for (int j : fixed_ones) {
        if (x[j] != 1) return false;
    }
    for (const auto &row : ineq) {
        if (row.activity(x) > row.rhs + tol) return false;
    }
    for (const auto &row : eq) {
        if (std::abs(row.activity(x) - row.rhs) > tol) return false;
    }
    return true;
}

bool DecisionSpace::is_relaxed_feasible(std::span<const double> x, double tol) const {
    if (x.size() != static_cast<std::size_t>(n_options)) return false;
    for (double v : x) {
        if (v < -tol || v > 1.0 + tol) return false;
    }
    for (int j : fixed_ones) {
        if (std::abs(x[j] - 1.0) > tol) return false;
    }
    for (const auto &row : ineq) {
        if (row.activity(x) > row.rhs + tol) return false;
    }
    for (const auto &row : eq) {
        if (std::abs(row.activity(x) - row.rhs) > tol) return false;
    }
    return true;
}

int DecisionSpace::offer_limit() const {
    // A row with unit coefficients on every free option; fixed options it omits
    // still count as offered.
    auto extra = [&](const LinearRow &row) {
        int omitted = 0;
        for (int j = 0; j < n_options; ++j) {
            if (row.coeffs[j] == 1.0) continue;
            if (row.coeffs[j] == 0.0 && is_fixed_one(j)) {
                ++omitted;
                continue;
            }
            return -1;
        }
        return omitted;
    };
    for (const auto &row : eq) {
        if (const int k = extra(row); k >= 0) return static_cast<int>(std::lround(row.rhs)) + k;
    }
    for (const auto &row : ineq) {
        if (const int k = extra(row); k >= 0) return static_cast<int>(std::floor(row.rhs + 1e-9)) + k;
    }
    return -1;
}

std::size_t repair_utility_ties(ScenarioSet &scenarios) {
    std::size_t touched = 0;
    std::vector<double> sorted(scenarios.m);
    for (std::size_t i = 0; i < scenarios.n; ++i) {
        bool jittered = false;
        for (int attempt = 0; attempt < 8; ++attempt) {
            auto row = scenarios.util_row(i);
            std::copy(row.begin(), row.end(), sorted.begin());
            std::sort(sorted.begin(), sorted.end());
            bool tie = false;
            for (std::size_t k = 1; k < sorted.size(); ++k) {
                if (sorted[k] - sorted[k - 1] <= 1e-12 * std::max(1.0, std::abs(sorted[k]))) {
                    tie = true;
                    break;
                }
            }
            if (!tie) break;
            for (std::size_t k = 0; k < scenarios.m; ++k) {
                double &v = scenarios.util(i, k);
                v += static_cast<double>(k) * 1e-9 * std::max(1.0, std::abs(v));
            }
            jittered = true;
        }
        if (jittered) ++touched;
    }
    return touched;
}

bool utilities_distinct(const ScenarioSet &scenarios) {
    std::vector<double> sorted(scenarios.m);
    for (std::size_t i = 0; i < scenarios.n; ++i) {
        auto row = scenarios.util_row(i);
        std::copy(row.begin(), row.end(), sorted.begin());
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
    }
    return true;
}

void Instance::validate() const {
    space.validate();
    if (scenarios.m != static_cast<std::size_t>(space.n_options)) {
        throw std::invalid_argument("scenario columns differ from the number of options");
    }
    if (scenarios.u.size() != scenarios.n * scenarios.m || scenarios.r.size() != scenarios.n * scenarios.m) {
        throw std::invalid_argument("scenario matrices have inconsistent sizes");
    }
    for (std::size_t k = 0; k < scenarios.u.size(); ++k) {
        if (!std::isfinite(scenarios.u[k]) || !std::isfinite(scenarios.r[k])) {
            throw std::invalid_argument("non-finite utility or reward");
        }
    }
}

Choice choose(std::span<const int> x, std::size_t i, const Instance &inst) {
    if (i >= inst.scenarios.n) throw std::out_of_range("scenario index out of range");
    const auto u = inst.scenarios.util_row(i);
    const auto r = inst.scenarios.reward_row(i);
    Choice best;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (x[j] != 1) continue;
        if (best.option < 0 || u[j] > u[best.option] || (u[j] == u[best.option] && r[j] > r[best.option])) {
            best = {static_cast<int>(j), r[j]};
        }
    }
    if (best.option < 0) throw std::invalid_argument("empty offer set");
    return best;
}

double sample_objective(std::span<const int> x, const Instance &inst) {
    double total = 0.0;
    for (std::size_t i = 0; i < inst.scenarios.n; ++i) total += choose(x, i, inst).reward;
    return total / static_cast<double>(inst.scenarios.n);
}

double cooperative_fraction(std::span<const int> x, const Instance &inst) {
    std::size_t cooperative = 0;
    for (std::size_t i = 0; i < inst.scenarios.n; ++i) {
        const auto u = inst.scenarios.util_row(i);
        const auto r = inst.scenarios.reward_row(i);
        int by_reward = -1;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (x[j] != 1) continue;
            if (by_reward < 0 || r[j] > r[by_reward] || (r[j] == r[by_reward] && u[j] > u[by_reward])) {
                by_reward = static_cast<int>(j);
            }
        }
        if (by_reward == choose(x, i, inst).option) ++cooperative;
    }
    return static_cast<double>(cooperative) / static_cast<double>(inst.scenarios.n);
}

void for_each_feasible(const DecisionSpace &space, const std::function<bool(const BinaryDecision &)> &visit,
                       int cap) {
    space.validate();
    const int n = space.n_options;
    std::vector<char> fixed(n, 0);
    for (int j : space.fixed_ones) fixed[j] = 1;
    const int n_free = n - static_cast<int>(std::count(fixed.begin(), fixed.end(), 1));
    if (n_free > cap) {
        throw CapacityError("enumeration needs " + std::to_string(n_free) + " free binaries, cap is " +
                            std::to_string(cap));
    }

    struct RowState {
        const LinearRow *row;
        bool equality;
        std::vector<double> suffix_min;  // reachable contribution of variables j.. n-1
        std::vector<double> suffix_max;
    };
    std::vector<RowState> rows;
    auto add_rows = [&](const std::vector<LinearRow> &src, bool equality) {
        for (const auto &row : src) {
            RowState st{&row, equality, std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
            for (int j = n - 1; j >= 0; --j) {
                const double c = row.coeffs[j];
                const double lo = fixed[j] ? c : std::min(0.0, c);
                const double hi = fixed[j] ? c : std::max(0.0, c);
                st.suffix_min[j] = st.suffix_min[j + 1] + lo;
                st.suffix_max[j] = st.suffix_max[j + 1] + hi;
            }
            rows.push_back(std::move(st));
        }
    };
    add_rows(space.ineq, false);
    add_rows(space.eq, true);

    constexpr double tol = 1e-9;
    BinaryDecision x(n, 0);
    std::vector<double> activity(rows.size(), 0.0);
    bool stop = false;

    auto viable = [&](int next) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto &st = rows[k];
            if (activity[k] + st.suffix_min[next] > st.row->rhs + tol) return false;
            if (st.equality && activity[k] + st.suffix_max[next] < st.row->rhs - tol) return false;
        }
        return true;
    };

    std::function<void(int)> descend = [&](int j) {
        if (stop) return;
        if (j == n) {
            if (!visit(x)) stop = true;
            return;
        }
        for (int v = fixed[j] ? 1 : 0; v <= 1 && !stop; ++v) {
            x[j] = v;
            for (std::size_t k = 0; k < rows.size(); ++k) activity[k] += v * rows[k].row->coeffs[j];
            if (viable(j + 1)) descend(j + 1);
            for (std::size_t k = 0; k < rows.size(); ++k) activity[k] -= v * rows[k].row->coeffs[j];
        }
        x[j] = 0;
    };
    if (viable(0)) descend(0);
}

std::vector<BinaryDecision> enumerate_feasible(const DecisionSpace &space, int cap) {
    std::vector<BinaryDecision> out;
    for_each_feasible(space, [&](const BinaryDecision &x) {
        out.push_back(x);
        return true;
    }, cap);
    return out;
}

EnumerationResult enumerate_optimal(const Instance &inst, int cap) {
    inst.validate();
    const auto &sc = inst.scenarios;
    // Per-scenario preference order: utility descending, then reward descending, then index.
    std::vector<std::vector<int>> order(sc.n);
    for (std::size_t i = 0; i < sc.n; ++i) {
        auto &o = order[i];
        o.resize(sc.m);
        std::iota(o.begin(), o.end(), 0);
        std::stable_sort(o.begin(), o.end(), [&](int a, int b) {
            if (sc.util(i, a) != sc.util(i, b)) return sc.util(i, a) > sc.util(i, b);
            return sc.reward(i, a) > sc.reward(i, b);
        });
    }
    EnumerationResult best;
    bool have = false;
    for_each_feasible(inst.space, [&](const BinaryDecision &x) {
        ++best.n_feasible;
        double total = 0.0;
        for (std::size_t i = 0; i < sc.n; ++i) {
            int chosen = -1;
            for (int j : order[i]) {
                if (x[j] == 1) {
                    chosen = j;
                    break;
                }
            }
            if (chosen < 0) throw std::invalid_argument("empty offer set");
            total += sc.reward(i, chosen);
        }
        const double value = total / static_cast<double>(sc.n);
        if (!have || value > best.value) {
            best.x = x;
            best.value = value;
            have = true;
        }
        return true;
    }, cap);
    if (!have) throw InfeasibleError("decision space has no feasible point");
    return best;
}

}  // namespace sbbd
