#include "sbbd/apps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

namespace sbbd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string &what) {
    if (!ok) throw std::invalid_argument(what);
}

std::vector<double> draw_vector(const DistributionSpec &spec, std::size_t n, std::uint64_t seed) {
    return sample_mcs(spec, n, 1, seed).values;
}

DecisionSpace caop_space(int n_options, double limit) {
    DecisionSpace sp;
    sp.n_options = n_options;
    sp.fixed_ones = {0};
    sp.ineq.push_back({std::vector<double>(n_options, 1.0), limit});
    sp.app_tag = AppTag::CAOP;
    return sp;
}

// Reads known keys with defaults and rejects anything else.
class JsonReader {
public:
    explicit JsonReader(const nlohmann::ordered_json &j) : j_(j) {
        require(j.is_object(), "application parameters must be a JSON object");
        used_.insert("app");
    }
    template <class T>
    void read(const char *key, T &out) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        out = j_.at(key).get<T>();
    }
    void read_scheme(SamplingScheme &out) {
        used_.insert("scheme");
        if (j_.contains("scheme")) out = sampling_scheme_from_string(j_.at("scheme").get<std::string>());
    }
    void finish() const {
        for (const auto &[key, value] : j_.items()) {
            require(used_.count(key) == 1, "unknown parameter: " + key);
        }
    }

private:
    const nlohmann::ordered_json &j_;
    std::set<std::string> used_;
};

double chosen_reward(std::span<const double> u, std::span<const double> r, std::span<const int> x) {
    int best = -1;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (x[j] != 1) continue;
        if (best < 0 || u[j] > u[best] || (u[j] == u[best] && r[j] > r[best])) best = static_cast<int>(j);
    }
    if (best < 0) throw std::invalid_argument("empty offer set");
    return r[best];
}

class ExponomialModel final : public ScenarioModel {
public:
    explicit ExponomialModel(const CaopExponomialParams &p) : p_(p) {
        const int m = p.n_products + 1;
        space_ = caop_space(m, p.gamma * m);
        reward_.assign(m, 0.0);
        v_.assign(m, 0.0);
        const auto R = draw_vector(DistributionSpec::lognormal(0.0, p.sigma_r), p.n_products,
                                   derive_seed(p.instance_seed, 0));
        auto V = draw_vector(DistributionSpec::normal(1.0, p.sigma_u), p.n_products, derive_seed(p.instance_seed, 1));
        std::sort(V.begin(), V.end(), std::greater<>());
        std::copy(R.begin(), R.end(), reward_.begin() + 1);
        std::copy(V.begin(), V.end(), v_.begin() + 1);
    }
    const DecisionSpace &space() const override { return space_; }
    ScenarioSet draw_raw(std::size_t n, std::uint64_t seed, SamplingScheme s) const override {
        const std::size_t m = v_.size();
        const auto xi = sample(DistributionSpec::exponential(p_.zeta), n, m, seed, s);
        ScenarioSet out(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                out.util(i, j) = v_[j] - xi(i, j);
                out.reward(i, j) = reward_[j];
            }
        }
        return out;
    }
    nlohmann::ordered_json describe() const override { return to_json(AppParams{p_}); }

private:
    CaopExponomialParams p_;
    DecisionSpace space_;
    std::vector<double> reward_, v_;
};

class MmnlModel final : public ScenarioModel {
public:
    explicit MmnlModel(const CaopMmnlParams &p) : p_(p), thetas_(mmnl_thetas(p.D)) {
        const int m = p.n_products + 1;
        space_ = caop_space(m, p.tau + 1);
        reward_ = mmnl_rewards(p);
        const auto psi = draw_vector(DistributionSpec::normal(0.0, 1.0), p.n_products, derive_seed(p.instance_seed, 0));
        double total = 0.0;
        for (double v : psi) total += std::abs(v);
        log_alpha_.assign(m, 0.0);
        for (int a = 1; a < m; ++a) log_alpha_[a] = std::log(std::abs(psi[a - 1]) / total);
    }
    const DecisionSpace &space() const override { return space_; }
    SegmentMatrix segments(std::size_t n, std::uint64_t seed, SamplingScheme s) const {
        const std::size_t A = p_.n_products;
        const auto beta = sample(DistributionSpec::bernoulli(0.5), n, A, derive_seed(seed, 1), s);
        const auto gamma = sample(DistributionSpec::normal(0.0, 1.0), n, A, derive_seed(seed, 2), s);
        SegmentMatrix out{n, A + 1, std::vector<double>(n * (A + 1), 0.0)};
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t a = 1; a <= A; ++a) {
                out.v[i * (A + 1) + a] = beta(i, a - 1) > 0.5
                                             ? log_alpha_[a] + thetas_.theta1 + thetas_.theta2 * gamma(i, a - 1)
                                             : -kInfinity;
            }
        }
        return out;
    }
    ScenarioSet draw_raw(std::size_t n, std::uint64_t seed, SamplingScheme s) const override {
        const auto seg = segments(n, seed, s);
        const std::size_t m = seg.m;
        const auto eps = sample(DistributionSpec::gumbel(0.0, 1.0), n, m, derive_seed(seed, 3), s);
        ScenarioSet out(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double v = seg.v[i * m + j];
                out.util(i, j) = std::isfinite(v) ? v + eps(i, j) : mmnl_sentinel(static_cast<int>(j));
                out.reward(i, j) = reward_[j];
            }
        }
        return out;
    }
    nlohmann::ordered_json describe() const override {
        auto j = to_json(AppParams{p_});
        j["theta1"] = thetas_.theta1;
        j["theta2"] = thetas_.theta2;
        return j;
    }

private:
    static constexpr double kInfinity = std::numeric_limits<double>::infinity();
    CaopMmnlParams p_;
    MmnlThetas thetas_;
    DecisionSpace space_;
    std::vector<double> reward_, log_alpha_;
};

class ProbitModel final : public ScenarioModel {
public:
    explicit ProbitModel(const CaopProbitParams &p) : p_(p) {
        const int m = p.n_products + 1;
        space_ = caop_space(m, p.tau + 1);
        const auto V = draw_vector(DistributionSpec::uniform(0.0, 100.0), p.n_products, derive_seed(p.instance_seed, 0));
        const auto R = draw_vector(DistributionSpec::uniform(0.0, 100.0), p.n_products, derive_seed(p.instance_seed, 1));
        v_.assign(m, 50.0);
        reward_.assign(m, 0.0);
        std::copy(V.begin(), V.end(), v_.begin() + 1);
        std::copy(R.begin(), R.end(), reward_.begin() + 1);
    }
    const DecisionSpace &space() const override { return space_; }
    ScenarioSet draw_raw(std::size_t n, std::uint64_t seed, SamplingScheme s) const override {
        const std::size_t m = v_.size();
        const auto xi = sample(DistributionSpec::normal(0.0, p_.variance), n, m, seed, s);
        ScenarioSet out(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                out.util(i, j) = v_[j] + xi(i, j);
                out.reward(i, j) = reward_[j];
            }
        }
        return out;
    }
    nlohmann::ordered_json describe() const override { return to_json(AppParams{p_}); }

private:
    CaopProbitParams p_;
    DecisionSpace space_;
    std::vector<double> v_, reward_;
};

class KappaModel final : public ScenarioModel {
public:
    explicit KappaModel(const CaopKappaParams &p) : p_(p) {
        const int m = p.n_options;
        space_ = caop_space(m, p.tau + 1);
        const auto R = draw_vector(DistributionSpec::lognormal(0.0, 0.2), m - 1, derive_seed(p.instance_seed, 0));
        const auto b = draw_vector(DistributionSpec::normal(1.0, 1.0), m - 1, derive_seed(p.instance_seed, 1));
        v_.assign(m, 0.0);
        reward_.assign(m, 0.0);
        for (int j = 1; j < m; ++j) {
            reward_[j] = R[j - 1];
            v_[j] = p.kappa * R[j - 1] + b[j - 1];
        }
    }
    const DecisionSpace &space() const override { return space_; }
    ScenarioSet draw_raw(std::size_t n, std::uint64_t seed, SamplingScheme s) const override {
        const std::size_t m = v_.size();
        const auto xi = sample(DistributionSpec::exponential(1.0), n, m, seed, s);
        ScenarioSet out(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                out.util(i, j) = v_[j] - xi(i, j);
                out.reward(i, j) = reward_[j];
            }
        }
        return out;
    }
    nlohmann::ordered_json describe() const override { return to_json(AppParams{p_}); }

private:
    CaopKappaParams p_;
    DecisionSpace space_;
    std::vector<double> v_, reward_;
};

class FlopModel final : public ScenarioModel {
public:
    explicit FlopModel(const FlopParams &p) : p_(p) {
        const int A = p.n_facilities, L = p.n_levels;
        const int m = 1 + A * L;
        const auto xy = sample_mcs(DistributionSpec::uniform(0.0, 20.0), A, 2, derive_seed(p.instance_seed, 0));
        fx_.resize(A);
        fy_.resize(A);
        for (int a = 0; a < A; ++a) {
            fx_[a] = xy(a, 0);
            fy_[a] = xy(a, 1);
        }
        space_.n_options = m;
        space_.fixed_ones = {0};
        space_.eq.push_back({std::vector<double>(m, 1.0), static_cast<double>(p.tau + 1)});
        for (int a = 0; a < A; ++a) {
            LinearRow row{std::vector<double>(m, 0.0), 1.0};
            std::vector<int> group;
            for (int l = 1; l <= L; ++l) {
                row.coeffs[option(a, l)] = 1.0;
                group.push_back(option(a, l));
            }
            space_.ineq.push_back(std::move(row));
            space_.groups.push_back(std::move(group));
        }
        space_.app_tag = AppTag::FLoP;
    }
    int option(int a, int l) const { return 1 + a * p_.n_levels + (l - 1); }
    const DecisionSpace &space() const override { return space_; }
    ScenarioSet draw_raw(std::size_t n, std::uint64_t seed, SamplingScheme s) const override {
        const auto c = sample(DistributionSpec::uniform(0.0, 20.0), n, 2, seed, s);
        const std::size_t m = space_.n_options;
        ScenarioSet out(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            out.util(i, 0) = -p_.budget;
            out.reward(i, 0) = 0.0;
            for (int a = 0; a < p_.n_facilities; ++a) {
                const double d = std::hypot(c(i, 0) - fx_[a], c(i, 1) - fy_[a]);
                for (int l = 1; l <= p_.n_levels; ++l) {
                    out.util(i, option(a, l)) = -(d + l);
                    out.reward(i, option(a, l)) = l;
                }
            }
        }
        return out;
    }
    nlohmann::ordered_json describe() const override { return to_json(AppParams{p_}); }

private:
    FlopParams p_;
    DecisionSpace space_;
    std::vector<double> fx_, fy_;
};

class MsmflpModel final : public ScenarioModel {
public:
    explicit MsmflpModel(const MsmflpParams &p) : p_(p) {
        const int m = p.n_facilities;
        const auto xy = sample_mcs(DistributionSpec::uniform(0.0, 20.0), m, 2, derive_seed(p.instance_seed, 0));
        attraction_ = draw_vector(DistributionSpec::uniform(1.0, 20.0), m, derive_seed(p.instance_seed, 1));
        fx_.resize(m);
        fy_.resize(m);
        for (int j = 0; j < m; ++j) {
            fx_[j] = xy(j, 0);
            fy_[j] = xy(j, 1);
        }
        space_.n_options = m;
        space_.eq.push_back({std::vector<double>(m, 1.0), static_cast<double>(p.tau)});
        space_.app_tag = AppTag::MSMFLP;
    }
    const DecisionSpace &space() const override { return space_; }
    ScenarioSet draw_raw(std::size_t n, std::uint64_t seed, SamplingScheme s) const override {
        const auto c = sample(DistributionSpec::normal(10.0, 100.0 / 3.0), n, 2, seed, s);
        const std::size_t m = space_.n_options;
        ScenarioSet out(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double dx = c(i, 0) - fx_[j], dy = c(i, 1) - fy_[j];
                const double u = attraction_[j] / std::max(dx * dx + dy * dy, 1e-12);
                out.util(i, j) = u;
                out.reward(i, j) = u / (u + p_.outside);
            }
        }
        return out;
    }
    nlohmann::ordered_json describe() const override { return to_json(AppParams{p_}); }

private:
    MsmflpParams p_;
    DecisionSpace space_;
    std::vector<double> fx_, fy_, attraction_;
};

}  // namespace

std::string app_name(const AppParams &p) {
    return std::visit(overloaded{[](const CaopExponomialParams &) { return std::string("caop-exponomial"); },
                                 [](const CaopMmnlParams &) { return std::string("caop-mmnl"); },
                                 [](const CaopProbitParams &) { return std::string("caop-probit"); },
                                 [](const CaopKappaParams &) { return std::string("caop-kappa"); },
                                 [](const FlopParams &) { return std::string("flop"); },
                                 [](const MsmflpParams &) { return std::string("msmflp"); }},
                      p);
}

void validate(const AppParams &p) {
    std::visit(overloaded{
                   [](const CaopExponomialParams &q) {
                       require(q.n_products >= 1, "n_products must be >= 1");
                       require(q.gamma > 0.0 && q.gamma <= 1.0, "gamma must lie in (0, 1]");
                       require(q.sigma_r > 0.0 && q.sigma_u > 0.0 && q.zeta > 0.0,
                               "sigma_r, sigma_u and zeta must be > 0");
                       require(q.gamma * (q.n_products + 1) >= 1.0, "gamma admits no offer besides the outside option");
                   },
                   [](const CaopMmnlParams &q) {
                       require(q.n_products >= 1, "n_products must be >= 1");
                       require(q.tau >= 0 && q.tau <= q.n_products, "tau must lie in [0, n_products]");
                       require(q.r_bar >= 1.0, "r_bar must be >= 1");
                       require(q.D > 0.0, "D must be > 0");
                   },
                   [](const CaopProbitParams &q) {
                       require(q.n_products >= 1, "n_products must be >= 1");
                       require(q.tau >= 0 && q.tau <= q.n_products, "tau must lie in [0, n_products]");
                       require(q.variance > 0.0, "variance must be > 0");
                   },
                   [](const CaopKappaParams &q) {
                       require(q.n_options >= 2, "n_options must be >= 2");
                       require(q.tau >= 0 && q.tau < q.n_options, "tau must lie in [0, n_options - 1]");
                       require(std::isfinite(q.kappa), "kappa must be finite");
                   },
                   [](const FlopParams &q) {
                       require(q.n_facilities >= 1 && q.n_levels >= 1, "counts must be >= 1");
                       require(q.tau >= 0 && q.tau <= q.n_facilities, "tau must lie in [0, n_facilities]");
                       require(std::isfinite(q.budget), "budget must be finite");
                   },
                   [](const MsmflpParams &q) {
                       require(q.n_facilities >= 1, "n_facilities must be >= 1");
                       require(q.tau >= 1 && q.tau <= q.n_facilities, "tau must lie in [1, n_facilities]");
                       require(q.outside >= 0.0, "outside utility must be >= 0");
                   }},
               p);
    require(n_scenarios(p) >= 1, "n_scenarios must be >= 1");
}

int n_scenarios(const AppParams &p) {
    return std::visit([](const auto &q) { return q.n_scenarios; }, p);
}

std::uint64_t scenario_seed(const AppParams &p) {
    return std::visit([](const auto &q) { return q.scenario_seed; }, p);
}

SamplingScheme scheme(const AppParams &p) {
    return std::visit([](const auto &q) { return q.scheme; }, p);
}

AppParams with_scenarios(const AppParams &p, int n, std::uint64_t seed, SamplingScheme s) {
    return std::visit(
        [&](auto q) -> AppParams {
            q.n_scenarios = n;
            q.scenario_seed = seed;
            q.scheme = s;
            return q;
        },
        p);
}

nlohmann::ordered_json to_json(const AppParams &p) {
    nlohmann::ordered_json j;
    j["app"] = app_name(p);
    std::visit(overloaded{[&](const CaopExponomialParams &q) {
                              j["n_products"] = q.n_products;
                              j["gamma"] = q.gamma;
                              j["sigma_r"] = q.sigma_r;
                              j["sigma_u"] = q.sigma_u;
                              j["zeta"] = q.zeta;
                          },
                          [&](const CaopMmnlParams &q) {
                              j["n_products"] = q.n_products;
                              j["tau"] = q.tau;
                              j["r_bar"] = q.r_bar;
                              j["D"] = q.D;
                          },
                          [&](const CaopProbitParams &q) {
                              j["n_products"] = q.n_products;
                              j["tau"] = q.tau;
                              j["variance"] = q.variance;
                          },
                          [&](const CaopKappaParams &q) {
                              j["n_options"] = q.n_options;
                              j["kappa"] = q.kappa;
                              j["tau"] = q.tau;
                          },
                          [&](const FlopParams &q) {
                              j["n_facilities"] = q.n_facilities;
                              j["n_levels"] = q.n_levels;
                              j["tau"] = q.tau;
                              j["budget"] = q.budget;
                          },
                          [&](const MsmflpParams &q) {
                              j["n_facilities"] = q.n_facilities;
                              j["tau"] = q.tau;
                              j["outside"] = q.outside;
                          }},
               p);
    std::visit(
        [&](const auto &q) {
            j["instance_seed"] = q.instance_seed;
            j["scenario_seed"] = q.scenario_seed;
            j["n_scenarios"] = q.n_scenarios;
            j["scheme"] = to_string(q.scheme);
        },
        p);
    return j;
}

AppParams app_params_from_json(const nlohmann::ordered_json &j) {
    require(j.is_object() && j.contains("app"), "application parameters need an \"app\" field");
    const auto name = j.at("app").get<std::string>();
    JsonReader rd(j);
    auto common = [&](auto &q) {
        rd.read("instance_seed", q.instance_seed);
        rd.read("scenario_seed", q.scenario_seed);
        rd.read("n_scenarios", q.n_scenarios);
        rd.read_scheme(q.scheme);
    };
    AppParams out;
    if (name == "caop-exponomial") {
        CaopExponomialParams q;
        rd.read("n_products", q.n_products);
        rd.read("gamma", q.gamma);
        rd.read("sigma_r", q.sigma_r);
        rd.read("sigma_u", q.sigma_u);
        rd.read("zeta", q.zeta);
        common(q);
        out = q;
    } else if (name == "caop-mmnl") {
        CaopMmnlParams q;
        rd.read("n_products", q.n_products);
        rd.read("tau", q.tau);
        rd.read("r_bar", q.r_bar);
        rd.read("D", q.D);
        common(q);
        out = q;
    } else if (name == "caop-probit") {
        CaopProbitParams q;
        rd.read("n_products", q.n_products);
        rd.read("tau", q.tau);
        rd.read("variance", q.variance);
        common(q);
        out = q;
    } else if (name == "caop-kappa") {
        CaopKappaParams q;
        rd.read("n_options", q.n_options);
        rd.read("kappa", q.kappa);
        rd.read("tau", q.tau);
        common(q);
        out = q;
    } else if (name == "flop") {
        FlopParams q;
        rd.read("n_facilities", q.n_facilities);
        rd.read("n_levels", q.n_levels);
        rd.read("tau", q.tau);
        rd.read("budget", q.budget);
        common(q);
        out = q;
    } else if (name == "msmflp") {
        MsmflpParams q;
        rd.read("n_facilities", q.n_facilities);
        rd.read("tau", q.tau);
        rd.read("outside", q.outside);
        common(q);
        out = q;
    } else {
        throw std::invalid_argument("unknown application: " + name);
    }
    rd.finish();
    validate(out);
    return out;
}

ScenarioSet ScenarioModel::draw(std::size_t n, std::uint64_t seed, SamplingScheme s,
                                std::size_t *ties_repaired) const {
    auto set = draw_raw(n, seed, s);
    const auto k = repair_utility_ties(set);
    if (ties_repaired) *ties_repaired = k;
    return set;
}

Instance ScenarioModel::instance(std::size_t n, std::uint64_t seed, SamplingScheme s) const {
    Instance inst;
    inst.space = space();
    std::size_t ties = 0;
    inst.scenarios = draw(n, seed, s, &ties);
    inst.provenance["generator"] = describe();
    inst.provenance["scenario_seed"] = seed;
    inst.provenance["n_scenarios"] = n;
    inst.provenance["scheme"] = to_string(s);
    inst.provenance["ties_repaired"] = ties;
    inst.validate();
    return inst;
}

std::unique_ptr<ScenarioModel> make_model(const AppParams &p) {
    validate(p);
    return std::visit(
        overloaded{
            [](const CaopExponomialParams &q) -> std::unique_ptr<ScenarioModel> {
                return std::make_unique<ExponomialModel>(q);
            },
            [](const CaopMmnlParams &q) -> std::unique_ptr<ScenarioModel> { return std::make_unique<MmnlModel>(q); },
            [](const CaopProbitParams &q) -> std::unique_ptr<ScenarioModel> {
                return std::make_unique<ProbitModel>(q);
            },
            [](const CaopKappaParams &q) -> std::unique_ptr<ScenarioModel> { return std::make_unique<KappaModel>(q); },
            [](const FlopParams &q) -> std::unique_ptr<ScenarioModel> { return std::make_unique<FlopModel>(q); },
            [](const MsmflpParams &q) -> std::unique_ptr<ScenarioModel> {
                return std::make_unique<MsmflpModel>(q);
            }},
        p);
}

Instance generate(const AppParams &p) {
    return make_model(p)->instance(n_scenarios(p), scenario_seed(p), scheme(p));
}

Instance gen_caop_exponomial(const CaopExponomialParams &p) { return generate(p); }
Instance gen_caop_mmnl(const CaopMmnlParams &p) { return generate(p); }
Instance gen_caop_probit(const CaopProbitParams &p) { return generate(p); }
Instance gen_caop_kappa(const CaopKappaParams &p) { return generate(p); }
Instance gen_flop(const FlopParams &p) { return generate(p); }
Instance gen_msmflp(const MsmflpParams &p) { return generate(p); }

MmnlThetas mmnl_thetas(double D) {
    require(D > 0.0, "D must be > 0");
    // sqrt(exp(theta2^2 / 2) - 1) = D and theta1 + theta2^2 / 2 = ln 10.
    const double half_sq = std::log1p(D * D);
    return {std::log(10.0) - half_sq, std::sqrt(2.0 * half_sq)};
}

std::vector<double> mmnl_rewards(const CaopMmnlParams &p) {
    std::vector<double> r(p.n_products + 1, 0.0);
    if (p.r_bar == 1.0) {
        std::fill(r.begin() + 1, r.end(), 1.0);
        return r;
    }
    const auto R = draw_vector(DistributionSpec::uniform(1.0, p.r_bar), p.n_products, derive_seed(p.instance_seed, 1));
    std::copy(R.begin(), R.end(), r.begin() + 1);
    return r;
}

SegmentMatrix mmnl_segments(const CaopMmnlParams &p, std::size_t n, std::uint64_t seed, SamplingScheme s) {
    validate(AppParams{p});
    return MmnlModel(p).segments(n, seed, s);
}

double mmnl_closed_objective(std::span<const int> x, const SegmentMatrix &segments, std::span<const double> rewards) {
    require(segments.n >= 1, "need at least one segment");
    require(x.size() == segments.m && rewards.size() == segments.m, "segment width differs from x");
    double total = 0.0;
    for (std::size_t i = 0; i < segments.n; ++i) {
        const double *v = segments.v.data() + i * segments.m;
        double shift = v[0];
        for (std::size_t a = 1; a < segments.m; ++a) {
            if (x[a] == 1) shift = std::max(shift, v[a]);
        }
        double num = 0.0, den = std::exp(v[0] - shift);
        for (std::size_t a = 1; a < segments.m; ++a) {
            if (x[a] != 1) continue;
            const double w = std::exp(v[a] - shift);
            num += rewards[a] * w;
            den += w;
        }
        total += num / den;
    }
    return total / static_cast<double>(segments.n);
}

BinaryDecision round_to_feasible(AppTag tag, std::span<const double> x_frac, const DecisionSpace &space) {
    const int n = space.n_options;
    require(static_cast<int>(x_frac.size()) == n, "fractional point has the wrong length");
    BinaryDecision x(n, 0);
    // Order by value descending; fixed options first, ties to the lower index.
    auto ranked = [&](std::vector<int> idx) {
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            const bool fa = space.is_fixed_one(a), fb = space.is_fixed_one(b);
            if (fa != fb) return fa;
            return x_frac[a] > x_frac[b];
        });
        return idx;
    };
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    switch (tag) {
        case AppTag::CAOP:
        case AppTag::MSMFLP: {
            const int limit = space.offer_limit();
            require(limit >= 0, "space has no cardinality row");
            const auto order = ranked(all);
            // Under a cardinality inequality, zero entries stay closed.
            const bool at_most = space.eq.empty();
            for (int k = 0; k < std::min(limit, n); ++k) {
                if (at_most && x_frac[order[k]] <= 0.0 && !space.is_fixed_one(order[k])) break;
                x[order[k]] = 1;
            }
            for (int j : space.fixed_ones) x[j] = 1;
            break;
        }
        case AppTag::FLoP: {
            const int tau = space.offer_limit() - 1;
            require(tau >= 0 && !space.groups.empty(), "FLoP space needs groups and a cardinality row");
            const int A = static_cast<int>(space.groups.size());
            std::vector<double> T(A);
            std::vector<int> K(A);
            for (int a = 0; a < A; ++a) {
                K[a] = space.groups[a].front();
                for (int j : space.groups[a]) {
                    if (x_frac[j] > x_frac[K[a]]) K[a] = j;
                }
                T[a] = x_frac[K[a]];
            }
            std::vector<int> fac(A);
            std::iota(fac.begin(), fac.end(), 0);
            std::stable_sort(fac.begin(), fac.end(), [&](int a, int b) { return T[a] > T[b]; });
            for (int k = 0; k < std::min(tau, A); ++k) x[K[fac[k]]] = 1;
            for (int j : space.fixed_ones) x[j] = 1;
            break;
        }
        case AppTag::GENERIC:
            throw std::invalid_argument("no rounding rule for GENERIC spaces");
    }
    return x;
}

TrueEstimate evaluate_true(const ScenarioModel &model, std::span<const int> x, std::size_t n_prime,
                           std::uint64_t seed) {
    require(n_prime >= 2, "n_prime must be >= 2");
    require(static_cast<int>(x.size()) == model.space().n_options, "decision has the wrong length");
    // Welford accumulation in chunk order keeps the result independent of chunking elsewhere.
    double mean = 0.0, m2 = 0.0;
    std::size_t count = 0;
    for (std::size_t chunk = 0; count < n_prime; ++chunk) {
        const std::size_t n = std::min(kEvaluationChunk, n_prime - count);
        const auto set = model.draw(n, derive_seed(seed, chunk), SamplingScheme::MCS);
        for (std::size_t i = 0; i < n; ++i) {
            const double q = chosen_reward(set.util_row(i), set.reward_row(i), x);
            ++count;
            const double delta = q - mean;
            mean += delta / static_cast<double>(count);
            m2 += delta * (q - mean);
        }
    }
    const double nn = static_cast<double>(count);
    return {mean, std::max(0.0, m2) / (nn * (nn - 1.0)), count};
}

TrueEstimate evaluate_true(const AppParams &p, std::span<const int> x, std::size_t n_prime, std::uint64_t seed) {
    return evaluate_true(*make_model(p), x, n_prime, seed);
}

}  // namespace sbbd
