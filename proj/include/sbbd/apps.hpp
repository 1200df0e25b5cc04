#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sbbd/model.hpp"
#include "sbbd/sampling.hpp"

namespace sbbd {

struct CaopExponomialParams {
    int n_products = 20;
    double gamma = 0.3;
    double sigma_r = 0.2;
    double sigma_u = 1.0;  // variance of V
    double zeta = 1.0;
    std::uint64_t instance_seed = 1;
    std::uint64_t scenario_seed = 1;
    int n_scenarios = 300;
    SamplingScheme scheme = SamplingScheme::LHS;
};

struct CaopMmnlParams {
    int n_products = 10;
    int tau = 5;
    double r_bar = 100.0;
    double D = 2.0;
    std::uint64_t instance_seed = 1;
    std::uint64_t scenario_seed = 1;
    int n_scenarios = 500;
    SamplingScheme scheme = SamplingScheme::LHS;
};

struct CaopProbitParams {
    int n_products = 30;
    int tau = 5;
    double variance = 100.0;
    std::uint64_t instance_seed = 1;
    std::uint64_t scenario_seed = 1;
    int n_scenarios = 300;
    SamplingScheme scheme = SamplingScheme::LHS;
};

struct CaopKappaParams {
    int n_options = 30;  // products plus the outside option
    double kappa = 0.0;
    int tau = 5;
    std::uint64_t instance_seed = 1;
    std::uint64_t scenario_seed = 1;
    int n_scenarios = 100;
    SamplingScheme scheme = SamplingScheme::LHS;
};

struct FlopParams {
    int n_facilities = 10;
    int n_levels = 10;
    int tau = 5;
    double budget = 10.0;
    std::uint64_t instance_seed = 1;
    std::uint64_t scenario_seed = 1;
    int n_scenarios = 300;
    SamplingScheme scheme = SamplingScheme::LHS;
};

struct MsmflpParams {
    int n_facilities = 100;
    int tau = 20;
    double outside = 10.0;
    std::uint64_t instance_seed = 1;
    std::uint64_t scenario_seed = 1;
    int n_scenarios = 300;
    SamplingScheme scheme = SamplingScheme::LHS;
};

using AppParams =
    std::variant<CaopExponomialParams, CaopMmnlParams, CaopProbitParams, CaopKappaParams, FlopParams, MsmflpParams>;

/// CLI names: caop-exponomial, caop-mmnl, caop-probit, caop-kappa, flop, msmflp.
std::string app_name(const AppParams &p);
void validate(const AppParams &p);
int n_scenarios(const AppParams &p);
std::uint64_t scenario_seed(const AppParams &p);
SamplingScheme scheme(const AppParams &p);
/// Copy with the scenario seed, count, or scheme replaced.
AppParams with_scenarios(const AppParams &p, int n, std::uint64_t seed, SamplingScheme s);

nlohmann::ordered_json to_json(const AppParams &p);
AppParams app_params_from_json(const nlohmann::ordered_json &j);

/// An application: deterministic data fixed by the instance seed plus the
/// scenario process that realizes utility and reward rows.
class ScenarioModel {
public:
    virtual ~ScenarioModel() = default;
    virtual const DecisionSpace &space() const = 0;
    /// n scenario rows from seed, before tie repair.
    virtual ScenarioSet draw_raw(std::size_t n, std::uint64_t seed, SamplingScheme s) const = 0;
    virtual nlohmann::ordered_json describe() const = 0;

    /// draw_raw followed by utility tie repair.
    ScenarioSet draw(std::size_t n, std::uint64_t seed, SamplingScheme s, std::size_t *ties_repaired = nullptr) const;
    /// Instance with provenance (model description, scenario seed, scheme, repairs).
    Instance instance(std::size_t n, std::uint64_t seed, SamplingScheme s) const;
};

std::unique_ptr<ScenarioModel> make_model(const AppParams &p);

Instance generate(const AppParams &p);
Instance gen_caop_exponomial(const CaopExponomialParams &p);
Instance gen_caop_mmnl(const CaopMmnlParams &p);
Instance gen_caop_probit(const CaopProbitParams &p);
Instance gen_caop_kappa(const CaopKappaParams &p);
Instance gen_flop(const FlopParams &p);
Instance gen_msmflp(const MsmflpParams &p);

/// theta_2 and theta_1 of the MMNL ideal-utility recipe for dispersion D.
struct MmnlThetas {
    double theta1;
    double theta2;
};
MmnlThetas mmnl_thetas(double D);

/// Sentinel utility for products with beta = 0; distinct per product so rows stay tie-free.
inline double mmnl_sentinel(int option) { return -1e9 - static_cast<double>(option); }

/// Row-major n x |J| matrix of ideal utilities V_ia (column 0 is the outside
/// option, fixed at 0; products with beta = 0 carry -inf).
struct SegmentMatrix {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> v;
};

/// Segments drawn from the same beta/gamma substreams the scenario process uses
/// for the given seed, so the i-th segment matches the i-th scenario row.
SegmentMatrix mmnl_segments(const CaopMmnlParams &p, std::size_t n, std::uint64_t seed, SamplingScheme s);
std::vector<double> mmnl_rewards(const CaopMmnlParams &p);

/// Segment-average of sum_a R_a x_a e^V / (sum_a x_a e^V + e^V0), shifted by the row maximum.
double mmnl_closed_objective(std::span<const int> x, const SegmentMatrix &segments, std::span<const double> rewards);

/// Rounds a point of the box relaxation to an integer point of the space.
BinaryDecision round_to_feasible(AppTag tag, std::span<const double> x_frac, const DecisionSpace &space);

struct TrueEstimate {
    double v_hat = 0.0;
    double var_hat = 0.0;  // variance of the mean estimator
    std::size_t n = 0;
};

inline constexpr std::size_t kEvaluationChunk = 20000;

/// Mean reward of x over n_prime fresh MCS scenarios, streamed in chunks whose
/// seeds derive from (seed, chunk index).
TrueEstimate evaluate_true(const ScenarioModel &model, std::span<const int> x, std::size_t n_prime,
                           std::uint64_t seed);
TrueEstimate evaluate_true(const AppParams &p, std::span<const int> x, std::size_t n_prime, std::uint64_t seed);

}  // namespace sbbd
