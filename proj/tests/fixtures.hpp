#pragma once

#include <random>

#include "sbbd/apps.hpp"
#include "sbbd/model.hpp"

namespace sbbd::testing {

/// Three options {0: outside, 1, 2}, two scenarios, x0 = 1 and x1 + x2 <= 1.
inline Instance make_e1() {
    Instance inst;
    inst.space.n_options = 3;
    inst.space.fixed_ones = {0};
    inst.space.ineq.push_back({{0.0, 1.0, 1.0}, 1.0});
    inst.space.app_tag = AppTag::CAOP;
    inst.scenarios = ScenarioSet(2, 3);
    inst.scenarios.u = {0, 2, 1, 0, 1, 3};
    inst.scenarios.r = {0, 5, 8, 0, 5, 8};
    return inst;
}

/// Small random instance of one application family, cycled by index.
inline Instance small_instance(int family, std::uint64_t seed, int n_scen, int size, int tau) {
    tau = std::min(tau, size);
    switch (family % 6) {
        case 0: {
            CaopExponomialParams p;
            p.n_products = size;
            p.gamma = std::min(1.0, (tau + 1.0) / (size + 1.0));
            p.instance_seed = seed;
            p.scenario_seed = seed + 1000;
            p.n_scenarios = n_scen;
            return generate(p);
        }
        case 1: {
            CaopMmnlParams p;
            p.n_products = size;
            p.tau = tau;
            p.instance_seed = seed;
            p.scenario_seed = seed + 1000;
            p.n_scenarios = n_scen;
            return generate(p);
        }
        case 2: {
            CaopProbitParams p;
            p.n_products = size;
            p.tau = tau;
            p.instance_seed = seed;
            p.scenario_seed = seed + 1000;
            p.n_scenarios = n_scen;
            return generate(p);
        }
        case 3: {
            CaopKappaParams p;
            p.n_options = size + 1;
            p.tau = tau;
            p.kappa = static_cast<double>(static_cast<int>(seed % 3) - 1);
            p.instance_seed = seed;
            p.scenario_seed = seed + 1000;
            p.n_scenarios = n_scen;
            return generate(p);
        }
        case 4: {
            FlopParams p;
            p.n_facilities = std::max(2, size / 3);
            p.n_levels = 3;
            p.tau = std::min(tau, p.n_facilities);
            p.budget = 6.0;
            p.instance_seed = seed;
            p.scenario_seed = seed + 1000;
            p.n_scenarios = n_scen;
            return generate(p);
        }
        default: {
            MsmflpParams p;
            p.n_facilities = size;
            p.tau = std::max(1, std::min(tau, size));
            p.instance_seed = seed;
            p.scenario_seed = seed + 1000;
            p.n_scenarios = n_scen;
            return generate(p);
        }
    }
}

}  // namespace sbbd::testing
