#include "doctest.h"

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "sbbd/model.hpp"

using namespace sbbd;
using sbbd::testing::make_e1;

TEST_CASE("choose on E1") {
    const auto e1 = make_e1();
    auto c = choose(BinaryDecision{1, 0, 1}, 0, e1);
    CHECK(c.option == 2);
    CHECK(c.reward == 8.0);
    c = choose(BinaryDecision{1, 0, 0}, 0, e1);
    CHECK(c.option == 0);
    CHECK(c.reward == 0.0);
    c = choose(BinaryDecision{1, 1, 1}, 0, e1);
    CHECK(c.option == 1);
    CHECK(c.reward == 5.0);
    CHECK_THROWS(choose(BinaryDecision{0, 0, 0}, 0, e1));
}

TEST_CASE("choose breaks utility ties by reward then index") {
    Instance inst;
    inst.space.n_options = 3;
    inst.scenarios = ScenarioSet(1, 3);
    inst.scenarios.u = {1.0, 1.0, 1.0};
    inst.scenarios.r = {2.0, 7.0, 7.0};
    CHECK(choose(BinaryDecision{1, 1, 1}, 0, inst).option == 1);
    CHECK(choose(BinaryDecision{1, 0, 1}, 0, inst).option == 2);
}

TEST_CASE("sample objective and cooperative fraction on E1") {
    const auto e1 = make_e1();
    CHECK(sample_objective(BinaryDecision{1, 0, 1}, e1) == 8.0);
    CHECK(sample_objective(BinaryDecision{1, 1, 0}, e1) == 5.0);
    CHECK(sample_objective(BinaryDecision{1, 0, 0}, e1) == 0.0);
    CHECK(cooperative_fraction(BinaryDecision{1, 0, 1}, e1) == 1.0);
    CHECK(cooperative_fraction(BinaryDecision{1, 1, 1}, e1) == 0.5);
}

TEST_CASE("enumeration") {
    const auto e1 = make_e1();
    const auto all = enumerate_feasible(e1.space);
    CHECK(all == std::vector<BinaryDecision>{{1, 0, 0}, {1, 0, 1}, {1, 1, 0}});

    DecisionSpace cube;
    cube.n_options = 3;
    cube.fixed_ones = {0};
    CHECK(enumerate_feasible(cube).size() == 4);

    DecisionSpace pick2;
    pick2.n_options = 3;
    pick2.eq.push_back({{1.0, 1.0, 1.0}, 2.0});
    CHECK(enumerate_feasible(pick2).size() == 3);

    const auto best = enumerate_optimal(e1);
    CHECK(best.x == BinaryDecision{1, 0, 1});
    CHECK(best.value == 8.0);

    auto zero = e1;
    std::fill(zero.scenarios.r.begin(), zero.scenarios.r.end(), 0.0);
    const auto z = enumerate_optimal(zero);
    CHECK(z.value == 0.0);
    CHECK(z.x == BinaryDecision{1, 0, 0});

    DecisionSpace big;
    big.n_options = 30;
    CHECK_THROWS_AS(enumerate_feasible(big), CapacityError);

    DecisionSpace empty;
    empty.n_options = 2;
    empty.eq.push_back({{1.0, 1.0}, 3.0});
    CHECK_THROWS_AS(enumerate_optimal(Instance{empty, ScenarioSet(1, 2), {}}), InfeasibleError);
}

TEST_CASE("tie repair makes rows distinct") {
    ScenarioSet s(2, 4);
    s.u = {1.0, 1.0, 1.0, 0.0, 5.0, 4.0, 3.0, 2.0};
    CHECK_FALSE(utilities_distinct(s));
    CHECK(repair_utility_ties(s) == 1);
    CHECK(utilities_distinct(s));
    CHECK(s.util(1, 0) == 5.0);
}

TEST_CASE("model properties on random instances") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 60; ++t) {
        const auto inst = sbbd::testing::small_instance(t, 100 + t, 20, 6, 2);
        const auto best = enumerate_optimal(inst);
        const auto feas = enumerate_feasible(inst.space);
        const double rmin = *std::min_element(inst.scenarios.r.begin(), inst.scenarios.r.end());
        const double rmax = *std::max_element(inst.scenarios.r.begin(), inst.scenarios.r.end());
        for (const auto &x : feas) {
            const double v = sample_objective(x, inst);
            CHECK(v <= best.value + 1e-12);
            CHECK(v >= rmin - 1e-12);
            CHECK(v <= rmax + 1e-12);
            for (std::size_t i = 0; i < inst.n_scenarios(); ++i) {
                const auto c = choose(x, i, inst);
                CHECK(x[c.option] == 1);
                for (int j = 0; j < inst.n_options(); ++j) {
                    if (x[j] == 1) CHECK(inst.scenarios.util(i, c.option) >= inst.scenarios.util(i, j));
                }
            }
        }
        // Adding an option never lowers the chosen utility.
        const auto &x = feas[rng() % feas.size()];
        auto bigger = x;
        for (auto &v : bigger) v = 1;
        for (std::size_t i = 0; i < inst.n_scenarios(); ++i) {
            CHECK(inst.scenarios.util(i, choose(bigger, i, inst).option) >=
                  inst.scenarios.util(i, choose(x, i, inst).option));
        }
        if (inst.space.app_tag == AppTag::MSMFLP) {
            for (const auto &y : feas) CHECK(cooperative_fraction(y, inst) == 1.0);
        }
    }
}
