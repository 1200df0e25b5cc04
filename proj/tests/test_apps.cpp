#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "sbbd/apps.hpp"

using namespace sbbd;

namespace {

double correlation(const std::vector<double> &a, const std::vector<double> &b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Deterministic part of the kappa utilities, recovered as the column mean plus the
// exponential noise mean (1).
std::pair<std::vector<double>, std::vector<double>> kappa_vr(double kappa) {
    CaopKappaParams p;
    p.n_options = 101;
    p.kappa = kappa;
    p.n_scenarios = 400;
    const auto inst = generate(p);
    std::vector<double> v, r;
    for (int j = 1; j < p.n_options; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < inst.n_scenarios(); ++i) acc += inst.scenarios.util(i, j);
        v.push_back(acc / inst.n_scenarios() + 1.0);
        r.push_back(inst.scenarios.reward(0, j));
    }
    return {v, r};
}

}  // namespace

TEST_CASE("exponomial generator") {
    CaopExponomialParams p;
    p.n_products = 20;
    p.n_scenarios = 50;
    const auto inst = gen_caop_exponomial(p);
    CHECK(inst.n_options() == 21);
    CHECK(inst == gen_caop_exponomial(p));
    CHECK(inst.space.fixed_ones == std::vector<int>{0});
    CHECK(inst.space.ineq.at(0).rhs == doctest::Approx(0.3 * 21));
    for (std::size_t i = 0; i < inst.n_scenarios(); ++i) CHECK(inst.scenarios.reward(i, 0) == 0.0);
    for (std::size_t i = 0; i < inst.n_scenarios(); ++i) CHECK(inst.scenarios.util(i, 0) <= 0.0);

    p.sigma_r = 1e-9;
    const auto flat = gen_caop_exponomial(p);
    for (int j = 1; j < 21; ++j) CHECK(flat.scenarios.reward(0, j) == doctest::Approx(1.0));

    p.gamma = 1.0;
    const auto full = gen_caop_exponomial(p);
    CHECK(full.space.is_feasible(BinaryDecision(21, 1)));
}

TEST_CASE("mmnl generator and closed form") {
    const auto th = mmnl_thetas(2.0);
    CHECK(th.theta1 + th.theta2 * th.theta2 / 2.0 == doctest::Approx(std::log(10.0)));
    CHECK(std::sqrt(std::exp(th.theta2 * th.theta2 / 2.0) - 1.0) == doctest::Approx(2.0));
    const double d_zero = std::sqrt(std::exp(std::log(10.0)) - 1.0);
    CHECK(std::abs(mmnl_thetas(d_zero).theta1) < 1e-12);

    CaopMmnlParams p;
    p.n_scenarios = 200;
    const auto inst = gen_caop_mmnl(p);
    CHECK(inst == gen_caop_mmnl(p));
    CHECK(inst.n_options() == 11);
    const auto seg = mmnl_segments(p, 200, p.scenario_seed, p.scheme);
    for (std::size_t i = 0; i < inst.n_scenarios(); ++i) {
        bool any = false;
        for (std::size_t a = 1; a < seg.m; ++a) {
            const bool present = std::isfinite(seg.v[i * seg.m + a]);
            any = any || present;
            if (!present) CHECK(inst.scenarios.util(i, a) <= -1e9 + 1.0);
        }
        if (!any) CHECK(choose(BinaryDecision(11, 1), i, inst).option == 0);
    }

    SegmentMatrix one{1, 2, {0.0, 0.0}};
    const std::vector<double> r{0.0, 10.0};
    CHECK(mmnl_closed_objective(BinaryDecision{1, 1}, one, r) == doctest::Approx(5.0));
    CHECK(mmnl_closed_objective(BinaryDecision{1, 0}, one, r) == 0.0);
    SegmentMatrix two{2, 2, {0.0, 0.0, 0.0, 0.0}};
    CHECK(mmnl_closed_objective(BinaryDecision{1, 1}, two, r) == doctest::Approx(5.0));
    SegmentMatrix huge{1, 2, {0.0, 800.0}};
    CHECK(mmnl_closed_objective(BinaryDecision{1, 1}, huge, r) == doctest::Approx(10.0));
}

TEST_CASE("probit generator") {
    CaopProbitParams p;
    p.n_products = 8;
    p.n_scenarios = 30;
    p.variance = 1e-12;
    const auto inst = gen_caop_probit(p);
    CHECK(inst == gen_caop_probit(p));
    std::vector<int> base(9);
    std::iota(base.begin(), base.end(), 0);
    auto rank_of = [&](std::size_t i) {
        auto idx = base;
        std::sort(idx.begin(), idx.end(),
                  [&](int a, int b) { return inst.scenarios.util(i, a) > inst.scenarios.util(i, b); });
        return idx;
    };
    const auto r0 = rank_of(0);
    for (std::size_t i = 1; i < inst.n_scenarios(); ++i) CHECK(rank_of(i) == r0);
    CHECK(inst.scenarios.util(0, 0) == doctest::Approx(50.0));
    CHECK(inst.scenarios.reward(0, 0) == 0.0);
}

TEST_CASE("kappa generator correlation signs") {
    const auto [v0, r0] = kappa_vr(0.0);
    CHECK(std::abs(correlation(v0, r0)) < 0.2);
    const auto [vp, rp] = kappa_vr(1.0);
    const auto [vm, rm] = kappa_vr(-1.0);
    CHECK(correlation(vp, rp) > 0.0);
    CHECK(correlation(vm, rm) < 0.0);
}

TEST_CASE("flop generator") {
    FlopParams p;
    p.n_facilities = 4;
    p.n_levels = 10;
    p.tau = 2;
    p.n_scenarios = 25;
    const auto inst = gen_flop(p);
    CHECK(inst == gen_flop(p));
    CHECK(inst.n_options() == 41);
    std::vector<double> expected{0.0};
    for (int a = 0; a < 4; ++a) {
        for (int l = 1; l <= 10; ++l) expected.push_back(l);
    }
    const auto rr = inst.scenarios.reward_row(3);
    CHECK(std::vector<double>(rr.begin(), rr.end()) == expected);
    for (std::size_t i = 0; i < inst.n_scenarios(); ++i) {
        CHECK(inst.scenarios.util(i, 0) == -10.0);
        for (int a = 0; a < 4; ++a) {
            for (int l = 1; l < 10; ++l) {
                const int j = 1 + a * 10 + l - 1;
                CHECK(inst.scenarios.util(i, j) > inst.scenarios.util(i, j + 1));
                CHECK(inst.scenarios.reward(i, j) < inst.scenarios.reward(i, j + 1));
            }
        }
    }
    CHECK(inst.space.groups.size() == 4);
    CHECK(inst.space.eq.at(0).rhs == 3.0);
}

TEST_CASE("msmflp generator") {
    MsmflpParams p;
    p.n_facilities = 100;
    p.tau = 20;
    p.n_scenarios = 40;
    const auto inst = gen_msmflp(p);
    CHECK(inst == gen_msmflp(p));
    CHECK(inst.space.eq.at(0).rhs == 20.0);
    CHECK(inst.space.fixed_ones.empty());
    for (std::size_t i = 0; i < inst.n_scenarios(); ++i) {
        for (int j = 0; j < 100; ++j) {
            const double u = inst.scenarios.util(i, j), r = inst.scenarios.reward(i, j);
            CHECK(r > 0.0);
            CHECK(r < 1.0);
            CHECK(r == doctest::Approx(u / (u + 10.0)));
            for (int k = 0; k < j; ++k) {
                CHECK((inst.scenarios.util(i, k) > u) == (inst.scenarios.reward(i, k) > r));
            }
        }
    }
    const double u = 10.0;
    CHECK(u / (u + 10.0) == 0.5);
}

TEST_CASE("rounding heuristics") {
    DecisionSpace caop;
    caop.n_options = 4;
    caop.fixed_ones = {0};
    caop.ineq.push_back({{1, 1, 1, 1}, 3.0});
    caop.app_tag = AppTag::CAOP;
    const std::vector<double> xc{1.0, 0.7, 0.2, 0.6};
    CHECK(round_to_feasible(AppTag::CAOP, xc, caop) == BinaryDecision{1, 1, 0, 1});

    DecisionSpace flop;
    flop.n_options = 5;
    flop.fixed_ones = {0};
    flop.eq.push_back({{1, 1, 1, 1, 1}, 2.0});
    flop.ineq.push_back({{0, 1, 1, 0, 0}, 1.0});
    flop.ineq.push_back({{0, 0, 0, 1, 1}, 1.0});
    flop.groups = {{1, 2}, {3, 4}};
    flop.app_tag = AppTag::FLoP;
    const std::vector<double> xf{1.0, 0.6, 0.3, 0.5, 0.1};
    CHECK(round_to_feasible(AppTag::FLoP, xf, flop) == BinaryDecision{1, 1, 0, 0, 0});

    DecisionSpace ms;
    ms.n_options = 3;
    ms.eq.push_back({{1, 1, 1}, 2.0});
    ms.app_tag = AppTag::MSMFLP;
    const std::vector<double> xm{0.9, 0.1, 0.8};
    CHECK(round_to_feasible(AppTag::MSMFLP, xm, ms) == BinaryDecision{1, 0, 1});
    CHECK_THROWS(round_to_feasible(AppTag::GENERIC, xm, ms));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int t = 0; t < 120; ++t) {
        const auto inst = sbbd::testing::small_instance(t, 500 + t, 3, 7, 3);
        const auto &sp = inst.space;
        std::vector<double> x(sp.n_options);
        for (auto &v : x) v = u01(rng);
        for (int j : sp.fixed_ones) x[j] = 1.0;
        const auto xr = round_to_feasible(sp.app_tag, x, sp);
        CHECK(sp.is_feasible(xr));
        const auto feas = enumerate_feasible(sp);
        for (std::size_t k = 0; k < feas.size(); k += 1 + feas.size() / 7) {
            const std::vector<double> xd(feas[k].begin(), feas[k].end());
            CHECK(round_to_feasible(sp.app_tag, xd, sp) == feas[k]);
        }
    }
}

TEST_CASE("true objective evaluation") {
    CaopKappaParams p;
    p.n_options = 6;
    p.tau = 2;
    const auto model = make_model(p);
    const BinaryDecision x{1, 1, 0, 1, 0, 0};
    const auto a = evaluate_true(*model, x, 25000, 9);
    const auto b = evaluate_true(*model, x, 25000, 9);
    CHECK(a.v_hat == b.v_hat);
    CHECK(a.var_hat == b.var_hat);
    CHECK(a.n == 25000);
    CHECK(a.var_hat > 0.0);

    // Same chunk stream as a generated instance with MCS and the derived seed.
    const auto inst = model->instance(100, derive_seed(9, 0), SamplingScheme::MCS);
    CHECK(evaluate_true(*model, x, 100, 9).v_hat == doctest::Approx(sample_objective(x, inst)).epsilon(1e-12));

    MsmflpParams q;
    q.n_facilities = 8;
    q.tau = 3;
    const auto e = evaluate_true(AppParams{q}, BinaryDecision{1, 0, 1, 0, 1, 0, 0, 0}, 5000, 1);
    CHECK(e.v_hat > 0.0);
    CHECK(e.v_hat < 1.0);

    CaopMmnlParams c;
    c.r_bar = 1.0;
    c.n_products = 4;
    c.tau = 4;
    // Constant unit rewards; offering all products is chosen unless no product is present.
    const auto ev = evaluate_true(AppParams{c}, BinaryDecision{1, 1, 1, 1, 1}, 1000, 4);
    CHECK(ev.v_hat <= 1.0);
}

TEST_CASE("parameter json round trip") {
    const AppParams all[] = {CaopExponomialParams{}, CaopMmnlParams{}, CaopProbitParams{},
                             CaopKappaParams{}, FlopParams{}, MsmflpParams{}};
    for (const auto &p : all) {
        const auto j = to_json(p);
        CHECK(to_json(app_params_from_json(j)) == j);
        auto bad = j;
        bad["bogus"] = 1;
        CHECK_THROWS(app_params_from_json(bad));
    }
    auto j = to_json(CaopProbitParams{});
    j["variance"] = -1.0;
    CHECK_THROWS(app_params_from_json(j));
}
