#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sbbd/simplex.hpp"

using namespace sbbd;

namespace {

// Brute-force vertex enumeration over boxed variables: every choice of n tight
// constraints (rows or bounds) is solved densely and kept if feasible.
struct VertexOracle {
    bool feasible = false;
    double best = -kInf;
};

VertexOracle vertex_oracle(const LpProblem &p) {
    const int n = p.n_vars();
    struct Con {
        std::vector<double> a;
        double b;
    };
    std::vector<Con> cons;
    std::vector<bool> is_eq;
    for (int r = 0; r < p.n_rows(); ++r) {
        Con c{std::vector<double>(n, 0.0), p.rhs[r]};
        for (std::size_t k = 0; k < p.rows[r].index.size(); ++k) c.a[p.rows[r].index[k]] = p.rows[r].value[k];
        cons.push_back(c);
        is_eq.push_back(p.sense[r] == RowSense::Equal);
    }
    for (int j = 0; j < n; ++j) {
        Con up{std::vector<double>(n, 0.0), p.upper[j]};
        up.a[j] = 1.0;
        Con lo{std::vector<double>(n, 0.0), -p.lower[j]};
        lo.a[j] = -1.0;
        cons.push_back(up);
        is_eq.push_back(false);
        cons.push_back(lo);
        is_eq.push_back(false);
    }
    const int total = static_cast<int>(cons.size());
    VertexOracle out;
    std::vector<int> pick(n);
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            Eigen::MatrixXd A(n, n);
            Eigen::VectorXd b(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) A(i, j) = cons[pick[i]].a[j];
                b(i) = cons[pick[i]].b;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (lu.rank() < n) return;
            Eigen::VectorXd x = lu.solve(b);
            for (int c = 0; c < total; ++c) {
                double act = 0.0;
                for (int j = 0; j < n; ++j) act += cons[c].a[j] * x(j);
                if (act > cons[c].b + 1e-9) return;
                if (is_eq[c] && act < cons[c].b - 1e-9) return;
            }
            double obj = 0.0;
            for (int j = 0; j < n; ++j) obj += p.objective[j] * x(j);
            out.feasible = true;
            out.best = std::max(out.best, obj);
            return;
        }
        for (int c = start; c < total; ++c) {
            pick[depth] = c;
            rec(c + 1, depth + 1);
        }
    };
    rec(0, 0);
    return out;
}

LpProblem random_lp(std::mt19937_64 &rng, int n, int m, bool with_eq) {
    std::uniform_real_distribution<double> coef(-3.0, 3.0), obj(-2.0, 2.0), rhs(-1.0, 4.0);
    std::uniform_int_distribution<int> sparsity(0, 3);
    LpProblem p;
    for (int j = 0; j < n; ++j) p.add_variable(obj(rng), std::floor(coef(rng)) - 1.0, 3.0 + std::floor(rhs(rng)));
    for (int r = 0; r < m; ++r) {
        std::vector<double> a(n);
        for (int j = 0; j < n; ++j) a[j] = sparsity(rng) == 0 ? 0.0 : std::round(coef(rng) * 4.0) / 4.0;
        p.add_dense_row(a, with_eq && r == 0 ? RowSense::Equal : RowSense::LessEqual, rhs(rng));
    }
    return p;
}

}  // namespace

TEST_CASE("small textbook problems") {
    LpProblem p;
    p.add_variable(1.0, 0.0, 1.0);
    p.add_variable(1.0, 0.0, 1.0);
    p.add_dense_row(std::vector<double>{1.0, 1.0}, RowSense::LessEqual, 1.0);
    auto s = solve_lp(p);
    CHECK(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(1.0));
    CHECK(verify_kkt(p, s));

    LpProblem q;
    q.add_variable(1.0, 0.0, kInf);
    q.add_dense_row(std::vector<double>{1.0}, RowSense::LessEqual, -1.0);
    CHECK(solve_lp(q).status == LpStatus::Infeasible);

    LpProblem u;
    u.add_variable(1.0, 0.0, kInf);
    u.add_variable(0.0, 0.0, kInf);
    u.add_dense_row(std::vector<double>{1.0, -1.0}, RowSense::LessEqual, 2.0);
    CHECK(solve_lp(u).status == LpStatus::Unbounded);
}

TEST_CASE("all-zero problem satisfies KKT") {
    LpProblem p;
    p.add_variable(0.0, 0.0, 0.0);
    p.add_dense_row(std::vector<double>{0.0}, RowSense::LessEqual, 0.0);
    auto s = solve_lp(p);
    CHECK(s.status == LpStatus::Optimal);
    CHECK(verify_kkt(p, s));
}

TEST_CASE("master LP with two tight integer cuts") {
    // Variables x0, x1, x2, theta1, theta2; maximize (theta1 + theta2) / 2.
    LpProblem p;
    for (int j = 0; j < 3; ++j) p.add_variable(0.0, 0.0, 1.0);
    p.add_variable(0.5, 0.0, 8.0);
    p.add_variable(0.5, 0.0, 8.0);
    p.add_dense_row(std::vector<double>{-1, 0, 0, 0, 0}, RowSense::LessEqual, -1.0);
    p.add_dense_row(std::vector<double>{0, 1, 1, 0, 0}, RowSense::LessEqual, 1.0);
    p.add_dense_row(std::vector<double>{0, 0, 0, 1, 0}, RowSense::LessEqual, 8.0);
    p.add_dense_row(std::vector<double>{0, 0, -3, 0, 1}, RowSense::LessEqual, 5.0);
    auto s = solve_lp(p);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(8.0));
    CHECK(s.primal[2] == doctest::Approx(1.0));
    CHECK(verify_kkt(p, s));
}

TEST_CASE("perturbed dual fails KKT") {
    LpProblem p;
    p.add_variable(3.0, 0.0, 10.0);
    p.add_variable(2.0, 0.0, 10.0);
    p.add_dense_row(std::vector<double>{1.0, 1.0}, RowSense::LessEqual, 4.0);
    p.add_dense_row(std::vector<double>{1.0, 3.0}, RowSense::LessEqual, 6.0);
    p.add_dense_row(std::vector<double>{1.0, 0.0}, RowSense::LessEqual, 3.0);
    auto s = solve_lp(p);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(11.0));
    CHECK(verify_kkt(p, s));
    for (int r = 0; r < p.n_rows(); ++r) {
        auto bad = s;
        bad.duals[r] += 1e-3;
        CHECK_FALSE(verify_kkt(p, bad));
    }
}

TEST_CASE("random LPs agree with vertex enumeration") {
    std::mt19937_64 rng(12345);
    int optimal = 0, infeasible = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + trial % 3;
        const int m = 1 + trial % 5;
        const auto p = random_lp(rng, n, m, trial % 4 == 0);
        const auto oracle = vertex_oracle(p);
        const auto s = solve_lp(p);
        if (!oracle.feasible) {
            CHECK(s.status == LpStatus::Infeasible);
            ++infeasible;
            continue;
        }
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(s.objective == doctest::Approx(oracle.best).epsilon(1e-9));
        CHECK(verify_kkt(p, s));
        ++optimal;
    }
    CHECK(optimal > 100);
    CHECK(infeasible > 5);
}

TEST_CASE("warm re-solve after adding rows and changing bounds matches a cold solve") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto p = random_lp(rng, 4, 3, false);
        LpSolver solver(p);
        auto first = solver.solve();
        auto q = p;
        for (int extra = 0; extra < 3; ++extra) {
            std::vector<double> a(4);
            for (double &v : a) v = std::round(coef(rng) * 2.0) / 2.0;
            SparseRow row;
            for (int j = 0; j < 4; ++j) {
                if (a[j] != 0.0) row.push(j, a[j]);
            }
            q.add_row(row, RowSense::LessEqual, 2.0);
            solver.add_row(row, RowSense::LessEqual, 2.0);
        }
        const int j = trial % 4;
        const double lo = q.lower[j], hi = std::max(q.lower[j], q.upper[j] - 1.0);
        q.lower[j] = lo;
        q.upper[j] = hi;
        solver.set_bounds(j, lo, hi);
        const auto warm = solver.solve();
        const auto cold = solve_lp(q);
        REQUIRE(warm.status == cold.status);
        if (cold.status == LpStatus::Optimal) {
            CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
            CHECK(verify_kkt(q, warm));
        }
        (void)first;
    }
}

TEST_CASE("dive of bound fixings re-solved warm matches cold solves") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coef(0.0, 1.0);
    int infeasible_seen = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 12, m = 8;
        LpProblem p;
        for (int j = 0; j < n; ++j) p.add_variable(coef(rng), 0.0, 1.0);
        for (int r = 0; r < m; ++r) {
            std::vector<double> a(n);
            for (double &v : a) v = std::round(coef(rng) * 4.0) / 4.0;
            p.add_dense_row(a, RowSense::LessEqual, 1.0 + 2.0 * coef(rng));
        }
        LpSolver solver(p);
        auto q = p;
        solver.solve();
        for (int step = 0; step < n; ++step) {
            const int j = static_cast<int>(rng() % n);
            const double v = rng() % 2 == 0 ? 0.0 : 1.0;
            q.lower[j] = q.upper[j] = v;
            solver.set_bounds(j, v, v);
            const auto warm = solver.solve();
            const auto cold = solve_lp(q);
            REQUIRE(warm.status == cold.status);
            if (cold.status != LpStatus::Optimal) {
                ++infeasible_seen;
                break;
            }
            CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
            CHECK(verify_kkt(q, warm));
        }
    }
    CHECK(infeasible_seen > 0);
}

TEST_CASE("warm re-solve after a violated cut takes few pivots") {
    LpProblem p;
    for (int j = 0; j < 30; ++j) p.add_variable(1.0 + 0.01 * j, 0.0, 1.0);
    std::vector<double> ones(30, 1.0);
    p.add_dense_row(ones, RowSense::LessEqual, 10.0);
    LpSolver solver(p);
    const auto s1 = solver.solve();
    CHECK(s1.objective == doctest::Approx(10.0 + 0.01 * (20 + 29) * 10 / 2));
    solver.add_row(SparseRow{{29}, {1.0}}, RowSense::LessEqual, 0.0);
    const auto s2 = solver.solve();
    CHECK(s2.iterations <= 2);
    CHECK(s2.objective == doctest::Approx(s1.objective - 1.29 + 1.19));
    CHECK(verify_kkt(solver.problem(), s2));
}

TEST_CASE("basis snapshots restore after rows are appended") {
    LpProblem p;
    for (int j = 0; j < 3; ++j) p.add_variable(1.0 + j, 0.0, 1.0);
    p.add_dense_row(std::vector<double>{1, 1, 1}, RowSense::LessEqual, 2.0);
    LpSolver solver(p);
    auto s1 = solver.solve();
    CHECK(s1.objective == doctest::Approx(5.0));
    const auto snap = solver.basis();
    solver.add_row(SparseRow{{2}, {1.0}}, RowSense::LessEqual, 0.5);
    auto s2 = solver.solve();
    CHECK(s2.objective == doctest::Approx(4.0));
    solver.set_basis(snap);
    auto s3 = solver.solve();
    CHECK(s3.objective == doctest::Approx(4.0));
}

TEST_CASE("larger structured LP with many rows") {
    // A Benders-style master: 8 x variables, 300 theta variables, cuts per theta.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LpProblem p;
    const int nx = 8, nt = 300;
    for (int j = 0; j < nx; ++j) p.add_variable(0.0, 0.0, 1.0);
    for (int i = 0; i < nt; ++i) p.add_variable(1.0 / nt, 0.0, 10.0);
    std::vector<double> card(nx + nt, 0.0);
    for (int j = 0; j < nx; ++j) card[j] = 1.0;
    p.add_dense_row(card, RowSense::LessEqual, 3.0);
    for (int i = 0; i < nt; ++i) {
        for (int c = 0; c < 4; ++c) {
            SparseRow row;
            row.push(nx + i, 1.0);
            for (int j = 0; j < nx; ++j) {
                if (u(rng) < 0.5) row.push(j, -std::round(u(rng) * 80.0) / 10.0);
            }
            p.add_row(row, RowSense::LessEqual, std::round(u(rng) * 30.0) / 10.0);
        }
    }
    auto s = solve_lp(p);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(verify_kkt(p, s));
}
