#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "sbbd/sampling.hpp"

using namespace sbbd;

TEST_CASE("inverse cdf closed forms") {
    CHECK(inverse_cdf(DistributionSpec::exponential(1.0), 1.0 - std::exp(-1.0)) == doctest::Approx(1.0));
    CHECK(std::abs(inverse_cdf(DistributionSpec::gumbel(0.0, 1.0), std::exp(-1.0))) < 1e-12);
    CHECK(std::abs(inverse_cdf(DistributionSpec::normal(0.0, 1.0), 0.5)) < 1e-12);
    CHECK(inverse_cdf(DistributionSpec::normal(3.0, 4.0), 0.975) == doctest::Approx(3.0 + 2.0 * 1.959963984540054));
    CHECK(inverse_cdf(DistributionSpec::uniform(0.0, 20.0), 0.25) == doctest::Approx(5.0));
    CHECK(inverse_cdf(DistributionSpec::bernoulli(0.3), 0.69) == 0.0);
    CHECK(inverse_cdf(DistributionSpec::bernoulli(0.3), 0.71) == 1.0);
    CHECK_THROWS(inverse_cdf(DistributionSpec::normal(0.0, 1.0), 0.0));
    CHECK_THROWS(inverse_cdf(DistributionSpec::normal(0.0, 1.0), 1.0));
    CHECK_THROWS(inverse_cdf(DistributionSpec::exponential(-1.0), 0.5));
    CHECK_THROWS(inverse_cdf(DistributionSpec::uniform(1.0, 1.0), 0.5));
}

TEST_CASE("normal quantile against bisection on erfc") {
    for (double p : {1e-10, 1e-7, 1e-4, 0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98, 1 - 1e-4, 1 - 1e-7}) {
        double lo = -40.0, hi = 40.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
        }
        CHECK(std::abs(standard_normal_quantile(p) - 0.5 * (lo + hi)) < 1e-9);
    }
    double prev = standard_normal_quantile(1e-6);
    for (int k = 1; k < 1000; ++k) {
        const double q = standard_normal_quantile(1e-6 + k * (1.0 - 2e-6) / 1000.0);
        CHECK(q > prev);
        prev = q;
    }
}

TEST_CASE("monte carlo draws") {
    const auto ones = sample_mcs(DistributionSpec::bernoulli(1.0), 3, 1, 5);
    CHECK(ones.values == std::vector<double>{1.0, 1.0, 1.0});

    const auto u = sample_mcs(DistributionSpec::uniform(0.0, 20.0), 10000, 1, 11);
    const double mean = std::accumulate(u.values.begin(), u.values.end(), 0.0) / 10000.0;
    CHECK(std::abs(mean - 10.0) < 0.5);

    const auto a = sample_mcs(DistributionSpec::normal(0.0, 1.0), 20, 3, 7);
    const auto b = sample_mcs(DistributionSpec::normal(0.0, 1.0), 20, 3, 7);
    CHECK(a.values == b.values);
    CHECK(a.values != sample_mcs(DistributionSpec::normal(0.0, 1.0), 20, 3, 8).values);
}

TEST_CASE("latin hypercube stratification") {
    const auto s = sample_lhs(DistributionSpec::uniform(0.0, 20.0), 4, 1, 3);
    std::set<int> strata;
    for (double v : s.values) strata.insert(static_cast<int>(v / 5.0));
    CHECK(strata == std::set<int>{0, 1, 2, 3});

    const auto z = sample_lhs(DistributionSpec::normal(0.0, 1.0), 2, 1, 9);
    CHECK(std::min(z.values[0], z.values[1]) < 0.0);
    CHECK(std::max(z.values[0], z.values[1]) >= 0.0);

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const std::size_t n = 37, d = 5;
        const auto m = sample_lhs(DistributionSpec::uniform(0.0, 1.0), n, d, seed);
        for (std::size_t j = 0; j < d; ++j) {
            std::set<std::size_t> seen;
            for (std::size_t i = 0; i < n; ++i) seen.insert(static_cast<std::size_t>(m(i, j) * n));
            CHECK(seen.size() == n);
        }
    }

    const auto bern = sample_lhs(DistributionSpec::bernoulli(0.3), 100, 2, 4);
    for (std::size_t j = 0; j < 2; ++j) {
        double ones = 0.0;
        for (std::size_t i = 0; i < 100; ++i) ones += bern(i, j);
        CHECK(ones == 30.0);
    }
}

TEST_CASE("lhs reduces the replication variance of a linear functional") {
    auto replication_variance = [](SamplingScheme scheme) {
        std::vector<double> means;
        for (std::uint64_t rep = 0; rep < 50; ++rep) {
            const auto m = sample(DistributionSpec::exponential(1.0), 300, 3, derive_seed(17, rep), scheme);
            double acc = 0.0;
            for (std::size_t i = 0; i < 300; ++i) acc += m(i, 0) + 2.0 * m(i, 1) - m(i, 2);
            means.push_back(acc / 300.0);
        }
        const double mu = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
        double v = 0.0;
        for (double x : means) v += (x - mu) * (x - mu);
        return v / (means.size() - 1);
    };
    CHECK(replication_variance(SamplingScheme::LHS) < replication_variance(SamplingScheme::MCS));
}

TEST_CASE("moments of every continuous kind") {
    struct Case {
        DistributionSpec spec;
        double mean, var;
    };
    const double ln_var = (std::exp(0.25) - 1.0) * std::exp(0.25);
    const Case cases[] = {
        {DistributionSpec::uniform(-2.0, 6.0), 2.0, 64.0 / 12.0},
        {DistributionSpec::normal(1.0, 4.0), 1.0, 4.0},
        {DistributionSpec::gumbel(0.5, 2.0), 0.5 + 2.0 * 0.5772156649015329, std::numbers::pi * std::numbers::pi / 6.0 * 4.0},
        {DistributionSpec::exponential(2.0), 0.5, 0.25},
        {DistributionSpec::lognormal(0.0, 0.5), std::exp(0.125), ln_var},
    };
    for (const auto &c : cases) {
        const std::size_t n = 100000;
        const auto m = sample_mcs(c.spec, n, 1, 2024);
        double mu = 0.0;
        for (double v : m.values) mu += v;
        mu /= n;
        double s2 = 0.0;
        for (double v : m.values) s2 += (v - mu) * (v - mu);
        s2 /= (n - 1);
        CHECK(std::abs(mu - c.mean) < 5.0 * std::sqrt(c.var / n));
        CHECK(std::abs(s2 - c.var) < 0.05 * c.var);
    }
}

TEST_CASE("enum names round trip") {
    for (auto k : {DistributionKind::Uniform, DistributionKind::Normal, DistributionKind::Gumbel,
                   DistributionKind::Exponential, DistributionKind::Lognormal, DistributionKind::Bernoulli}) {
        CHECK(distribution_kind_from_string(to_string(k)) == k);
    }
    CHECK(sampling_scheme_from_string("lhs") == SamplingScheme::LHS);
    CHECK(sampling_scheme_from_string(to_string(SamplingScheme::MCS)) == SamplingScheme::MCS);
    CHECK_THROWS(sampling_scheme_from_string("sobol"));
}
