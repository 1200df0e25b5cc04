#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sbbd {

enum class DistributionKind { Uniform, Normal, Gumbel, Exponential, Lognormal, Bernoulli };

/// A univariate distribution with its natural parameters.
///
/// Parameter meaning per kind:
///   Uniform(a = lo, b = hi), Normal(a = mean, b = variance),
///   Gumbel(a = location, b = scale), Exponential(a = rate),
///   Lognormal(a = location, b = scale), Bernoulli(a = p).
struct DistributionSpec {
    DistributionKind kind = DistributionKind::Uniform;
    double a = 0.0;
    double b = 1.0;

    static DistributionSpec uniform(double lo, double hi) { return {DistributionKind::Uniform, lo, hi}; }
    static DistributionSpec normal(double mean, double variance) {
        return {DistributionKind::Normal, mean, variance};
    }
    static DistributionSpec gumbel(double location, double scale) {
        return {DistributionKind::Gumbel, location, scale};
    }
    static DistributionSpec exponential(double rate) { return {DistributionKind::Exponential, rate, 0.0}; }
    static DistributionSpec lognormal(double location, double scale) {
        return {DistributionKind::Lognormal, location, scale};
    }
    static DistributionSpec bernoulli(double p) { return {DistributionKind::Bernoulli, p, 0.0}; }

    /// Throws std::invalid_argument if the parameters violate the kind's domain.
    void validate() const;

    bool operator==(const DistributionSpec &) const = default;
};

std::string to_string(DistributionKind kind);
DistributionKind distribution_kind_from_string(const std::string &name);

enum class SamplingScheme { MCS, LHS };

std::string to_string(SamplingScheme scheme);
SamplingScheme sampling_scheme_from_string(const std::string &name);

/// Row-major N x D matrix of variates together with the inputs that produced it.
struct SampleMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::uint64_t seed = 0;
    SamplingScheme scheme = SamplingScheme::MCS;

    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

/// Standard normal quantile. Absolute error below 1e-9 on (1e-10, 1 - 1e-10).
double standard_normal_quantile(double p);

/// Standard normal CDF.
double standard_normal_cdf(double x);

/// F^{-1}(p) for the given distribution. Requires 0 < p < 1.
///
/// Bernoulli is a threshold on p: returns 1 when p > 1 - p_param and 0 otherwise.
double inverse_cdf(const DistributionSpec &spec, double p);

/// Mixes a base seed with a stream index into an independent 64-bit seed
/// (splitmix64 finalizer). Used to derive substreams deterministically.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Thin wrapper over std::mt19937_64 producing open-interval uniforms and
/// unbiased bounded integers without relying on std:: distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by rejection; bound >= 1.
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// i.i.d. Monte Carlo draws, filled row by row.
SampleMatrix sample_mcs(const DistributionSpec &spec, std::size_t n, std::size_t d, std::uint64_t seed);

/// Latin hypercube draws: for every column the n probability points occupy the
/// n equal strata of (0,1) exactly once, under an independent permutation per column.
SampleMatrix sample_lhs(const DistributionSpec &spec, std::size_t n, std::size_t d, std::uint64_t seed);

SampleMatrix sample(const DistributionSpec &spec, std::size_t n, std::size_t d, std::uint64_t seed,
                    SamplingScheme scheme);

}  // namespace sbbd
