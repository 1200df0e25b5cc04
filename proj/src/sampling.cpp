#include "sbbd/sampling.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace sbbd {

void DistributionSpec::validate() const {
    auto fail = [this](const char *why) {
        throw std::invalid_argument("invalid " + to_string(kind) + " distribution: " + why);
    };
    if (!std::isfinite(a) || !std::isfinite(b)) fail("non-finite parameter");
    switch (kind) {
        case DistributionKind::Uniform:
            if (!(b > a)) fail("hi must exceed lo");
            break;
        case DistributionKind::Normal:
            if (b < 0.0) fail("variance must be >= 0");
            break;
        case DistributionKind::Gumbel:
        case DistributionKind::Lognormal:
            if (!(b > 0.0)) fail("scale must be > 0");
            break;
        case DistributionKind::Exponential:
            if (!(a > 0.0)) fail("rate must be > 0");
            break;
        case DistributionKind::Bernoulli:
            if (a < 0.0 || a > 1.0) fail("p must lie in [0, 1]");
            break;
    }
}

std::string to_string(DistributionKind kind) {
    switch (kind) {
        case DistributionKind::Uniform: return "uniform";
        case DistributionKind::Normal: return "normal";
        case DistributionKind::Gumbel: return "gumbel";
        case DistributionKind::Exponential: return "exponential";
        case DistributionKind::Lognormal: return "lognormal";
        case DistributionKind::Bernoulli: return "bernoulli";
    }
    return "unknown";
}

DistributionKind distribution_kind_from_string(const std::string &name) {
    for (auto k : {DistributionKind::Uniform, DistributionKind::Normal, DistributionKind::Gumbel,
                   DistributionKind::Exponential, DistributionKind::Lognormal, DistributionKind::Bernoulli}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown distribution kind: " + name);
}

std::string to_string(SamplingScheme scheme) { return scheme == SamplingScheme::LHS ? "lhs" : "mcs"; }

SamplingScheme sampling_scheme_from_string(const std::string &name) {
    if (name == "lhs" || name == "LHS") return SamplingScheme::LHS;
    if (name == "mcs" || name == "MCS") return SamplingScheme::MCS;
    throw std::invalid_argument("unknown sampling scheme: " + name);
}

namespace {

// Acklam's rational approximation (relative error ~1.15e-9).
double acklam(double p) {
    constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                            1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                            6.680131188771972e+01,  -1.328068155288572e+01};
    constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                            -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                            3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double standard_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal quantile requires 0 < p < 1");
    double x = acklam(p);
    // One Halley step; above the median the residual is formed from complements.
    const double e = p > 0.5 ? (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2)
                             : 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double inverse_cdf(const DistributionSpec &spec, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_cdf requires 0 < p < 1");
    spec.validate();
    switch (spec.kind) {
        case DistributionKind::Uniform: return spec.a + p * (spec.b - spec.a);
        case DistributionKind::Normal: return spec.a + std::sqrt(spec.b) * standard_normal_quantile(p);
        case DistributionKind::Gumbel: return spec.a - spec.b * std::log(-std::log(p));
        case DistributionKind::Exponential: return -std::log1p(-p) / spec.a;
        case DistributionKind::Lognormal: return std::exp(spec.a + spec.b * standard_normal_quantile(p));
        case DistributionKind::Bernoulli: return p > 1.0 - spec.a ? 1.0 : 0.0;
    }
    throw std::logic_error("unreachable distribution kind");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below requires a positive bound");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % bound;
}

SampleMatrix sample_mcs(const DistributionSpec &spec, std::size_t n, std::size_t d, std::uint64_t seed) {
    spec.validate();
    if (n == 0 || d == 0) throw std::invalid_argument("sample size and dimension must be positive");
    SampleMatrix out{n, d, std::vector<double>(n * d), seed, SamplingScheme::MCS};
    Rng rng(seed);
    for (double &v : out.values) v = inverse_cdf(spec, rng.uniform_open());
    return out;
}

SampleMatrix sample_lhs(const DistributionSpec &spec, std::size_t n, std::size_t d, std::uint64_t seed) {
    spec.validate();
    if (n == 0 || d == 0) throw std::invalid_argument("sample size and dimension must be positive");
    SampleMatrix out{n, d, std::vector<double>(n * d), seed, SamplingScheme::LHS};
    Rng rng(seed);
    std::vector<std::size_t> perm(n);
    const double width = 1.0 / static_cast<double>(n);
    for (std::size_t col = 0; col < d; ++col) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.below(i)]);
        }
        for (std::size_t row = 0; row < n; ++row) {
            double p = (static_cast<double>(perm[row]) + rng.uniform_open()) * width;
            // Rounding can push the top stratum to exactly 1.
            if (p >= 1.0) p = std::nextafter(1.0, 0.0);
            out.values[row * d + col] = inverse_cdf(spec, p);
        }
    }
    return out;
}

SampleMatrix sample(const DistributionSpec &spec, std::size_t n, std::size_t d, std::uint64_t seed,
                    SamplingScheme scheme) {
    return scheme == SamplingScheme::LHS ? sample_lhs(spec, n, d, seed) : sample_mcs(spec, n, d, seed);
}

}  // namespace sbbd
