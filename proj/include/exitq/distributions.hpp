#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace exitq
{
    using Rng = std::mt19937_64;

    // Independent generator for trial `index` of a run seeded with `seed`.
    // Derived from (seed, index) only, so trials can run in any order.
    Rng trial_rng(std::uint64_t seed, std::uint64_t index);

    // Finite distribution over nonnegative integers (number of arrivals per period).
    struct CountDistribution
    {
        std::vector<int> points;
        std::vector<double> probs;

        void validate() const;
        double mean() const;
        int max_point() const;
        int sample(Rng &rng) const;
    };

    CountDistribution constant_count(int value);
    // Poisson(lambda) cut where the remaining tail mass falls below `tail`, renormalised.
    CountDistribution truncated_poisson(double lambda, double tail = 1e-12);

    struct DiscreteValues
    {
        std::vector<double> points;
        std::vector<double> probs;
    };

    struct UniformValues
    {
        double lo = 0.0;
        double hi = 1.0;
    };

    enum class ExponentialConvention
    {
        Rate,  // parameter is lambda, mean 1/lambda
        Scale, // parameter is the mean
    };

    struct ExponentialValues
    {
        double parameter = 1.0;
        ExponentialConvention convention = ExponentialConvention::Rate;
    };

    enum class ParetoConvention
    {
        ShapeScale, // (alpha, x_m)
        ScaleShape, // (x_m, alpha)
    };

    // Type I Pareto with support [x_m, inf).
    struct ParetoValues
    {
        double first = 2.0;
        double second = 1.0;
        ParetoConvention convention = ParetoConvention::ShapeScale;

        double shape() const { return convention == ParetoConvention::ShapeScale ? first : second; }
        double scale() const { return convention == ParetoConvention::ShapeScale ? second : first; }
    };

    using ValueDistribution = std::variant<DiscreteValues, UniformValues, ExponentialValues, ParetoValues>;

    void validate(const ValueDistribution &dist);
    double sample_value(const ValueDistribution &dist, Rng &rng);
    // Infinite for a Pareto with shape <= 1.
    double mean(const ValueDistribution &dist);
    std::string describe(const ValueDistribution &dist);
} // namespace exitq
