#include "exitq/distributions.hpp"
#include "exitq/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace exitq;

TEST_CASE("trial generators depend only on seed and index")
{
    Rng a = trial_rng(7, 3);
    Rng b = trial_rng(7, 3);
    Rng c = trial_rng(7, 4);
    Rng d = trial_rng(8, 3);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("arrival count mean")
{
    const CountDistribution y{{0, 1, 5}, {0.5, 0.4, 0.1}};
    CHECK(y.mean() == doctest::Approx(0.9));
    CHECK(y.max_point() == 5);
    Rng rng = trial_rng(1, 0);
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i)
    {
        sum += y.sample(rng);
    }
    CHECK(std::abs(sum / n - 0.9) < 0.003);
}

TEST_CASE("two-point value fractions")
{
    const ValueDistribution x = DiscreteValues{{1.0, 10.0}, {0.9, 0.1}};
    Rng rng = trial_rng(2, 0);
    int high = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i)
    {
        high += sample_value(x, rng) == 10.0;
    }
    CHECK(std::abs(static_cast<double>(high) / n - 0.1) < 0.001);
    CHECK(mean(x) == doctest::Approx(1.9));
}

TEST_CASE("continuous value conventions")
{
    CHECK(mean(ValueDistribution{ExponentialValues{0.1, ExponentialConvention::Rate}}) == doctest::Approx(10.0));
    CHECK(mean(ValueDistribution{ExponentialValues{0.1, ExponentialConvention::Scale}}) == doctest::Approx(0.1));
    const ParetoValues p{2.0, 5.0, ParetoConvention::ShapeScale};
    CHECK(p.shape() == 2.0);
    CHECK(p.scale() == 5.0);
    CHECK(mean(ValueDistribution{p}) == doctest::Approx(10.0));
    const ParetoValues swapped{5.0, 2.0, ParetoConvention::ScaleShape};
    CHECK(swapped.shape() == 2.0);
    CHECK(std::isinf(mean(ValueDistribution{ParetoValues{1.0, 1.0}})));

    Rng rng = trial_rng(3, 0);
    const int n = 400000;
    double e_sum = 0.0;
    double u_sum = 0.0;
    double p_min = 1e9;
    int p_above_10 = 0;
    for (int i = 0; i < n; ++i)
    {
        e_sum += sample_value(ExponentialValues{0.1}, rng);
        u_sum += sample_value(UniformValues{0.0, 1.0}, rng);
        const double v = sample_value(p, rng);
        p_min = std::min(p_min, v);
        p_above_10 += v > 10.0;
    }
    CHECK(std::abs(e_sum / n - 10.0) < 0.1);
    CHECK(std::abs(u_sum / n - 0.5) < 0.005);
    CHECK(p_min >= 5.0);
    // P(X > 10) = (5/10)^2
    CHECK(std::abs(static_cast<double>(p_above_10) / n - 0.25) < 0.005);
}

TEST_CASE("distribution validation")
{
    CHECK_THROWS_AS((CountDistribution{{0, 1}, {0.5, 0.4}}.validate()), InvalidInput);
    CHECK_THROWS_AS((CountDistribution{{-1}, {1.0}}.validate()), InvalidInput);
    CHECK_THROWS_AS((CountDistribution{{}, {}}.validate()), InvalidInput);
    CHECK_THROWS_AS(validate(UniformValues{1.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(validate(ExponentialValues{0.0}), InvalidInput);
    CHECK_THROWS_AS(validate(ParetoValues{2.0, -1.0}), InvalidInput);
    CHECK_NOTHROW(validate(DiscreteValues{{1.0, 10.0}, {0.9, 0.1}}));
    CHECK(describe(UniformValues{0.0, 1.0}) == "uniform(0,1)");
}

TEST_CASE("truncated poisson keeps nearly all mass")
{
    const auto y = truncated_poisson(0.9);
    CHECK_NOTHROW(y.validate());
    CHECK(y.mean() == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(constant_count(3).mean() == 3.0);
}
