#include "exitq/distributions.hpp"

#include "exitq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace exitq
{
    namespace
    {
        template <class... Ts>
        struct overloaded : Ts...
        {
            using Ts::operator()...;
        };
        template <class... Ts>
        overloaded(Ts...) -> overloaded<Ts...>;

        void check_probs(const std::vector<double> &probs, std::size_t points, const char *what)
        {
            if (probs.empty() || probs.size() != points)
            {
                throw InvalidInput(std::string(what) + ": points and probabilities must be nonempty and aligned");
            }
            double total = 0.0;
            for (double p : probs)
            {
                if (!(p >= 0.0))
                {
                    throw InvalidInput(std::string(what) + ": probabilities must be nonnegative");
                }
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-9)
            {
                throw InvalidInput(std::string(what) + ": probabilities must sum to 1");
            }
        }

        // Inverse-CDF draw over `probs`; the last bucket absorbs rounding.
        std::size_t draw_index(const std::vector<double> &probs, Rng &rng)
        {
            const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < probs.size(); ++i)
            {
                acc += probs[i];
                if (u < acc)
                {
                    return i;
                }
            }
            return probs.size() - 1;
        }

        std::string fmt(double x)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", x);
            return buf;
        }
    } // namespace

    Rng trial_rng(std::uint64_t seed, std::uint64_t index)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
        return Rng(seq);
    }

    void CountDistribution::validate() const
    {
        check_probs(probs, points.size(), "count distribution");
        for (int p : points)
        {
            if (p < 0)
            {
                throw InvalidInput("count distribution: points must be nonnegative");
            }
        }
    }

    double CountDistribution::mean() const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            m += points[i] * probs[i];
        }
        return m;
    }

    int CountDistribution::max_point() const
    {
        return points.empty() ? 0 : *std::max_element(points.begin(), points.end());
    }

    int CountDistribution::sample(Rng &rng) const
    {
        return points[draw_index(probs, rng)];
    }

    CountDistribution constant_count(int value)
    {
        return CountDistribution{{value}, {1.0}};
    }

    CountDistribution truncated_poisson(double lambda, double tail)
    {
        if (!(lambda > 0.0) || !(tail > 0.0))
        {
            throw InvalidInput("poisson: lambda and tail must be positive");
        }
        CountDistribution out;
        double p = std::exp(-lambda);
        double mass = 0.0;
        for (int k = 0; 1.0 - mass > tail && k < 10000; ++k)
        {
            out.points.push_back(k);
            out.probs.push_back(p);
            mass += p;
            p *= lambda / (k + 1);
        }
        for (double &q : out.probs)
        {
            q /= mass;
        }
        return out;
    }

    void validate(const ValueDistribution &dist)
    {
        std::visit(overloaded{
                       [](const DiscreteValues &d) {
                           check_probs(d.probs, d.points.size(), "discrete values");
                           for (double v : d.points)
                           {
                               if (!(v >= 0.0))
                               {
                                   throw InvalidInput("discrete values: costs must be nonnegative");
                               }
                           }
                       },
                       [](const UniformValues &d) {
                           if (!(d.lo < d.hi) || d.lo < 0.0)
                           {
                               throw InvalidInput("uniform values: need 0 <= lo < hi");
                           }
                       },
                       [](const ExponentialValues &d) {
                           if (!(d.parameter > 0.0))
                           {
                               throw InvalidInput("exponential values: parameter must be positive");
                           }
                       },
                       [](const ParetoValues &d) {
                           if (!(d.first > 0.0) || !(d.second > 0.0))
                           {
                               throw InvalidInput("pareto values: parameters must be positive");
                           }
                       },
                   },
                   dist);
    }

    double sample_value(const ValueDistribution &dist, Rng &rng)
    {
        return std::visit(overloaded{
                              [&](const DiscreteValues &d) { return d.points[draw_index(d.probs, rng)]; },
                              [&](const UniformValues &d) {
                                  return std::uniform_real_distribution<double>(d.lo, d.hi)(rng);
                              },
                              [&](const ExponentialValues &d) {
                                  const double rate = d.convention == ExponentialConvention::Rate
                                                          ? d.parameter
                                                          : 1.0 / d.parameter;
                                  return std::exponential_distribution<double>(rate)(rng);
                              },
                              [&](const ParetoValues &d) {
                                  // 1 - u lies in (0, 1], so the power is finite.
                                  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                                  return d.scale() * std::pow(1.0 - u, -1.0 / d.shape());
                              },
                          },
                          dist);
    }

    double mean(const ValueDistribution &dist)
    {
        return std::visit(overloaded{
                              [](const DiscreteValues &d) {
                                  return std::inner_product(d.points.begin(), d.points.end(), d.probs.begin(), 0.0);
                              },
                              [](const UniformValues &d) { return 0.5 * (d.lo + d.hi); },
                              [](const ExponentialValues &d) {
                                  return d.convention == ExponentialConvention::Rate ? 1.0 / d.parameter
                                                                                     : d.parameter;
                              },
                              [](const ParetoValues &d) {
                                  if (d.shape() <= 1.0)
                                  {
                                      return std::numeric_limits<double>::infinity();
                                  }
                                  return d.shape() * d.scale() / (d.shape() - 1.0);
                              },
                          },
                          dist);
    }

    std::string describe(const ValueDistribution &dist)
    {
        return std::visit(overloaded{
                              [](const DiscreteValues &d) {
                                  std::string s = "discrete{";
                                  for (std::size_t i = 0; i < d.points.size(); ++i)
                                  {
                                      s += (i ? "," : "") + fmt(d.points[i]) + ":" + fmt(d.probs[i]);
                                  }
                                  return s + "}";
                              },
                              [](const UniformValues &d) { return "uniform(" + fmt(d.lo) + "," + fmt(d.hi) + ")"; },
                              [](const ExponentialValues &d) {
                                  return std::string(d.convention == ExponentialConvention::Rate ? "exp(rate="
                                                                                                 : "exp(scale=") +
                                         fmt(d.parameter) + ")";
                              },
                              [](const ParetoValues &d) {
                                  return "pareto(shape=" + fmt(d.shape()) + ",scale=" + fmt(d.scale()) + ")";
                              },
                          },
                          dist);
    }
} // namespace exitq
