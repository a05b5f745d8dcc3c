#include "exitq/simulator.hpp"

#include "exitq/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

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

        // Neumaier summation; the result depends only on the order of add() calls.
        class CompensatedSum
        {
        public:
            void add(double x)
            {
                const double t = sum_ + x;
                if (std::abs(sum_) >= std::abs(x))
                {
                    comp_ += (sum_ - t) + x;
                }
                else
                {
                    comp_ += (x - t) + sum_;
                }
                sum_ = t;
            }
            double value() const { return sum_ + comp_; }

        private:
            double sum_ = 0.0;
            double comp_ = 0.0;
        };

        bool selected(std::span<const ExitRequest> chosen, const ExitRequest &r)
        {
            return std::any_of(chosen.begin(), chosen.end(),
                               [&](const ExitRequest &c) { return c.validator == r.validator; });
        }
    } // namespace

    std::string mechanism_name(const MechanismChoice &choice)
    {
        return std::visit(overloaded{
                              [](const Mechanism &m) { return mechanism_name(m); },
                              [](const OptimalMechanism &) { return std::string("optimal"); },
                          },
                          choice);
    }

    std::vector<ExitRequest> select(const MechanismChoice &choice, const QueueState &state,
                                    const ConstraintSet &constraints)
    {
        return std::visit(overloaded{
                              [&](const Mechanism &m) { return select(m, state, constraints); },
                              [&](const OptimalMechanism &m) {
                                  if (!m.policy)
                                  {
                                      throw InvalidInput("optimal mechanism has no policy");
                                  }
                                  return optimal_select(*m.policy, state, constraints, m.costs);
                              },
                          },
                          choice);
    }

    void SimulationConfig::validate() const
    {
        arrival_counts.validate();
        exitq::validate(values);
        if (steps == 0)
        {
            throw InvalidInput("steps must be positive");
        }
        if (burn_in >= steps)
        {
            throw InvalidInput("burn_in must be smaller than steps");
        }
        if (trials == 0)
        {
            throw InvalidInput("trials must be positive");
        }
        if (discount && !(*discount > 0.0 && *discount < 1.0))
        {
            throw InvalidInput("discount must lie in (0, 1)");
        }
        if (constraints.mode() == ConstraintMode::FractionOfStake && initial_stake <= 0)
        {
            throw InvalidInput("fraction-of-stake constraints need a positive initial stake");
        }
        if (const auto *opt = std::get_if<OptimalMechanism>(&mechanism))
        {
            if (!opt->policy)
            {
                throw InvalidInput("optimal mechanism has no policy");
            }
            require_matching_constraint(opt->policy->states().shape(), constraints);
        }
    }

    std::vector<ExitRequest> sample_arrivals(Rng &rng, Period period, const CountDistribution &counts,
                                             const ValueDistribution &values, std::uint64_t &next_id)
    {
        const int k = counts.sample(rng);
        std::vector<ExitRequest> out;
        out.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i)
        {
            const double c = sample_value(values, rng);
            out.push_back(ExitRequest{ValidatorId{next_id++}, 1, period, c, c});
        }
        return out;
    }

    namespace
    {
        // `arrivals_for(t)` yields the batch joining before period t is decided.
        template <class Source>
        TrialResult simulate(const SimulationConfig &config, Source &&arrivals_for)
        {
            TrialResult out;
            out.steps = config.steps;
            out.per_period_penalty.reserve(config.steps);
            QueueState state(config.initial_stake, arrivals_for(1));
            for (std::size_t i = 1; i <= config.steps; ++i)
            {
                const auto t = static_cast<Period>(i);
                const auto chosen = select(config.mechanism, state, config.constraints);
                double penalty = 0.0;
                for (const auto &r : state.waiting())
                {
                    if (!selected(chosen, r))
                    {
                        penalty -= r.cost;
                    }
                }
                out.per_period_penalty.push_back(penalty);
                for (const auto &r : chosen)
                {
                    out.processed_log.push_back(ProcessedRecord{r, t, t - r.requested_at});
                }
                auto batch = i < config.steps ? arrivals_for(t + 1) : std::vector<ExitRequest>{};
                state = step(std::move(state), batch, chosen, config.constraints);
            }
            const auto totals = state.processed_totals();
            const auto stakes = state.stake_history();
            out.trace.assign(totals.begin(), totals.end());
            out.stake_history.assign(stakes.begin(), stakes.end());
            out.unprocessed.assign(state.waiting().begin(), state.waiting().end());
            return out;
        }
    } // namespace

    TrialResult run_arrivals(const SimulationConfig &config, const std::vector<std::vector<ExitRequest>> &arrivals)
    {
        return simulate(config, [&](Period t) {
            const auto i = static_cast<std::size_t>(t - 1);
            return i < arrivals.size() ? arrivals[i] : std::vector<ExitRequest>{};
        });
    }

    TrialResult run_trial(const SimulationConfig &config, std::uint64_t index)
    {
        Rng rng = trial_rng(config.seed, index);
        std::uint64_t next_id = 0;
        return simulate(config, [&](Period t) {
            return sample_arrivals(rng, t, config.arrival_counts, config.values, next_id);
        });
    }

    double discounted_reward(const TrialResult &result, double gamma)
    {
        if (!(gamma > 0.0 && gamma < 1.0))
        {
            throw InvalidInput("discount must lie in (0, 1)");
        }
        CompensatedSum sum;
        double weight = 1.0;
        for (double p : result.per_period_penalty)
        {
            sum.add(weight * p);
            weight *= gamma;
        }
        return sum.value();
    }

    double steady_state_disutility(const TrialResult &result, std::size_t burn_in)
    {
        if (burn_in >= result.steps)
        {
            throw InvalidInput("burn_in must be smaller than the number of steps");
        }
        CompensatedSum sum;
        std::size_t n = 0;
        for (const auto &rec : result.processed_log)
        {
            if (rec.processed_at > static_cast<Period>(burn_in))
            {
                sum.add(-rec.request.cost * static_cast<double>(rec.delay));
                ++n;
            }
        }
        const auto end = static_cast<Period>(result.steps) + 1;
        for (const auto &r : result.unprocessed)
        {
            sum.add(-r.cost * static_cast<double>(end - r.requested_at));
            ++n;
        }
        if (n == 0)
        {
            throw NoWithdrawals("no withdrawals after burn-in");
        }
        return sum.value() / static_cast<double>(n);
    }

    std::string to_string(Metric metric)
    {
        return metric == Metric::Discounted ? "discounted" : "steady_state";
    }

    double quantile(std::vector<double> sorted, double q)
    {
        if (sorted.empty())
        {
            throw InvalidInput("quantile of an empty sample");
        }
        std::sort(sorted.begin(), sorted.end());
        const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    }

    Summary monte_carlo(const SimulationConfig &config, Metric metric)
    {
        config.validate();
        if (metric == Metric::Discounted && !config.discount)
        {
            throw InvalidInput("discounted metric needs a discount factor");
        }

        Summary out;
        out.values.assign(config.trials, 0.0);
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;

        auto worker = [&] {
            while (true)
            {
                const std::size_t i = next.fetch_add(1);
                if (i >= config.trials)
                {
                    return;
                }
                try
                {
                    const auto trial = run_trial(config, i);
                    if (!check_trace_feasible(trial.trace, trial.stake_history, config.constraints))
                    {
                        throw InvariantViolation("trial " + std::to_string(i) + " of " +
                                                 mechanism_name(config.mechanism) +
                                                 " produced an infeasible trace");
                    }
                    out.values[i] = metric == Metric::Discounted ? discounted_reward(trial, *config.discount)
                                                                 : steady_state_disutility(trial, config.burn_in);
                }
                catch (...)
                {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                    {
                        failure = std::current_exception();
                    }
                    next.store(config.trials);
                    return;
                }
            }
        };

        const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.trials)));
        if (threads == 1)
        {
            worker();
        }
        else
        {
            std::vector<std::thread> pool;
            for (unsigned k = 0; k < threads; ++k)
            {
                pool.emplace_back(worker);
            }
            for (auto &th : pool)
            {
                th.join();
            }
        }
        if (failure)
        {
            std::rethrow_exception(failure);
        }

        CompensatedSum sum;
        for (double v : out.values)
        {
            sum.add(v);
        }
        const double n = static_cast<double>(out.values.size());
        out.mean = sum.value() / n;
        if (out.values.size() > 1)
        {
            CompensatedSum sq;
            for (double v : out.values)
            {
                sq.add((v - out.mean) * (v - out.mean));
            }
            out.standard_error = std::sqrt(sq.value() / (n - 1.0) / n);
        }
        std::vector<double> sorted = out.values;
        std::sort(sorted.begin(), sorted.end());
        out.p001 = quantile(sorted, 0.001);
        out.p01 = quantile(sorted, 0.01);
        out.p50 = quantile(sorted, 0.5);
        return out;
    }

    std::vector<HistogramBin> histogram(const std::vector<double> &values, double width)
    {
        if (!(width > 0.0))
        {
            throw InvalidInput("bin width must be positive");
        }
        if (values.empty())
        {
            return {};
        }
        const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
        const double first = std::floor(*lo_it / width);
        const auto bins = static_cast<std::size_t>(std::floor(*hi_it / width) - first) + 1;
        std::vector<HistogramBin> out(bins);
        for (std::size_t b = 0; b < bins; ++b)
        {
            out[b].left = (first + static_cast<double>(b)) * width;
            out[b].right = (first + static_cast<double>(b) + 1.0) * width;
        }
        for (double v : values)
        {
            auto b = static_cast<std::size_t>(std::floor(v / width) - first);
            out[std::min(b, bins - 1)].count += 1;
        }
        const double n = static_cast<double>(values.size());
        for (auto &bin : out)
        {
            bin.density = static_cast<double>(bin.count) / (n * width);
            bin.log_density = bin.count ? std::log(bin.density) : -std::numeric_limits<double>::infinity();
        }
        return out;
    }
} // namespace exitq
