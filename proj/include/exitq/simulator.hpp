#pragma once

#include "exitq/core_model.hpp"
#include "exitq/distributions.hpp"
#include "exitq/mdp.hpp"
#include "exitq/mechanisms.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace exitq
{
    // Runs a solved scheduling policy on live queues.
    struct OptimalMechanism
    {
        std::shared_ptr<const Policy> policy;
        TwoLevelCosts costs;
    };

    using MechanismChoice = std::variant<Mechanism, OptimalMechanism>;

    std::string mechanism_name(const MechanismChoice &choice);
    std::vector<ExitRequest> select(const MechanismChoice &choice, const QueueState &state,
                                    const ConstraintSet &constraints);

    struct SimulationConfig
    {
        ConstraintSet constraints = ConstraintSet::absolute({{5, 5}});
        MechanismChoice mechanism = Mechanism{MinSlack{}};
        CountDistribution arrival_counts = constant_count(0);
        ValueDistribution values = DiscreteValues{{1.0}, {1.0}};
        std::size_t steps = 1;
        std::size_t burn_in = 0;
        std::optional<double> discount;
        std::uint64_t seed = 0;
        std::size_t trials = 1;
        // Only read in fraction-of-stake mode.
        Stake initial_stake = 0;
        unsigned threads = 1;

        void validate() const;
    };

    struct ProcessedRecord
    {
        ExitRequest request;
        Period processed_at = 0;
        Period delay = 0;
    };

    struct TrialResult
    {
        // Entry t-1 is minus the cost of everyone still waiting after period t was processed.
        std::vector<double> per_period_penalty;
        std::vector<ProcessedRecord> processed_log;
        std::vector<Stake> trace;
        std::vector<Stake> stake_history;
        std::vector<ExitRequest> unprocessed;
        std::size_t steps = 0;

        friend bool operator==(const TrialResult &, const TrialResult &) = default;
    };

    inline bool operator==(const ProcessedRecord &a, const ProcessedRecord &b)
    {
        return a.request == b.request && a.processed_at == b.processed_at && a.delay == b.delay;
    }

    // Draws a count from `counts`, then that many i.i.d. costs. Requests get
    // unit stake, bid = cost, and consecutive ids starting at next_id.
    std::vector<ExitRequest> sample_arrivals(Rng &rng, Period period, const CountDistribution &counts,
                                             const ValueDistribution &values, std::uint64_t &next_id);

    // Simulates from an empty queue. arrivals[t-1] joins before period t is decided.
    TrialResult run_arrivals(const SimulationConfig &config, const std::vector<std::vector<ExitRequest>> &arrivals);
    // Trial `index` of the configured run, seeded from (config.seed, index).
    TrialResult run_trial(const SimulationConfig &config, std::uint64_t index = 0);

    double discounted_reward(const TrialResult &result, double gamma);
    // Mean of -cost * delay over requests processed after burn_in. Requests
    // still waiting at the end are charged as if processed in period steps + 1.
    double steady_state_disutility(const TrialResult &result, std::size_t burn_in);

    enum class Metric
    {
        Discounted,
        SteadyState,
    };

    std::string to_string(Metric metric);

    struct Summary
    {
        std::vector<double> values; // one per trial, in trial order
        double mean = 0.0;
        double standard_error = 0.0;
        double p001 = 0.0;
        double p01 = 0.0;
        double p50 = 0.0;
    };

    // Linear interpolation between order statistics (R type 7).
    double quantile(std::vector<double> sorted, double q);

    // Runs config.trials trials on config.threads threads. Results do not
    // depend on the thread count. Every trace is audited; a failure throws
    // InvariantViolation.
    Summary monte_carlo(const SimulationConfig &config, Metric metric);

    struct HistogramBin
    {
        double left = 0.0;
        double right = 0.0;
        std::size_t count = 0;
        double density = 0.0;
        double log_density = 0.0;
    };

    // Bins aligned to multiples of `width`, covering min..max of the values.
    std::vector<HistogramBin> histogram(const std::vector<double> &values, double width = 0.1);

    // Every schedule of per-period processed counts over `horizon` periods that
    // keeps the trace feasible and never processes more than is waiting.
    // `requests` are unit-stake arrivals; requested_at is the period they join.
    std::vector<std::vector<Stake>> brute_force_schedules(const std::vector<ExitRequest> &requests,
                                                          const ConstraintSet &constraints, std::size_t horizon,
                                                          Stake initial_stake = 0, double limit = 1e7);
} // namespace exitq
