#pragma once

#include "exitq/core_model.hpp"
#include "exitq/distributions.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace exitq
{
    // Scheduling MDP for a single absolute constraint (budget, window): at most
    // `budget` withdrawals in any `window` consecutive periods. The state keeps
    // the last window-1 processed counts, so an action a is legal iff
    // sum(history) + a <= budget.
    struct MdpShape
    {
        int cap = 10;
        int budget = 5;
        int window = 5;

        int history_length() const noexcept { return window - 1; }
        friend bool operator==(const MdpShape &, const MdpShape &) = default;
    };

    struct MdpState
    {
        int w_low = 0;
        int w_high = 0;
        std::vector<int> history; // history[0] is the most recent period

        int history_sum() const noexcept;
        friend bool operator==(const MdpState &, const MdpState &) = default;
    };

    // Dense lexicographic enumeration of (w_low, w_high, h_1 .. h_{window-1}).
    class StateSpace
    {
    public:
        StateSpace(int cap, int budget, int window = 5);

        const MdpShape &shape() const noexcept { return shape_; }
        std::size_t size() const noexcept { return size_; }
        std::size_t history_count() const noexcept { return histories_.size(); }

        MdpState state(std::size_t index) const;
        std::optional<std::size_t> find(const MdpState &s) const;
        std::size_t index_of(const MdpState &s) const;

        int w_low(std::size_t index) const noexcept;
        int w_high(std::size_t index) const noexcept;
        int history_sum(std::size_t index) const noexcept;
        int max_action(std::size_t index) const noexcept { return shape_.budget - history_sum(index); }

        // State reached after processing `action` with `low`/`high` requests
        // waiting at the start of the next period (saturated at cap).
        std::size_t successor(std::size_t index, int action, int low, int high) const;

    private:
        std::size_t compose(int w_low, int w_high, std::size_t history) const noexcept;

        MdpShape shape_;
        std::size_t size_ = 0;
        std::vector<std::vector<int>> histories_;
        std::vector<int> history_sums_;
        std::vector<int> history_lookup_;   // base-(budget+1) code -> history index, -1 if out of domain
        std::vector<std::int32_t> shifted_; // history index * (budget+1) + action -> history index, -1 if illegal
    };

    StateSpace enumerate_states(int cap, int budget, int window = 5);

    std::vector<int> legal_actions(const MdpState &state, int budget);

    struct ArrivalModel
    {
        CountDistribution counts;
        double high_prob = 0.1;
        double cost_low = 1.0;
        double cost_high = 10.0;

        void validate() const;
    };

    // One joint realisation of next period's arrivals: `total` requests, `high` of them high-cost.
    struct ArrivalOutcome
    {
        int total = 0;
        int high = 0;
        double prob = 0.0;
    };

    // Each arrival is independently high-cost with probability high_prob.
    std::vector<ArrivalOutcome> arrival_outcomes(const ArrivalModel &model);

    struct Remaining
    {
        int low = 0;
        int high = 0;
    };

    // Processing `action` requests removes high-cost ones first.
    Remaining remaining_after(int w_low, int w_high, int action) noexcept;

    // Minus the waiting cost of everyone still queued after `action` is processed.
    double reward(const MdpState &state, int action, const ArrivalModel &arrivals, int budget);

    struct Transition
    {
        std::uint32_t next = 0;
        double prob = 0.0;
    };

    // Sparse (state, action) -> successor distribution. Rows for illegal actions are empty.
    class TransitionTable
    {
    public:
        TransitionTable() = default;
        TransitionTable(int actions, std::vector<std::uint32_t> offsets, std::vector<Transition> entries);

        int actions() const noexcept { return actions_; }
        std::span<const Transition> row(std::size_t state, int action) const;
        std::size_t nonzeros() const noexcept { return entries_.size(); }

    private:
        int actions_ = 0;
        std::vector<std::uint32_t> offsets_;
        std::vector<Transition> entries_;
    };

    TransitionTable build_transitions(const StateSpace &space, const ArrivalModel &arrivals);

    class MdpModel
    {
    public:
        MdpModel(StateSpace space, ArrivalModel arrivals, double discount);

        const StateSpace &states() const noexcept { return space_; }
        const ArrivalModel &arrivals() const noexcept { return arrivals_; }
        const TransitionTable &transitions() const noexcept { return table_; }
        double discount() const noexcept { return discount_; }
        int action_count() const noexcept { return space_.shape().budget + 1; }

        bool legal(std::size_t state, int action) const noexcept;
        double reward(std::size_t state, int action) const;

    private:
        StateSpace space_;
        ArrivalModel arrivals_;
        double discount_;
        TransitionTable table_;
        std::vector<double> rewards_;
    };

    MdpModel build_model(const ArrivalModel &arrivals, const MdpShape &shape, double discount);

    class Policy
    {
    public:
        Policy(StateSpace space, double discount, double tolerance, std::vector<int> actions,
               std::vector<double> values);

        const StateSpace &states() const noexcept { return space_; }
        double discount() const noexcept { return discount_; }
        double tolerance() const noexcept { return tolerance_; }
        int action(std::size_t state) const { return actions_.at(state); }
        double value(std::size_t state) const { return values_.at(state); }
        std::span<const int> actions() const noexcept { return actions_; }
        std::span<const double> values() const noexcept { return values_; }

    private:
        StateSpace space_;
        double discount_;
        double tolerance_;
        std::vector<int> actions_;
        std::vector<double> values_;
    };

    struct SolveOptions
    {
        double tolerance = 1e-9;
        // Defaults to ceil(10 * log(tolerance) / log(discount)).
        std::optional<std::size_t> max_iterations;
        bool record_residuals = false;
    };

    struct SolveResult
    {
        Policy policy;
        std::size_t iterations = 0;
        double residual = 0.0;
        std::vector<double> residuals;
    };

    SolveResult value_iteration(const MdpModel &model, const SolveOptions &options = {});

    // Q-values of every action at `state` under `values`; illegal actions get -inf.
    std::vector<double> action_values(const MdpModel &model, std::span<const double> values, std::size_t state);
    // Index of the largest entry, preferring the smallest index on ties.
    int greedy_action(std::span<const double> q);

    // Cost levels a two-class policy was solved for.
    struct TwoLevelCosts
    {
        double low = 1.0;
        double high = 10.0;
    };

    // Throws ModelMismatch unless `constraints` is the single absolute (budget, window) pair.
    void require_matching_constraint(const MdpShape &shape, const ConstraintSet &constraints);
    // Projects a live queue onto the MDP state space; counts saturate at cap.
    MdpState live_state(const StateSpace &space, const QueueState &state, TwoLevelCosts costs);

    // Applies the solved policy to a live queue: looks up the action for the
    // projected state and processes that many requests, highest cost first,
    // FCFS within a cost level.
    std::vector<ExitRequest> optimal_select(const Policy &policy, const QueueState &state,
                                            const ConstraintSet &constraints, TwoLevelCosts costs);
} // namespace exitq
