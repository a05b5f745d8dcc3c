#pragma once

#include "exitq/core_model.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace exitq
{
    // Ordering used by the priority mechanisms. Bid is the pay-your-bid
    // variant; Arrival ignores values and keeps FCFS order.
    enum class PriorityKey
    {
        Cost,
        Bid,
        Arrival,
    };

    // Fixed number of units per period, highest priority first, never above min slack.
    struct Constant
    {
        Stake rate = 1;
        PriorityKey key = PriorityKey::Cost;
    };

    struct MinSlack
    {
    };

    struct PrioMinSlack
    {
        PriorityKey key = PriorityKey::Cost;
    };

    // Uses only round_half_down(alpha * min_slack) of the available slack.
    struct AlphaMinSlack
    {
        double alpha = 1.0;
        PriorityKey key = PriorityKey::Cost;
    };

    using Mechanism = std::variant<Constant, MinSlack, PrioMinSlack, AlphaMinSlack>;

    std::string mechanism_name(const Mechanism &mechanism);

    // Waiting list in FCFS order: by request period, ties kept in insertion order.
    std::vector<ExitRequest> fcfs_order(std::span<const ExitRequest> waiting);
    // Waiting list by descending priority, ties in FCFS order.
    std::vector<ExitRequest> priority_order(std::span<const ExitRequest> waiting, PriorityKey key = PriorityKey::Cost);

    // Longest prefix of `ordered` whose stake sum stays within `capacity`. Stops
    // at the first request that does not fit.
    std::vector<ExitRequest> largest_prefix(std::span<const ExitRequest> ordered, Stake capacity);

    // Nearest integer to alpha * min_slack, exact halves rounded down.
    Stake alpha_capacity(double alpha, Stake min_slack);

    std::vector<ExitRequest> select_minslack(const QueueState &state, const ConstraintSet &constraints);
    std::vector<ExitRequest> select_prio_minslack(const QueueState &state, const ConstraintSet &constraints,
                                                  PriorityKey key = PriorityKey::Cost);
    std::vector<ExitRequest> select_alpha_minslack(const QueueState &state, const ConstraintSet &constraints,
                                                   double alpha, PriorityKey key = PriorityKey::Cost);
    std::vector<ExitRequest> select_constant(const QueueState &state, const ConstraintSet &constraints, Stake rate,
                                             PriorityKey key = PriorityKey::Cost);

    std::vector<ExitRequest> select(const Mechanism &mechanism, const QueueState &state,
                                    const ConstraintSet &constraints);
} // namespace exitq
