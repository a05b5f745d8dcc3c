#pragma once

#include "exitq/core_model.hpp"
#include "exitq/mdp.hpp"

#include <cstddef>
#include <cstdint>

namespace exitq
{
    struct PaymentEstimate
    {
        double payment = 0.0;
        double standard_error = 0.0;
        bool exact = false;
        std::size_t samples = 0;
    };

    struct VcgOptions
    {
        std::size_t samples = 10000;
        std::uint64_t seed = 0;
        // Futures are followed until the discount weight drops below this.
        double horizon_weight = 1e-12;
        bool force_monte_carlo = false;
    };

    // Pivot payment for `agent`, a member of queue.waiting(): the expected
    // discounted waiting cost of everybody else with the agent present minus
    // the same quantity with the agent removed, both under the solved policy.
    // Deciding happens in queue.period(); the first penalty is undiscounted.
    //
    // The exact route reads both counterfactuals off the value function and
    // needs every live count within the state space. The Monte Carlo route
    // replays identical arrival streams through both queues.
    PaymentEstimate vcg_payment(const MdpModel &model, const Policy &policy, const QueueState &queue,
                                ValidatorId agent, const VcgOptions &options = {});
    PaymentEstimate vcg_payment_exact(const MdpModel &model, const Policy &policy, const QueueState &queue,
                                      ValidatorId agent, double horizon_weight = 1e-12);
    PaymentEstimate vcg_payment_monte_carlo(const MdpModel &model, const Policy &policy, const QueueState &queue,
                                            ValidatorId agent, const VcgOptions &options = {});

    // True when the live queue maps onto the state space without saturation.
    bool representable(const StateSpace &space, const QueueState &queue, TwoLevelCosts costs);
} // namespace exitq
