#include "exitq/vcg.hpp"

#include "exitq/distributions.hpp"
#include "exitq/errors.hpp"
#include "exitq/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

namespace exitq
{
    namespace
    {
        TwoLevelCosts costs_of(const MdpModel &model)
        {
            return TwoLevelCosts{model.arrivals().cost_low, model.arrivals().cost_high};
        }

        ConstraintSet constraint_of(const MdpShape &shape)
        {
            return ConstraintSet::absolute({{shape.budget, shape.window}});
        }

        void check_context(const MdpModel &model, const Policy &policy)
        {
            if (!(model.states().shape() == policy.states().shape()))
            {
                throw ModelMismatch("policy and model were built for different state spaces");
            }
        }

        const ExitRequest &find_agent(const QueueState &queue, ValidatorId agent)
        {
            const auto waiting = queue.waiting();
            const auto it = std::find_if(waiting.begin(), waiting.end(),
                                         [&](const ExitRequest &r) { return r.validator == agent; });
            if (it == waiting.end())
            {
                throw UnknownRequest("agent " + std::to_string(agent.value) + " is not in the waiting list");
            }
            return *it;
        }

        QueueState without(const QueueState &queue, ValidatorId agent)
        {
            std::vector<ExitRequest> rest;
            for (const auto &r : queue.waiting())
            {
                if (!(r.validator == agent))
                {
                    rest.push_back(r);
                }
            }
            const auto totals = queue.processed_totals();
            return QueueState::from_history(queue.stake_at(0), std::vector<Stake>(totals.begin(), totals.end()),
                                            std::move(rest));
        }

        double waiting_cost(std::span<const ExitRequest> waiting, std::span<const ExitRequest> processed,
                            ValidatorId skip)
        {
            double total = 0.0;
            for (const auto &r : waiting)
            {
                if (r.validator == skip)
                {
                    continue;
                }
                const bool done = std::any_of(processed.begin(), processed.end(),
                                              [&](const ExitRequest &p) { return p.validator == r.validator; });
                if (!done)
                {
                    total += r.cost;
                }
            }
            return total;
        }

        std::size_t horizon_for(double gamma, double weight)
        {
            return static_cast<std::size_t>(std::ceil(std::log(weight) / std::log(gamma))) + 1;
        }
    } // namespace

    bool representable(const StateSpace &space, const QueueState &queue, TwoLevelCosts costs)
    {
        int low = 0;
        int high = 0;
        for (const auto &r : queue.waiting())
        {
            (r.cost > 0.5 * (costs.low + costs.high) ? high : low) += 1;
        }
        return low <= space.shape().cap && high <= space.shape().cap;
    }

    PaymentEstimate vcg_payment_exact(const MdpModel &model, const Policy &policy, const QueueState &queue,
                                      ValidatorId agent, double horizon_weight)
    {
        check_context(model, policy);
        const auto &space = model.states();
        const auto costs = costs_of(model);
        const ExitRequest &me = find_agent(queue, agent);
        const QueueState rest = without(queue, agent);
        if (!representable(space, queue, costs))
        {
            throw ModelMismatch("queue exceeds the state space cap; use the Monte Carlo estimator");
        }
        const auto with_idx = space.index_of(live_state(space, queue, costs));
        const auto without_idx = space.index_of(live_state(space, rest, costs));

        // Requests ahead of the agent in processing order.
        const bool agent_high = me.cost > 0.5 * (costs.low + costs.high);
        const auto order = priority_order(queue.waiting(), PriorityKey::Cost);
        const auto at = std::find_if(order.begin(), order.end(),
                                     [&](const ExitRequest &r) { return r.validator == agent; });
        const int ahead = static_cast<int>(at - order.begin());

        // Forward distribution over (state, requests ahead) until the agent exits.
        const double gamma = model.discount();
        const auto outcomes = arrival_outcomes(model.arrivals());
        std::unordered_map<std::uint64_t, double> mass{{(static_cast<std::uint64_t>(with_idx) << 20) | ahead, 1.0}};
        double own = 0.0;
        double weight = 1.0;
        while (!mass.empty() && weight * me.cost / (1.0 - gamma) >= horizon_weight)
        {
            std::unordered_map<std::uint64_t, double> next;
            double alive = 0.0;
            for (const auto &[key, p] : mass)
            {
                const auto s = static_cast<std::size_t>(key >> 20);
                const int pos = static_cast<int>(key & 0xFFFFF);
                const int a = policy.action(s);
                if (a > pos)
                {
                    continue;
                }
                own += weight * p * me.cost;
                alive += p;
                const auto left = remaining_after(space.w_low(s), space.w_high(s), a);
                for (const auto &o : outcomes)
                {
                    const auto succ = space.successor(s, a, left.low + o.total - o.high, left.high + o.high);
                    const int pos_next = pos - a + (agent_high ? 0 : o.high);
                    next[(static_cast<std::uint64_t>(succ) << 20) | static_cast<std::uint64_t>(pos_next)] +=
                        p * o.prob;
                }
            }
            if (alive == 0.0)
            {
                break;
            }
            mass.swap(next);
            weight *= gamma;
        }

        double payment = policy.value(without_idx) - policy.value(with_idx) - own;
        if (payment < 0.0 && payment > -1e-9 * std::max(1.0, std::abs(policy.value(with_idx))))
        {
            payment = 0.0;
        }
        return PaymentEstimate{payment, 0.0, true, 0};
    }

    PaymentEstimate vcg_payment_monte_carlo(const MdpModel &model, const Policy &policy, const QueueState &queue,
                                            ValidatorId agent, const VcgOptions &options)
    {
        check_context(model, policy);
        if (options.samples == 0)
        {
            throw InvalidInput("Monte Carlo payment needs at least one sample");
        }
        const auto &space = model.states();
        const auto costs = costs_of(model);
        const auto constraints = constraint_of(space.shape());
        find_agent(queue, agent);
        const QueueState rest = without(queue, agent);
        const auto &arrivals = model.arrivals();
        const double gamma = model.discount();
        const std::size_t horizon = horizon_for(gamma, options.horizon_weight);

        std::uint64_t first_id = 0;
        for (const auto &r : queue.waiting())
        {
            first_id = std::max(first_id, r.validator.value + 1);
        }

        double sum = 0.0;
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < options.samples; ++i)
        {
            Rng rng = trial_rng(options.seed, i);
            QueueState with_q = queue;
            QueueState without_q = rest;
            std::uint64_t next_id = first_id;
            double with_cost = 0.0;
            double without_cost = 0.0;
            double weight = 1.0;
            for (std::size_t k = 0; k < horizon; ++k)
            {
                const auto sel_with = optimal_select(policy, with_q, constraints, costs);
                const auto sel_without = optimal_select(policy, without_q, constraints, costs);
                with_cost += weight * waiting_cost(with_q.waiting(), sel_with, agent);
                without_cost += weight * waiting_cost(without_q.waiting(), sel_without, agent);

                // Both systems see the same arrivals.
                std::vector<ExitRequest> batch;
                const int count = arrivals.counts.sample(rng);
                const Period t = with_q.period() + 1;
                for (int j = 0; j < count; ++j)
                {
                    const bool high = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < arrivals.high_prob;
                    const double c = high ? arrivals.cost_high : arrivals.cost_low;
                    batch.push_back(ExitRequest{ValidatorId{next_id++}, 1, t, c, c});
                }
                with_q = step(std::move(with_q), batch, sel_with, constraints);
                without_q = step(std::move(without_q), batch, sel_without, constraints);
                weight *= gamma;
            }
            const double x = with_cost - without_cost;
            sum += x;
            sum_sq += x * x;
        }
        const double n = static_cast<double>(options.samples);
        const double mean = sum / n;
        const double var = options.samples > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
        const double se = std::sqrt(var / n);
        double payment = mean;
        if (payment < 0.0 && payment >= -3.0 * se)
        {
            payment = 0.0;
        }
        return PaymentEstimate{payment, se, false, options.samples};
    }

    PaymentEstimate vcg_payment(const MdpModel &model, const Policy &policy, const QueueState &queue,
                                ValidatorId agent, const VcgOptions &options)
    {
        if (!options.force_monte_carlo && representable(model.states(), queue, costs_of(model)))
        {
            return vcg_payment_exact(model, policy, queue, agent, options.horizon_weight);
        }
        return vcg_payment_monte_carlo(model, policy, queue, agent, options);
    }
} // namespace exitq
