#include "exitq/mdp.hpp"

#include "exitq/errors.hpp"
#include "exitq/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace exitq
{
    namespace
    {
        constexpr double kNegInf = -std::numeric_limits<double>::infinity();

        bool same_cost(double a, double b)
        {
            return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
        }

        void enumerate_histories(int length, int budget, std::vector<int> &prefix,
                                 std::vector<std::vector<int>> &out)
        {
            if (static_cast<int>(prefix.size()) == length)
            {
                out.push_back(prefix);
                return;
            }
            int used = 0;
            for (int h : prefix)
            {
                used += h;
            }
            for (int h = 0; used + h <= budget; ++h)
            {
                prefix.push_back(h);
                enumerate_histories(length, budget, prefix, out);
                prefix.pop_back();
            }
        }
    } // namespace

    int MdpState::history_sum() const noexcept
    {
        int s = 0;
        for (int h : history)
        {
            s += h;
        }
        return s;
    }

    StateSpace::StateSpace(int cap, int budget, int window) : shape_{cap, budget, window}
    {
        if (cap < 0 || budget < 0 || window < 1)
        {
            throw InvalidInput("state space needs cap >= 0, budget >= 0, window >= 1");
        }
        const int length = shape_.history_length();
        const auto base = static_cast<std::size_t>(budget) + 1;
        std::size_t codes = 1;
        for (int i = 0; i < length; ++i)
        {
            codes *= base;
            if (codes > (std::size_t{1} << 26))
            {
                throw InstanceTooLarge("history encoding too large for budget " + std::to_string(budget) +
                                       " and window " + std::to_string(window));
            }
        }

        std::vector<int> prefix;
        enumerate_histories(length, budget, prefix, histories_);

        history_lookup_.assign(codes, -1);
        history_sums_.reserve(histories_.size());
        for (std::size_t i = 0; i < histories_.size(); ++i)
        {
            std::size_t code = 0;
            int sum = 0;
            for (int h : histories_[i])
            {
                code = code * base + static_cast<std::size_t>(h);
                sum += h;
            }
            history_lookup_[code] = static_cast<int>(i);
            history_sums_.push_back(sum);
        }

        shifted_.assign(histories_.size() * base, -1);
        for (std::size_t i = 0; i < histories_.size(); ++i)
        {
            for (int a = 0; a + history_sums_[i] <= budget; ++a)
            {
                std::size_t code = 0;
                if (length > 0)
                {
                    code = static_cast<std::size_t>(a);
                    for (int j = 0; j + 1 < length; ++j)
                    {
                        code = code * base + static_cast<std::size_t>(histories_[i][j]);
                    }
                }
                shifted_[i * base + static_cast<std::size_t>(a)] = history_lookup_[code];
            }
        }

        const auto side = static_cast<std::size_t>(cap) + 1;
        size_ = side * side * histories_.size();
    }

    std::size_t StateSpace::compose(int w_low, int w_high, std::size_t history) const noexcept
    {
        const auto side = static_cast<std::size_t>(shape_.cap) + 1;
        return (static_cast<std::size_t>(w_low) * side + static_cast<std::size_t>(w_high)) * histories_.size() +
               history;
    }

    int StateSpace::w_low(std::size_t index) const noexcept
    {
        const auto side = static_cast<std::size_t>(shape_.cap) + 1;
        return static_cast<int>(index / histories_.size() / side);
    }

    int StateSpace::w_high(std::size_t index) const noexcept
    {
        const auto side = static_cast<std::size_t>(shape_.cap) + 1;
        return static_cast<int>(index / histories_.size() % side);
    }

    int StateSpace::history_sum(std::size_t index) const noexcept
    {
        return history_sums_[index % histories_.size()];
    }

    MdpState StateSpace::state(std::size_t index) const
    {
        if (index >= size_)
        {
            throw InvalidInput("state index " + std::to_string(index) + " out of range");
        }
        return MdpState{w_low(index), w_high(index), histories_[index % histories_.size()]};
    }

    std::optional<std::size_t> StateSpace::find(const MdpState &s) const
    {
        if (s.w_low < 0 || s.w_high < 0 || s.w_low > shape_.cap || s.w_high > shape_.cap ||
            static_cast<int>(s.history.size()) != shape_.history_length())
        {
            return std::nullopt;
        }
        const auto base = static_cast<std::size_t>(shape_.budget) + 1;
        std::size_t code = 0;
        for (int h : s.history)
        {
            if (h < 0 || h > shape_.budget)
            {
                return std::nullopt;
            }
            code = code * base + static_cast<std::size_t>(h);
        }
        const int hist = history_lookup_[code];
        if (hist < 0)
        {
            return std::nullopt;
        }
        return compose(s.w_low, s.w_high, static_cast<std::size_t>(hist));
    }

    std::size_t StateSpace::index_of(const MdpState &s) const
    {
        if (auto idx = find(s))
        {
            return *idx;
        }
        throw InvalidInput("state outside the enumerated space");
    }

    std::size_t StateSpace::successor(std::size_t index, int action, int low, int high) const
    {
        const auto base = static_cast<std::size_t>(shape_.budget) + 1;
        const std::size_t hist = index % histories_.size();
        if (action < 0 || action > shape_.budget)
        {
            throw IllegalAction("action " + std::to_string(action) + " outside 0.." + std::to_string(shape_.budget));
        }
        const auto next = shifted_[hist * base + static_cast<std::size_t>(action)];
        if (next < 0)
        {
            throw IllegalAction("action " + std::to_string(action) + " exceeds the remaining budget");
        }
        return compose(std::min(low, shape_.cap), std::min(high, shape_.cap), static_cast<std::size_t>(next));
    }

    StateSpace enumerate_states(int cap, int budget, int window)
    {
        return StateSpace(cap, budget, window);
    }

    std::vector<int> legal_actions(const MdpState &state, int budget)
    {
        std::vector<int> out;
        for (int a = 0; state.history_sum() + a <= budget; ++a)
        {
            out.push_back(a);
        }
        return out;
    }

    void ArrivalModel::validate() const
    {
        counts.validate();
        if (!(high_prob >= 0.0 && high_prob <= 1.0))
        {
            throw InvalidInput("arrival model: high_prob must lie in [0, 1]");
        }
        if (!(cost_low > 0.0) || !(cost_high > cost_low))
        {
            throw InvalidInput("arrival model: need 0 < cost_low < cost_high");
        }
    }

    std::vector<ArrivalOutcome> arrival_outcomes(const ArrivalModel &model)
    {
        std::vector<ArrivalOutcome> out;
        for (std::size_t i = 0; i < model.counts.points.size(); ++i)
        {
            const int k = model.counts.points[i];
            const double pk = model.counts.probs[i];
            if (pk == 0.0)
            {
                continue;
            }
            double choose = 1.0; // C(k, j)
            for (int j = 0; j <= k; ++j)
            {
                const double p = pk * choose * std::pow(model.high_prob, j) * std::pow(1.0 - model.high_prob, k - j);
                if (p > 0.0)
                {
                    out.push_back(ArrivalOutcome{k, j, p});
                }
                choose = choose * (k - j) / (j + 1);
            }
        }
        return out;
    }

    Remaining remaining_after(int w_low, int w_high, int action) noexcept
    {
        const int high = std::max(w_high - action, 0);
        const int low = std::max(w_low - std::max(action - w_high, 0), 0);
        return Remaining{low, high};
    }

    double reward(const MdpState &state, int action, const ArrivalModel &arrivals, int budget)
    {
        if (action < 0 || state.history_sum() + action > budget)
        {
            throw IllegalAction("action " + std::to_string(action) + " is not legal in this state");
        }
        const auto left = remaining_after(state.w_low, state.w_high, action);
        return -(arrivals.cost_high * left.high + arrivals.cost_low * left.low);
    }

    TransitionTable::TransitionTable(int actions, std::vector<std::uint32_t> offsets, std::vector<Transition> entries)
        : actions_(actions), offsets_(std::move(offsets)), entries_(std::move(entries))
    {
    }

    std::span<const Transition> TransitionTable::row(std::size_t state, int action) const
    {
        const std::size_t r = state * static_cast<std::size_t>(actions_) + static_cast<std::size_t>(action);
        return std::span<const Transition>(entries_).subspan(offsets_[r], offsets_[r + 1] - offsets_[r]);
    }

    TransitionTable build_transitions(const StateSpace &space, const ArrivalModel &arrivals)
    {
        arrivals.validate();
        const int actions = space.shape().budget + 1;
        const auto outcomes = arrival_outcomes(arrivals);

        std::vector<std::uint32_t> offsets;
        offsets.reserve(space.size() * static_cast<std::size_t>(actions) + 1);
        offsets.push_back(0);
        std::vector<Transition> entries;
        std::vector<Transition> scratch;

        for (std::size_t s = 0; s < space.size(); ++s)
        {
            const int wl = space.w_low(s);
            const int wh = space.w_high(s);
            for (int a = 0; a < actions; ++a)
            {
                if (a <= space.max_action(s))
                {
                    const auto left = remaining_after(wl, wh, a);
                    scratch.clear();
                    for (const auto &o : outcomes)
                    {
                        const auto next = space.successor(s, a, left.low + o.total - o.high, left.high + o.high);
                        scratch.push_back(Transition{static_cast<std::uint32_t>(next), o.prob});
                    }
                    // Saturation at cap maps several outcomes onto one state.
                    std::sort(scratch.begin(), scratch.end(),
                              [](const Transition &x, const Transition &y) { return x.next < y.next; });
                    for (const auto &t : scratch)
                    {
                        if (entries.size() > offsets.back() && entries.back().next == t.next)
                        {
                            entries.back().prob += t.prob;
                        }
                        else
                        {
                            entries.push_back(t);
                        }
                    }
                }
                offsets.push_back(static_cast<std::uint32_t>(entries.size()));
            }
        }
        return TransitionTable(actions, std::move(offsets), std::move(entries));
    }

    MdpModel::MdpModel(StateSpace space, ArrivalModel arrivals, double discount)
        : space_(std::move(space)), arrivals_(std::move(arrivals)), discount_(discount)
    {
        if (!(discount_ > 0.0 && discount_ < 1.0))
        {
            throw InvalidInput("discount must lie in (0, 1)");
        }
        table_ = build_transitions(space_, arrivals_);
        const int actions = action_count();
        rewards_.assign(space_.size() * static_cast<std::size_t>(actions), kNegInf);
        for (std::size_t s = 0; s < space_.size(); ++s)
        {
            for (int a = 0; a <= space_.max_action(s); ++a)
            {
                const auto left = remaining_after(space_.w_low(s), space_.w_high(s), a);
                rewards_[s * static_cast<std::size_t>(actions) + static_cast<std::size_t>(a)] =
                    -(arrivals_.cost_high * left.high + arrivals_.cost_low * left.low);
            }
        }
    }

    bool MdpModel::legal(std::size_t state, int action) const noexcept
    {
        return action >= 0 && action <= space_.max_action(state);
    }

    double MdpModel::reward(std::size_t state, int action) const
    {
        if (!legal(state, action))
        {
            throw IllegalAction("action " + std::to_string(action) + " is not legal in state " +
                                std::to_string(state));
        }
        return rewards_[state * static_cast<std::size_t>(action_count()) + static_cast<std::size_t>(action)];
    }

    MdpModel build_model(const ArrivalModel &arrivals, const MdpShape &shape, double discount)
    {
        return MdpModel(StateSpace(shape.cap, shape.budget, shape.window), arrivals, discount);
    }

    Policy::Policy(StateSpace space, double discount, double tolerance, std::vector<int> actions,
                   std::vector<double> values)
        : space_(std::move(space)), discount_(discount), tolerance_(tolerance), actions_(std::move(actions)),
          values_(std::move(values))
    {
        if (actions_.size() != space_.size() || values_.size() != space_.size())
        {
            throw InvalidInput("policy must hold one action and one value per state");
        }
        for (std::size_t s = 0; s < actions_.size(); ++s)
        {
            if (actions_[s] < 0 || actions_[s] > space_.max_action(s))
            {
                throw InvalidInput("policy action " + std::to_string(actions_[s]) + " is illegal in state " +
                                   std::to_string(s));
            }
        }
    }

    std::vector<double> action_values(const MdpModel &model, std::span<const double> values, std::size_t state)
    {
        std::vector<double> q(static_cast<std::size_t>(model.action_count()), kNegInf);
        const double gamma = model.discount();
        for (int a = 0; a <= model.states().max_action(state); ++a)
        {
            double cont = 0.0;
            for (const auto &t : model.transitions().row(state, a))
            {
                cont += t.prob * values[t.next];
            }
            q[static_cast<std::size_t>(a)] = model.reward(state, a) + gamma * cont;
        }
        return q;
    }

    int greedy_action(std::span<const double> q)
    {
        double best = kNegInf;
        for (double v : q)
        {
            best = std::max(best, v);
        }
        const double eps = 1e-12 * std::max(1.0, std::abs(best));
        for (std::size_t a = 0; a < q.size(); ++a)
        {
            if (q[a] >= best - eps)
            {
                return static_cast<int>(a);
            }
        }
        return 0;
    }

    SolveResult value_iteration(const MdpModel &model, const SolveOptions &options)
    {
        if (!(options.tolerance > 0.0))
        {
            throw InvalidInput("solver tolerance must be positive");
        }
        const double gamma = model.discount();
        const std::size_t cap = options.max_iterations.value_or(
            static_cast<std::size_t>(std::ceil(10.0 * std::log(options.tolerance) / std::log(gamma))));
        const std::size_t n = model.states().size();

        std::vector<double> values(n, 0.0);
        std::vector<double> next(n, 0.0);
        std::vector<double> residuals;
        double residual = std::numeric_limits<double>::infinity();
        std::size_t iterations = 0;

        while (residual > options.tolerance)
        {
            if (iterations >= cap)
            {
                throw NonConvergence("value iteration did not reach tolerance " + std::to_string(options.tolerance) +
                                     " within " + std::to_string(cap) + " sweeps (residual " +
                                     std::to_string(residual) + ")");
            }
            residual = 0.0;
            for (std::size_t s = 0; s < n; ++s)
            {
                double best = kNegInf;
                for (int a = 0; a <= model.states().max_action(s); ++a)
                {
                    double cont = 0.0;
                    for (const auto &t : model.transitions().row(s, a))
                    {
                        cont += t.prob * values[t.next];
                    }
                    best = std::max(best, model.reward(s, a) + gamma * cont);
                }
                next[s] = best;
                residual = std::max(residual, std::abs(best - values[s]));
            }
            values.swap(next);
            ++iterations;
            if (options.record_residuals)
            {
                residuals.push_back(residual);
            }
        }

        std::vector<int> actions(n, 0);
        for (std::size_t s = 0; s < n; ++s)
        {
            actions[s] = greedy_action(action_values(model, values, s));
        }
        return SolveResult{Policy(model.states(), gamma, options.tolerance, std::move(actions), std::move(values)),
                           iterations, residual, std::move(residuals)};
    }

    void require_matching_constraint(const MdpShape &shape, const ConstraintSet &constraints)
    {
        if (constraints.mode() != ConstraintMode::AbsoluteCount || constraints.size() != 1 ||
            constraints[0].delta != Fraction(shape.budget) || constraints[0].window != shape.window)
        {
            throw ModelMismatch("policy was solved for the single absolute constraint (" +
                                std::to_string(shape.budget) + ", " + std::to_string(shape.window) + ")");
        }
    }

    MdpState live_state(const StateSpace &space, const QueueState &state, TwoLevelCosts costs)
    {
        MdpState out;
        for (const auto &r : state.waiting())
        {
            if (r.stake != 1)
            {
                throw ModelMismatch("the scheduling MDP models unit-stake requests only");
            }
            if (same_cost(r.cost, costs.high))
            {
                ++out.w_high;
            }
            else if (same_cost(r.cost, costs.low))
            {
                ++out.w_low;
            }
            else
            {
                throw ModelMismatch("request cost " + std::to_string(r.cost) + " is neither " +
                                    std::to_string(costs.low) + " nor " + std::to_string(costs.high));
            }
        }
        out.w_low = std::min(out.w_low, space.shape().cap);
        out.w_high = std::min(out.w_high, space.shape().cap);
        const Period t = state.period();
        for (int i = 1; i <= space.shape().history_length(); ++i)
        {
            out.history.push_back(static_cast<int>(state.processed_at(t - i)));
        }
        return out;
    }

    std::vector<ExitRequest> optimal_select(const Policy &policy, const QueueState &state,
                                            const ConstraintSet &constraints, TwoLevelCosts costs)
    {
        require_matching_constraint(policy.states().shape(), constraints);
        const auto projected = live_state(policy.states(), state, costs);
        const auto index = policy.states().find(projected);
        if (!index)
        {
            throw ModelMismatch("live history lies outside the policy's state space");
        }
        return largest_prefix(priority_order(state.waiting(), PriorityKey::Cost), policy.action(*index));
    }
} // namespace exitq
