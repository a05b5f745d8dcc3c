#include "exitq/mechanisms.hpp"

#include "exitq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

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

        std::string key_suffix(PriorityKey key)
        {
            switch (key)
            {
            case PriorityKey::Bid:
                return "[bid]";
            case PriorityKey::Arrival:
                return "[fcfs]";
            default:
                return "";
            }
        }
    } // namespace

    std::string mechanism_name(const Mechanism &mechanism)
    {
        return std::visit(overloaded{
                              [](const Constant &m) {
                                  return "constant(" + std::to_string(m.rate) + ")" + key_suffix(m.key);
                              },
                              [](const MinSlack &) { return std::string("minslack"); },
                              [](const PrioMinSlack &m) { return "prio-minslack" + key_suffix(m.key); },
                              [](const AlphaMinSlack &m) {
                                  char buf[32];
                                  std::snprintf(buf, sizeof buf, "%g", m.alpha);
                                  return "alpha-minslack(" + std::string(buf) + ")" + key_suffix(m.key);
                              },
                          },
                          mechanism);
    }

    std::vector<ExitRequest> fcfs_order(std::span<const ExitRequest> waiting)
    {
        std::vector<ExitRequest> out(waiting.begin(), waiting.end());
        std::stable_sort(out.begin(), out.end(),
                         [](const ExitRequest &a, const ExitRequest &b) { return a.requested_at < b.requested_at; });
        return out;
    }

    std::vector<ExitRequest> priority_order(std::span<const ExitRequest> waiting, PriorityKey key)
    {
        auto out = fcfs_order(waiting);
        if (key == PriorityKey::Arrival)
        {
            return out;
        }
        auto value = [key](const ExitRequest &r) { return key == PriorityKey::Bid ? r.bid : r.cost; };
        std::stable_sort(out.begin(), out.end(),
                         [&](const ExitRequest &a, const ExitRequest &b) { return value(a) > value(b); });
        return out;
    }

    std::vector<ExitRequest> largest_prefix(std::span<const ExitRequest> ordered, Stake capacity)
    {
        std::vector<ExitRequest> out;
        Stake used = 0;
        for (const auto &r : ordered)
        {
            if (used + r.stake > capacity)
            {
                break;
            }
            used += r.stake;
            out.push_back(r);
        }
        return out;
    }

    Stake alpha_capacity(double alpha, Stake min_slack)
    {
        if (!(alpha > 0.0 && alpha <= 1.0))
        {
            throw InvalidAlpha("alpha must lie in (0, 1], got " + std::to_string(alpha));
        }
        const double scaled = alpha * static_cast<double>(min_slack);
        const double lower = std::floor(scaled);
        const double frac = scaled - lower;
        // Within rounding noise of .5 counts as an exact half.
        if (frac <= 0.5 + 1e-9)
        {
            return static_cast<Stake>(lower);
        }
        return static_cast<Stake>(lower) + 1;
    }

    std::vector<ExitRequest> select_minslack(const QueueState &state, const ConstraintSet &constraints)
    {
        return largest_prefix(fcfs_order(state.waiting()), min_slack(state, constraints));
    }

    std::vector<ExitRequest> select_prio_minslack(const QueueState &state, const ConstraintSet &constraints,
                                                  PriorityKey key)
    {
        return largest_prefix(priority_order(state.waiting(), key), min_slack(state, constraints));
    }

    std::vector<ExitRequest> select_alpha_minslack(const QueueState &state, const ConstraintSet &constraints,
                                                   double alpha, PriorityKey key)
    {
        const Stake capacity = alpha_capacity(alpha, min_slack(state, constraints));
        return largest_prefix(priority_order(state.waiting(), key), capacity);
    }

    std::vector<ExitRequest> select_constant(const QueueState &state, const ConstraintSet &constraints, Stake rate,
                                             PriorityKey key)
    {
        if (rate < 1)
        {
            throw InvalidInput("constant rate must be >= 1");
        }
        if (state.waiting().empty())
        {
            return {};
        }
        const Stake capacity = std::min(rate, min_slack(state, constraints));
        return largest_prefix(priority_order(state.waiting(), key), capacity);
    }

    std::vector<ExitRequest> select(const Mechanism &mechanism, const QueueState &state,
                                    const ConstraintSet &constraints)
    {
        return std::visit(overloaded{
                              [&](const Constant &m) { return select_constant(state, constraints, m.rate, m.key); },
                              [&](const MinSlack &) { return select_minslack(state, constraints); },
                              [&](const PrioMinSlack &m) { return select_prio_minslack(state, constraints, m.key); },
                              [&](const AlphaMinSlack &m) {
                                  return select_alpha_minslack(state, constraints, m.alpha, m.key);
                              },
                          },
                          mechanism);
    }
} // namespace exitq
