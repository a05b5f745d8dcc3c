#include "exitq/simulator.hpp"

#include "exitq/errors.hpp"

#include <algorithm>
#include <limits>

namespace exitq
{
    namespace
    {
        struct Search
        {
            const ConstraintSet &constraints;
            std::vector<Stake> arrived_by; // cumulative arrivals up to period t, index t-1
            std::size_t horizon;
            std::vector<Stake> totals;
            std::vector<Stake> stakes; // S(0..t)
            std::vector<std::vector<Stake>> found;

            // Every window that ends at the newest period, measured against the stake
            // recorded at its start. Older windows were checked on the way down.
            bool newest_windows_ok() const
            {
                const auto t = static_cast<Period>(totals.size());
                for (std::size_t i = 0; i < constraints.size(); ++i)
                {
                    const Period window = constraints[i].window;
                    Stake sum = 0;
                    for (Period t0 = t - 1; t0 >= std::max<Period>(0, t - window); --t0)
                    {
                        sum += totals[static_cast<std::size_t>(t0)];
                        if (sum > constraints.capacity(i, stakes[static_cast<std::size_t>(t0)]))
                        {
                            return false;
                        }
                    }
                }
                return true;
            }

            void dfs(Stake processed)
            {
                if (totals.size() == horizon)
                {
                    found.push_back(totals);
                    return;
                }
                const Stake available = arrived_by[totals.size()] - processed;
                for (Stake p = 0; p <= available; ++p)
                {
                    totals.push_back(p);
                    stakes.push_back(stakes.back() - p);
                    const bool ok = newest_windows_ok();
                    if (ok)
                    {
                        dfs(processed + p);
                    }
                    totals.pop_back();
                    stakes.pop_back();
                    if (!ok)
                    {
                        // Larger p only adds to every window sum.
                        break;
                    }
                }
            }
        };
    } // namespace

    std::vector<std::vector<Stake>> brute_force_schedules(const std::vector<ExitRequest> &requests,
                                                          const ConstraintSet &constraints, std::size_t horizon,
                                                          Stake initial_stake, double limit)
    {
        std::vector<Stake> per_period(horizon, 0);
        for (const auto &r : requests)
        {
            if (r.stake != 1)
            {
                throw InvalidInput("brute force enumeration handles unit-stake requests only");
            }
            if (r.requested_at < 1 || r.requested_at > static_cast<Period>(horizon))
            {
                throw InvalidInput("request period outside 1..horizon");
            }
            per_period[static_cast<std::size_t>(r.requested_at - 1)] += 1;
        }
        Search search{constraints, {}, horizon, {}, {initial_stake}, {}};
        Stake cumulative = 0;
        Stake widest = std::numeric_limits<Stake>::max();
        for (std::size_t i = 0; i < constraints.size(); ++i)
        {
            widest = std::min(widest, constraints.capacity(i, initial_stake));
        }
        double product = 1.0;
        for (Stake n : per_period)
        {
            cumulative += n;
            search.arrived_by.push_back(cumulative);
            product *= static_cast<double>(std::min(cumulative, widest) + 1);
        }
        if (product > limit)
        {
            throw InstanceTooLarge("brute force search space " + std::to_string(product) + " exceeds limit");
        }
        search.dfs(0);
        return std::move(search.found);
    }
} // namespace exitq
