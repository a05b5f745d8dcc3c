#include "exitq/cli/verify.hpp"

#include "exitq/errors.hpp"
#include "exitq/mdp.hpp"
#include "exitq/mechanisms.hpp"
#include "exitq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace exitq::cli
{
    namespace
    {
        CheckResult check_state_count()
        {
            const auto space = enumerate_states(10, 5);
            return {"state-count", space.size() == 15246, "|S| = " + std::to_string(space.size())};
        }

        // Backward induction over explicitly listed states, sharing nothing with
        // the sparse solver beyond the reward definition.
        CheckResult check_solver_oracle()
        {
            const int cap = 3;
            const int budget = 2;
            const double gamma = 0.9;
            const double p_high = 0.3;
            const std::vector<std::pair<int, double>> counts{{0, 0.5}, {1, 0.3}, {2, 0.2}};

            using Key = std::tuple<int, int, int>; // w_low, w_high, h1
            std::vector<Key> states;
            for (int l = 0; l <= cap; ++l)
                for (int h = 0; h <= cap; ++h)
                    for (int h1 = 0; h1 <= budget; ++h1)
                        states.emplace_back(l, h, h1);

            std::map<Key, double> v;
            for (const auto &s : states)
                v[s] = 0.0;
            const int horizon = static_cast<int>(std::ceil(std::log(1e-10) / std::log(gamma)));
            for (int k = 0; k < horizon; ++k)
            {
                std::map<Key, double> next;
                for (const auto &[l, h, h1] : states)
                {
                    double best = -1e300;
                    for (int a = 0; a + h1 <= budget; ++a)
                    {
                        const int rh = std::max(h - a, 0);
                        const int rl = std::max(l - std::max(a - h, 0), 0);
                        double q = -(10.0 * rh + 1.0 * rl);
                        for (const auto &[n, pn] : counts)
                        {
                            for (int j = 0; j <= n; ++j)
                            {
                                const double pj = pn * std::tgamma(n + 1) / (std::tgamma(j + 1) * std::tgamma(n - j + 1)) *
                                                  std::pow(p_high, j) * std::pow(1 - p_high, n - j);
                                q += gamma * pj * v[{std::min(rl + n - j, cap), std::min(rh + j, cap), a}];
                            }
                        }
                        best = std::max(best, q);
                    }
                    next[{l, h, h1}] = best;
                }
                v.swap(next);
            }

            ArrivalModel model{CountDistribution{{0, 1, 2}, {0.5, 0.3, 0.2}}, p_high, 1.0, 10.0};
            const auto solved = value_iteration(build_model(model, MdpShape{cap, budget, 2}, gamma));
            double worst = 0.0;
            for (std::size_t i = 0; i < solved.policy.states().size(); ++i)
            {
                const auto s = solved.policy.states().state(i);
                worst = std::max(worst, std::abs(solved.policy.value(i) - v[{s.w_low, s.w_high, s.history[0]}]));
            }
            return {"solver-oracle", worst <= 1e-6, "sup-norm gap " + std::to_string(worst)};
        }

        CheckResult check_alpha_mapping()
        {
            std::vector<Stake> got;
            for (Stake m = 0; m <= 5; ++m)
                got.push_back(alpha_capacity(0.9, m));
            const std::vector<Stake> want{0, 1, 2, 3, 4, 4};
            std::string text;
            for (auto g : got)
                text += (text.empty() ? "" : ",") + std::to_string(g);
            return {"alpha-mapping", got == want, "[" + text + "]"};
        }

        CheckResult check_dominance(std::uint64_t seed, std::size_t instances)
        {
            Rng rng = trial_rng(seed, 0xD0);
            auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
            std::size_t schedules = 0;
            for (std::size_t n = 0; n < instances; ++n)
            {
                const int horizon = uniform(1, 8);
                std::vector<Constraint> list;
                const int k = uniform(1, 2);
                for (int i = 0; i < k; ++i)
                    list.push_back(Constraint{Fraction(uniform(0, 4)), uniform(1, 5)});
                const ConstraintSet cs(list, ConstraintMode::AbsoluteCount);

                std::vector<ExitRequest> requests;
                std::vector<std::vector<ExitRequest>> batches(static_cast<std::size_t>(horizon));
                const int count = uniform(0, 10);
                for (int r = 0; r < count; ++r)
                {
                    const int t = uniform(1, horizon);
                    ExitRequest req{ValidatorId{static_cast<std::uint64_t>(r)}, 1, t, 1.0, 1.0};
                    requests.push_back(req);
                    batches[static_cast<std::size_t>(t - 1)].push_back(req);
                }

                SimulationConfig config;
                config.constraints = cs;
                config.mechanism = Mechanism{MinSlack{}};
                config.steps = static_cast<std::size_t>(horizon);
                const auto trial = run_arrivals(config, batches);
                if (!check_trace_feasible(trial.trace, trial.stake_history, cs))
                    return {"minslack-dominance", false, "infeasible MINSLACK trace in instance " + std::to_string(n)};

                for (const auto &sched : brute_force_schedules(requests, cs, static_cast<std::size_t>(horizon)))
                {
                    ++schedules;
                    Stake mine = 0;
                    Stake theirs = 0;
                    for (std::size_t t = 0; t < sched.size(); ++t)
                    {
                        mine += trial.trace[t];
                        theirs += sched[t];
                        if (theirs > mine)
                            return {"minslack-dominance", false,
                                    "schedule beats MINSLACK in instance " + std::to_string(n)};
                    }
                }
            }
            return {"minslack-dominance", true,
                    std::to_string(instances) + " instances, " + std::to_string(schedules) + " schedules"};
        }

        CheckResult check_feasibility_fuzz(std::uint64_t seed, std::size_t traces)
        {
            Rng rng = trial_rng(seed, 0xF0);
            auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
            const std::vector<Mechanism> mechanisms{Constant{1}, Constant{3}, MinSlack{}, PrioMinSlack{},
                                                    AlphaMinSlack{0.9}, AlphaMinSlack{0.5}};
            for (std::size_t n = 0; n < traces; ++n)
            {
                SimulationConfig config;
                const bool fraction = n % 2 == 1;
                std::vector<Constraint> list;
                const int k = uniform(1, 3);
                for (int i = 0; i < k; ++i)
                {
                    const Fraction delta = fraction ? Fraction(uniform(1, 30), 100) : Fraction(uniform(0, 6));
                    list.push_back(Constraint{delta, uniform(1, 8)});
                }
                config.constraints = ConstraintSet(list, fraction ? ConstraintMode::FractionOfStake
                                                                  : ConstraintMode::AbsoluteCount);
                config.initial_stake = fraction ? uniform(20, 400) : 0;
                config.mechanism = mechanisms[n % mechanisms.size()];
                config.arrival_counts = CountDistribution{{0, 1, 3, 6}, {0.4, 0.3, 0.2, 0.1}};
                config.values = UniformValues{0.0, 1.0};
                config.steps = 60;
                config.seed = seed + n;
                const auto trial = run_trial(config);
                if (!check_trace_feasible(trial.trace, trial.stake_history, config.constraints))
                    return {"feasibility-fuzz", false,
                            mechanism_name(config.mechanism) + " broke a constraint in trace " + std::to_string(n)};
            }
            return {"feasibility-fuzz", true, std::to_string(traces) + " traces"};
        }
    } // namespace

    std::vector<CheckResult> run_verification(const VerifyOptions &options)
    {
        std::vector<CheckResult> out;
        auto guarded = [&](const char *name, auto &&fn) {
            try
            {
                out.push_back(fn());
            }
            catch (const std::exception &e)
            {
                out.push_back({name, false, std::string("threw: ") + e.what()});
            }
        };
        guarded("state-count", check_state_count);
        guarded("solver-oracle", check_solver_oracle);
        guarded("alpha-mapping", check_alpha_mapping);
        guarded("minslack-dominance", [&] { return check_dominance(options.seed, options.dominance_instances); });
        guarded("feasibility-fuzz", [&] { return check_feasibility_fuzz(options.seed, options.fuzz_traces); });
        return out;
    }
} // namespace exitq::cli
