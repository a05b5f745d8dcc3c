#include "exitq/errors.hpp"
#include "exitq/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <numeric>
#include <set>

using namespace exitq;

namespace
{
    ExitRequest req(std::uint64_t id, Period at, double cost = 1.0)
    {
        return ExitRequest{ValidatorId{id}, 1, at, cost, cost};
    }

    SimulationConfig basic(Mechanism m = MinSlack{})
    {
        SimulationConfig c;
        c.constraints = ConstraintSet::absolute({{5, 5}});
        c.mechanism = m;
        c.arrival_counts = CountDistribution{{0, 1, 5}, {0.5, 0.4, 0.1}};
        c.values = DiscreteValues{{1.0, 10.0}, {0.9, 0.1}};
        c.steps = 120;
        c.discount = 0.9;
        c.seed = 99;
        c.trials = 40;
        return c;
    }

    // Window sums over every start t0 >= 0, truncated at the end of the trace.
    bool feasible(const std::vector<Stake> &p, const ConstraintSet &cs)
    {
        for (std::size_t i = 0; i < cs.size(); ++i)
        {
            for (std::size_t t0 = 0; t0 < p.size(); ++t0)
            {
                Stake sum = 0;
                for (std::size_t k = 0; k < static_cast<std::size_t>(cs[i].window) && t0 + k < p.size(); ++k)
                {
                    sum += p[t0 + k];
                }
                if (sum > cs.capacity(i, 0))
                {
                    return false;
                }
            }
        }
        return true;
    }

    // Every vector in {0..n}^horizon, filtered by stock and windows.
    std::set<std::vector<Stake>> naive_schedules(const std::vector<Period> &arrivals, const ConstraintSet &cs,
                                                 std::size_t horizon)
    {
        std::set<std::vector<Stake>> out;
        const auto n = static_cast<Stake>(arrivals.size());
        std::vector<Stake> p(horizon, 0);
        while (true)
        {
            bool ok = feasible(p, cs);
            Stake arrived = 0;
            Stake done = 0;
            for (std::size_t t = 0; t < horizon && ok; ++t)
            {
                arrived += std::count(arrivals.begin(), arrivals.end(), static_cast<Period>(t + 1));
                done += p[t];
                ok = done <= arrived;
            }
            if (ok)
            {
                out.insert(p);
            }
            std::size_t i = 0;
            while (i < horizon && p[i] == n)
            {
                p[i++] = 0;
            }
            if (i == horizon)
            {
                return out;
            }
            ++p[i];
        }
    }
} // namespace

TEST_CASE("arrival sampling")
{
    Rng rng = trial_rng(1, 0);
    std::uint64_t next = 0;
    CHECK(sample_arrivals(rng, 3, constant_count(0), UniformValues{}, next).empty());
    const auto batch = sample_arrivals(rng, 4, constant_count(3), UniformValues{}, next);
    REQUIRE(batch.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
    {
        CHECK(batch[i].validator.value == i);
        CHECK(batch[i].requested_at == 4);
        CHECK(batch[i].stake == 1);
        CHECK(batch[i].bid == batch[i].cost);
    }
    CHECK(next == 3);
}

TEST_CASE("trials are deterministic and audited")
{
    for (const Mechanism &m : std::vector<Mechanism>{Constant{1}, MinSlack{}, PrioMinSlack{}, AlphaMinSlack{0.9}})
    {
        auto c = basic(m);
        const auto a = run_trial(c, 3);
        const auto b = run_trial(c, 3);
        CHECK(a == b);
        CHECK(a.per_period_penalty.size() == c.steps);
        CHECK(check_trace_feasible(a.trace, a.stake_history, c.constraints));
        for (const auto &rec : a.processed_log)
        {
            CHECK(rec.delay >= 0);
            CHECK(rec.delay == rec.processed_at - rec.request.requested_at);
        }
        for (double p : a.per_period_penalty)
        {
            CHECK(p <= 0.0);
        }
    }
}

TEST_CASE("penalties count what is left waiting")
{
    auto c = basic();
    c.constraints = ConstraintSet::absolute({{1, 1}});
    c.steps = 3;
    const std::vector<std::vector<ExitRequest>> arrivals{{req(1, 1, 2.0), req(2, 1, 3.0)}};
    const auto r = run_arrivals(c, arrivals);
    CHECK(r.per_period_penalty == std::vector<double>{-3.0, 0.0, 0.0});
    CHECK(r.trace == std::vector<Stake>{1, 1, 0});

    c.steps = 5;
    c.arrival_counts = constant_count(0);
    const auto quiet = run_trial(c);
    CHECK(std::all_of(quiet.per_period_penalty.begin(), quiet.per_period_penalty.end(),
                      [](double p) { return p == 0.0; }));
    CHECK(discounted_reward(quiet, 0.9) == 0.0);
}

TEST_CASE("minslack releases the prefix-dominant schedule")
{
    auto c = basic();
    c.constraints = ConstraintSet::absolute({{2, 3}});
    c.steps = 4;
    const std::vector<std::vector<ExitRequest>> arrivals{{req(1, 1), req(2, 1), req(3, 1), req(4, 1)}};
    const auto r = run_arrivals(c, arrivals);
    CHECK(r.trace == std::vector<Stake>{2, 0, 0, 2});
    std::vector<ExitRequest> flat = arrivals[0];
    for (const auto &s : brute_force_schedules(flat, c.constraints, 4))
    {
        Stake mine = 0;
        Stake theirs = 0;
        for (std::size_t t = 0; t < 4; ++t)
        {
            mine += r.trace[t];
            theirs += s[t];
            CHECK(theirs <= mine);
        }
    }
}

TEST_CASE("discounted reward")
{
    TrialResult r;
    r.per_period_penalty = {-1.0, -1.0};
    CHECK(discounted_reward(r, 0.9) == doctest::Approx(-1.9));
    r.per_period_penalty.assign(350, -1.0);
    CHECK(std::abs(discounted_reward(r, 0.9) + (1.0 - std::pow(0.9, 350)) / 0.1) < 1e-12);
    CHECK_THROWS_AS(discounted_reward(r, 1.0), InvalidInput);
}

TEST_CASE("steady-state disutility")
{
    TrialResult r;
    r.steps = 10;
    r.processed_log.push_back(ProcessedRecord{req(1, 2, 2.0), 5, 3});
    CHECK(steady_state_disutility(r, 0) == -6.0);
    CHECK_THROWS_AS(steady_state_disutility(r, 5), NoWithdrawals);

    r.processed_log = {ProcessedRecord{req(1, 2, 2.0), 2, 0}, ProcessedRecord{req(2, 3, 5.0), 3, 0}};
    CHECK(steady_state_disutility(r, 0) == 0.0);

    // Still waiting at the end: charged through period steps + 1.
    r.unprocessed = {req(3, 8, 1.0)};
    CHECK(steady_state_disutility(r, 0) == doctest::Approx(-1.0));

    auto c = basic(PrioMinSlack{});
    c.steps = 500;
    c.burn_in = 100;
    CHECK(steady_state_disutility(run_trial(c), c.burn_in) <= 0.0);
}

TEST_CASE("monte carlo summaries")
{
    auto c = basic(PrioMinSlack{});
    c.trials = 1;
    const auto one = monte_carlo(c, Metric::Discounted);
    CHECK(one.mean == discounted_reward(run_trial(c, 0), 0.9));
    CHECK(one.standard_error == 0.0);
    CHECK(one.p50 == one.mean);

    c.trials = 37;
    c.threads = 1;
    const auto serial = monte_carlo(c, Metric::Discounted);
    c.threads = 4;
    const auto parallel = monte_carlo(c, Metric::Discounted);
    CHECK(serial.values == parallel.values);
    CHECK(serial.mean == parallel.mean);
    CHECK(serial.standard_error == parallel.standard_error);
    CHECK(serial.p001 <= serial.p01);
    CHECK(serial.p01 <= serial.p50);

    auto zero = basic();
    zero.arrival_counts = constant_count(0);
    zero.trials = 3;
    const auto z = monte_carlo(zero, Metric::Discounted);
    CHECK(z.mean == 0.0);
    CHECK(z.standard_error == 0.0);

    auto no_gamma = basic();
    no_gamma.discount.reset();
    CHECK_THROWS_AS(monte_carlo(no_gamma, Metric::Discounted), InvalidInput);
}

TEST_CASE("quantiles interpolate linearly")
{
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
    CHECK(quantile({5.0}, 0.001) == 5.0);
    CHECK(quantile({0.0, 10.0}, 0.01) == doctest::Approx(0.1));
}

TEST_CASE("histogram bins")
{
    const auto single = histogram({-2.37}, 0.1);
    REQUIRE(single.size() == 1);
    CHECK(single[0].count == 1);
    CHECK(single[0].left <= -2.37);
    CHECK(single[0].right > -2.37);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> d(-3.0, 1.5);
    std::vector<double> values(5000);
    for (auto &v : values)
    {
        v = d(rng);
    }
    const auto bins = histogram(values, 0.1);
    double mass = 0.0;
    std::size_t total = 0;
    for (const auto &b : bins)
    {
        mass += b.density * 0.1;
        total += b.count;
        CHECK(b.right - b.left == doctest::Approx(0.1));
        if (b.count == 0)
        {
            CHECK(std::isinf(b.log_density));
        }
    }
    CHECK(total == values.size());
    CHECK(std::abs(mass - 1.0) < 1e-9);
    CHECK_THROWS_AS(histogram(values, 0.0), InvalidInput);
}

TEST_CASE("brute force enumeration")
{
    const auto one = ConstraintSet::absolute({{1, 1}});
    CHECK(brute_force_schedules({}, one, 3) == std::vector<std::vector<Stake>>{{0, 0, 0}});
    const auto got = brute_force_schedules({req(1, 1), req(2, 1)}, one, 2);
    CHECK(std::set<std::vector<Stake>>(got.begin(), got.end()) ==
          std::set<std::vector<Stake>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});

    std::vector<ExitRequest> lots;
    for (std::uint64_t i = 0; i < 10; ++i)
    {
        lots.push_back(req(i, 1));
    }
    CHECK_THROWS_AS(brute_force_schedules(lots, ConstraintSet::absolute({{10, 1}}), 8), InstanceTooLarge);
}

TEST_CASE("brute force agrees with naive enumeration")
{
    std::mt19937_64 rng(31);
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int n = 0; n < 150; ++n)
    {
        const std::size_t horizon = static_cast<std::size_t>(uni(1, 4));
        std::vector<Constraint> list;
        for (int k = uni(1, 2); k > 0; --k)
        {
            list.push_back(Constraint{Fraction(uni(0, 3)), uni(1, 3)});
        }
        const ConstraintSet cs(list, ConstraintMode::AbsoluteCount);
        std::vector<ExitRequest> requests;
        std::vector<Period> at;
        for (int r = uni(0, 4); r > 0; --r)
        {
            at.push_back(uni(1, static_cast<int>(horizon)));
            requests.push_back(req(static_cast<std::uint64_t>(r), at.back()));
        }
        const auto got = brute_force_schedules(requests, cs, horizon);
        const std::set<std::vector<Stake>> unique(got.begin(), got.end());
        CHECK(unique.size() == got.size());
        CHECK(unique == naive_schedules(at, cs, horizon));
    }
}

TEST_CASE("minslack dominates every feasible schedule")
{
    std::mt19937_64 rng(32);
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int n = 0; n < 300; ++n)
    {
        const int horizon = uni(1, 8);
        std::vector<Constraint> list;
        for (int k = uni(1, 2); k > 0; --k)
        {
            list.push_back(Constraint{Fraction(uni(0, 4)), uni(1, 5)});
        }
        auto c = basic();
        c.constraints = ConstraintSet(list, ConstraintMode::AbsoluteCount);
        c.steps = static_cast<std::size_t>(horizon);
        std::vector<std::vector<ExitRequest>> batches(static_cast<std::size_t>(horizon));
        std::vector<ExitRequest> requests;
        for (int r = uni(0, 10); r > 0; --r)
        {
            const auto t = uni(1, horizon);
            requests.push_back(req(static_cast<std::uint64_t>(r), t));
            batches[static_cast<std::size_t>(t - 1)].push_back(requests.back());
        }
        const auto mine = run_arrivals(c, batches);
        REQUIRE(feasible(mine.trace, c.constraints));
        for (const auto &s : brute_force_schedules(requests, c.constraints, static_cast<std::size_t>(horizon)))
        {
            Stake a = 0;
            Stake b = 0;
            for (int t = 0; t < horizon; ++t)
            {
                a += mine.trace[static_cast<std::size_t>(t)];
                b += s[static_cast<std::size_t>(t)];
                REQUIRE(b <= a);
            }
        }
    }
}

TEST_CASE("fraction-mode simulations stay feasible")
{
    std::mt19937_64 rng(33);
    for (int n = 0; n < 200; ++n)
    {
        auto c = basic(n % 2 ? Mechanism{AlphaMinSlack{0.5}} : Mechanism{PrioMinSlack{}});
        c.constraints = ConstraintSet({{Fraction(std::uniform_int_distribution<int>(1, 20)(rng), 100), 3},
                                       {Fraction(1, 4), 7}},
                                      ConstraintMode::FractionOfStake);
        c.initial_stake = std::uniform_int_distribution<Stake>(30, 300)(rng);
        c.values = UniformValues{0.0, 1.0};
        c.seed = static_cast<std::uint64_t>(n);
        const auto r = run_trial(c);
        CHECK(check_trace_feasible(r.trace, r.stake_history, c.constraints));
        CHECK(r.stake_history.back() == c.initial_stake - std::accumulate(r.trace.begin(), r.trace.end(), Stake{0}));
    }
}

TEST_CASE("configuration checks")
{
    auto c = basic();
    c.burn_in = c.steps;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = basic();
    c.constraints = ConstraintSet({{Fraction(1, 10), 2}}, ConstraintMode::FractionOfStake);
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = basic();
    c.mechanism = OptimalMechanism{};
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}
