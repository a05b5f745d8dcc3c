#include "exitq/errors.hpp"
#include "exitq/vcg.hpp"

#include <doctest.h>

#include <cmath>

using namespace exitq;

namespace
{
    ExitRequest req(std::uint64_t id, Period at, double cost)
    {
        return ExitRequest{ValidatorId{id}, 1, at, cost, cost};
    }

    struct Solved
    {
        MdpModel model;
        Policy policy;
    };

    Solved solve(const ArrivalModel &arrivals, MdpShape shape, double gamma)
    {
        auto model = build_model(arrivals, shape, gamma);
        auto policy = value_iteration(model).policy;
        return Solved{std::move(model), std::move(policy)};
    }

    // Others' discounted waiting cost when the queue is run forward with no
    // further arrivals, one request per period, highest cost first.
    double others_cost(std::vector<double> costs, std::size_t skip, double gamma)
    {
        costs.erase(costs.begin() + static_cast<std::ptrdiff_t>(skip));
        std::sort(costs.begin(), costs.end(), std::greater<>());
        double total = 0.0;
        double weight = 1.0;
        for (std::size_t k = 0; k < costs.size(); ++k)
        {
            for (std::size_t j = k + 1; j < costs.size(); ++j)
            {
                total += weight * costs[j];
            }
            weight *= gamma;
        }
        return total;
    }
} // namespace

TEST_CASE("no externality means no payment")
{
    const auto s = solve(ArrivalModel{constant_count(0), 0.1, 1.0, 10.0}, MdpShape{3, 1, 1}, 0.9);
    const QueueState q(0, {req(1, 1, 10.0)});
    const auto exact = vcg_payment(s.model, s.policy, q, ValidatorId{1});
    CHECK(exact.exact);
    CHECK(exact.payment == 0.0);

    VcgOptions mc;
    mc.force_monte_carlo = true;
    mc.samples = 50;
    const auto sampled = vcg_payment(s.model, s.policy, q, ValidatorId{1}, mc);
    CHECK_FALSE(sampled.exact);
    CHECK(sampled.payment == 0.0);
}

TEST_CASE("a high-cost arrival displacing a low-cost agent pays one period of its cost")
{
    const auto s = solve(ArrivalModel{constant_count(0), 0.1, 1.0, 10.0}, MdpShape{3, 1, 1}, 0.9);
    const QueueState q(0, {req(1, 1, 1.0), req(2, 1, 10.0)});
    const auto exact = vcg_payment_exact(s.model, s.policy, q, ValidatorId{2});
    CHECK(exact.payment == doctest::Approx(1.0).epsilon(1e-12));

    VcgOptions mc;
    mc.samples = 200;
    const auto sampled = vcg_payment_monte_carlo(s.model, s.policy, q, ValidatorId{2}, mc);
    CHECK(std::abs(sampled.payment - 1.0) <= std::max(3.0 * sampled.standard_error, 1e-12));

    // The low-cost agent imposes nothing on the high one.
    CHECK(vcg_payment_exact(s.model, s.policy, q, ValidatorId{1}).payment == 0.0);
}

TEST_CASE("exact payments match a hand-run queue without arrivals")
{
    const double gamma = 0.8;
    const auto s = solve(ArrivalModel{constant_count(0), 0.1, 1.0, 10.0}, MdpShape{4, 1, 1}, gamma);
    const std::vector<double> costs{1.0, 10.0, 1.0, 10.0, 1.0};
    std::vector<ExitRequest> waiting;
    for (std::size_t i = 0; i < costs.size(); ++i)
    {
        waiting.push_back(req(i, 1, costs[i]));
    }
    const QueueState q(0, waiting);
    for (std::size_t i = 0; i < costs.size(); ++i)
    {
        // Others' cost with the agent present, from the same one-per-period schedule.
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t j = 0; j < costs.size(); ++j)
        {
            ranked.emplace_back(costs[j], j);
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](auto a, auto b) { return a.first > b.first; });
        double present = 0.0;
        double weight = 1.0;
        for (std::size_t k = 0; k < ranked.size(); ++k)
        {
            for (std::size_t j = k + 1; j < ranked.size(); ++j)
            {
                if (ranked[j].second != i)
                {
                    present += weight * ranked[j].first;
                }
            }
            weight *= gamma;
        }
        const double absent = others_cost(costs, i, gamma);
        const auto got = vcg_payment_exact(s.model, s.policy, q, ValidatorId{i});
        CHECK(got.payment == doctest::Approx(present - absent).epsilon(1e-9));
        CHECK(got.payment >= 0.0);
    }
}

TEST_CASE("exact and Monte Carlo routes agree under random arrivals")
{
    // Load well under capacity so the cap is almost never reached.
    const ArrivalModel arrivals{CountDistribution{{0, 1, 2}, {0.7, 0.2, 0.1}}, 0.2, 1.0, 10.0};
    const auto s = solve(arrivals, MdpShape{10, 2, 3}, 0.8);
    const QueueState q(0, {req(1, 1, 1.0), req(2, 1, 1.0), req(3, 1, 10.0), req(4, 1, 1.0)});
    VcgOptions mc;
    mc.samples = 4000;
    mc.seed = 5;
    for (std::uint64_t agent : {1, 3, 4})
    {
        const auto exact = vcg_payment_exact(s.model, s.policy, q, ValidatorId{agent});
        const auto sampled = vcg_payment_monte_carlo(s.model, s.policy, q, ValidatorId{agent}, mc);
        CHECK(exact.payment >= 0.0);
        CHECK(sampled.payment >= -3.0 * sampled.standard_error);
        CHECK(std::abs(exact.payment - sampled.payment) <= 4.0 * sampled.standard_error + 1e-3);
    }
}

TEST_CASE("payment errors")
{
    const auto s = solve(ArrivalModel{constant_count(0), 0.1, 1.0, 10.0}, MdpShape{2, 1, 1}, 0.9);
    const QueueState q(0, {req(1, 1, 1.0)});
    CHECK_THROWS_AS(vcg_payment(s.model, s.policy, q, ValidatorId{9}), UnknownRequest);
    std::vector<ExitRequest> many;
    for (std::uint64_t i = 0; i < 4; ++i)
    {
        many.push_back(req(i, 1, 1.0));
    }
    CHECK_THROWS_AS(vcg_payment_exact(s.model, s.policy, QueueState(0, many), ValidatorId{0}), ModelMismatch);
    VcgOptions mc;
    mc.samples = 10;
    CHECK_NOTHROW(vcg_payment(s.model, s.policy, QueueState(0, many), ValidatorId{0}, mc));
}
