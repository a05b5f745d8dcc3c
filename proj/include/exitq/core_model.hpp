#pragma once

#include <boost/rational.hpp>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exitq
{
    using Period = std::int64_t;
    using Stake = std::int64_t;
    using Fraction = boost::rational<std::int64_t>;

    // Parses "0.1", "1/10" or "5" exactly. Throws InvalidInput on anything else.
    Fraction parse_fraction(std::string_view text);
    std::string to_string(const Fraction &f);

    enum class ConstraintMode
    {
        FractionOfStake,
        AbsoluteCount,
    };

    // At most `delta` (fraction of stake, or absolute units) may exit in any
    // `window` consecutive periods.
    struct Constraint
    {
        Fraction delta;
        Period window = 1;

        friend bool operator==(const Constraint &, const Constraint &) = default;
    };

    class ConstraintSet
    {
    public:
        ConstraintSet(std::vector<Constraint> constraints, ConstraintMode mode);

        static ConstraintSet absolute(std::initializer_list<std::pair<Stake, Period>> limits);

        const std::vector<Constraint> &constraints() const noexcept { return constraints_; }
        ConstraintMode mode() const noexcept { return mode_; }
        std::size_t size() const noexcept { return constraints_.size(); }
        const Constraint &operator[](std::size_t i) const { return constraints_.at(i); }

        // floor(delta * basis) in fraction mode; delta in absolute mode.
        Stake capacity(std::size_t i, Stake basis) const;

        friend bool operator==(const ConstraintSet &, const ConstraintSet &) = default;

    private:
        std::vector<Constraint> constraints_;
        ConstraintMode mode_;
    };

    struct ValidatorId
    {
        std::uint64_t value = 0;

        friend auto operator<=>(const ValidatorId &, const ValidatorId &) = default;
    };

    struct ExitRequest
    {
        ValidatorId validator;
        Stake stake = 1;
        Period requested_at = 0;
        double cost = 0.0; // disutility per period of waiting
        double bid = 0.0;

        friend bool operator==(const ExitRequest &, const ExitRequest &) = default;
    };

    // Snapshot of the exit queue at the start of a period, after that period's
    // arrivals have joined and before anything is processed.
    //
    // period() is the period t about to be decided (t >= 1). processed_totals()
    // holds P(1..t-1) and stake_history() holds S(0..t-1), so total_stake() is
    // the stake remaining once period t-1 was processed.
    class QueueState
    {
    public:
        explicit QueueState(Stake initial_stake = 0, std::vector<ExitRequest> first_arrivals = {});

        // Rebuilds a state from a processed trace. Stake history is derived by
        // conservation from `initial_stake`.
        static QueueState from_history(Stake initial_stake, std::vector<Stake> processed_totals,
                                       std::vector<ExitRequest> waiting = {});

        Period period() const noexcept { return static_cast<Period>(processed_totals_.size()) + 1; }
        std::span<const ExitRequest> waiting() const noexcept { return waiting_; }
        std::span<const Stake> processed_totals() const noexcept { return processed_totals_; }
        std::span<const Stake> stake_history() const noexcept { return stake_history_; }
        Stake total_stake() const noexcept { return stake_history_.back(); }
        Stake waiting_stake() const noexcept;

        // P(tau), zero before genesis and for periods not yet processed.
        Stake processed_at(Period tau) const noexcept;
        // S(tau), S(0) before genesis.
        Stake stake_at(Period tau) const noexcept;

        friend bool operator==(const QueueState &, const QueueState &) = default;

        friend QueueState step(QueueState state, std::span<const ExitRequest> arrivals,
                               std::span<const ExitRequest> processed, const ConstraintSet &constraints);

    private:
        void admit(std::span<const ExitRequest> arrivals);

        std::vector<ExitRequest> waiting_;
        std::vector<Stake> processed_totals_;
        std::vector<Stake> stake_history_;
    };

    // capacity(delta_i, S(t - T_i)) - sum of P over t-T_i+1 .. t-1, without clamping.
    Stake raw_slack(const ConstraintSet &constraints, std::size_t i, const QueueState &state);
    Stake slack(const ConstraintSet &constraints, std::size_t i, const QueueState &state);
    Stake min_slack(const QueueState &state, const ConstraintSet &constraints);

    // Advances one period: removes `processed` from the waiting list, records
    // their stake, then appends next period's `arrivals` in order.
    QueueState step(QueueState state, std::span<const ExitRequest> arrivals,
                    std::span<const ExitRequest> processed, const ConstraintSet &constraints);

    // Sliding-window audit: every window of T periods starting after any
    // recorded period t0 >= 0 withdraws at most capacity(delta, S(t0)).
    // stake_history must hold S(0..n) (n = processed_totals.size()) in fraction
    // mode; it is ignored in absolute mode.
    bool check_trace_feasible(std::span<const Stake> processed_totals, std::span<const Stake> stake_history,
                              const ConstraintSet &constraints);

    // Builds S(0..n) from S(0) and P(1..n).
    std::vector<Stake> stake_history_from(Stake initial_stake, std::span<const Stake> processed_totals);
} // namespace exitq
