#include "exitq/core_model.hpp"

#include "exitq/errors.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <unordered_set>

namespace exitq
{
    namespace
    {
        std::int64_t parse_int(std::string_view text, std::string_view whole)
        {
            std::int64_t value = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
            {
                throw InvalidInput("not a rational number: '" + std::string(whole) + "'");
            }
            return value;
        }
    } // namespace

    Fraction parse_fraction(std::string_view text)
    {
        const std::string_view whole = text;
        while (!text.empty() && text.front() == ' ')
        {
            text.remove_prefix(1);
        }
        while (!text.empty() && text.back() == ' ')
        {
            text.remove_suffix(1);
        }
        if (auto slash = text.find('/'); slash != std::string_view::npos)
        {
            const auto num = parse_int(text.substr(0, slash), whole);
            const auto den = parse_int(text.substr(slash + 1), whole);
            if (den == 0)
            {
                throw InvalidInput("zero denominator: '" + std::string(whole) + "'");
            }
            return Fraction(num, den);
        }
        if (auto dot = text.find('.'); dot != std::string_view::npos)
        {
            const auto int_part = text.substr(0, dot);
            const auto frac_part = text.substr(dot + 1);
            if (frac_part.size() > 15 || (int_part.empty() && frac_part.empty()))
            {
                throw InvalidInput("not a rational number: '" + std::string(whole) + "'");
            }
            std::int64_t scale = 1;
            for (std::size_t i = 0; i < frac_part.size(); ++i)
            {
                scale *= 10;
            }
            const bool negative = !int_part.empty() && int_part.front() == '-';
            const std::int64_t ip = int_part.empty() || int_part == "-" ? 0 : parse_int(int_part, whole);
            const std::int64_t fp = frac_part.empty() ? 0 : parse_int(frac_part, whole);
            if (fp < 0)
            {
                throw InvalidInput("not a rational number: '" + std::string(whole) + "'");
            }
            const std::int64_t magnitude = (ip < 0 ? -ip : ip) * scale + fp;
            return Fraction(negative ? -magnitude : magnitude, scale);
        }
        return Fraction(parse_int(text, whole));
    }

    std::string to_string(const Fraction &f)
    {
        if (f.denominator() == 1)
        {
            return std::to_string(f.numerator());
        }
        return std::to_string(f.numerator()) + "/" + std::to_string(f.denominator());
    }

    ConstraintSet::ConstraintSet(std::vector<Constraint> constraints, ConstraintMode mode)
        : constraints_(std::move(constraints)), mode_(mode)
    {
        if (constraints_.empty())
        {
            throw InvalidInput("constraint set must hold at least one constraint");
        }
        for (const auto &c : constraints_)
        {
            if (c.window < 1)
            {
                throw InvalidInput("constraint window must be >= 1");
            }
            if (c.delta < 0)
            {
                throw InvalidInput("constraint delta must be nonnegative");
            }
            if (mode_ == ConstraintMode::FractionOfStake && c.delta > 1)
            {
                throw InvalidInput("fraction-of-stake delta must lie in [0, 1]");
            }
            if (mode_ == ConstraintMode::AbsoluteCount && c.delta.denominator() != 1)
            {
                throw InvalidInput("absolute-count delta must be an integer");
            }
        }
    }

    ConstraintSet ConstraintSet::absolute(std::initializer_list<std::pair<Stake, Period>> limits)
    {
        std::vector<Constraint> out;
        for (auto [delta, window] : limits)
        {
            out.push_back(Constraint{Fraction(delta), window});
        }
        return ConstraintSet(std::move(out), ConstraintMode::AbsoluteCount);
    }

    Stake ConstraintSet::capacity(std::size_t i, Stake basis) const
    {
        const auto &c = constraints_.at(i);
        if (mode_ == ConstraintMode::AbsoluteCount)
        {
            return c.delta.numerator();
        }
        if (basis <= 0)
        {
            return 0;
        }
        // Exact floor(delta * basis); numerator * basis stays well inside int64
        // for any realistic stake (delta <= 1 keeps the product <= den * basis).
        const auto num = static_cast<__int128>(c.delta.numerator()) * basis;
        return static_cast<Stake>(num / c.delta.denominator());
    }

    QueueState::QueueState(Stake initial_stake, std::vector<ExitRequest> first_arrivals)
        : stake_history_{initial_stake}
    {
        admit(first_arrivals);
    }

    QueueState QueueState::from_history(Stake initial_stake, std::vector<Stake> processed_totals,
                                        std::vector<ExitRequest> waiting)
    {
        for (Stake p : processed_totals)
        {
            if (p < 0)
            {
                throw InvalidInput("processed totals must be nonnegative");
            }
        }
        QueueState state(initial_stake);
        state.stake_history_ = stake_history_from(initial_stake, processed_totals);
        state.processed_totals_ = std::move(processed_totals);
        state.admit(waiting);
        return state;
    }

    Stake QueueState::waiting_stake() const noexcept
    {
        Stake total = 0;
        for (const auto &r : waiting_)
        {
            total += r.stake;
        }
        return total;
    }

    Stake QueueState::processed_at(Period tau) const noexcept
    {
        if (tau < 1 || tau > static_cast<Period>(processed_totals_.size()))
        {
            return 0;
        }
        return processed_totals_[static_cast<std::size_t>(tau - 1)];
    }

    Stake QueueState::stake_at(Period tau) const noexcept
    {
        if (tau <= 0)
        {
            return stake_history_.front();
        }
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(tau), stake_history_.size() - 1);
        return stake_history_[idx];
    }

    void QueueState::admit(std::span<const ExitRequest> arrivals)
    {
        if (arrivals.empty())
        {
            return;
        }
        std::unordered_set<std::uint64_t> ids;
        ids.reserve(waiting_.size() + arrivals.size());
        for (const auto &r : waiting_)
        {
            ids.insert(r.validator.value);
        }
        for (const auto &r : arrivals)
        {
            if (r.stake < 1)
            {
                throw InvalidInput("exit request stake must be >= 1");
            }
            if (r.requested_at > period())
            {
                throw InvalidInput("exit request joins the waiting list before it was made");
            }
            if (!ids.insert(r.validator.value).second)
            {
                throw DuplicateRequest("validator " + std::to_string(r.validator.value) +
                                       " already has a pending exit request");
            }
            waiting_.push_back(r);
        }
    }

    Stake raw_slack(const ConstraintSet &constraints, std::size_t i, const QueueState &state)
    {
        const auto &c = constraints[i];
        const Period t = state.period();
        Stake recent = 0;
        for (Period tau = std::max<Period>(1, t - c.window + 1); tau <= t - 1; ++tau)
        {
            recent += state.processed_at(tau);
        }
        return constraints.capacity(i, state.stake_at(t - c.window)) - recent;
    }

    Stake slack(const ConstraintSet &constraints, std::size_t i, const QueueState &state)
    {
        return std::max<Stake>(0, raw_slack(constraints, i, state));
    }

    Stake min_slack(const QueueState &state, const ConstraintSet &constraints)
    {
        Stake best = slack(constraints, 0, state);
        for (std::size_t i = 1; i < constraints.size(); ++i)
        {
            best = std::min(best, slack(constraints, i, state));
        }
        return best;
    }

    QueueState step(QueueState state, std::span<const ExitRequest> arrivals, std::span<const ExitRequest> processed,
                    const ConstraintSet &constraints)
    {
        Stake withdrawn = 0;
        std::unordered_set<std::uint64_t> removing;
        removing.reserve(processed.size());
        for (const auto &p : processed)
        {
            const auto it = std::find_if(state.waiting_.begin(), state.waiting_.end(),
                                         [&](const ExitRequest &w) { return w.validator == p.validator; });
            if (it == state.waiting_.end() || !removing.insert(p.validator.value).second)
            {
                throw UnknownRequest("validator " + std::to_string(p.validator.value) +
                                     " is not in the waiting list");
            }
            withdrawn += it->stake;
        }
        const Stake allowed = min_slack(state, constraints);
        if (withdrawn > allowed)
        {
            throw InfeasibleProcessing("processing " + std::to_string(withdrawn) + " units exceeds min slack " +
                                       std::to_string(allowed) + " in period " + std::to_string(state.period()));
        }
        if (!removing.empty())
        {
            std::erase_if(state.waiting_,
                          [&](const ExitRequest &w) { return removing.contains(w.validator.value); });
        }
        state.processed_totals_.push_back(withdrawn);
        state.stake_history_.push_back(state.stake_history_.back() - withdrawn);
        state.admit(arrivals);
        return state;
    }

    bool check_trace_feasible(std::span<const Stake> processed_totals, std::span<const Stake> stake_history,
                              const ConstraintSet &constraints)
    {
        const std::size_t n = processed_totals.size();
        const bool fraction = constraints.mode() == ConstraintMode::FractionOfStake;
        if (fraction && stake_history.size() != n + 1)
        {
            throw LengthMismatch("stake history must hold one more entry than processed totals (" +
                                 std::to_string(stake_history.size()) + " vs " + std::to_string(n) + ")");
        }
        if (n == 0)
        {
            return true;
        }
        // prefix[k] = P(1) + ... + P(k)
        std::vector<Stake> prefix(n + 1, 0);
        for (std::size_t k = 0; k < n; ++k)
        {
            if (processed_totals[k] < 0)
            {
                return false;
            }
            prefix[k + 1] = prefix[k] + processed_totals[k];
        }
        for (std::size_t i = 0; i < constraints.size(); ++i)
        {
            const auto window = static_cast<std::size_t>(constraints[i].window);
            for (std::size_t t0 = 0; t0 < n; ++t0)
            {
                const std::size_t end = std::min(n, t0 + window);
                const Stake basis = fraction ? stake_history[t0] : 0;
                if (prefix[end] - prefix[t0] > constraints.capacity(i, basis))
                {
                    return false;
                }
            }
        }
        return true;
    }

    std::vector<Stake> stake_history_from(Stake initial_stake, std::span<const Stake> processed_totals)
    {
        std::vector<Stake> out;
        out.reserve(processed_totals.size() + 1);
        out.push_back(initial_stake);
        for (Stake p : processed_totals)
        {
            out.push_back(out.back() - p);
        }
        return out;
    }
} // namespace exitq
