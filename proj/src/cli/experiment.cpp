#include "exitq/cli/experiment.hpp"

#include "exitq/errors.hpp"
#include "exitq/policy_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace exitq::cli
{
    namespace
    {
        using nlohmann::json;

        const json &need(const json &j, const char *key)
        {
            if (!j.is_object() || !j.contains(key))
            {
                throw InvalidInput(std::string("config: missing key '") + key + "'");
            }
            return j.at(key);
        }

        template <class T>
        T get(const json &j, const char *key)
        {
            try
            {
                return need(j, key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw InvalidInput(std::string("config: bad value for '") + key + "': " + e.what());
            }
        }

        template <class T>
        T get_or(const json &j, const char *key, T fallback)
        {
            return j.contains(key) ? get<T>(j, key) : fallback;
        }

        Fraction fraction_of(const json &j)
        {
            if (j.is_string())
            {
                return parse_fraction(j.get<std::string>());
            }
            if (j.is_number_integer())
            {
                return Fraction(j.get<std::int64_t>());
            }
            if (j.is_number())
            {
                std::ostringstream text;
                text << j.get<double>();
                return parse_fraction(text.str());
            }
            throw InvalidInput("config: constraint delta must be a number or a string");
        }

        ConstraintSet constraints_of(const json &j)
        {
            const auto mode_name = get_or<std::string>(j, "mode", "absolute");
            ConstraintMode mode;
            if (mode_name == "absolute")
            {
                mode = ConstraintMode::AbsoluteCount;
            }
            else if (mode_name == "fraction")
            {
                mode = ConstraintMode::FractionOfStake;
            }
            else
            {
                throw InvalidInput("config: constraint mode must be 'absolute' or 'fraction'");
            }
            std::vector<Constraint> list;
            for (const auto &item : need(j, "limits"))
            {
                if (!item.is_array() || item.size() != 2 || !item[1].is_number_integer())
                {
                    throw InvalidInput("config: each limit is [delta, window]");
                }
                list.push_back(Constraint{fraction_of(item[0]), item[1].get<Period>()});
            }
            return ConstraintSet(std::move(list), mode);
        }

        CountDistribution counts_of(const json &j)
        {
            if (j.contains("poisson"))
            {
                return truncated_poisson(get<double>(j, "poisson"));
            }
            CountDistribution out{get<std::vector<int>>(j, "points"), get<std::vector<double>>(j, "probs")};
            out.validate();
            return out;
        }

        ValueDistribution values_of(const json &j)
        {
            const auto kind = get<std::string>(j, "kind");
            ValueDistribution out;
            if (kind == "discrete")
            {
                out = DiscreteValues{get<std::vector<double>>(j, "points"), get<std::vector<double>>(j, "probs")};
            }
            else if (kind == "uniform")
            {
                out = UniformValues{get<double>(j, "lo"), get<double>(j, "hi")};
            }
            else if (kind == "exponential")
            {
                if (j.contains("rate") == j.contains("scale"))
                {
                    throw InvalidInput("config: exponential values need exactly one of 'rate' or 'scale'");
                }
                out = j.contains("rate") ? ExponentialValues{get<double>(j, "rate"), ExponentialConvention::Rate}
                                         : ExponentialValues{get<double>(j, "scale"), ExponentialConvention::Scale};
            }
            else if (kind == "pareto")
            {
                out = ParetoValues{get<double>(j, "shape"), get<double>(j, "scale"), ParetoConvention::ShapeScale};
            }
            else
            {
                throw InvalidInput("config: unknown value distribution '" + kind + "'");
            }
            validate(out);
            return out;
        }

        Metric metric_of(const std::string &name)
        {
            if (name == "discounted")
            {
                return Metric::Discounted;
            }
            if (name == "steady_state")
            {
                return Metric::SteadyState;
            }
            throw InvalidInput("config: metric must be 'discounted' or 'steady_state'");
        }
    } // namespace

    Mechanism parse_mechanism(const std::string &name)
    {
        static const std::regex pattern(R"(^(minslack|prio-minslack|alpha-minslack\(([0-9.eE+-]+)\)|constant\(([0-9]+)\))(\[bid\]|\[fcfs\])?$)");
        std::smatch m;
        if (!std::regex_match(name, m, pattern))
        {
            throw InvalidInput("unknown mechanism '" + name + "'");
        }
        const PriorityKey key = !m[4].matched          ? PriorityKey::Cost
                                : m[4].str() == "[bid]" ? PriorityKey::Bid
                                                        : PriorityKey::Arrival;
        const std::string head = m[1].str();
        if (head == "minslack")
        {
            if (key != PriorityKey::Cost)
            {
                throw InvalidInput("minslack is FCFS and takes no sort key");
            }
            return MinSlack{};
        }
        if (head == "prio-minslack")
        {
            return PrioMinSlack{key};
        }
        if (m[2].matched)
        {
            const double alpha = std::stod(m[2].str());
            if (!(alpha > 0.0 && alpha <= 1.0))
            {
                throw InvalidAlpha("alpha must lie in (0, 1], got " + m[2].str());
            }
            return AlphaMinSlack{alpha, key};
        }
        const Stake rate = std::stoll(m[3].str());
        if (rate < 1)
        {
            throw InvalidInput("constant rate must be >= 1");
        }
        return Constant{rate, key};
    }

    ArrivalModel arrival_model_for(const CountDistribution &counts, const ValueDistribution &values)
    {
        const auto *d = std::get_if<DiscreteValues>(&values);
        if (!d || d->points.size() != 2 || d->points[0] == d->points[1])
        {
            throw ModelMismatch("the scheduling MDP needs a value distribution with exactly two cost levels");
        }
        const bool first_low = d->points[0] < d->points[1];
        ArrivalModel model;
        model.counts = counts;
        model.cost_low = first_low ? d->points[0] : d->points[1];
        model.cost_high = first_low ? d->points[1] : d->points[0];
        model.high_prob = first_low ? d->probs[1] : d->probs[0];
        model.validate();
        return model;
    }

    ExperimentSpec parse_experiment(const std::string &text, const std::filesystem::path &base_dir)
    {
        json root;
        try
        {
            root = json::parse(text, nullptr, true, true);
        }
        catch (const json::parse_error &e)
        {
            throw InvalidInput(std::string("config: ") + e.what());
        }
        if (!root.is_object())
        {
            throw InvalidInput("config: top level must be an object");
        }

        ExperimentSpec spec;
        spec.name = get_or<std::string>(root, "name", "experiment");
        auto &c = spec.config;
        c.constraints = constraints_of(need(root, "constraints"));
        c.initial_stake = get_or<Stake>(root, "initial_stake", 0);
        c.arrival_counts = counts_of(need(root, "arrivals"));
        c.values = values_of(need(root, "values"));
        c.steps = get<std::size_t>(root, "steps");
        c.burn_in = get_or<std::size_t>(root, "burn_in", 0);
        c.seed = get_or<std::uint64_t>(root, "seed", 0);
        c.trials = get_or<std::size_t>(root, "trials", 1);
        c.threads = get_or<unsigned>(root, "threads", 1);
        if (root.contains("discount"))
        {
            c.discount = get<double>(root, "discount");
        }
        spec.metric = metric_of(get_or<std::string>(root, "metric", "discounted"));
        if (spec.metric == Metric::Discounted && !c.discount)
        {
            throw InvalidInput("config: the discounted metric needs 'discount'");
        }
        spec.bin_width = get_or<double>(root, "bin_width", 0.1);
        if (!(spec.bin_width > 0.0))
        {
            throw InvalidInput("config: bin_width must be positive");
        }
        spec.mechanisms = get<std::vector<std::string>>(root, "mechanisms");
        if (spec.mechanisms.empty())
        {
            throw InvalidInput("config: 'mechanisms' must list at least one mechanism");
        }
        for (const auto &name : spec.mechanisms)
        {
            if (name != "optimal")
            {
                parse_mechanism(name);
            }
        }
        for (const auto &out : get_or<std::vector<std::string>>(root, "outputs", {}))
        {
            spec.outputs.push_back(base_dir / out);
        }

        const bool wants_optimal =
            std::find(spec.mechanisms.begin(), spec.mechanisms.end(), "optimal") != spec.mechanisms.end();
        if (root.contains("mdp") || wants_optimal)
        {
            const json mdp = root.value("mdp", json::object());
            SolverSettings s;
            if (c.constraints.mode() != ConstraintMode::AbsoluteCount || c.constraints.size() != 1 ||
                c.constraints[0].delta.denominator() != 1)
            {
                throw InvalidInput("config: the scheduling MDP needs one absolute integer constraint");
            }
            s.shape.budget = static_cast<int>(c.constraints[0].delta.numerator());
            s.shape.window = static_cast<int>(c.constraints[0].window);
            s.shape.cap = get_or<int>(mdp, "cap", 10);
            s.arrivals = arrival_model_for(c.arrival_counts, c.values);
            s.discount = mdp.contains("discount") ? get<double>(mdp, "discount") : c.discount.value_or(0.9);
            s.tolerance = get_or<double>(mdp, "tolerance", 1e-9);
            if (mdp.contains("policy"))
            {
                s.policy_path = base_dir / get<std::string>(mdp, "policy");
            }
            spec.solver = s;
        }
        return spec;
    }

    ExperimentSpec load_experiment(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw InvalidInput("cannot open config file " + path.string());
        }
        std::ostringstream text;
        text << in.rdbuf();
        return parse_experiment(text.str(), path.parent_path());
    }

    SolveResult solve_policy(const SolverSettings &settings)
    {
        const auto model = build_model(settings.arrivals, settings.shape, settings.discount);
        SolveOptions options;
        options.tolerance = settings.tolerance;
        return value_iteration(model, options);
    }

    std::shared_ptr<const Policy> obtain_policy(const SolverSettings &settings)
    {
        if (settings.policy_path && std::filesystem::exists(*settings.policy_path))
        {
            auto policy = std::make_shared<const Policy>(load_policy(settings.policy_path->string()));
            if (!(policy->states().shape() == settings.shape) || policy->discount() != settings.discount)
            {
                throw ModelMismatch("policy file " + settings.policy_path->string() +
                                    " was solved for a different shape or discount");
            }
            return policy;
        }
        return std::make_shared<const Policy>(solve_policy(settings).policy);
    }

    MechanismChoice make_mechanism(const ExperimentSpec &spec, const std::string &name,
                                   std::shared_ptr<const Policy> &policy_cache)
    {
        if (name != "optimal")
        {
            return parse_mechanism(name);
        }
        if (!spec.solver)
        {
            throw InvalidInput("config: 'optimal' needs MDP settings");
        }
        if (!policy_cache)
        {
            policy_cache = obtain_policy(*spec.solver);
        }
        return OptimalMechanism{policy_cache,
                                TwoLevelCosts{spec.solver->arrivals.cost_low, spec.solver->arrivals.cost_high}};
    }
} // namespace exitq::cli
