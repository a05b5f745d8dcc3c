#include "exitq/cli/commands.hpp"

#include "exitq/cli/experiment.hpp"
#include "exitq/cli/verify.hpp"
#include "exitq/errors.hpp"
#include "exitq/policy_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace exitq::cli
{
    namespace
    {
        std::string edge(double x)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.12g", x);
            return buf;
        }

        std::string number(double x)
        {
            if (std::isinf(x))
            {
                return x < 0 ? "-inf" : "inf";
            }
            return format_double(x);
        }

        ExperimentSpec load_with_overrides(const CommandOptions &opts)
        {
            if (opts.config.empty())
            {
                throw InvalidInput("--config is required");
            }
            auto spec = load_experiment(opts.config);
            if (opts.seed)
            {
                spec.config.seed = *opts.seed;
            }
            if (opts.trials)
            {
                spec.config.trials = *opts.trials;
            }
            if (opts.threads)
            {
                spec.config.threads = *opts.threads;
            }
            return spec;
        }

        // Writes the report to --out, else to the first configured output, else to `out`.
        void emit(const CommandOptions &opts, const ExperimentSpec *spec, const std::string &report,
                  std::ostream &out)
        {
            std::string path = opts.out;
            if (path.empty() && spec && !spec->outputs.empty())
            {
                path = spec->outputs.front().string();
            }
            if (path.empty())
            {
                out << report;
                return;
            }
            std::ofstream file(path, std::ios::binary);
            if (!file)
            {
                throw InvalidInput("cannot write " + path);
            }
            file << report;
        }

        Summary summarize(ExperimentSpec &spec, const std::string &name, std::shared_ptr<const Policy> &cache)
        {
            spec.config.mechanism = make_mechanism(spec, name, cache);
            return monte_carlo(spec.config, spec.metric);
        }
    } // namespace

    int report_failure(std::ostream &err)
    {
        try
        {
            throw;
        }
        catch (const NonConvergence &e)
        {
            err << "solver error: " << e.what() << '\n';
            return SolverError;
        }
        catch (const ModelMismatch &e)
        {
            err << "model mismatch: " << e.what() << '\n';
            return ModelMismatchError;
        }
        catch (const InvariantViolation &e)
        {
            err << "invariant violation: " << e.what() << '\n';
            return InvariantError;
        }
        catch (const InfeasibleProcessing &e)
        {
            err << "invariant violation: " << e.what() << '\n';
            return InvariantError;
        }
        catch (const Error &e)
        {
            err << "config error: " << e.what() << '\n';
            return ConfigError;
        }
        catch (const nlohmann::json::exception &e)
        {
            err << "config error: " << e.what() << '\n';
            return ConfigError;
        }
        catch (const std::exception &e)
        {
            err << "internal error: " << e.what() << '\n';
            return InvariantError;
        }
    }

    int cmd_solve(const CommandOptions &opts, std::ostream &out, std::ostream &err)
    {
        const auto spec = load_with_overrides(opts);
        if (!spec.solver)
        {
            throw InvalidInput("config has no MDP settings to solve");
        }
        std::string path = opts.out;
        if (path.empty() && spec.solver->policy_path)
        {
            path = spec.solver->policy_path->string();
        }
        const auto result = solve_policy(*spec.solver);
        const auto text = policy_to_string(result.policy);
        err << "states " << result.policy.states().size() << ", iterations " << result.iterations << ", residual "
            << number(result.residual) << '\n';
        if (opts.check)
        {
            if (path.empty())
            {
                throw InvalidInput("--check needs a policy path (--out or mdp.policy)");
            }
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw InvalidInput("--check: cannot read " + path);
            }
            std::ostringstream existing;
            existing << in.rdbuf();
            if (existing.str() != text)
            {
                err << "check failed: " << path << " differs from a fresh solve\n";
                return InvariantError;
            }
            err << "check ok: " << path << '\n';
            return Success;
        }
        if (path.empty())
        {
            out << text;
        }
        else
        {
            save_policy(path, result.policy);
        }
        return Success;
    }

    int cmd_simulate(const CommandOptions &opts, std::ostream &out, std::ostream &)
    {
        auto spec = load_with_overrides(opts);
        std::shared_ptr<const Policy> cache;
        std::ostringstream report;
        report << kSimulateHeader << '\n';
        const std::string gamma = spec.config.discount ? number(*spec.config.discount) : "";
        for (const auto &name : spec.mechanisms)
        {
            const auto s = summarize(spec, name, cache);
            report << name << ',' << to_string(spec.metric) << ',' << number(s.mean) << ','
                   << number(s.standard_error) << ',' << number(s.p001) << ',' << number(s.p01) << ','
                   << number(s.p50) << ',' << spec.config.trials << ',' << spec.config.steps << ',' << gamma << ','
                   << spec.config.seed << '\n';
        }
        emit(opts, &spec, report.str(), out);
        return Success;
    }

    int cmd_histogram(const CommandOptions &opts, std::ostream &out, std::ostream &)
    {
        auto spec = load_with_overrides(opts);
        if (spec.metric != Metric::Discounted)
        {
            throw InvalidInput("histograms are built from the discounted metric");
        }
        std::shared_ptr<const Policy> cache;
        std::ostringstream report;
        report << kHistogramHeader << '\n';
        for (const auto &name : spec.mechanisms)
        {
            const auto s = summarize(spec, name, cache);
            for (const auto &bin : histogram(s.values, spec.bin_width))
            {
                report << name << ',' << edge(bin.left) << ',' << edge(bin.right) << ',' << bin.count << ','
                       << number(bin.density) << ',' << number(bin.log_density) << '\n';
            }
        }
        emit(opts, &spec, report.str(), out);
        return Success;
    }

    int cmd_policy_diff(const CommandOptions &opts, std::ostream &out, std::ostream &)
    {
        std::string path = opts.policy;
        if (path.empty() && !opts.config.empty())
        {
            const auto spec = load_experiment(opts.config);
            if (spec.solver && spec.solver->policy_path)
            {
                path = spec.solver->policy_path->string();
            }
        }
        if (path.empty())
        {
            throw InvalidInput("policy-diff needs a policy file");
        }
        const auto policy = load_policy(path);
        const auto &space = policy.states();
        std::map<int, std::size_t> counts;
        std::ostringstream wide;
        for (std::size_t i = 0; i < space.size(); ++i)
        {
            const int greedy = std::min(space.max_action(i), space.w_low(i) + space.w_high(i));
            const int diff = greedy - policy.action(i);
            counts[diff] += 1;
            if (diff >= 2)
            {
                const auto s = space.state(i);
                wide << i << ',' << s.w_low << ',' << s.w_high;
                for (int h : s.history)
                {
                    wide << ',' << h;
                }
                wide << ',' << policy.action(i) << ',' << greedy << '\n';
            }
        }
        std::ostringstream report;
        report << "diff,states\n";
        for (const auto &[diff, n] : counts)
        {
            report << diff << ',' << n << '\n';
        }
        report << "\nindex,w_low,w_high";
        for (int j = 1; j <= space.shape().history_length(); ++j)
        {
            report << ",h" << j;
        }
        report << ",policy_action,prio_action\n" << wide.str();
        emit(opts, nullptr, report.str(), out);
        return Success;
    }

    int cmd_verify(const CommandOptions &opts, std::ostream &out, std::ostream &)
    {
        VerifyOptions v;
        if (opts.seed)
        {
            v.seed = *opts.seed;
        }
        if (opts.trials)
        {
            v.dominance_instances = *opts.trials;
            v.fuzz_traces = *opts.trials;
        }
        bool ok = true;
        std::ostringstream report;
        for (const auto &r : run_verification(v))
        {
            report << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
            ok = ok && r.passed;
        }
        emit(opts, nullptr, report.str(), out);
        return ok ? Success : InvariantError;
    }

    int run(int argc, char **argv, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"Exit queue mechanisms: solve, simulate and audit rate-limited withdrawal queues"};
        app.require_subcommand(1);
        CommandOptions opts;

        auto common = [&](CLI::App *sub) {
            sub->add_option("--config", opts.config, "Experiment config file");
            sub->add_option("--seed", opts.seed, "Override the base seed");
            sub->add_option("--trials", opts.trials, "Override the trial count");
            sub->add_option("--threads", opts.threads, "Worker threads");
            sub->add_option("--out", opts.out, "Output path (default: stdout)");
        };
        auto *solve = app.add_subcommand("solve", "Solve the scheduling MDP and write the policy file");
        common(solve);
        solve->add_flag("--check", opts.check, "Verify an existing policy file regenerates byte for byte");
        auto *simulate = app.add_subcommand("simulate", "Monte Carlo summary per mechanism as CSV");
        common(simulate);
        auto *hist = app.add_subcommand("histogram", "Binned discounted rewards per mechanism as CSV");
        common(hist);
        auto *diff = app.add_subcommand("policy-diff", "Compare a policy with the greedy PRIO-MINSLACK action");
        common(diff);
        diff->add_option("policy", opts.policy, "Policy file");
        auto *verify = app.add_subcommand("verify", "Run the built-in oracle checks");
        common(verify);

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::ParseError &e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? Success : ConfigError;
        }

        try
        {
            if (solve->parsed())
                return cmd_solve(opts, out, err);
            if (simulate->parsed())
                return cmd_simulate(opts, out, err);
            if (hist->parsed())
                return cmd_histogram(opts, out, err);
            if (diff->parsed())
                return cmd_policy_diff(opts, out, err);
            return cmd_verify(opts, out, err);
        }
        catch (...)
        {
            return report_failure(err);
        }
    }
} // namespace exitq::cli
