#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace exitq::cli
{
    enum ExitCode : int
    {
        Success = 0,
        ConfigError = 2,
        SolverError = 3,
        ModelMismatchError = 4,
        InvariantError = 5,
    };

    struct CommandOptions
    {
        std::string config;
        std::string policy;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> trials;
        std::optional<unsigned> threads;
        std::string out;
        bool check = false;
    };

    // Each command writes its report to opts.out (or `out` when empty) and
    // diagnostics to `err`, and returns the process exit code.
    int cmd_solve(const CommandOptions &opts, std::ostream &out, std::ostream &err);
    int cmd_simulate(const CommandOptions &opts, std::ostream &out, std::ostream &err);
    int cmd_histogram(const CommandOptions &opts, std::ostream &out, std::ostream &err);
    int cmd_policy_diff(const CommandOptions &opts, std::ostream &out, std::ostream &err);
    int cmd_verify(const CommandOptions &opts, std::ostream &out, std::ostream &err);

    // Maps the exception in flight to an exit code after printing it.
    int report_failure(std::ostream &err);

    int run(int argc, char **argv, std::ostream &out, std::ostream &err);

    inline constexpr const char *kSimulateHeader = "mechanism,metric,mean,stderr,p001,p01,p50,trials,steps,gamma,seed";
    inline constexpr const char *kHistogramHeader = "mechanism,bin_left,bin_right,count,density,log_density";
} // namespace exitq::cli
