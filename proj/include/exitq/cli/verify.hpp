#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace exitq::cli
{
    struct CheckResult
    {
        std::string name;
        bool passed = false;
        std::string detail;
    };

    struct VerifyOptions
    {
        std::uint64_t seed = 1;
        std::size_t dominance_instances = 1000;
        std::size_t fuzz_traces = 2000;
    };

    // Self-contained oracle checks: state count, solver vs finite-horizon DP,
    // MINSLACK dominance over brute force, alpha mapping, feasibility fuzzing.
    std::vector<CheckResult> run_verification(const VerifyOptions &options = {});
} // namespace exitq::cli
