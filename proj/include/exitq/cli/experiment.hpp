#pragma once

#include "exitq/mdp.hpp"
#include "exitq/simulator.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace exitq::cli
{
    // Settings for solving the two-class scheduling MDP that backs the
    // "optimal" mechanism.
    struct SolverSettings
    {
        MdpShape shape;
        ArrivalModel arrivals;
        double discount = 0.9;
        double tolerance = 1e-9;
        // Policy file to load instead of solving, if it exists.
        std::optional<std::filesystem::path> policy_path;
    };

    struct ExperimentSpec
    {
        std::string name;
        SimulationConfig config;
        std::vector<std::string> mechanisms;
        Metric metric = Metric::Discounted;
        double bin_width = 0.1;
        std::optional<SolverSettings> solver;
        std::vector<std::filesystem::path> outputs;
    };

    // Config files are JSON; // and /* */ comments are allowed. Relative
    // paths inside are resolved against the file's directory. Throws
    // InvalidInput on any schema problem.
    ExperimentSpec load_experiment(const std::filesystem::path &path);
    ExperimentSpec parse_experiment(const std::string &text, const std::filesystem::path &base_dir = {});

    // "minslack", "prio-minslack", "alpha-minslack(0.9)", "constant(1)",
    // optionally suffixed with "[bid]" or "[fcfs]". "optimal" is not a
    // heuristic and throws.
    Mechanism parse_mechanism(const std::string &name);

    // Two-point value distribution -> MDP arrival model. ModelMismatch otherwise.
    ArrivalModel arrival_model_for(const CountDistribution &counts, const ValueDistribution &values);

    // Loads the configured policy file if present, otherwise solves.
    std::shared_ptr<const Policy> obtain_policy(const SolverSettings &settings);
    SolveResult solve_policy(const SolverSettings &settings);

    // Resolves the named mechanism, solving or loading a policy for "optimal".
    MechanismChoice make_mechanism(const ExperimentSpec &spec, const std::string &name,
                                   std::shared_ptr<const Policy> &policy_cache);
} // namespace exitq::cli
