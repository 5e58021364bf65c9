#pragma once

#include "itr/rule.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace itr {

struct GaConfig {
    std::size_t population_size = 200;
    std::size_t generations = 150;
    double domain_lower = -1.0;  // same box for every coordinate
    double domain_upper = 1.0;
    std::size_t tournament_size = 4;
    double crossover_rate = 0.9;
    std::optional<double> mutation_rate;   // per gene; default 1 / dim
    std::optional<double> mutation_scale;  // Gaussian sd; default 0.1 * box width
    std::size_t elitism = 2;
    std::uint64_t seed = 20240521;
    std::size_t restarts = 10;
    // Worker threads for fitness evaluation; 0 reads ITR_THREADS, else hardware concurrency.
    std::size_t threads = 0;

    // Fills the dimension-dependent defaults and checks the invariants.
    GaConfig resolved(std::size_t dim) const;
};

using Genome = Eigen::VectorXd;
using Objective = std::function<double(const Genome&)>;

struct GaRunResult {
    Genome best;
    double best_value = 0.0;
    // Best-so-far value after each generation, restarts concatenated. Nondecreasing.
    std::vector<double> history;
    std::vector<double> restart_best;
    std::size_t evaluations = 0;
    std::uint64_t seed = 0;
    GaConfig config;  // resolved
};

// Maximizes the objective over the box with a real-coded genetic algorithm.
// Deterministic in (config, objective) regardless of the thread count.
GaRunResult optimize(const Objective& objective, std::size_t dim, const GaConfig& config);

struct GaResult {
    LinearItr best_rule;
    double best_value = 0.0;
    std::vector<double> history;
    std::vector<double> restart_best;
    std::size_t evaluations = 0;
    std::uint64_t seed = 0;
    GaConfig config;
};

// Searches eta in [lower, upper]^(p+1) for a linear rule; the objective sees eta directly.
GaResult optimize_itr(const Objective& objective, const std::vector<std::string>& covariate_names,
                      const GaConfig& config);

using Rng = std::mt19937_64;

// Stream seed for (master seed, stream index), mixed with splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// One generation: elites copied verbatim, the rest bred from rank-tournament parents
// by blend crossover (+/- 0.25 of the parent gap) and Gaussian mutation, clipped to the box.
std::vector<Genome> evolve_generation(const std::vector<Genome>& population, std::span<const double> fitness,
                                      const GaConfig& config, Rng& rng);

// Number of worker threads honoring ITR_THREADS.
std::size_t worker_count(std::size_t requested = 0);

} // namespace itr
