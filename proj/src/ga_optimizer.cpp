#include "itr/ga_optimizer.hpp"
#include "itr/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace itr {

GaConfig GaConfig::resolved(std::size_t dim) const {
    if (dim == 0) throw InputError("GA: search dimension must be positive");
    GaConfig c = *this;
    if (!c.mutation_rate) c.mutation_rate = 1.0 / static_cast<double>(dim);
    if (!c.mutation_scale) c.mutation_scale = 0.1 * (c.domain_upper - c.domain_lower);

    auto fail = [](const std::string& what) { throw InputError("GA config: " + what); };
    if (!(c.domain_upper > c.domain_lower)) fail("domain width must be positive");
    if (c.population_size == 0) fail("population_size must be positive");
    if (c.tournament_size == 0) fail("tournament_size must be positive");
    if (c.population_size < c.tournament_size) fail("population_size must be >= tournament_size");
    if (c.elitism > c.population_size) fail("elitism exceeds population_size");
    if (c.restarts == 0) fail("restarts must be positive");
    if (!(c.crossover_rate >= 0.0 && c.crossover_rate <= 1.0)) fail("crossover_rate must lie in [0, 1]");
    if (!(*c.mutation_rate >= 0.0 && *c.mutation_rate <= 1.0)) fail("mutation_rate must lie in [0, 1]");
    if (!(*c.mutation_scale >= 0.0) || !std::isfinite(*c.mutation_scale)) fail("mutation_scale must be >= 0");
    return c;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::size_t worker_count(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ITR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Indices sorted best first; ties go to the lower index.
std::vector<std::size_t> ranking(std::span<const double> fitness) {
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    return order;
}

std::string describe(const Genome& g) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index j = 0; j < g.size(); ++j) os << (j ? ", " : "") << g(j);
    os << ')';
    return os.str();
}

void evaluate_all(const Objective& objective, const std::vector<Genome>& population,
                  std::vector<double>& fitness, std::size_t threads) {
    const std::size_t n = population.size();
    fitness.assign(n, 0.0);
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fitness[i] = objective(population[i]);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t * n / threads; i < (t + 1) * n / threads; ++i) {
                        fitness[i] = objective(population[i]);
                    }
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(fitness[i])) {
            throw NumericError("GA: objective returned a non-finite value at eta = " + describe(population[i]));
        }
    }
}

} // namespace

std::vector<Genome> evolve_generation(const std::vector<Genome>& population, std::span<const double> fitness,
                                      const GaConfig& config, Rng& rng) {
    const std::size_t n = population.size();
    if (n == 0) throw InputError("GA: empty population");
    if (fitness.size() != n) throw InputError("GA: fitness and population differ in size");
    if (n < config.elitism) throw InputError("GA: population smaller than the elitism count");
    for (double f : fitness) {
        if (!std::isfinite(f)) throw NumericError("GA: non-finite fitness");
    }
    const GaConfig c = config.resolved(static_cast<std::size_t>(population.front().size()));
    const double lo = c.domain_lower;
    const double hi = c.domain_upper;

    const auto order = ranking(fitness);
    std::vector<std::size_t> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, *c.mutation_scale);

    auto tournament = [&]() -> const Genome& {
        std::size_t best = pick(rng);
        for (std::size_t k = 1; k < c.tournament_size; ++k) {
            const std::size_t cand = pick(rng);
            if (rank[cand] < rank[best]) best = cand;
        }
        return population[best];
    };

    std::vector<Genome> next;
    next.reserve(n);
    for (std::size_t k = 0; k < c.elitism; ++k) next.push_back(population[order[k]]);

    while (next.size() < n) {
        const Genome& p1 = tournament();
        const Genome& p2 = tournament();
        Genome child = p1;
        if (unit(rng) < c.crossover_rate) {
            for (Eigen::Index j = 0; j < child.size(); ++j) {
                const double a = std::min(p1(j), p2(j));
                const double b = std::max(p1(j), p2(j));
                const double gap = b - a;
                const double lower = a - 0.25 * gap;
                const double upper = b + 0.25 * gap;
                child(j) = std::clamp(lower + (upper - lower) * unit(rng), lo, hi);
            }
        }
        for (Eigen::Index j = 0; j < child.size(); ++j) {
            if (unit(rng) < *c.mutation_rate) child(j) = std::clamp(child(j) + gauss(rng), lo, hi);
        }
        next.push_back(std::move(child));
    }
    return next;
}

GaRunResult optimize(const Objective& objective, std::size_t dim, const GaConfig& config) {
    const GaConfig c = config.resolved(dim);
    const std::size_t threads = worker_count(c.threads);

    GaRunResult out;
    out.seed = c.seed;
    out.config = c;
    out.best_value = -std::numeric_limits<double>::infinity();
    const auto d = static_cast<Eigen::Index>(dim);

    std::vector<double> fitness;
    for (std::size_t r = 0; r < c.restarts; ++r) {
        Rng rng(derive_seed(c.seed, r));
        std::uniform_real_distribution<double> init(c.domain_lower, c.domain_upper);
        std::vector<Genome> population(c.population_size, Genome(d));
        for (auto& g : population) {
            for (Eigen::Index j = 0; j < d; ++j) g(j) = init(rng);
        }

        double restart_best = -std::numeric_limits<double>::infinity();
        for (std::size_t gen = 0;; ++gen) {
            evaluate_all(objective, population, fitness, threads);
            out.evaluations += population.size();
            for (std::size_t i = 0; i < population.size(); ++i) {
                if (fitness[i] > restart_best) restart_best = fitness[i];
                if (fitness[i] > out.best_value) {
                    out.best_value = fitness[i];
                    out.best = population[i];
                }
            }
            out.history.push_back(out.best_value);
            if (gen == c.generations) break;
            population = evolve_generation(population, fitness, c, rng);
        }
        out.restart_best.push_back(restart_best);
    }
    return out;
}

GaResult optimize_itr(const Objective& objective, const std::vector<std::string>& covariate_names,
                      const GaConfig& config) {
    auto run = optimize(objective, covariate_names.size() + 1, config);
    return {LinearItr(run.best, covariate_names), run.best_value, std::move(run.history),
            std::move(run.restart_best), run.evaluations, run.seed, std::move(run.config)};
}

} // namespace itr
