#pragma once

#include "itr/calibration.hpp"
#include "itr/data_model.hpp"
#include "itr/ga_optimizer.hpp"
#include "itr/nuisance.hpp"
#include "itr/serialization.hpp"
#include "itr/simulation.hpp"
#include "itr/value_function.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace itr {

inline constexpr const char* kToolVersion = "0.1.0";

struct CalibrationOptions {
    int moments = 1;
    EntropyBalanceOptions solver;
};

struct RunConfig {
    // Either a combined file with a population column, or separate source/target files.
    // With none of the three, the run simulates data from `simulation`.
    std::optional<std::filesystem::path> data;
    std::optional<std::filesystem::path> source;
    std::optional<std::filesystem::path> target;
    CsvSchema schema;
    NuisanceOptions nuisance;
    CalibrationOptions calibration;
    GaConfig ga;
    SimConfig simulation;
    std::filesystem::path output_dir = "itr_out";
    // Overrides ga.seed and simulation.seed when set.
    std::optional<std::uint64_t> seed;
    bool unweighted = true;  // also learn the rule without calibration weights
    bool plot_data = false;

    bool simulated() const { return !data && !source && !target; }
    // Seed propagated into the GA and simulation sections.
    RunConfig effective() const;
};

RunConfig run_config_from_json(const json& j);
json to_json(const RunConfig& c);

CsvSchema schema_from_json(const json& j, CsvSchema base = {});
json to_json(const CsvSchema& s);

// Reads source and target rows as a RunConfig describes them.
Dataset load_study(const RunConfig& config);

// Learns a linear rule by maximizing the CAIPW value on standardized covariates;
// the returned rule is mapped back to raw covariate units.
struct PolicyFit {
    GaResult ga;  // best_rule in raw units
    LinearItr rule;
    Eigen::VectorXd standardized_eta;
};

PolicyFit learn_itr(const SourceArrays& source, const Eigen::VectorXd& weights, const Eigen::VectorXd& pi_hat,
                    const OutcomePredictions& m_hat, bool weighted, const GaConfig& ga);

struct RunOutcome {
    json report;
    int exit_code = 0;
    std::string failed_stage;  // empty on success
    std::string error;
};

// load, validate, calibrate, nuisance, estimate, optimize, evaluate, importance, write.
// report.json is written even when a stage fails, with failed_stage set.
RunOutcome run_pipeline(const RunConfig& config);

} // namespace itr
