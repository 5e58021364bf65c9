#pragma once

#include "itr/data_model.hpp"
#include "itr/rule.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace itr {

enum class ContrastShape {
    // delta * min((h - h0) / (h_max - h0), (a0 - a) / (a0 - a_min)): positive exactly
    // when h > h0 and a < a0.
    Corner,
    // delta * (c0 + c_h z_h + c_a z_a) on standardized covariates: a half-plane.
    Linear,
};

// Two-covariate design: height and age, both uniform. Logistic coefficient triples are
// (intercept, height, age) on covariates standardized by the uniform mean and sd.
struct SimConfig {
    std::size_t n_general = 50'000;
    std::size_t n_target = 10'000;
    double height_min = 40.0;
    double height_max = 72.0;
    double age_min = 18.0;
    double age_max = 65.0;
    std::array<double, 3> propensity_coef{0.0, 0.3, -0.3};
    std::array<double, 3> sampling_coef{-2.9, 1.0, 1.0};
    // Y*(0) = c0 + c_h * height + c_a * age + noise, raw units.
    std::array<double, 3> control_coef{0.0, 0.02, 0.01};
    double noise_sd = 1.0;
    double contrast_scale = 2.0;
    double height_threshold = 55.0;
    double age_threshold = 41.0;
    ContrastShape contrast = ContrastShape::Corner;
    std::array<double, 3> linear_contrast{0.2, 1.0, -1.0};
    double rct_treated_fraction = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
};

std::string_view to_string(ContrastShape shape);
ContrastShape parse_contrast_shape(std::string_view text);

double contrast(const SimConfig& cfg, double height, double age);
double control_mean(const SimConfig& cfg, double height, double age);
double true_propensity(const SimConfig& cfg, double height, double age);
double sampling_score(const SimConfig& cfg, double height, double age);
// E[Y*(1) - Y*(0)] under the uniform covariate law, by midpoint quadrature.
double true_ate(const SimConfig& cfg, int grid = 2000);

struct GroundTruth {
    Eigen::VectorXd y0;
    Eigen::VectorXd y1;
    Eigen::VectorXd true_propensity;
    Eigen::VectorXd sampling_score;
    Assignment optimal;  // 1 iff y1 > y0
    std::vector<std::size_t> general_index;  // row in the general population
};

// Covariates are named "height" and "age"; ids are 1-based row numbers of the general population.
struct SimulatedPopulation {
    Dataset data;
    GroundTruth truth;

    std::size_t size() const { return data.size(); }
};

SimulatedPopulation generate_population(const SimConfig& cfg);
// Simple random sample without replacement; treatment ~ Bernoulli(true propensity).
SimulatedPopulation sample_target(const SimulatedPopulation& general, const SimConfig& cfg);
// Units outside `exclude` enter with probability equal to their sampling score and are
// randomized 50/50.
SimulatedPopulation sample_source_rct(const SimulatedPopulation& general,
                                      const std::vector<std::size_t>& exclude, const SimConfig& cfg);

struct SimulatedStudy {
    SimulatedPopulation general;
    SimulatedPopulation target;
    SimulatedPopulation source;

    // Source and target rows with their roles, for the estimation pipeline.
    Dataset combined() const;
};

SimulatedStudy simulate_study(const SimConfig& cfg);

// n fresh draws from the design with confounded assignment by the true propensity.
SimulatedPopulation observational_sample(const SimConfig& cfg, std::size_t n, std::uint64_t stream);

double oracle_classification_rate(const LinearItr& rule, const SimulatedPopulation& pop);

struct OracleRule {
    LinearItr rule;
    double rate = 0.0;
};

// Linear rule maximizing the oracle classification rate over two-covariate hyperplanes:
// angles on a dense grid with an exact threshold scan per angle, then local refinement.
OracleRule true_optimal_linear_itr(const SimulatedPopulation& pop, std::size_t angles = 1440);

// Synthetic stand-in for a 13-covariate clinical source/target pair with binary treatment
// and binary outcome (survival).
struct ApplicationShapeConfig {
    std::size_t n_source = 4000;
    std::size_t n_target = 4000;
    std::uint64_t seed = 1;
};

Dataset generate_application_shaped(const ApplicationShapeConfig& cfg);

} // namespace itr
