#pragma once

#include "itr/data_model.hpp"
#include "itr/glm.hpp"

#include <Eigen/Dense>

#include <optional>

namespace itr {

// Outcome-model predictions over source units under each treatment.
// A pooled model has treated == control.
struct OutcomePredictions {
    Eigen::VectorXd treated;
    Eigen::VectorXd control;

    static OutcomePredictions pooled(Eigen::VectorXd m);
    static OutcomePredictions zero(Eigen::Index n);
    Eigen::Index size() const { return treated.size(); }
};

struct NuisanceOptions {
    double clip = 0.01;
    // Fit separate outcome models per arm and use m_{d(x)}(x) in the value function.
    bool arm_specific = false;
    // Fit nuisance models with calibration weights instead of uniformly.
    bool weighted_nuisance = false;
    double ridge = 0.0;
};

struct NuisanceModels {
    LogisticModel propensity;
    LinearModel outcome_pooled;
    LinearModel outcome_treated;
    LinearModel outcome_control;
    Eigen::VectorXd pi_hat;  // clipped, over source units
    NuisanceOptions options;

    // Predictions the value function uses (pooled unless arm_specific).
    OutcomePredictions value_predictions(const Eigen::MatrixXd& X) const;
    // Arm-specific predictions for the OR / AIPW treatment-effect estimators.
    OutcomePredictions arm_predictions(const Eigen::MatrixXd& X) const;
};

NuisanceModels fit_nuisance(const SourceArrays& source, const NuisanceOptions& options = {},
                            const std::optional<Eigen::VectorXd>& calibration_weights = std::nullopt);

} // namespace itr
