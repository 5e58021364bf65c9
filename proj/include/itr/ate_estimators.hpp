#pragma once

#include "itr/nuisance.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>

namespace itr {

enum class AteMethod { Naive, IPW, OR, AIPW };

std::string_view to_string(AteMethod method);

// tau_hat is always treated_mean - control_mean. Each arm mean follows the printed
// treated-arm estimator, with the control arm as its exact mirror (A -> 1 - A,
// pi -> 1 - pi, m1 -> m0).
struct AteEstimate {
    AteMethod method = AteMethod::Naive;
    double tau_hat = 0.0;
    double treated_mean = 0.0;
    double control_mean = 0.0;
    std::size_t n_used = 0;
};

AteEstimate naive_ate(const Eigen::VectorXd& A, const Eigen::VectorXd& Y);
AteEstimate ipw_ate(const Eigen::VectorXd& A, const Eigen::VectorXd& Y, const Eigen::VectorXd& pi_hat);
AteEstimate or_ate(const OutcomePredictions& m);
AteEstimate aipw_ate(const Eigen::VectorXd& A, const Eigen::VectorXd& Y, const Eigen::VectorXd& pi_hat,
                     const OutcomePredictions& m);

struct AteSummary {
    AteEstimate naive, ipw, outcome_regression, aipw;
};

// All four estimators on the source arrays with the arm-specific outcome models.
AteSummary estimate_all(const SourceArrays& source, const NuisanceModels& nuisance);

} // namespace itr
