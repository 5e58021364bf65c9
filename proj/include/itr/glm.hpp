#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace itr {

// Coefficient vectors in this module put the intercept last: [beta_1..beta_p, intercept].

struct LinearModel {
    Eigen::VectorXd coefficients;
    double residual_variance = 0.0;

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// Weighted least squares through column-pivoted QR. A rank-deficient design is an
// error naming the dependent columns; `names` labels the columns of X.
LinearModel fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                       const std::vector<std::string>& names = {});

struct LogisticOptions {
    int max_iter = 100;
    double score_tol = 1e-8;
    // Coefficient norm beyond which the data are treated as (quasi-)separated.
    double separation_norm = 1e3;
    // Largest |linear predictor| accepted at the solution; beyond it p is within 1e-15 of 0 or 1.
    double saturation_logit = 36.0;
    // L2 penalty on the slopes (not the intercept). Zero is a plain MLE.
    double ridge = 0.0;
};

struct LogisticModel {
    Eigen::VectorXd coefficients;
    bool converged = false;
    int iterations = 0;
    // Max-norm of the (penalized) score at the returned coefficients.
    double score_norm = 0.0;

    Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X) const;
};

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& a,
                           const LogisticOptions& options = {},
                           const std::optional<Eigen::VectorXd>& weights = std::nullopt);

// Logistic link followed by clipping to [clip, 1 - clip].
Eigen::VectorXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& X, double clip = 0.01);

// Unpenalized Bernoulli log-likelihood and its gradient in the coefficients.
double logistic_log_likelihood(const Eigen::VectorXd& coefficients, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& a);
Eigen::VectorXd logistic_score(const Eigen::VectorXd& coefficients, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& a);

// [X, 1]
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X);

} // namespace itr
