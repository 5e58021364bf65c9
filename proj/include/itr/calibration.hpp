#pragma once

#include "itr/data_model.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace itr {

// Target values for the balancing constraints. Order 1 balances covariate means;
// order 2 additionally balances uncentered second moments (x_j^2).
struct MomentTargets {
    int order = 1;
    std::vector<std::string> names;  // one per constraint, e.g. "age", "age^2"
    Eigen::VectorXd values;
};

// Constraint features g(X): columns x_1..x_p, then x_1^2..x_p^2 when order is 2.
Eigen::MatrixXd moment_features(const Eigen::MatrixXd& X, int order);
std::vector<std::string> moment_names(const std::vector<std::string>& covariates, int order);

MomentTargets target_moments(const Dataset& ds, int order = 1);
MomentTargets moments_of(const Eigen::MatrixXd& X, const std::vector<std::string>& covariates, int order = 1);

struct EntropyBalanceOptions {
    double tol = 1e-8;  // max-norm of the moment residual
    int max_iter = 200;
    int max_halvings = 30;
    int divergence_patience = 5;
};

struct CalibrationWeights {
    Eigen::VectorXd weights;  // positive, sums to one
    // Dual parameters in raw moment units: w_i proportional to exp(-dual . g(X_i)).
    Eigen::VectorXd dual;
    bool converged = false;
    int iterations = 0;
    double max_residual = 0.0;

    double effective_sample_size() const;
};

// Weights minimizing sum_i w_i log(n w_i) subject to sum w_i = 1 and
// sum w_i g(X_i) = targets, solved by damped Newton on the convex dual.
CalibrationWeights solve_entropy_balance(const Eigen::MatrixXd& source_X, const MomentTargets& targets,
                                         const EntropyBalanceOptions& options = {});

Eigen::VectorXd uniform_weights(Eigen::Index n);

struct BalanceRow {
    std::string name;
    double source_mean = 0.0;
    double weighted_mean = 0.0;
    double target_mean = 0.0;
    double smd_before = 0.0;
    double smd_after = 0.0;
};

struct BalanceReport {
    std::vector<BalanceRow> rows;
    double effective_sample_size = 0.0;
    double max_abs_smd_before = 0.0;
    double max_abs_smd_after = 0.0;
};

// Standardized mean differences use the unweighted source standard deviation.
BalanceReport balance_diagnostics(const Eigen::MatrixXd& source_X, const Eigen::VectorXd& weights,
                                  const MomentTargets& targets);

void write_weights_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                       const Eigen::VectorXd& weights);

} // namespace itr
