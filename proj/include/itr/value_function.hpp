#pragma once

#include "itr/data_model.hpp"
#include "itr/nuisance.hpp"
#include "itr/rule.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace itr {

struct ValueEstimate {
    double value = 0.0;
    LinearItr rule;
    bool weighted = false;  // calibration weights rather than uniform
    std::size_t n_source_used = 0;
};

// Calibrated AIPW value of a rule over source units:
//   sum_i w_i ( [A_i d_i / pi_i + (1 - A_i)(1 - d_i) / (1 - pi_i)] (Y_i - m_{d_i}(X_i)) + m_{d_i}(X_i) )
// The weights carry the target covariate distribution; pi and m are fitted once and
// injected. With a pooled outcome model m_1 == m_0.
class CaipwProblem {
public:
    CaipwProblem(Eigen::MatrixXd X, Eigen::VectorXd A, Eigen::VectorXd Y, Eigen::VectorXd pi_hat,
                 OutcomePredictions m_hat, Eigen::VectorXd weights, bool weighted);

    double value(const Assignment& d) const;
    double value(const LinearItr& rule) const;
    ValueEstimate evaluate(const LinearItr& rule) const;

    const Eigen::MatrixXd& X() const { return X_; }
    std::size_t n() const { return static_cast<std::size_t>(X_.rows()); }
    bool weighted() const { return weighted_; }

    // Per-unit contributions when the unit is treated / not treated.
    const Eigen::VectorXd& treated_terms() const { return term_treated_; }
    const Eigen::VectorXd& control_terms() const { return term_control_; }

private:
    Eigen::MatrixXd X_;
    Eigen::VectorXd term_treated_;
    Eigen::VectorXd term_control_;
    bool weighted_ = false;
};

// One summand of the value sum for decision d (0 or 1).
inline double caipw_term(double w, double a, double y, double pi, double m, double d) {
    return w * ((a * d / pi + (1.0 - a) * (1.0 - d) / (1.0 - pi)) * (y - m) + m);
}

ValueEstimate caipw_value(const LinearItr& rule, const SourceArrays& source, const Eigen::VectorXd& weights,
                          const Eigen::VectorXd& pi_hat, const OutcomePredictions& m_hat, bool weighted);

// Maps coefficients fitted on standardized covariates (x - mean) / sd back to the raw scale.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    Eigen::VectorXd to_raw(const Eigen::VectorXd& eta_standardized) const;
};

} // namespace itr
