#include "itr/value_function.hpp"
#include "itr/error.hpp"

#include <cmath>

namespace itr {

namespace {

void expect_length(Eigen::Index n, Eigen::Index got, const char* what) {
    if (got != n) {
        throw InputError(std::string("value function: ") + what + " has length " + std::to_string(got) +
                         ", expected " + std::to_string(n));
    }
}

} // namespace

CaipwProblem::CaipwProblem(Eigen::MatrixXd X, Eigen::VectorXd A, Eigen::VectorXd Y, Eigen::VectorXd pi_hat,
                           OutcomePredictions m_hat, Eigen::VectorXd weights, bool weighted)
    : X_(std::move(X)), weighted_(weighted) {
    const auto n = X_.rows();
    if (n == 0) throw InputError("value function: no source units");
    expect_length(n, A.size(), "treatment");
    expect_length(n, Y.size(), "outcome");
    expect_length(n, pi_hat.size(), "pi_hat");
    expect_length(n, m_hat.treated.size(), "treated outcome predictions");
    expect_length(n, m_hat.control.size(), "control outcome predictions");
    expect_length(n, weights.size(), "weights");
    if (std::abs(weights.sum() - 1.0) > 1e-9 || (weights.array() < 0.0).any()) {
        throw InputError("value function: weights must be nonnegative and sum to one");
    }
    if (!((pi_hat.array() > 0.0).all() && (pi_hat.array() < 1.0).all())) {
        throw InputError("value function: propensity scores must lie strictly inside (0, 1)");
    }
    term_treated_.resize(n);
    term_control_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        term_treated_(i) = caipw_term(weights(i), A(i), Y(i), pi_hat(i), m_hat.treated(i), 1.0);
        term_control_(i) = caipw_term(weights(i), A(i), Y(i), pi_hat(i), m_hat.control(i), 0.0);
    }
}

double CaipwProblem::value(const Assignment& d) const {
    if (d.size() != n()) throw InputError("value function: assignment length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        total += d[i] ? term_treated_(k) : term_control_(k);
    }
    return total;
}

double CaipwProblem::value(const LinearItr& rule) const {
    return value(apply_itr(rule, X_));
}

ValueEstimate CaipwProblem::evaluate(const LinearItr& rule) const {
    return {value(rule), rule, weighted_, n()};
}

ValueEstimate caipw_value(const LinearItr& rule, const SourceArrays& source, const Eigen::VectorXd& weights,
                          const Eigen::VectorXd& pi_hat, const OutcomePredictions& m_hat, bool weighted) {
    CaipwProblem problem(source.X, source.A, source.Y, pi_hat, m_hat, weights, weighted);
    return problem.evaluate(rule);
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.mean = X.colwise().mean().transpose();
    s.sd.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double ss = (X.col(j).array() - s.mean(j)).square().sum();
        const double sd = X.rows() > 1 ? std::sqrt(ss / static_cast<double>(X.rows() - 1)) : 0.0;
        s.sd(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

Eigen::VectorXd Standardizer::to_raw(const Eigen::VectorXd& eta) const {
    const auto p = mean.size();
    Eigen::VectorXd raw(p + 1);
    raw.head(p) = eta.head(p).array() / sd.array();
    raw(p) = eta(p) - raw.head(p).dot(mean);
    return raw;
}

} // namespace itr
