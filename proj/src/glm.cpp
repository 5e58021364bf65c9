#include "itr/glm.hpp"
#include "itr/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace itr {

namespace {

double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double softplus(double t) {
    return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

std::string column_label(const std::vector<std::string>& names, Eigen::Index j, Eigen::Index p) {
    if (j == p) return "(intercept)";
    if (static_cast<std::size_t>(j) < names.size()) return names[static_cast<std::size_t>(j)];
    return "x" + std::to_string(j + 1);
}

Eigen::VectorXd normalized_weights(const std::optional<Eigen::VectorXd>& weights, Eigen::Index n) {
    if (!weights) return Eigen::VectorXd::Ones(n);
    if (weights->size() != n) {
        throw InputError("weights have length " + std::to_string(weights->size()) + ", expected " +
                         std::to_string(n));
    }
    if ((weights->array() < 0.0).any() || !weights->allFinite()) {
        throw InputError("weights must be finite and nonnegative");
    }
    const double top = weights->maxCoeff();
    if (top <= 0.0) throw InputError("weights are all zero");
    // Scaling by the max leaves uniform weights at exactly 1.
    return *weights / top;
}

} // namespace

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
    Z.leftCols(X.cols()) = X;
    Z.col(X.cols()).setOnes();
    return Z;
}

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& X) const {
    const auto p = coefficients.size() - 1;
    if (X.cols() != p) {
        throw InputError("linear model expects " + std::to_string(p) + " covariates, got " +
                         std::to_string(X.cols()));
    }
    return (X * coefficients.head(p)).array() + coefficients(p);
}

LinearModel fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::optional<Eigen::VectorXd>& weights,
                       const std::vector<std::string>& names) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (y.size() != n) throw InputError("fit_linear: X has " + std::to_string(n) + " rows but y has " +
                                        std::to_string(y.size()));
    if (n <= p + 1) {
        throw InputError("fit_linear: need more than " + std::to_string(p + 1) + " rows, got " +
                         std::to_string(n));
    }
    const Eigen::VectorXd w = normalized_weights(weights, n);
    const Eigen::VectorXd sw = w.array().sqrt();

    Eigen::MatrixXd Z = with_intercept(X);
    Z.array().colwise() *= sw.array();
    const Eigen::VectorXd yw = y.array() * sw.array();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (qr.rank() < p + 1) {
        std::ostringstream os;
        os << "fit_linear: rank-deficient design (rank " << qr.rank() << " of " << p + 1
           << "); dependent column(s):";
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < p + 1; ++k) os << ' ' << column_label(names, perm(k), p);
        throw NumericError(os.str());
    }

    LinearModel model;
    model.coefficients = qr.solve(yw);
    const Eigen::VectorXd resid = y - with_intercept(X) * model.coefficients;
    const double wss = (w.array() * resid.array().square()).sum();
    model.residual_variance = wss / w.sum() * static_cast<double>(n) / static_cast<double>(n - p - 1);
    return model;
}

Eigen::VectorXd LogisticModel::linear_predictor(const Eigen::MatrixXd& X) const {
    const auto p = coefficients.size() - 1;
    if (X.cols() != p) {
        throw InputError("logistic model expects " + std::to_string(p) + " covariates, got " +
                         std::to_string(X.cols()));
    }
    return (X * coefficients.head(p)).array() + coefficients(p);
}

double logistic_log_likelihood(const Eigen::VectorXd& coefficients, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& a) {
    const Eigen::VectorXd eta = with_intercept(X) * coefficients;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += a(i) * eta(i) - softplus(eta(i));
    return ll;
}

Eigen::VectorXd logistic_score(const Eigen::VectorXd& coefficients, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& a) {
    const Eigen::MatrixXd Z = with_intercept(X);
    const Eigen::VectorXd eta = Z * coefficients;
    Eigen::VectorXd r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) r(i) = a(i) - sigmoid(eta(i));
    return Z.transpose() * r;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& a,
                           const LogisticOptions& options, const std::optional<Eigen::VectorXd>& weights) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (a.size() != n) throw InputError("fit_logistic: X has " + std::to_string(n) + " rows but a has " +
                                        std::to_string(a.size()));
    if (n <= p + 1) {
        throw InputError("fit_logistic: need more than " + std::to_string(p + 1) + " rows, got " +
                         std::to_string(n));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a(i) != 0.0 && a(i) != 1.0) throw InputError("fit_logistic: response must be 0/1");
    }
    const double n_treated = a.sum();
    if (n_treated == 0.0 || n_treated == static_cast<double>(n)) {
        throw InputError("fit_logistic: single-class response, both classes are required");
    }
    const Eigen::VectorXd w = normalized_weights(weights, n);
    const Eigen::MatrixXd Z = with_intercept(X);

    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, options.ridge);
    penalty(p) = 0.0;

    auto objective = [&](const Eigen::VectorXd& beta) {
        const Eigen::VectorXd eta = Z * beta;
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) ll += w(i) * (a(i) * eta(i) - softplus(eta(i)));
        return ll - 0.5 * (penalty.array() * beta.array().square()).sum();
    };

    LogisticModel model;
    model.coefficients = Eigen::VectorXd::Zero(p + 1);
    Eigen::VectorXd prob(n);
    Eigen::VectorXd score;
    double current = objective(model.coefficients);

    for (int iter = 0;; ++iter) {
        const Eigen::VectorXd eta = Z * model.coefficients;
        for (Eigen::Index i = 0; i < n; ++i) prob(i) = sigmoid(eta(i));
        score = Z.transpose() * (w.array() * (a - prob).array()).matrix() -
                (penalty.array() * model.coefficients.array()).matrix();
        model.score_norm = score.lpNorm<Eigen::Infinity>();
        model.iterations = iter;
        if (model.score_norm < options.score_tol) {
            model.converged = true;
            break;
        }
        if (iter >= options.max_iter) break;

        const Eigen::VectorXd curvature = w.array() * prob.array() * (1.0 - prob.array());
        Eigen::MatrixXd H = Z.transpose() * curvature.asDiagonal() * Z;
        H.diagonal() += penalty;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            throw NumericError("fit_logistic: singular information matrix, the classes may be separated; "
                               "set a ridge penalty");
        }
        Eigen::VectorXd step = ldlt.solve(score);

        // Step halving keeps the objective monotone.
        Eigen::VectorXd next = model.coefficients + step;
        double value = objective(next);
        // Slack of a few ulps so rounding in the log-likelihood cannot stall a converging step.
        const double slack = 1e-12 * (1.0 + std::abs(current));
        for (int h = 0; h < 30 && !(value >= current - slack); ++h) {
            step *= 0.5;
            next = model.coefficients + step;
            value = objective(next);
        }
        model.coefficients = next;
        current = value;

        if (!model.coefficients.allFinite() || model.coefficients.norm() > options.separation_norm) {
            throw NumericError("fit_logistic: coefficient norm exceeded " +
                               std::to_string(options.separation_norm) +
                               " (quasi-separation); set a ridge penalty");
        }
    }
    // Saturated fitted probabilities mean the likelihood keeps rising along a separating
    // direction; the score vanishes there long before the norm bound is reached.
    const double saturation = (Z * model.coefficients).cwiseAbs().maxCoeff();
    if (saturation > options.saturation_logit) {
        throw NumericError("fit_logistic: fitted probabilities numerically 0 or 1 (quasi-separation); "
                           "set a ridge penalty");
    }
    return model;
}

Eigen::VectorXd predict_proba(const LogisticModel& model, const Eigen::MatrixXd& X, double clip) {
    if (!(clip > 0.0 && clip < 0.5)) throw InputError("probability clip must lie in (0, 0.5)");
    const Eigen::VectorXd eta = model.linear_predictor(X);
    Eigen::VectorXd prob(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) prob(i) = std::clamp(sigmoid(eta(i)), clip, 1.0 - clip);
    return prob;
}

} // namespace itr
