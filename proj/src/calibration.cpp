#include "itr/calibration.hpp"
#include "itr/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace itr {

Eigen::MatrixXd moment_features(const Eigen::MatrixXd& X, int order) {
    if (order != 1 && order != 2) throw InputError("moment order must be 1 or 2");
    if (order == 1) return X;
    Eigen::MatrixXd G(X.rows(), 2 * X.cols());
    G.leftCols(X.cols()) = X;
    G.rightCols(X.cols()) = X.array().square().matrix();
    return G;
}

std::vector<std::string> moment_names(const std::vector<std::string>& covariates, int order) {
    std::vector<std::string> names = covariates;
    if (order == 2) {
        for (const auto& c : covariates) names.push_back(c + "^2");
    }
    return names;
}

MomentTargets moments_of(const Eigen::MatrixXd& X, const std::vector<std::string>& covariates, int order) {
    if (X.rows() == 0) throw InputError("target moments: target population is empty");
    MomentTargets t;
    t.order = order;
    t.names = moment_names(covariates, order);
    t.values = moment_features(X, order).colwise().mean().transpose();
    return t;
}

MomentTargets target_moments(const Dataset& ds, int order) {
    return moments_of(ds.covariate_matrix(PopulationFilter::Target), ds.covariate_names(), order);
}

Eigen::VectorXd uniform_weights(Eigen::Index n) {
    return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

double CalibrationWeights::effective_sample_size() const {
    return 1.0 / weights.squaredNorm();
}

namespace {

std::string format_residual(const Eigen::VectorXd& r, const std::vector<std::string>& names) {
    std::ostringstream os;
    os.precision(6);
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        if (k) os << ", ";
        os << names[static_cast<std::size_t>(k)] << '=' << r(k);
    }
    return os.str();
}

} // namespace

CalibrationWeights solve_entropy_balance(const Eigen::MatrixXd& source_X, const MomentTargets& targets,
                                         const EntropyBalanceOptions& options) {
    const Eigen::Index n = source_X.rows();
    if (n == 0) throw InputError("entropy balancing: no source units");
    const Eigen::MatrixXd G = moment_features(source_X, targets.order);
    const Eigen::Index K = G.cols();
    if (targets.values.size() != K) {
        throw InputError("entropy balancing: " + std::to_string(targets.values.size()) +
                         " target moments for " + std::to_string(K) + " constraints");
    }
    std::vector<std::string> names = targets.names;
    for (auto k = static_cast<Eigen::Index>(names.size()); k < K; ++k) names.push_back("g" + std::to_string(k + 1));

    // Standardize constraint columns by source mean / sd to condition the Hessian.
    const Eigen::RowVectorXd mu = G.colwise().mean();
    Eigen::RowVectorXd sd(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        sd(k) = std::sqrt((G.col(k).array() - mu(k)).square().sum() / static_cast<double>(std::max<Eigen::Index>(n - 1, 1)));
        if (!(sd(k) > 0.0)) {
            throw NumericError("entropy balancing: constraint '" + names[static_cast<std::size_t>(k)] +
                               "' is constant in the source population (collinear with the normalization)");
        }
    }
    const Eigen::MatrixXd Z = (G.rowwise() - mu).array().rowwise() / sd.array();
    const Eigen::RowVectorXd t = (targets.values.transpose() - mu).array() / sd.array();

    for (Eigen::Index k = 0; k < K; ++k) {
        if (!(t(k) > Z.col(k).minCoeff() && t(k) < Z.col(k).maxCoeff())) {
            throw NumericError("entropy balancing: infeasible, target moment for '" +
                               names[static_cast<std::size_t>(k)] +
                               "' lies outside the range of the source values (no common support)");
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (qr.rank() < K) {
        std::ostringstream os;
        os << "entropy balancing: collinear constraint column(s):";
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < K; ++k) os << ' ' << names[static_cast<std::size_t>(perm(k))];
        throw NumericError(os.str());
    }

    const Eigen::MatrixXd C = Z.rowwise() - t;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(K);

    // Dual objective log sum_i exp(-C_i . lambda), with the normalized weights it induces.
    auto evaluate = [&](const Eigen::VectorXd& lam, Eigen::VectorXd& w) {
        const Eigen::VectorXd s = -(C * lam);
        const double m = s.maxCoeff();
        w = (s.array() - m).exp();
        const double total = w.sum();
        w /= total;
        return m + std::log(total);
    };

    CalibrationWeights out;
    Eigen::VectorXd w;
    double f = evaluate(lambda, w);
    double previous_norm = std::numeric_limits<double>::infinity();
    int rising = 0;

    for (int iter = 0;; ++iter) {
        const Eigen::VectorXd resid = C.transpose() * w;  // standardized moment residual
        const double raw_norm = (resid.transpose().array() * sd.array()).abs().maxCoeff();
        const double norm = std::max(raw_norm, resid.lpNorm<Eigen::Infinity>());
        out.iterations = iter;
        if (norm < options.tol) {
            out.converged = true;
            break;
        }
        if (iter >= options.max_iter) {
            throw NumericError("entropy balancing: no convergence after " + std::to_string(iter) +
                               " iterations, infeasible targets? residual: " +
                               format_residual(resid.transpose().array() * sd.array(), names));
        }
        rising = norm >= previous_norm ? rising + 1 : 0;
        if (rising >= options.divergence_patience) {
            throw NumericError("entropy balancing: residual diverging, infeasible targets? residual: " +
                               format_residual(resid.transpose().array() * sd.array(), names));
        }
        previous_norm = norm;

        Eigen::MatrixXd H = C.transpose() * w.asDiagonal() * C - resid * resid.transpose();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        Eigen::VectorXd step = ldlt.solve(resid);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            H.diagonal().array() += 1e-10 * (1.0 + H.diagonal().maxCoeff());
            step = H.ldlt().solve(resid);
        }

        // Armijo backtracking; the gradient of the dual is -resid.
        const double slope = -resid.dot(step);
        double alpha = 1.0;
        Eigen::VectorXd w_next;
        Eigen::VectorXd next = lambda + step;
        double f_next = evaluate(next, w_next);
        for (int h = 0; h < options.max_halvings && !(f_next <= f + 1e-4 * alpha * slope); ++h) {
            alpha *= 0.5;
            next = lambda + alpha * step;
            f_next = evaluate(next, w_next);
        }
        lambda = next;
        f = f_next;
        w = std::move(w_next);
    }

    if ((w.array() <= 0.0).any()) {
        throw NumericError("entropy balancing: weights underflowed to zero, targets are at the edge of source support");
    }
    out.weights = w;
    out.dual = lambda.array() / sd.transpose().array();
    out.max_residual = (G.transpose() * w - targets.values).lpNorm<Eigen::Infinity>();
    return out;
}

BalanceReport balance_diagnostics(const Eigen::MatrixXd& source_X, const Eigen::VectorXd& weights,
                                  const MomentTargets& targets) {
    const Eigen::MatrixXd G = moment_features(source_X, targets.order);
    if (weights.size() != G.rows() || targets.values.size() != G.cols()) {
        throw InputError("balance diagnostics: dimension mismatch");
    }
    BalanceReport rep;
    rep.effective_sample_size = 1.0 / weights.squaredNorm();
    const Eigen::Index n = G.rows();
    for (Eigen::Index k = 0; k < G.cols(); ++k) {
        BalanceRow row;
        row.name = static_cast<std::size_t>(k) < targets.names.size() ? targets.names[static_cast<std::size_t>(k)]
                                                                      : "g" + std::to_string(k + 1);
        row.source_mean = G.col(k).mean();
        row.weighted_mean = G.col(k).dot(weights);
        row.target_mean = targets.values(k);
        double sd = n > 1 ? std::sqrt((G.col(k).array() - row.source_mean).square().sum() /
                                      static_cast<double>(n - 1))
                          : 0.0;
        // Constant columns are reported on the raw scale.
        if (!(sd > 0.0)) sd = 1.0;
        row.smd_before = (row.source_mean - row.target_mean) / sd;
        row.smd_after = (row.weighted_mean - row.target_mean) / sd;
        rep.max_abs_smd_before = std::max(rep.max_abs_smd_before, std::abs(row.smd_before));
        rep.max_abs_smd_after = std::max(rep.max_abs_smd_after, std::abs(row.smd_after));
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

void write_weights_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                       const Eigen::VectorXd& weights) {
    if (ids.size() != static_cast<std::size_t>(weights.size())) {
        throw InputError("write_weights_csv: ids and weights differ in length");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << "id,weight\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',' << format_double(weights(static_cast<Eigen::Index>(i))) << '\n';
    }
}

} // namespace itr
