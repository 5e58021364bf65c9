#include "itr/ate_estimators.hpp"
#include "itr/error.hpp"

namespace itr {

std::string_view to_string(AteMethod method) {
    switch (method) {
    case AteMethod::Naive: return "naive";
    case AteMethod::IPW: return "ipw";
    case AteMethod::OR: return "or";
    case AteMethod::AIPW: return "aipw";
    }
    return "naive";
}

namespace {

void check_length(Eigen::Index expected, Eigen::Index got, const char* what) {
    if (expected != got) {
        throw InputError(std::string(what) + " has length " + std::to_string(got) + ", expected " +
                         std::to_string(expected));
    }
}

void check_propensity(const Eigen::VectorXd& pi_hat) {
    if (!((pi_hat.array() > 0.0).all() && (pi_hat.array() < 1.0).all())) {
        throw InputError("propensity scores must lie strictly inside (0, 1); clip them first");
    }
}

AteEstimate make(AteMethod method, double treated, double control, Eigen::Index n) {
    return {method, treated - control, treated, control, static_cast<std::size_t>(n)};
}

} // namespace

AteEstimate naive_ate(const Eigen::VectorXd& A, const Eigen::VectorXd& Y) {
    check_length(A.size(), Y.size(), "Y");
    double sum1 = 0.0, sum0 = 0.0;
    Eigen::Index n1 = 0, n0 = 0;
    for (Eigen::Index i = 0; i < A.size(); ++i) {
        if (A(i) == 1.0) {
            sum1 += Y(i);
            ++n1;
        } else {
            sum0 += Y(i);
            ++n0;
        }
    }
    if (n1 == 0 || n0 == 0) throw InputError("naive ATE: empty treatment arm");
    return make(AteMethod::Naive, sum1 / static_cast<double>(n1), sum0 / static_cast<double>(n0), A.size());
}

AteEstimate ipw_ate(const Eigen::VectorXd& A, const Eigen::VectorXd& Y, const Eigen::VectorXd& pi_hat) {
    const auto n = A.size();
    check_length(n, Y.size(), "Y");
    check_length(n, pi_hat.size(), "pi_hat");
    if (n == 0) throw InputError("IPW ATE: no units");
    check_propensity(pi_hat);
    double sum1 = 0.0, sum0 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sum1 += (A(i) * Y(i)) / pi_hat(i);
        sum0 += ((1.0 - A(i)) * Y(i)) / (1.0 - pi_hat(i));
    }
    const double dn = static_cast<double>(n);
    return make(AteMethod::IPW, sum1 / dn, sum0 / dn, n);
}

AteEstimate or_ate(const OutcomePredictions& m) {
    const auto n = m.treated.size();
    if (n == 0) throw InputError("OR ATE: outcome models are not fitted (no predictions)");
    check_length(n, m.control.size(), "control predictions");
    const double dn = static_cast<double>(n);
    return make(AteMethod::OR, m.treated.sum() / dn, m.control.sum() / dn, n);
}

AteEstimate aipw_ate(const Eigen::VectorXd& A, const Eigen::VectorXd& Y, const Eigen::VectorXd& pi_hat,
                     const OutcomePredictions& m) {
    const auto n = A.size();
    check_length(n, Y.size(), "Y");
    check_length(n, pi_hat.size(), "pi_hat");
    if (m.treated.size() == 0) throw InputError("AIPW ATE: outcome models are not fitted (no predictions)");
    check_length(n, m.treated.size(), "treated predictions");
    check_length(n, m.control.size(), "control predictions");
    if (n == 0) throw InputError("AIPW ATE: no units");
    check_propensity(pi_hat);
    double sum1 = 0.0, sum0 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sum1 += (A(i) * (Y(i) - m.treated(i))) / pi_hat(i) + m.treated(i);
        sum0 += ((1.0 - A(i)) * (Y(i) - m.control(i))) / (1.0 - pi_hat(i)) + m.control(i);
    }
    const double dn = static_cast<double>(n);
    return make(AteMethod::AIPW, sum1 / dn, sum0 / dn, n);
}

AteSummary estimate_all(const SourceArrays& source, const NuisanceModels& nuisance) {
    const auto m = nuisance.arm_predictions(source.X);
    return {naive_ate(source.A, source.Y), ipw_ate(source.A, source.Y, nuisance.pi_hat), or_ate(m),
            aipw_ate(source.A, source.Y, nuisance.pi_hat, m)};
}

} // namespace itr
