#include "itr/rule.hpp"
#include "itr/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace itr {

LinearItr::LinearItr(Eigen::VectorXd eta, std::vector<std::string> covariate_names)
    : eta_(std::move(eta)), names_(std::move(covariate_names)) {
    if (eta_.size() != static_cast<Eigen::Index>(names_.size()) + 1) {
        throw InputError("rule has " + std::to_string(eta_.size()) + " coefficients for " +
                         std::to_string(names_.size()) + " covariates (expected p + 1)");
    }
    if (!eta_.allFinite()) throw InputError("rule coefficients must be finite");
    if ((eta_.array() == 0.0).all()) throw InputError("rule coefficients are all zero");
}

LinearItr LinearItr::treat_all(std::vector<std::string> covariate_names) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(covariate_names.size()) + 1);
    eta(eta.size() - 1) = 1.0;
    return LinearItr(std::move(eta), std::move(covariate_names));
}

LinearItr LinearItr::treat_none(std::vector<std::string> covariate_names) {
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(covariate_names.size()) + 1);
    eta(eta.size() - 1) = -1.0;
    return LinearItr(std::move(eta), std::move(covariate_names));
}

LinearItr LinearItr::canonical() const {
    return LinearItr(eta_ / eta_.lpNorm<Eigen::Infinity>(), names_);
}

LinearItr LinearItr::scaled(double c) const {
    if (!(c > 0.0)) throw InputError("rule scale factor must be positive");
    return LinearItr(eta_ * c, names_);
}

Eigen::VectorXd LinearItr::scores(const Eigen::MatrixXd& X) const {
    const auto p = static_cast<Eigen::Index>(names_.size());
    if (X.cols() != p) {
        throw InputError("rule expects " + std::to_string(p) + " covariates, data has " +
                         std::to_string(X.cols()));
    }
    return (X * eta_.head(p)).array() + eta_(p);
}

Assignment apply_itr(const LinearItr& rule, const Eigen::MatrixXd& X) {
    const Eigen::VectorXd s = rule.scores(X);
    Assignment d(static_cast<std::size_t>(s.size()));
    for (Eigen::Index i = 0; i < s.size(); ++i) d[static_cast<std::size_t>(i)] = s(i) > 0.0 ? 1 : 0;
    return d;
}

Assignment apply_itr(const LinearItr& rule, const Dataset& ds, PopulationFilter filter) {
    if (rule.covariate_names() != ds.covariate_names()) {
        std::ostringstream os;
        os << "rule covariates do not match the data columns (rule:";
        for (const auto& n : rule.covariate_names()) os << ' ' << n;
        os << "; data:";
        for (const auto& n : ds.covariate_names()) os << ' ' << n;
        os << ')';
        throw InputError(os.str());
    }
    return apply_itr(rule, ds.covariate_matrix(filter));
}

namespace {

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

} // namespace

std::string inequality_string(const LinearItr& rule, int precision) {
    std::ostringstream os;
    os << "0 <";
    bool first = true;
    auto term = [&](double v, const std::string& label) {
        const std::string mag = fixed(std::abs(v), precision);
        if (first) {
            os << (v < 0 ? " -" : " ") << mag;
        } else {
            os << (v < 0 ? " - " : " + ") << mag;
        }
        if (!label.empty()) os << '*' << label;
        first = false;
    };
    for (std::size_t j = 0; j < rule.p(); ++j) {
        term(rule.eta()(static_cast<Eigen::Index>(j)), rule.covariate_names()[j]);
    }
    term(rule.intercept(), "");
    return os.str();
}

std::vector<ImportanceEntry> covariate_importance(const LinearItr& rule, const CovariateSummary& summary) {
    std::vector<ImportanceEntry> out;
    out.reserve(rule.p());
    for (std::size_t j = 0; j < rule.p(); ++j) {
        const auto& name = rule.covariate_names()[j];
        auto k = summary.index_of(name);
        if (!k) throw InputError("covariate '" + name + "' is missing from the summary");
        ImportanceEntry e;
        e.name = name;
        e.coefficient = rule.eta()(static_cast<Eigen::Index>(j));
        e.sd = summary.sd(static_cast<Eigen::Index>(*k));
        e.adjusted = e.coefficient * e.sd;
        out.push_back(std::move(e));
    }
    std::stable_sort(out.begin(), out.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
        return std::abs(a.adjusted) > std::abs(b.adjusted);
    });
    return out;
}

} // namespace itr
