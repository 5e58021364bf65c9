#include "itr/nuisance.hpp"
#include "itr/error.hpp"

namespace itr {

OutcomePredictions OutcomePredictions::pooled(Eigen::VectorXd m) {
    OutcomePredictions out;
    out.control = m;
    out.treated = std::move(m);
    return out;
}

OutcomePredictions OutcomePredictions::zero(Eigen::Index n) {
    return pooled(Eigen::VectorXd::Zero(n));
}

OutcomePredictions NuisanceModels::value_predictions(const Eigen::MatrixXd& X) const {
    if (options.arm_specific) return arm_predictions(X);
    return OutcomePredictions::pooled(outcome_pooled.predict(X));
}

OutcomePredictions NuisanceModels::arm_predictions(const Eigen::MatrixXd& X) const {
    return {outcome_treated.predict(X), outcome_control.predict(X)};
}

namespace {

template <class Pred>
std::pair<Eigen::MatrixXd, Eigen::VectorXd> rows_where(const SourceArrays& s, Pred pred,
                                                       Eigen::VectorXd* w_in, Eigen::VectorXd* w_out) {
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < s.A.size(); ++i) count += pred(s.A(i)) ? 1 : 0;
    Eigen::MatrixXd X(count, s.X.cols());
    Eigen::VectorXd Y(count);
    if (w_in) w_out->resize(count);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < s.A.size(); ++i) {
        if (!pred(s.A(i))) continue;
        X.row(k) = s.X.row(i);
        Y(k) = s.Y(i);
        if (w_in) (*w_out)(k) = (*w_in)(i);
        ++k;
    }
    return {std::move(X), std::move(Y)};
}

} // namespace

NuisanceModels fit_nuisance(const SourceArrays& source, const NuisanceOptions& options,
                            const std::optional<Eigen::VectorXd>& calibration_weights) {
    if (options.weighted_nuisance && !calibration_weights) {
        throw InputError("weighted_nuisance requires calibration weights");
    }
    std::optional<Eigen::VectorXd> w;
    if (options.weighted_nuisance) w = calibration_weights;

    NuisanceModels m;
    m.options = options;
    LogisticOptions lopt;
    lopt.ridge = options.ridge;
    m.propensity = fit_logistic(source.X, source.A, lopt, w);
    m.pi_hat = predict_proba(m.propensity, source.X, options.clip);
    m.outcome_pooled = fit_linear(source.X, source.Y, w, source.covariate_names);

    Eigen::VectorXd w_all = w ? *w : Eigen::VectorXd();
    Eigen::VectorXd w1, w0;
    auto [X1, Y1] = rows_where(source, [](double a) { return a == 1.0; }, w ? &w_all : nullptr, &w1);
    auto [X0, Y0] = rows_where(source, [](double a) { return a == 0.0; }, w ? &w_all : nullptr, &w0);
    auto opt1 = w ? std::optional<Eigen::VectorXd>(w1) : std::nullopt;
    auto opt0 = w ? std::optional<Eigen::VectorXd>(w0) : std::nullopt;
    m.outcome_treated = fit_linear(X1, Y1, opt1, source.covariate_names);
    m.outcome_control = fit_linear(X0, Y0, opt0, source.covariate_names);
    return m;
}

} // namespace itr
