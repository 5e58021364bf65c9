#include "helpers.hpp"

#include "itr/ate_estimators.hpp"
#include "itr/calibration.hpp"
#include "itr/error.hpp"
#include "itr/value_function.hpp"

#include <doctest.h>

using namespace itr;

namespace {

struct Instance {
    SourceArrays source;
    Eigen::VectorXd pi;
    OutcomePredictions m;
    Eigen::VectorXd w;
};

Instance random_instance(testing::Gen& g, int n, int p) {
    Instance s;
    for (int j = 0; j < p; ++j) s.source.covariate_names.push_back("x" + std::to_string(j));
    s.source.X = g.matrix(n, p);
    s.source.A = g.binary(n);
    s.source.Y = g.vector(n, -2, 2);
    s.pi = g.vector(n, 0.05, 0.95);
    s.m = g.coin() ? OutcomePredictions::pooled(g.vector(n)) : OutcomePredictions{g.vector(n), g.vector(n)};
    s.w = g.simplex(n);
    return s;
}

} // namespace

TEST_CASE("six-unit hand instance matches the term-by-term oracle") {
    SourceArrays s;
    s.covariate_names = {"x"};
    s.X.resize(6, 1);
    s.X << 2, 1, -1, -2, 3, -0.5;
    s.A.resize(6);
    s.A << 1, 0, 1, 0, 1, 0;
    s.Y.resize(6);
    s.Y << 1.0, 0.5, 2.0, -1.0, 0.0, 3.0;
    Eigen::VectorXd pi(6), m(6), w(6);
    pi << 0.6, 0.3, 0.5, 0.7, 0.2, 0.45;
    m << 0.8, 0.4, 1.5, 0.0, 0.3, 2.0;
    w << 0.10, 0.20, 0.15, 0.25, 0.05, 0.25;
    const LinearItr rule(Eigen::Vector2d(1, 0), {"x"});
    // Exact rational evaluation of the six summands: 211/440.
    const auto v = caipw_value(rule, s, w, pi, OutcomePredictions::pooled(m), true);
    CHECK(std::abs(v.value - 211.0 / 440.0) < 1e-12);
    CHECK(v.weighted);
    CHECK(v.n_source_used == 6);
}

TEST_CASE("perfect outcome predictions give the weighted mean outcome for any rule") {
    testing::Gen g(91);
    auto s = random_instance(g, 25, 2);
    const auto m = OutcomePredictions::pooled(s.source.Y);
    for (int rep = 0; rep < 20; ++rep) {
        const LinearItr r(g.vector(3), s.source.covariate_names);
        const auto v = caipw_value(r, s.source, s.w, s.pi, m, true);
        CHECK(v.value == doctest::Approx(s.w.dot(s.source.Y)).epsilon(1e-12));
    }
}

TEST_CASE("treat everyone with pi = 0.5 and m = 0 reduces to the mean of 2AY") {
    testing::Gen g(93);
    auto s = random_instance(g, 40, 1);
    const auto v = caipw_value(LinearItr::treat_all({"x0"}), s.source, uniform_weights(40),
                               Eigen::VectorXd::Constant(40, 0.5), OutcomePredictions::zero(40), false);
    CHECK(v.value == doctest::Approx((2.0 * s.source.A.array() * s.source.Y.array()).mean()).epsilon(1e-12));
}

TEST_CASE("input validation") {
    testing::Gen g(95);
    auto s = random_instance(g, 10, 1);
    const LinearItr r(Eigen::Vector2d(1, 0), {"x0"});
    CHECK_THROWS_AS(caipw_value(r, s.source, s.w * 2.0, s.pi, s.m, true), InputError);
    CHECK_THROWS_AS(caipw_value(r, s.source, s.w.head(9), s.pi, s.m, true), InputError);
    Eigen::VectorXd bad = s.pi;
    bad(0) = 1.0;
    CHECK_THROWS_AS(caipw_value(r, s.source, s.w, bad, s.m, true), InputError);
}

TEST_CASE("property: policy-value difference equals the AIPW effect") {
    testing::Gen g(97);
    for (int rep = 0; rep < 1000; ++rep) {
        auto s = random_instance(g, g.integer(2, 50), g.integer(1, 3));
        const auto n = s.source.X.rows();
        const auto& names = s.source.covariate_names;
        const Eigen::VectorXd u = uniform_weights(n);
        const double all = caipw_value(LinearItr::treat_all(names), s.source, u, s.pi, s.m, false).value;
        const double none = caipw_value(LinearItr::treat_none(names), s.source, u, s.pi, s.m, false).value;
        CHECK(std::abs((all - none) - aipw_ate(s.source.A, s.source.Y, s.pi, s.m).tau_hat) < 1e-12);
    }
}

TEST_CASE("property: rule-scale invariance and weight linearity") {
    testing::Gen g(99);
    for (int rep = 0; rep < 1000; ++rep) {
        auto s = random_instance(g, g.integer(2, 50), g.integer(1, 4));
        const auto p = s.source.X.cols();
        const LinearItr r(g.vector(p + 1), s.source.covariate_names);
        const CaipwProblem problem(s.source.X, s.source.A, s.source.Y, s.pi, s.m, s.w, true);
        const double v = problem.value(r);
        CHECK(problem.value(r.scaled(std::exp(g.uniform(-6, 6)))) == v);

        const Eigen::VectorXd w2 = g.simplex(s.source.X.rows());
        const double alpha = g.uniform(0, 1);
        const Eigen::VectorXd mix = alpha * s.w + (1 - alpha) * w2;
        const double v2 = caipw_value(r, s.source, w2, s.pi, s.m, true).value;
        const double vmix = caipw_value(r, s.source, mix, s.pi, s.m, true).value;
        CHECK(std::abs(vmix - (alpha * v + (1 - alpha) * v2)) < 1e-12);
    }
}

TEST_CASE("value depends on covariates only through the assignment") {
    testing::Gen g(101);
    auto s = random_instance(g, 30, 2);
    const LinearItr r(Eigen::Vector3d(1, -0.5, 0.2), s.source.covariate_names);
    const double base = caipw_value(r, s.source, s.w, s.pi, s.m, true).value;
    // Rescale and shift a covariate together with the rule so the decisions are unchanged.
    SourceArrays t = s.source;
    t.X.col(1) = t.X.col(1) * 3.0;
    const LinearItr r2(Eigen::Vector3d(1, -0.5 / 3.0, 0.2), t.covariate_names);
    CHECK(apply_itr(r2, t.X) == apply_itr(r, s.source.X));
    CHECK(caipw_value(r2, t, s.w, s.pi, s.m, true).value == base);
}

TEST_CASE("standardizer maps coefficients back to raw units") {
    testing::Gen g(103);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::MatrixXd X = g.matrix(40, 3, -50, 80);
        const auto st = Standardizer::fit(X);
        const Eigen::VectorXd eta = g.vector(4);
        const Eigen::VectorXd raw = st.to_raw(eta);
        const Eigen::VectorXd s_std = (st.apply(X) * eta.head(3)).array() + eta(3);
        const Eigen::VectorXd s_raw = (X * raw.head(3)).array() + raw(3);
        CHECK((s_std - s_raw).cwiseAbs().maxCoeff() < 1e-9);
    }
}
