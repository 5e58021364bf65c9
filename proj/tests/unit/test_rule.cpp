#include "helpers.hpp"

#include "itr/error.hpp"
#include "itr/rule.hpp"

#include <doctest.h>

using namespace itr;

namespace {

const std::vector<std::string> kNames{"Glucose",      "BloodUreaNitrogen", "Age",        "Weight",
                                      "MeanBloodPressure", "WBCCount",      "RespiratoryRate", "Bilirubin",
                                      "Sodium",       "Creatinine",        "ReAdmission", "BodyTemperature",
                                      "Albumin"};

LinearItr published_rule() {
    Eigen::VectorXd eta(14);
    eta << -0.3933, 0.6507, 0.6282, -0.2484, 0.4333, -0.4738, 0.8800, 0.8830, -0.6220, -0.0565, -0.7644, 0.5545,
        0.3633, 0.1634;
    return LinearItr(eta, kNames);
}

} // namespace

TEST_CASE("apply_itr: strict inequality, ties to control") {
    const LinearItr r(Eigen::Vector3d(1, -1, 0), {"a", "b"});
    Eigen::MatrixXd X(3, 2);
    X << 2, 1, 1, 1, 0, 1;
    const auto d = apply_itr(r, X);
    CHECK(d == Assignment{1, 0, 0});
    CHECK_THROWS_AS(apply_itr(r, Eigen::MatrixXd::Zero(2, 3)), InputError);
}

TEST_CASE("rule invariants") {
    CHECK_THROWS_AS(LinearItr(Eigen::Vector3d::Zero(), {"a", "b"}), InputError);
    CHECK_THROWS_AS(LinearItr(Eigen::Vector2d(1, 1), {"a", "b"}), InputError);
    CHECK_THROWS_AS(LinearItr(Eigen::Vector3d(1, NAN, 0), {"a", "b"}), InputError);
    CHECK(LinearItr::treat_all({"a"}).intercept() > 0);
    CHECK(LinearItr::treat_none({"a"}).intercept() < 0);
}

TEST_CASE("apply_itr on a dataset checks the column order") {
    const auto ds = parse_dataset("a,b\n1,2\n3,4\n");
    const LinearItr ok(Eigen::Vector3d(1, 0, -2), {"a", "b"});
    CHECK(apply_itr(ok, ds) == Assignment{0, 1});
    const LinearItr swapped(Eigen::Vector3d(1, 0, -2), {"b", "a"});
    CHECK_THROWS_AS(apply_itr(swapped, ds), InputError);
}

TEST_CASE("published 13-covariate rule parses and prints in the same layout") {
    const auto r = published_rule();
    CHECK(r.p() == 13);
    CHECK(r.intercept() == doctest::Approx(0.1634));
    const auto s = inequality_string(r);
    CHECK(s.rfind("0 < -0.3933*Glucose + 0.6507*BloodUreaNitrogen + 0.6282*Age - 0.2484*Weight", 0) == 0);
    CHECK(s.find("- 0.7644*ReAdmission") != std::string::npos);
    CHECK(s.substr(s.size() - 8) == "+ 0.1634");
}

TEST_CASE("property: positive scaling preserves and negation complements assignments") {
    testing::Gen g(81);
    for (int rep = 0; rep < 1000; ++rep) {
        const int p = g.integer(1, 5);
        const Eigen::MatrixXd X = g.matrix(30, p);
        const LinearItr r(g.vector(p + 1), std::vector<std::string>(static_cast<std::size_t>(p), "x"));
        const double c = std::exp(g.uniform(-5, 5));
        const auto d = apply_itr(r, X);
        CHECK(apply_itr(r.scaled(c), X) == d);
        CHECK(apply_itr(r.canonical(), X) == d);
        const auto neg = apply_itr(LinearItr(-r.eta(), r.covariate_names()), X);
        const Eigen::VectorXd s = r.scores(X);
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (s(static_cast<Eigen::Index>(i)) != 0.0) CHECK(neg[i] == 1 - d[i]);
        }
    }
}

TEST_CASE("covariate importance") {
    CovariateSummary s;
    s.names = {"a", "b"};
    s.mean = Eigen::Vector2d(0, 0);
    s.sd = Eigen::Vector2d(1, 5);
    const LinearItr r(Eigen::Vector3d(2, 1, 9), {"a", "b"});
    const auto rank = covariate_importance(r, s);
    CHECK(rank[0].name == "b");
    CHECK(rank[0].adjusted == 5.0);
    CHECK(rank[1].adjusted == 2.0);

    s.sd = Eigen::Vector2d(0, 5);
    const LinearItr q(Eigen::Vector3d(100, -1, 0), {"a", "b"});
    const auto zero_last = covariate_importance(q, s);
    CHECK(zero_last.back().name == "a");
    CHECK(zero_last.back().adjusted == 0.0);
    CHECK(zero_last.front().adjusted == -5.0);

    CovariateSummary missing;
    missing.names = {"a"};
    missing.mean = Eigen::VectorXd::Zero(1);
    missing.sd = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(covariate_importance(r, missing), InputError);
}

TEST_CASE("published rule with clinical-scale standard deviations ranks Glucose then BUN") {
    CovariateSummary s;
    s.names = kNames;
    s.mean = Eigen::VectorXd::Zero(13);
    s.sd.resize(13);
    // Typical ICU-cohort spreads in the units the covariates are recorded in.
    s.sd << 60, 22, 17, 24, 16, 7.5, 6, 1.8, 5, 1.4, 0.21, 0.7, 0.6;
    const auto rank = covariate_importance(published_rule(), s);
    CHECK(rank[0].name == "Glucose");
    CHECK(rank[0].adjusted < 0);
    CHECK(rank[1].name == "BloodUreaNitrogen");
    CHECK(rank[1].adjusted > 0);
}

TEST_CASE("property: importance is invariant to rescaling a covariate with its coefficient") {
    testing::Gen g(83);
    for (int rep = 0; rep < 200; ++rep) {
        const int p = g.integer(2, 6);
        CovariateSummary s;
        for (int j = 0; j < p; ++j) s.names.push_back("x" + std::to_string(j));
        s.mean = g.vector(p);
        s.sd = g.vector(p, 0.1, 3);
        Eigen::VectorXd eta = g.vector(p + 1);
        const auto before = covariate_importance(LinearItr(eta, s.names), s);
        const int j = g.integer(0, p - 1);
        const double c = g.uniform(0.1, 10);
        s.sd(j) *= c;
        eta(j) /= c;
        const auto after = covariate_importance(LinearItr(eta, s.names), s);
        for (int k = 0; k < p; ++k) {
            CHECK(after[k].name == before[k].name);
            CHECK(after[k].adjusted == doctest::Approx(before[k].adjusted).epsilon(1e-12));
        }
    }
}
