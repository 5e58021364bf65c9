#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace testing {

// Small hand-rolled generators for property tests.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

    Eigen::MatrixXd matrix(Eigen::Index n, Eigen::Index p, double lo = -2.0, double hi = 2.0) {
        Eigen::MatrixXd X(n, p);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = uniform(lo, hi);
        return X;
    }
    Eigen::VectorXd vector(Eigen::Index n, double lo = -2.0, double hi = 2.0) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }
    // Binary vector with at least one of each class when n >= 2.
    Eigen::VectorXd binary(Eigen::Index n, double p = 0.5) {
        Eigen::VectorXd a(n);
        for (Eigen::Index i = 0; i < n; ++i) a(i) = coin(p) ? 1.0 : 0.0;
        if (n >= 2) {
            a(0) = 1.0;
            a(1) = 0.0;
        }
        return a;
    }
    // Positive weights summing to one.
    Eigen::VectorXd simplex(Eigen::Index n) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) w(i) = uniform(0.05, 1.0);
        return w / w.sum();
    }
};

} // namespace testing
