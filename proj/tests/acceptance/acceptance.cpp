// Acceptance suite: one PASS/FAIL line per criterion.
#include "itr/ate_estimators.hpp"
#include "itr/calibration.hpp"
#include "itr/cli.hpp"
#include "itr/error.hpp"
#include "itr/glm.hpp"
#include "itr/pipeline.hpp"
#include "itr/simulation.hpp"
#include "itr/value_function.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace itr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("itr_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// 1. Weighted source means equal target means on the default simulation.
Outcome calibration_exactness() {
    double worst_residual = 0, worst_sum = 0, slowest = 0;
    bool positive = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SimConfig cfg;
        cfg.seed = seed;
        const auto study = simulate_study(cfg);
        const auto t0 = Clock::now();
        const Dataset ds = study.combined();
        const Eigen::MatrixXd Xs = ds.covariate_matrix(PopulationFilter::Source);
        const auto targets = target_moments(ds, 1);
        const auto cw = solve_entropy_balance(Xs, targets);
        slowest = std::max(slowest, seconds_since(t0));
        const Eigen::VectorXd target_means = ds.covariate_matrix(PopulationFilter::Target).colwise().mean();
        worst_residual = std::max(worst_residual, (Xs.transpose() * cw.weights - target_means).lpNorm<Eigen::Infinity>());
        worst_sum = std::max(worst_sum, std::abs(cw.weights.sum() - 1.0));
        positive = positive && (cw.weights.array() > 0).all();
    }
    return {worst_residual < 1e-8 && worst_sum <= 1e-12 && positive && slowest < 5.0,
            "max residual " + fmt(worst_residual) + ", max |sum-1| " + fmt(worst_sum) + ", all positive " +
                (positive ? "yes" : "no") + ", slowest seed " + fmt(slowest, 3) + " s"};
}

// Entropy minimization over the feasible slice of the simplex by nested refinement.
Eigen::VectorXd grid_entropy(const Eigen::VectorXd& x, double target) {
    const Eigen::Index n = x.size();
    auto objective = [&](const Eigen::VectorXd& w) {
        return (w.array() * (static_cast<double>(n) * w.array()).log()).sum();
    };
    // Free coordinates are all weights but the first two; those two are solved from
    // sum w = 1 and sum w x = target.
    auto complete = [&](const Eigen::VectorXd& free, Eigen::VectorXd& w) {
        w.resize(n);
        w.tail(n - 2) = free;
        const double rest_w = 1.0 - free.sum();
        const double rest_m = target - free.dot(x.tail(n - 2));
        w(1) = (rest_m - rest_w * x(0)) / (x(1) - x(0));
        w(0) = rest_w - w(1);
        return (w.array() > 0).all();
    };
    const Eigen::Index k = n - 2;
    Eigen::VectorXd center = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(n));
    double h = 0.01;
    Eigen::VectorXd best_w;
    double best = 1e300;
    const int half = k == 1 ? 2000 : 150;
    for (int round = 0; round < 6; ++round, h /= 10) {
        const Eigen::VectorXd base = center;
        std::vector<int> idx(static_cast<std::size_t>(k), -half);
        while (true) {
            Eigen::VectorXd free(k);
            for (Eigen::Index j = 0; j < k; ++j) free(j) = base(j) + idx[static_cast<std::size_t>(j)] * h;
            Eigen::VectorXd w;
            if ((free.array() > 0).all() && complete(free, w)) {
                const double f = objective(w);
                if (f < best) {
                    best = f;
                    best_w = w;
                    center = free;
                }
            }
            std::size_t j = 0;
            while (j < idx.size() && ++idx[j] > half) idx[j++] = -half;
            if (j == idx.size()) break;
        }
    }
    return best_w;
}

// 2. Solver weights match a simplex grid search on 3- and 4-unit instances.
Outcome entropy_oracle() {
    const auto t0 = Clock::now();
    double worst = 0;
    const std::vector<std::pair<std::vector<double>, double>> cases{{{0, 1, 2}, 1.3}, {{0, 1, 2, 5}, 1.7},
                                                                    {{-1, 0.5, 2, 3}, 0.4}};
    for (const auto& [xs, target] : cases) {
        Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
        MomentTargets t;
        t.names = {"x"};
        t.values = Eigen::VectorXd::Constant(1, target);
        const auto cw = solve_entropy_balance(x, t);
        worst = std::max(worst, (cw.weights - grid_entropy(x, target)).cwiseAbs().maxCoeff());
    }
    const double elapsed = seconds_since(t0);
    return {worst < 1e-4 && elapsed < 1.0,
            "max |w - w_grid| " + fmt(worst) + " over 3 instances, " + fmt(elapsed, 3) + " s"};
}

// 3. AIPW is unbiased when either nuisance model is right; the naive contrast is not.
Outcome double_robustness() {
    const auto t0 = Clock::now();
    SimConfig cfg;
    cfg.seed = 2024;
    const double truth = true_ate(cfg);
    const int reps = 200;
    double bias_a = 0, bias_b = 0, bias_naive = 0;
    for (int r = 0; r < reps; ++r) {
        const auto pop = observational_sample(cfg, 5000, static_cast<std::uint64_t>(r));
        const auto s = source_arrays(Dataset(pop.data.covariate_names(), [&] {
            auto recs = pop.data.records();
            for (auto& rec : recs) rec.population = Population::Source;
            return recs;
        }()));
        const auto n = s.X.rows();
        // Correct propensity: the logistic model is linear in the covariates, as in the design.
        const auto pi_correct = predict_proba(fit_logistic(s.X, s.A), s.X, 0.01);
        const Eigen::VectorXd pi_wrong = Eigen::VectorXd::Constant(n, 0.5);
        // Correct outcome model: the design's regression functions; wrong: zero.
        OutcomePredictions m_correct{Eigen::VectorXd(n), Eigen::VectorXd(n)};
        for (Eigen::Index i = 0; i < n; ++i) {
            const double h = s.X(i, 0), a = s.X(i, 1);
            m_correct.control(i) = control_mean(cfg, h, a);
            m_correct.treated(i) = m_correct.control(i) + contrast(cfg, h, a);
        }
        bias_a += aipw_ate(s.A, s.Y, pi_correct, OutcomePredictions::zero(n)).tau_hat - truth;
        bias_b += aipw_ate(s.A, s.Y, pi_wrong, m_correct).tau_hat - truth;
        bias_naive += naive_ate(s.A, s.Y).tau_hat - truth;
    }
    bias_a /= reps;
    bias_b /= reps;
    bias_naive /= reps;
    const double elapsed = seconds_since(t0);
    return {std::abs(bias_a) < 0.02 && std::abs(bias_b) < 0.02 && std::abs(bias_naive) > 0.05 && elapsed < 120,
            "true ATE " + fmt(truth) + "; mean bias AIPW(correct pi, wrong m) " + fmt(bias_a) +
                ", AIPW(wrong pi, correct m) " + fmt(bias_b) + ", naive " + fmt(bias_naive) + "; " +
                fmt(elapsed, 3) + " s"};
}

// 4. Reduction identities on simulated source data.
Outcome reductions() {
    SimConfig cfg;
    cfg.seed = 11;
    const auto study = simulate_study(cfg);
    const auto s = source_arrays(study.source.data);
    const auto nuisance = fit_nuisance(s);
    const auto n = s.X.rows();
    const auto& pi = nuisance.pi_hat;

    const auto ipw = ipw_ate(s.A, s.Y, pi);
    const auto zero = aipw_ate(s.A, s.Y, pi, OutcomePredictions::zero(n));
    const bool bitwise = zero.tau_hat == ipw.tau_hat && zero.treated_mean == ipw.treated_mean &&
                         zero.control_mean == ipw.control_mean;

    OutcomePredictions interp = nuisance.arm_predictions(s.X);
    for (Eigen::Index i = 0; i < n; ++i) (s.A(i) == 1 ? interp.treated(i) : interp.control(i)) = s.Y(i);
    const double or_gap = std::abs(aipw_ate(s.A, s.Y, pi, interp).tau_hat - or_ate(interp).tau_hat);

    double policy_gap = 0;
    for (const auto& m : {nuisance.value_predictions(s.X), nuisance.arm_predictions(s.X)}) {
        const auto u = uniform_weights(n);
        const double all = caipw_value(LinearItr::treat_all(s.covariate_names), s, u, pi, m, false).value;
        const double none = caipw_value(LinearItr::treat_none(s.covariate_names), s, u, pi, m, false).value;
        policy_gap = std::max(policy_gap, std::abs((all - none) - aipw_ate(s.A, s.Y, pi, m).tau_hat));
    }
    return {bitwise && or_gap < 1e-12 && policy_gap < 1e-12,
            std::string("AIPW(m=0) == IPW bitwise: ") + (bitwise ? "yes" : "no") + ", |AIPW - OR| interpolating " +
                fmt(or_gap) + ", |V(all) - V(none) - AIPW| " + fmt(policy_gap)};
}

// 5. Oracle classification ordering over 20 seeds of the default design.
Outcome simulation_ordering() {
    const auto t0 = Clock::now();
    const auto dir = scratch("ordering");
    double opt = 0, weighted = 0, unweighted = 0;
    const int seeds = 20;
    int weighted_wins = 0;
    for (int seed = 1; seed <= seeds; ++seed) {
        RunConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.output_dir = dir / std::to_string(seed);
        const auto out = run_pipeline(cfg);
        if (out.exit_code != 0) return {false, "seed " + std::to_string(seed) + " failed: " + out.error};
        const auto& o = out.report.at("oracle");
        const double a = o.at("true_optimal_rate").get<double>();
        const double b = o.at("weighted_rate").get<double>();
        const double c = o.at("unweighted_rate").get<double>();
        opt += a;
        weighted += b;
        unweighted += c;
        weighted_wins += b > c ? 1 : 0;
        std::cout << "    seed " << std::setw(2) << seed << ": true optimal " << fmt(a) << ", weighted " << fmt(b)
                  << ", unweighted " << fmt(c) << '\n';
    }
    opt /= seeds;
    weighted /= seeds;
    unweighted /= seeds;
    const double elapsed = seconds_since(t0);
    return {opt >= weighted && weighted >= unweighted + 0.02 && opt - weighted <= 0.03 && elapsed < 900,
            "mean rates: true optimal " + fmt(opt) + ", weighted " + fmt(weighted) + ", unweighted " +
                fmt(unweighted) + " (weighted better on " + std::to_string(weighted_wins) + "/20 seeds); " +
                fmt(elapsed, 4) + " s"};
}

// 6. GA on the noiseless separable policy problem, monotone history, thread independence.
Outcome ga_sanity() {
    SimConfig cfg;
    cfg.seed = 5;
    cfg.contrast = ContrastShape::Linear;
    cfg.noise_sd = 0.0;
    const auto study = simulate_study(cfg);
    const Dataset ds = study.combined();
    const auto s = source_arrays(ds);
    const auto cw = solve_entropy_balance(s.X, target_moments(ds));
    NuisanceOptions opts;
    opts.arm_specific = true;
    const auto nuisance = fit_nuisance(s, opts);
    const auto m = nuisance.value_predictions(s.X);

    GaConfig ga;
    ga.threads = 0;  // resolved from ITR_THREADS
    setenv("ITR_THREADS", "1", 1);
    const auto one = learn_itr(s, cw.weights, nuisance.pi_hat, m, true, ga);
    setenv("ITR_THREADS", "4", 1);
    const auto four = learn_itr(s, cw.weights, nuisance.pi_hat, m, true, ga);
    unsetenv("ITR_THREADS");

    const double rate = oracle_classification_rate(one.rule, study.target);
    const bool monotone = std::is_sorted(one.ga.history.begin(), one.ga.history.end());
    const bool identical = (one.rule.eta().array() == four.rule.eta().array()).all() &&
                           one.ga.history == four.ga.history && one.ga.best_value == four.ga.best_value;
    return {rate >= 0.99 && monotone && identical,
            "oracle rate " + fmt(rate) + ", history nondecreasing " + (monotone ? "yes" : "no") +
                ", ITR_THREADS=1 vs 4 bit-identical " + (identical ? "yes" : "no")};
}

// 7. Logistic and linear fits.
Outcome glm_correctness() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    const int n = 10000;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd a(n);
    const Eigen::Vector3d beta(1.0, -0.7, 0.5);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = normal(rng);
        X(i, 1) = normal(rng);
        const double eta = beta(0) * X(i, 0) + beta(1) * X(i, 1) + beta(2);
        a(i) = unit(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    const auto lm = fit_logistic(X, a);
    const double coef_err = (lm.coefficients - beta).cwiseAbs().maxCoeff();
    const double score = logistic_score(lm.coefficients, X, a).lpNorm<Eigen::Infinity>();

    Eigen::MatrixXd Z(100, 2);
    for (int i = 0; i < 100; ++i) Z.row(i) << normal(rng), normal(rng);
    const Eigen::VectorXd y = (1.5 * Z.col(0) - 2.0 * Z.col(1)).array() + 0.5;
    const Eigen::Vector3d truth(1.5, -2.0, 0.5);
    const double lin_err = (fit_linear(Z, y).coefficients - truth).cwiseAbs().maxCoeff();
    return {coef_err < 0.1 && score < 1e-6 && lin_err < 1e-8,
            "logistic max coef error " + fmt(coef_err) + ", score max-norm " + fmt(score) +
                ", linear max coef error " + fmt(lin_err)};
}

// 8. Hand-computed six-unit value and randomized property checks.
Outcome value_oracle() {
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
    const double hand = 211.0 / 440.0;  // exact rational evaluation of the six summands
    const double got =
        caipw_value(LinearItr(Eigen::Vector2d(1, 0), {"x"}), s, w, pi, OutcomePredictions::pooled(m), true).value;
    const double gap = std::abs(got - hand);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2, 2), pr(0.05, 0.95), pos(0.05, 1);
    int failures = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 40);
        const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 4);
        SourceArrays t;
        for (Eigen::Index j = 0; j < p; ++j) t.covariate_names.push_back("x" + std::to_string(j));
        t.X = Eigen::MatrixXd::NullaryExpr(n, p, [&] { return u(rng); });
        t.A = Eigen::VectorXd::NullaryExpr(n, [&] { return double(rng() % 2); });
        t.Y = Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); });
        const Eigen::VectorXd pis = Eigen::VectorXd::NullaryExpr(n, [&] { return pr(rng); });
        const OutcomePredictions mh{Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); }),
                                    Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); })};
        Eigen::VectorXd w1 = Eigen::VectorXd::NullaryExpr(n, [&] { return pos(rng); });
        Eigen::VectorXd w2 = Eigen::VectorXd::NullaryExpr(n, [&] { return pos(rng); });
        w1 /= w1.sum();
        w2 /= w2.sum();
        const LinearItr rule(Eigen::VectorXd::NullaryExpr(p + 1, [&] { return u(rng); }), t.covariate_names);
        const double v1 = caipw_value(rule, t, w1, pis, mh, true).value;
        const double c = std::exp(u(rng) * 3);
        const bool scale_ok = caipw_value(rule.scaled(c), t, w1, pis, mh, true).value == v1;
        const double alpha = pr(rng);
        const double v2 = caipw_value(rule, t, w2, pis, mh, true).value;
        const double vmix = caipw_value(rule, t, alpha * w1 + (1 - alpha) * w2, pis, mh, true).value;
        const bool linear_ok = std::abs(vmix - (alpha * v1 + (1 - alpha) * v2)) < 1e-12;
        failures += scale_ok && linear_ok ? 0 : 1;
    }
    return {gap < 1e-12 && failures == 0,
            "|value - 211/440| " + fmt(gap) + ", property failures " + std::to_string(failures) + "/1000"};
}

// 9. Full command-line run on a synthetic 13-covariate application-shaped study.
Outcome application_run() {
    const auto t0 = Clock::now();
    const auto dir = scratch("application");
    const Dataset ds = generate_application_shaped({});
    write_dataset(ds.subset(PopulationFilter::Source), dir / "source.csv");
    write_dataset(ds.subset(PopulationFilter::Target), dir / "target.csv");
    const json cfg = {{"source", (dir / "source.csv").string()},
                      {"target", (dir / "target.csv").string()},
                      {"output_dir", (dir / "out").string()},
                      {"seed", 42}};
    write_json_file(dir / "run.json", cfg);

    const std::string config_path = (dir / "run.json").string();
    const char* argv[] = {"itr", "run", "--config", config_path.c_str()};
    std::ostringstream out, err;
    const int code = run_cli(4, argv, out, err);
    const double elapsed = seconds_since(t0);
    if (code != 0) return {false, "exit code " + std::to_string(code) + ": " + err.str()};

    const auto report = read_json_file(dir / "out" / "report.json");
    const auto rule = report.at("rules").at("weighted").at("rule_string").get<std::string>();
    const auto& ranking = report.at("importance");
    std::set<std::string> names;
    for (const auto& e : ranking) names.insert(e.at("name").get<std::string>());
    bool all_terms = rule.rfind("0 < ", 0) == 0;
    for (const auto& n : ds.covariate_names()) all_terms = all_terms && rule.find("*" + n) != std::string::npos;
    std::cout << "    rule: " << rule << '\n';
    std::cout << "    importance:";
    for (const auto& e : ranking) std::cout << ' ' << e.at("name").get<std::string>() << '(' << fmt(e.at("adjusted").get<double>(), 3) << ')';
    std::cout << '\n';
    return {all_terms && names.size() == 13 && elapsed < 600,
            "exit 0, weighted value " + fmt(report.at("rules").at("weighted").at("value_weighted").get<double>()) +
                " vs unweighted rule " +
                fmt(report.at("rules").at("unweighted").at("value_weighted").get<double>()) +
                ", 13-term rule string, 13-entry ranking; " + fmt(elapsed, 4) + " s"};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"calibration exactness", calibration_exactness},
        {"entropy-balance oracle equivalence", entropy_oracle},
        {"AIPW double robustness", double_robustness},
        {"reduction identities", reductions},
        {"simulation ordering", simulation_ordering},
        {"GA sanity", ga_sanity},
        {"GLM correctness", glm_correctness},
        {"value-function oracle", value_oracle},
        {"application-shape run", application_run},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[k].first << ": " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
