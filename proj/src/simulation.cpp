#include "itr/simulation.hpp"
#include "itr/error.hpp"
#include "itr/ga_optimizer.hpp"
#include "itr/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace itr {

namespace {

// Independent random streams per simulation stage.
enum Stream : std::uint64_t { kGeneral = 1, kTarget = 2, kSource = 3, kObservational = 100 };

double expit(double t) {
    return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

double z_uniform(double x, double lo, double hi) {
    return (x - 0.5 * (lo + hi)) / ((hi - lo) / std::sqrt(12.0));
}

double logistic_score(const SimConfig& cfg, const std::array<double, 3>& coef, double h, double a) {
    return expit(coef[0] + coef[1] * z_uniform(h, cfg.height_min, cfg.height_max) +
                 coef[2] * z_uniform(a, cfg.age_min, cfg.age_max));
}

SimulatedPopulation select_rows(const SimulatedPopulation& from, const std::vector<std::size_t>& rows,
                                Population role) {
    std::vector<PatientRecord> records;
    records.reserve(rows.size());
    SimulatedPopulation out;
    const auto n = static_cast<Eigen::Index>(rows.size());
    out.truth.y0.resize(n);
    out.truth.y1.resize(n);
    out.truth.true_propensity.resize(n);
    out.truth.sampling_score.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const std::size_t r = rows[static_cast<std::size_t>(k)];
        const auto ri = static_cast<Eigen::Index>(r);
        PatientRecord rec = from.data.records()[r];
        rec.population = role;
        records.push_back(std::move(rec));
        out.truth.y0(k) = from.truth.y0(ri);
        out.truth.y1(k) = from.truth.y1(ri);
        out.truth.true_propensity(k) = from.truth.true_propensity(ri);
        out.truth.sampling_score(k) = from.truth.sampling_score(ri);
        out.truth.optimal.push_back(from.truth.optimal[r]);
        out.truth.general_index.push_back(from.truth.general_index[r]);
    }
    out.data = Dataset(from.data.covariate_names(), std::move(records));
    return out;
}

// Draws treatment with the given per-unit probability and reveals Y*(A).
void assign_treatment(SimulatedPopulation& pop, const Eigen::VectorXd& prob, Rng& rng) {
    std::vector<PatientRecord> records = pop.data.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        std::bernoulli_distribution coin(prob(k));
        const int a = coin(rng) ? 1 : 0;
        records[i].treatment = a;
        records[i].outcome = a == 1 ? pop.truth.y1(k) : pop.truth.y0(k);
    }
    pop.data = Dataset(pop.data.covariate_names(), std::move(records));
}

} // namespace

void SimConfig::validate() const {
    auto fail = [](const std::string& what) { throw InputError("simulation config: " + what); };
    if (n_general == 0 || n_target == 0) fail("counts must be positive");
    if (n_target >= n_general) fail("n_target must be smaller than n_general");
    if (!(height_max > height_min) || !(age_max > age_min)) fail("covariate ranges must be nonempty");
    if (contrast == ContrastShape::Corner &&
        !(height_threshold > height_min && height_threshold < height_max && age_threshold > age_min &&
          age_threshold < age_max)) {
        fail("thresholds must lie inside the covariate ranges");
    }
    if (!(noise_sd >= 0.0)) fail("noise_sd must be nonnegative");
    if (!(rct_treated_fraction > 0.0 && rct_treated_fraction < 1.0)) fail("rct_treated_fraction must lie in (0, 1)");
}

std::string_view to_string(ContrastShape shape) {
    return shape == ContrastShape::Corner ? "corner" : "linear";
}

ContrastShape parse_contrast_shape(std::string_view text) {
    if (text == "corner") return ContrastShape::Corner;
    if (text == "linear") return ContrastShape::Linear;
    throw InputError("contrast shape must be 'corner' or 'linear'");
}

double contrast(const SimConfig& cfg, double height, double age) {
    if (cfg.contrast == ContrastShape::Linear) {
        const auto& c = cfg.linear_contrast;
        return cfg.contrast_scale * (c[0] + c[1] * z_uniform(height, cfg.height_min, cfg.height_max) +
                                     c[2] * z_uniform(age, cfg.age_min, cfg.age_max));
    }
    const double height_margin = (height - cfg.height_threshold) / (cfg.height_max - cfg.height_threshold);
    const double age_margin = (cfg.age_threshold - age) / (cfg.age_threshold - cfg.age_min);
    return cfg.contrast_scale * std::min(height_margin, age_margin);
}

double control_mean(const SimConfig& cfg, double height, double age) {
    return cfg.control_coef[0] + cfg.control_coef[1] * height + cfg.control_coef[2] * age;
}

double true_propensity(const SimConfig& cfg, double height, double age) {
    return logistic_score(cfg, cfg.propensity_coef, height, age);
}

double sampling_score(const SimConfig& cfg, double height, double age) {
    return logistic_score(cfg, cfg.sampling_coef, height, age);
}

double true_ate(const SimConfig& cfg, int grid) {
    const double dh = (cfg.height_max - cfg.height_min) / grid;
    const double da = (cfg.age_max - cfg.age_min) / grid;
    double total = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double h = cfg.height_min + (i + 0.5) * dh;
        double row = 0.0;
        for (int j = 0; j < grid; ++j) row += contrast(cfg, h, cfg.age_min + (j + 0.5) * da);
        total += row;
    }
    return total / (static_cast<double>(grid) * grid);
}

SimulatedPopulation generate_population(const SimConfig& cfg) {
    if (cfg.n_general == 0) throw InputError("simulation config: n_general must be positive");
    if (!(cfg.height_max > cfg.height_min) || !(cfg.age_max > cfg.age_min)) {
        throw InputError("simulation config: covariate ranges must be nonempty");
    }
    Rng rng(derive_seed(cfg.seed, kGeneral));
    std::uniform_real_distribution<double> height(cfg.height_min, cfg.height_max);
    std::uniform_real_distribution<double> age(cfg.age_min, cfg.age_max);
    std::normal_distribution<double> noise(0.0, 1.0);

    const auto n = static_cast<Eigen::Index>(cfg.n_general);
    SimulatedPopulation pop;
    auto& t = pop.truth;
    t.y0.resize(n);
    t.y1.resize(n);
    t.true_propensity.resize(n);
    t.sampling_score.resize(n);
    std::vector<PatientRecord> records;
    records.reserve(cfg.n_general);
    for (Eigen::Index i = 0; i < n; ++i) {
        PatientRecord rec;
        rec.id = std::to_string(i + 1);
        const double h = height(rng);
        const double a = age(rng);
        rec.covariates = Eigen::Vector2d(h, a);
        rec.population = Population::Target;
        records.push_back(std::move(rec));

        t.y0(i) = control_mean(cfg, h, a) + cfg.noise_sd * noise(rng);
        t.y1(i) = t.y0(i) + contrast(cfg, h, a);
        t.true_propensity(i) = true_propensity(cfg, h, a);
        t.sampling_score(i) = sampling_score(cfg, h, a);
        t.optimal.push_back(t.y1(i) > t.y0(i) ? 1 : 0);
        t.general_index.push_back(static_cast<std::size_t>(i));
    }
    pop.data = Dataset({"height", "age"}, std::move(records));
    return pop;
}

SimulatedPopulation sample_target(const SimulatedPopulation& general, const SimConfig& cfg) {
    if (cfg.n_target > general.size()) throw InputError("simulation: n_target exceeds the general population");
    Rng rng(derive_seed(cfg.seed, kTarget));
    std::vector<std::size_t> all(general.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::size_t> rows;
    rows.reserve(cfg.n_target);
    std::sample(all.begin(), all.end(), std::back_inserter(rows), cfg.n_target, rng);
    auto target = select_rows(general, rows, Population::Target);
    assign_treatment(target, target.truth.true_propensity, rng);
    return target;
}

SimulatedPopulation sample_source_rct(const SimulatedPopulation& general, const std::vector<std::size_t>& exclude,
                                      const SimConfig& cfg) {
    std::vector<char> excluded(general.size(), 0);
    for (auto r : exclude) {
        if (r < excluded.size()) excluded[r] = 1;
    }
    Rng rng(derive_seed(cfg.seed, kSource));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> rows;
    bool any_remaining = false;
    for (std::size_t r = 0; r < general.size(); ++r) {
        if (excluded[r]) continue;
        any_remaining = true;
        if (unit(rng) < general.truth.sampling_score(static_cast<Eigen::Index>(r))) rows.push_back(r);
    }
    if (!any_remaining) throw InputError("simulation: no units remain for the source sample");
    if (rows.empty()) throw InputError("simulation: source sample is empty; raise the sampling intercept");
    auto source = select_rows(general, rows, Population::Source);
    assign_treatment(source,
                     Eigen::VectorXd::Constant(static_cast<Eigen::Index>(rows.size()), cfg.rct_treated_fraction),
                     rng);
    return source;
}

Dataset SimulatedStudy::combined() const {
    return Dataset::merge(source.data, target.data);
}

SimulatedStudy simulate_study(const SimConfig& cfg) {
    cfg.validate();
    SimulatedStudy study;
    study.general = generate_population(cfg);
    study.target = sample_target(study.general, cfg);
    study.source = sample_source_rct(study.general, study.target.truth.general_index, cfg);
    return study;
}

SimulatedPopulation observational_sample(const SimConfig& cfg, std::size_t n, std::uint64_t stream) {
    SimConfig draw = cfg;
    draw.n_general = n;
    draw.seed = derive_seed(cfg.seed, kObservational + stream);
    auto pop = generate_population(draw);
    Rng rng(derive_seed(draw.seed, kTarget));
    assign_treatment(pop, pop.truth.true_propensity, rng);
    return pop;
}

double oracle_classification_rate(const LinearItr& rule, const SimulatedPopulation& pop) {
    if (pop.truth.optimal.size() != pop.size() || pop.size() == 0) {
        throw InputError("oracle classification rate requires ground truth for every unit");
    }
    const auto d = apply_itr(rule, pop.data);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < d.size(); ++i) agree += d[i] == pop.truth.optimal[i] ? 1 : 0;
    return static_cast<double>(agree) / static_cast<double>(d.size());
}

OracleRule true_optimal_linear_itr(const SimulatedPopulation& pop, std::size_t angles) {
    if (pop.data.p() != 2) {
        throw InputError("true optimal linear rule is only supported for two covariates");
    }
    if (pop.truth.optimal.size() != pop.size() || pop.size() == 0) {
        throw InputError("true optimal linear rule requires ground truth");
    }
    const Eigen::MatrixXd X = pop.data.covariate_matrix();
    const auto standardizer = Standardizer::fit(X);
    const Eigen::MatrixXd Z = standardizer.apply(X);
    const auto n = static_cast<std::size_t>(Z.rows());

    std::vector<int> gain(n);
    std::size_t n_optimal = 0;
    for (std::size_t i = 0; i < n; ++i) {
        gain[i] = pop.truth.optimal[i] ? 1 : -1;
        n_optimal += pop.truth.optimal[i];
    }

    struct Candidate {
        long correct = -1;
        double angle = 0.0;
        double threshold = 0.0;
    };

    std::vector<double> u(n);
    std::vector<std::size_t> order(n);
    // Treat-the-top-k scan along direction `angle`; correct = #non-optimal + sum of gains treated.
    auto scan = [&](double angle) {
        const double c = std::cos(angle), s = std::sin(angle);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = c * Z(static_cast<Eigen::Index>(i), 0) + s * Z(static_cast<Eigen::Index>(i), 1);
        }
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
        Candidate best;
        long running = static_cast<long>(n - n_optimal);
        best = {running, angle, u[order[0]] + 1.0};
        for (std::size_t k = 0; k < n; ++k) {
            running += gain[order[k]];
            const bool last = k + 1 == n;
            if (!last && u[order[k]] == u[order[k + 1]]) continue;
            if (running > best.correct) {
                const double thr = last ? u[order[k]] - 1.0 : 0.5 * (u[order[k]] + u[order[k + 1]]);
                best = {running, angle, thr};
            }
        }
        return best;
    };

    const double two_pi = 2.0 * std::numbers::pi;
    Candidate best;
    for (std::size_t k = 0; k < angles; ++k) {
        auto cand = scan(two_pi * static_cast<double>(k) / static_cast<double>(angles));
        if (cand.correct > best.correct) best = cand;
    }
    double window = two_pi / static_cast<double>(angles);
    for (int round = 0; round < 3; ++round) {
        const double center = best.angle;
        for (int k = -50; k <= 50; ++k) {
            auto cand = scan(center + window * k / 50.0);
            if (cand.correct > best.correct) best = cand;
        }
        window /= 25.0;
    }

    Eigen::VectorXd eta_std(3);
    eta_std << std::cos(best.angle), std::sin(best.angle), -best.threshold;
    LinearItr rule(standardizer.to_raw(eta_std), pop.data.covariate_names());
    return {rule, oracle_classification_rate(rule, pop)};
}

namespace {

struct CovariateShape {
    const char* name;
    bool binary;
    bool lognormal;
    double source_mean, source_sd, target_mean, target_sd;
};

// Rough ICU-cohort scales; target shifts on several covariates.
constexpr CovariateShape kApplicationCovariates[] = {
    {"Glucose", false, true, 140.0, 50.0, 155.0, 60.0},
    {"BloodUreaNitrogen", false, true, 30.0, 20.0, 32.0, 22.0},
    {"Age", false, false, 66.0, 16.0, 62.0, 17.0},
    {"Weight", false, false, 82.0, 22.0, 84.0, 24.0},
    {"MeanBloodPressure", false, false, 78.0, 14.0, 83.0, 16.0},
    {"WBCCount", false, true, 13.0, 7.0, 13.5, 7.5},
    {"RespiratoryRate", false, false, 20.0, 5.0, 22.0, 6.0},
    {"Bilirubin", false, true, 1.5, 2.0, 1.3, 1.8},
    {"Sodium", false, false, 138.0, 5.0, 138.0, 5.0},
    {"Creatinine", false, true, 1.6, 1.2, 1.7, 1.4},
    {"ReAdmission", true, false, 0.3277, 0.0, 0.0475, 0.0},
    {"BodyTemperature", false, false, 37.0, 0.8, 36.7, 0.7},
    {"Albumin", false, false, 2.9, 0.6, 3.1, 0.6},
};

} // namespace

Dataset generate_application_shaped(const ApplicationShapeConfig& cfg) {
    if (cfg.n_source == 0 || cfg.n_target == 0) throw InputError("application shape: counts must be positive");
    Rng rng(derive_seed(cfg.seed, kGeneral));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::string> names;
    for (const auto& c : kApplicationCovariates) names.emplace_back(c.name);
    const auto p = static_cast<Eigen::Index>(names.size());

    auto draw = [&](Population pop) {
        Eigen::VectorXd x(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto& c = kApplicationCovariates[j];
            const bool src = pop == Population::Source;
            const double mean = src ? c.source_mean : c.target_mean;
            const double sd = src ? c.source_sd : c.target_sd;
            if (c.binary) {
                x(j) = unit(rng) < mean ? 1.0 : 0.0;
            } else if (c.lognormal) {
                const double s2 = std::log1p(sd * sd / (mean * mean));
                x(j) = std::exp(std::log(mean) - 0.5 * s2 + std::sqrt(s2) * normal(rng));
            } else {
                x(j) = mean + sd * normal(rng);
            }
        }
        return x;
    };
    // Standardize against the source scales for the treatment and outcome models.
    auto z = [&](const Eigen::VectorXd& x, Eigen::Index j) {
        const auto& c = kApplicationCovariates[j];
        return c.binary ? x(j) : (x(j) - c.source_mean) / c.source_sd;
    };

    std::vector<PatientRecord> records;
    for (std::size_t i = 0; i < cfg.n_source; ++i) {
        PatientRecord rec;
        rec.id = "s" + std::to_string(i + 1);
        rec.population = Population::Source;
        rec.covariates = draw(Population::Source);
        const auto& x = rec.covariates;
        const double vent = expit(-0.2 + 0.5 * z(x, 6) - 0.3 * z(x, 4) + 0.2 * z(x, 10));
        const int a = unit(rng) < vent ? 1 : 0;
        const double effect = 0.3 - 0.6 * z(x, 0) + 0.5 * z(x, 1) + 0.3 * z(x, 2);
        const double survive = expit(1.2 - 0.4 * z(x, 2) - 0.3 * z(x, 1) + 0.25 * z(x, 12) - 0.2 * z(x, 10) +
                                     a * effect);
        rec.treatment = a;
        rec.outcome = unit(rng) < survive ? 1.0 : 0.0;
        records.push_back(std::move(rec));
    }
    for (std::size_t i = 0; i < cfg.n_target; ++i) {
        PatientRecord rec;
        rec.id = "t" + std::to_string(i + 1);
        rec.population = Population::Target;
        rec.covariates = draw(Population::Target);
        records.push_back(std::move(rec));
    }
    return Dataset(std::move(names), std::move(records));
}

} // namespace itr
