#include "itr/serialization.hpp"
#include "itr/error.hpp"

#include <fstream>
#include <sstream>

namespace itr {

json to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw InputError("expected a JSON array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError("expected a JSON array of numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

json to_json(const LinearItr& rule) {
    return {{"covariate_names", rule.covariate_names()}, {"eta", to_json(rule.eta())}};
}

LinearItr rule_from_json(const json& j) {
    if (!j.is_object() || !j.contains("covariate_names") || !j.contains("eta")) {
        throw InputError("rule JSON needs 'covariate_names' and 'eta'");
    }
    return LinearItr(vector_from_json(j.at("eta")), j.at("covariate_names").get<std::vector<std::string>>());
}

LinearItr load_rule(const std::filesystem::path& path) {
    auto j = read_json_file(path);
    // Accept a bare rule or any object carrying one under "rule" / "best_rule".
    if (j.contains("best_rule")) return rule_from_json(j.at("best_rule"));
    if (j.contains("rule")) return rule_from_json(j.at("rule"));
    return rule_from_json(j);
}

json to_json(const ValidationReport& rep) {
    return {{"n_source", rep.n_source},
            {"n_target", rep.n_target},
            {"n_source_treated", rep.n_source_treated},
            {"n_source_control", rep.n_source_control},
            {"missing_treatment", rep.missing_treatment},
            {"missing_outcome", rep.missing_outcome},
            {"constant_columns", rep.constant_columns},
            {"issues", rep.issues}};
}

json to_json(const CovariateSummary& s) {
    json rows = json::array();
    for (std::size_t j = 0; j < s.names.size(); ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        rows.push_back({{"name", s.names[j]}, {"mean", s.mean(k)}, {"sd", s.sd(k)}});
    }
    return {{"n", s.n}, {"covariates", rows}};
}

json to_json(const LinearModel& m) {
    return {{"coefficients", to_json(m.coefficients)}, {"residual_variance", m.residual_variance}};
}

json to_json(const LogisticModel& m) {
    return {{"coefficients", to_json(m.coefficients)},
            {"converged", m.converged},
            {"iterations", m.iterations},
            {"score_norm", m.score_norm}};
}

json to_json(const AteEstimate& e) {
    return {{"method", std::string(to_string(e.method))},
            {"tau_hat", e.tau_hat},
            {"treated_mean", e.treated_mean},
            {"control_mean", e.control_mean},
            {"n_used", e.n_used}};
}

json to_json(const AteSummary& s) {
    return {{"naive", to_json(s.naive)},
            {"ipw", to_json(s.ipw)},
            {"or", to_json(s.outcome_regression)},
            {"aipw", to_json(s.aipw)}};
}

json to_json(const BalanceReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows) {
        rows.push_back({{"name", r.name},
                        {"source_mean", r.source_mean},
                        {"weighted_mean", r.weighted_mean},
                        {"target_mean", r.target_mean},
                        {"smd_before", r.smd_before},
                        {"smd_after", r.smd_after}});
    }
    return {{"rows", rows},
            {"effective_sample_size", rep.effective_sample_size},
            {"max_abs_smd_before", rep.max_abs_smd_before},
            {"max_abs_smd_after", rep.max_abs_smd_after}};
}

json to_json(const CalibrationWeights& w) {
    return {{"converged", w.converged},
            {"iterations", w.iterations},
            {"max_residual", w.max_residual},
            {"dual", to_json(w.dual)},
            {"effective_sample_size", w.effective_sample_size()},
            {"weight_sum", w.weights.sum()},
            {"min_weight", w.weights.minCoeff()},
            {"max_weight", w.weights.maxCoeff()}};
}

json to_json(const ValueEstimate& v) {
    return {{"value", v.value},
            {"weighted", v.weighted},
            {"n_source_used", v.n_source_used},
            {"rule", to_json(v.rule)},
            {"rule_string", inequality_string(v.rule)}};
}

json to_json(const std::vector<ImportanceEntry>& ranking) {
    json arr = json::array();
    std::size_t rank = 1;
    for (const auto& e : ranking) {
        arr.push_back({{"rank", rank++},
                       {"name", e.name},
                       {"coefficient", e.coefficient},
                       {"sd", e.sd},
                       {"adjusted", e.adjusted},
                       {"sign", e.adjusted > 0 ? "positive" : e.adjusted < 0 ? "negative" : "zero"}});
    }
    return arr;
}

json to_json(const GaConfig& c) {
    return {{"population_size", c.population_size},
            {"generations", c.generations},
            {"domain", {c.domain_lower, c.domain_upper}},
            {"tournament_size", c.tournament_size},
            {"crossover_rate", c.crossover_rate},
            {"mutation_rate", c.mutation_rate ? json(*c.mutation_rate) : json(nullptr)},
            {"mutation_scale", c.mutation_scale ? json(*c.mutation_scale) : json(nullptr)},
            {"elitism", c.elitism},
            {"seed", c.seed},
            {"restarts", c.restarts}};
}

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("config key '") + key + "': " + e.what());
    }
}

template <class T>
void read_if(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        out.reset();
        return;
    }
    T v{};
    read_if(j, key, v);
    out = v;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* section) {
    if (!j.is_object()) throw InputError(std::string("config section '") + section + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw InputError(std::string("unknown key '") + key + "' in config section '" + section + "'");
    }
}

} // namespace

GaConfig ga_config_from_json(const json& j, GaConfig c) {
    check_keys(j,
               {"population_size", "generations", "domain", "tournament_size", "crossover_rate", "mutation_rate",
                "mutation_scale", "elitism", "seed", "restarts", "threads"},
               "ga");
    read_if(j, "population_size", c.population_size);
    read_if(j, "generations", c.generations);
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        if (!d.is_array() || d.size() != 2) throw InputError("ga.domain must be [lower, upper]");
        c.domain_lower = d[0].get<double>();
        c.domain_upper = d[1].get<double>();
    }
    read_if(j, "tournament_size", c.tournament_size);
    read_if(j, "crossover_rate", c.crossover_rate);
    read_if(j, "mutation_rate", c.mutation_rate);
    read_if(j, "mutation_scale", c.mutation_scale);
    read_if(j, "elitism", c.elitism);
    read_if(j, "seed", c.seed);
    read_if(j, "restarts", c.restarts);
    read_if(j, "threads", c.threads);
    return c;
}

json to_json(const GaResult& r) {
    return {{"best_rule", to_json(r.best_rule)},
            {"best_rule_string", inequality_string(r.best_rule)},
            {"best_value", r.best_value},
            {"evaluations", r.evaluations},
            {"seed", r.seed},
            {"restart_best", r.restart_best},
            {"history", r.history},
            {"config", to_json(r.config)}};
}

json to_json(const SimConfig& c) {
    return {{"n_general", c.n_general},
            {"n_target", c.n_target},
            {"height_range", {c.height_min, c.height_max}},
            {"age_range", {c.age_min, c.age_max}},
            {"propensity_coef", c.propensity_coef},
            {"sampling_coef", c.sampling_coef},
            {"control_coef", c.control_coef},
            {"noise_sd", c.noise_sd},
            {"contrast_scale", c.contrast_scale},
            {"height_threshold", c.height_threshold},
            {"age_threshold", c.age_threshold},
            {"contrast", std::string(to_string(c.contrast))},
            {"linear_contrast", c.linear_contrast},
            {"rct_treated_fraction", c.rct_treated_fraction},
            {"seed", c.seed}};
}

SimConfig sim_config_from_json(const json& j, SimConfig c) {
    check_keys(j,
               {"n_general", "n_target", "height_range", "age_range", "propensity_coef", "sampling_coef",
                "control_coef", "noise_sd", "contrast_scale", "height_threshold", "age_threshold", "contrast",
                "linear_contrast", "rct_treated_fraction", "seed"},
               "simulation");
    read_if(j, "n_general", c.n_general);
    read_if(j, "n_target", c.n_target);
    auto range = [&](const char* key, double& lo, double& hi) {
        if (!j.contains(key)) return;
        const auto& r = j.at(key);
        if (!r.is_array() || r.size() != 2) throw InputError(std::string("simulation.") + key + " must be [min, max]");
        lo = r[0].get<double>();
        hi = r[1].get<double>();
    };
    range("height_range", c.height_min, c.height_max);
    range("age_range", c.age_min, c.age_max);
    read_if(j, "propensity_coef", c.propensity_coef);
    read_if(j, "sampling_coef", c.sampling_coef);
    read_if(j, "control_coef", c.control_coef);
    read_if(j, "noise_sd", c.noise_sd);
    read_if(j, "contrast_scale", c.contrast_scale);
    read_if(j, "height_threshold", c.height_threshold);
    read_if(j, "age_threshold", c.age_threshold);
    if (j.contains("contrast")) c.contrast = parse_contrast_shape(j.at("contrast").get<std::string>());
    read_if(j, "linear_contrast", c.linear_contrast);
    read_if(j, "rct_treated_fraction", c.rct_treated_fraction);
    read_if(j, "seed", c.seed);
    return c;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

} // namespace itr
