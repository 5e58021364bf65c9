#include "itr/pipeline.hpp"
#include "itr/ate_estimators.hpp"
#include "itr/error.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

namespace itr {

namespace {

template <class T>
void read_key(const json& j, const char* key, T& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("config key '") + key + "': " + e.what());
    }
}

void allow_only(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
    if (!j.is_object()) throw InputError("config section '" + section + "' must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw InputError("unknown config key '" + key + "' in '" + section + "'");
    }
}

std::optional<std::filesystem::path> path_key(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) throw InputError(std::string("config key '") + key + "' must be a path string");
    return std::filesystem::path(j.at(key).get<std::string>());
}

json optional_path(const std::optional<std::filesystem::path>& p) {
    return p ? json(p->string()) : json(nullptr);
}

void require_file(const std::optional<std::filesystem::path>& p, const char* what) {
    if (p && !std::filesystem::exists(*p)) {
        throw InputError(std::string(what) + " file '" + p->string() + "' does not exist");
    }
}

} // namespace

CsvSchema schema_from_json(const json& j, CsvSchema s) {
    allow_only(j,
               {"id", "treatment", "outcome", "population", "covariates", "drop_incomplete"},
               "schema");
    read_key(j, "id", s.id_column);
    read_key(j, "treatment", s.treatment_column);
    read_key(j, "outcome", s.outcome_column);
    read_key(j, "population", s.population_column);
    read_key(j, "covariates", s.covariates);
    read_key(j, "drop_incomplete", s.drop_incomplete);
    return s;
}

json to_json(const CsvSchema& s) {
    return {{"id", s.id_column},
            {"treatment", s.treatment_column},
            {"outcome", s.outcome_column},
            {"population", s.population_column},
            {"covariates", s.covariates},
            {"drop_incomplete", s.drop_incomplete}};
}

RunConfig RunConfig::effective() const {
    RunConfig c = *this;
    if (c.seed) {
        c.ga.seed = *c.seed;
        c.simulation.seed = *c.seed;
    }
    return c;
}

RunConfig run_config_from_json(const json& j) {
    allow_only(j,
               {"data", "source", "target", "schema", "nuisance", "calibration", "ga", "simulation", "output_dir",
                "seed", "unweighted", "plot_data"},
               "config");
    RunConfig c;
    c.data = path_key(j, "data");
    c.source = path_key(j, "source");
    c.target = path_key(j, "target");
    if (j.contains("schema")) c.schema = schema_from_json(j.at("schema"), c.schema);
    if (j.contains("nuisance")) {
        const auto& n = j.at("nuisance");
        allow_only(n, {"clip", "arm_specific", "weighted_nuisance", "ridge"}, "nuisance");
        read_key(n, "clip", c.nuisance.clip);
        read_key(n, "arm_specific", c.nuisance.arm_specific);
        read_key(n, "weighted_nuisance", c.nuisance.weighted_nuisance);
        read_key(n, "ridge", c.nuisance.ridge);
    }
    if (j.contains("calibration")) {
        const auto& k = j.at("calibration");
        allow_only(k, {"moments", "tol", "max_iter"}, "calibration");
        read_key(k, "moments", c.calibration.moments);
        read_key(k, "tol", c.calibration.solver.tol);
        read_key(k, "max_iter", c.calibration.solver.max_iter);
    }
    if (j.contains("ga")) c.ga = ga_config_from_json(j.at("ga"), c.ga);
    if (j.contains("simulation")) c.simulation = sim_config_from_json(j.at("simulation"), c.simulation);
    if (auto out = path_key(j, "output_dir")) c.output_dir = *out;
    if (j.contains("seed") && !j.at("seed").is_null()) {
        std::uint64_t s = 0;
        read_key(j, "seed", s);
        c.seed = s;
    }
    read_key(j, "unweighted", c.unweighted);
    read_key(j, "plot_data", c.plot_data);

    if (c.data && (c.source || c.target)) throw InputError("config: give either 'data' or 'source'/'target', not both");
    if (c.target && !c.source) throw InputError("config: 'target' requires 'source'");
    if (c.calibration.moments != 1 && c.calibration.moments != 2) {
        throw InputError("config: calibration.moments must be 1 or 2");
    }
    if (!(c.calibration.solver.tol > 0.0)) throw InputError("config: calibration.tol must be positive");
    if (c.calibration.solver.max_iter <= 0) throw InputError("config: calibration.max_iter must be positive");
    if (!(c.nuisance.clip > 0.0 && c.nuisance.clip < 0.5)) throw InputError("config: nuisance.clip must lie in (0, 0.5)");
    if (!(c.nuisance.ridge >= 0.0)) throw InputError("config: nuisance.ridge must be >= 0");
    return c;
}

json to_json(const RunConfig& c) {
    json ga = to_json(c.ga);
    ga["threads"] = c.ga.threads;
    return {{"data", optional_path(c.data)},
            {"source", optional_path(c.source)},
            {"target", optional_path(c.target)},
            {"schema", to_json(c.schema)},
            {"nuisance",
             {{"clip", c.nuisance.clip},
              {"arm_specific", c.nuisance.arm_specific},
              {"weighted_nuisance", c.nuisance.weighted_nuisance},
              {"ridge", c.nuisance.ridge}}},
            {"calibration",
             {{"moments", c.calibration.moments},
              {"tol", c.calibration.solver.tol},
              {"max_iter", c.calibration.solver.max_iter}}},
            {"ga", ga},
            {"simulation", to_json(c.simulation)},
            {"output_dir", c.output_dir.string()},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"unweighted", c.unweighted},
            {"plot_data", c.plot_data}};
}

Dataset load_study(const RunConfig& config) {
    require_file(config.data, "data");
    require_file(config.source, "source");
    require_file(config.target, "target");
    if (config.data) return load_dataset(*config.data, config.schema);
    if (!config.source) throw InputError("no input data configured");

    CsvSchema src = config.schema;
    src.default_population = Population::Source;
    src.require_treatment = true;
    src.require_outcome = true;
    Dataset source = load_dataset(*config.source, src);
    if (!config.target) return source;

    CsvSchema tgt = config.schema;
    tgt.default_population = Population::Target;
    tgt.covariates = source.covariate_names();
    Dataset target = load_dataset(*config.target, tgt);
    return Dataset::merge(source, target);
}

PolicyFit learn_itr(const SourceArrays& source, const Eigen::VectorXd& weights, const Eigen::VectorXd& pi_hat,
                    const OutcomePredictions& m_hat, bool weighted, const GaConfig& ga) {
    const Standardizer standardizer = Standardizer::fit(source.X);
    const CaipwProblem problem(standardizer.apply(source.X), source.A, source.Y, pi_hat, m_hat, weights, weighted);
    const Eigen::Index p = source.X.cols();
    const Eigen::VectorXd& treated = problem.treated_terms();
    const Eigen::VectorXd& control = problem.control_terms();
    const Eigen::MatrixXd& Z = problem.X();

    // Same decision as apply_itr (ties to control) without building a rule per candidate.
    const Objective objective = [&](const Genome& eta) {
        const Eigen::VectorXd s = Z * eta.head(p);
        const double b = eta(p);
        double total = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) total += s(i) + b > 0.0 ? treated(i) : control(i);
        return total;
    };

    auto run = optimize(objective, static_cast<std::size_t>(p + 1), ga);
    LinearItr raw(standardizer.to_raw(run.best), source.covariate_names);
    raw = raw.canonical();
    PolicyFit fit{GaResult{raw, run.best_value, std::move(run.history), std::move(run.restart_best),
                           run.evaluations, run.seed, std::move(run.config)},
                  raw, run.best};
    return fit;
}

namespace {

using Clock = std::chrono::steady_clock;

json rule_summary(const LinearItr& rule, const CaipwProblem& weighted, const CaipwProblem& uniform) {
    return {{"rule", to_json(rule)},
            {"rule_string", inequality_string(rule)},
            {"value_weighted", weighted.value(rule)},
            {"value_unweighted", uniform.value(rule)},
            {"treated_fraction_source",
             [&] {
                 const auto d = apply_itr(rule, weighted.X());
                 double k = 0;
                 for (auto v : d) k += v;
                 return k / static_cast<double>(d.size());
             }()}};
}

void write_history_csv(const std::filesystem::path& path, const std::vector<std::pair<std::string, const GaResult*>>& runs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << "fit,restart,generation,best_so_far\n";
    for (const auto& [label, r] : runs) {
        const std::size_t per = r->config.generations + 1;
        for (std::size_t k = 0; k < r->history.size(); ++k) {
            out << label << ',' << k / per << ',' << k % per << ',' << format_double(r->history[k]) << '\n';
        }
    }
}

void write_balance_csv(const std::filesystem::path& path, const BalanceReport& rep) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << "constraint,source_mean,weighted_mean,target_mean,smd_before,smd_after\n";
    for (const auto& r : rep.rows) {
        out << r.name << ',' << format_double(r.source_mean) << ',' << format_double(r.weighted_mean) << ','
            << format_double(r.target_mean) << ',' << format_double(r.smd_before) << ','
            << format_double(r.smd_after) << '\n';
    }
}

} // namespace

RunOutcome run_pipeline(const RunConfig& input) {
    const RunConfig config = input.effective();
    RunOutcome outcome;
    json& report = outcome.report;
    report["tool"] = {{"name", "itr"}, {"version", kToolVersion}};
    report["status"] = "running";
    report["failed_stage"] = nullptr;
    report["config"] = to_json(config);
    json timings = json::object();

    std::string stage;
    auto t0 = Clock::now();
    auto begin = [&](const char* name) {
        stage = name;
        t0 = Clock::now();
    };
    auto end = [&] { timings[stage] = std::chrono::duration<double>(Clock::now() - t0).count(); };

    std::optional<SimulatedStudy> study;
    try {
        begin("load");
        std::filesystem::create_directories(config.output_dir);
        Dataset ds;
        if (config.simulated()) {
            study = simulate_study(config.simulation);
            ds = study->combined();
        } else {
            ds = load_study(config);
        }
        report["data"] = {{"simulated", config.simulated()},
                          {"n_source", ds.n_source()},
                          {"n_target", ds.n_target()},
                          {"covariates", ds.covariate_names()},
                          {"dropped_rows", ds.dropped_rows()}};
        end();

        begin("validate");
        const auto validation = validate(ds);
        report["validation"] = to_json(validation);
        if (!validation.ok()) {
            std::string msg = "data validation failed:";
            for (const auto& issue : validation.issues) msg += " " + issue + ";";
            throw InputError(msg);
        }
        const SourceArrays source = source_arrays(ds);
        end();

        begin("calibrate");
        const MomentTargets targets = target_moments(ds, config.calibration.moments);
        const CalibrationWeights cw = solve_entropy_balance(source.X, targets, config.calibration.solver);
        const BalanceReport balance = balance_diagnostics(source.X, cw.weights, targets);
        report["calibration"] = {{"moments", config.calibration.moments},
                                 {"weights", to_json(cw)},
                                 {"balance", to_json(balance)}};
        write_weights_csv(config.output_dir / "weights.csv", source.ids, cw.weights);
        end();

        begin("nuisance");
        const NuisanceModels nuisance = fit_nuisance(source, config.nuisance, cw.weights);
        report["nuisance"] = {{"propensity", to_json(nuisance.propensity)},
                              {"outcome_pooled", to_json(nuisance.outcome_pooled)},
                              {"outcome_treated", to_json(nuisance.outcome_treated)},
                              {"outcome_control", to_json(nuisance.outcome_control)}};
        end();

        begin("estimate");
        report["ate"] = to_json(estimate_all(source, nuisance));
        end();

        begin("optimize");
        const OutcomePredictions m_hat = nuisance.value_predictions(source.X);
        const Eigen::VectorXd uniform = uniform_weights(source.X.rows());
        const PolicyFit weighted_fit = learn_itr(source, cw.weights, nuisance.pi_hat, m_hat, true, config.ga);
        std::optional<PolicyFit> unweighted_fit;
        if (config.unweighted) {
            unweighted_fit = learn_itr(source, uniform, nuisance.pi_hat, m_hat, false, config.ga);
        }
        report["optimization"] = {{"weighted", to_json(weighted_fit.ga)},
                                  {"unweighted", unweighted_fit ? to_json(unweighted_fit->ga) : json(nullptr)}};
        end();

        begin("evaluate");
        const CaipwProblem wp(source.X, source.A, source.Y, nuisance.pi_hat, m_hat, cw.weights, true);
        const CaipwProblem up(source.X, source.A, source.Y, nuisance.pi_hat, m_hat, uniform, false);
        json rules = {{"weighted", rule_summary(weighted_fit.rule, wp, up)},
                      {"unweighted", unweighted_fit ? rule_summary(unweighted_fit->rule, wp, up) : json(nullptr)}};
        const auto all = LinearItr::treat_all(source.covariate_names);
        const auto none = LinearItr::treat_none(source.covariate_names);
        rules["treat_all"] = rule_summary(all, wp, up);
        rules["treat_none"] = rule_summary(none, wp, up);
        report["rules"] = rules;
        if (study) {
            const auto optimal = true_optimal_linear_itr(study->target);
            json oracle = {{"population", "target"},
                           {"true_optimal_rate", optimal.rate},
                           {"true_optimal_rule", to_json(optimal.rule)},
                           {"weighted_rate", oracle_classification_rate(weighted_fit.rule, study->target)},
                           {"unweighted_rate", unweighted_fit
                                                   ? json(oracle_classification_rate(unweighted_fit->rule, study->target))
                                                   : json(nullptr)}};
            report["oracle"] = oracle;
        }
        end();

        begin("importance");
        const auto summary = covariate_summary(ds, PopulationFilter::Target);
        report["importance"] = to_json(covariate_importance(weighted_fit.rule, summary));
        end();

        begin("write");
        write_json_file(config.output_dir / "rule.json", to_json(weighted_fit.rule));
        {
            std::ofstream txt(config.output_dir / "rule.txt", std::ios::binary);
            if (!txt) throw InputError("cannot write rule.txt in '" + config.output_dir.string() + "'");
            txt << inequality_string(weighted_fit.rule) << '\n';
        }
        if (config.plot_data) {
            std::vector<std::pair<std::string, const GaResult*>> runs{{"weighted", &weighted_fit.ga}};
            if (unweighted_fit) runs.emplace_back("unweighted", &unweighted_fit->ga);
            write_history_csv(config.output_dir / "ga_history.csv", runs);
            write_balance_csv(config.output_dir / "balance.csv", balance);
        }
        end();
        report["status"] = "ok";
    } catch (const std::exception& e) {
        outcome.failed_stage = stage;
        outcome.error = e.what();
        outcome.exit_code = dynamic_cast<const InputError*>(&e) ? 2 : 1;
        report["status"] = "failed";
        report["failed_stage"] = stage;
        report["error"] = e.what();
    }
    report["timings"] = timings;

    try {
        std::filesystem::create_directories(config.output_dir);
        write_json_file(config.output_dir / "report.json", report);
    } catch (const std::exception& e) {
        if (outcome.exit_code == 0) {
            outcome.exit_code = 2;
            outcome.failed_stage = "write";
            outcome.error = e.what();
        }
    }
    return outcome;
}

} // namespace itr
