#include "itr/cli.hpp"
#include "itr/ate_estimators.hpp"
#include "itr/error.hpp"
#include "itr/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>

namespace itr {

namespace {

struct DataFlags {
    std::string data, source, target;
    std::string id_column = "id", treatment_column = "treatment", outcome_column = "outcome",
                population_column = "population";
    std::vector<std::string> covariates;
    bool drop_incomplete = false;

    void add(CLI::App* app, bool with_target = true) {
        app->add_option("--source", source, "Source CSV (covariates, treatment, outcome)");
        if (with_target) app->add_option("--target", target, "Target CSV (covariates)");
        app->add_option("--data", data, "Combined CSV with a population column (source/target)");
        app->add_option("--id-column", id_column, "Name of the id column")->capture_default_str();
        app->add_option("--treatment-column", treatment_column, "Name of the treatment column")->capture_default_str();
        app->add_option("--outcome-column", outcome_column, "Name of the outcome column")->capture_default_str();
        app->add_option("--population-column", population_column, "Name of the population column")
            ->capture_default_str();
        app->add_option("--covariates", covariates, "Covariate columns (comma separated); default all others")
            ->delimiter(',');
        app->add_flag("--drop-incomplete", drop_incomplete, "Skip rows with missing covariates instead of failing");
    }

    RunConfig config() const {
        RunConfig c;
        if (!data.empty()) c.data = data;
        if (!source.empty()) c.source = source;
        if (!target.empty()) c.target = target;
        if (c.data && (c.source || c.target)) throw InputError("give either --data or --source/--target, not both");
        if (c.target && !c.source) throw InputError("--target requires --source");
        if (c.simulated()) throw InputError("no input data: pass --source (and --target) or --data");
        c.schema.id_column = id_column;
        c.schema.treatment_column = treatment_column;
        c.schema.outcome_column = outcome_column;
        c.schema.population_column = population_column;
        c.schema.covariates = covariates;
        c.schema.drop_incomplete = drop_incomplete;
        return c;
    }
};

struct NuisanceFlags {
    NuisanceOptions options;

    void add(CLI::App* app, bool weighted = true) {
        app->add_option("--clip", options.clip, "Propensity clipping epsilon")->capture_default_str();
        app->add_option("--ridge", options.ridge, "Ridge penalty for the propensity model")->capture_default_str();
        app->add_flag("--arm-specific", options.arm_specific, "Separate outcome models per treatment arm");
        if (weighted) {
            app->add_flag("--weighted-nuisance", options.weighted_nuisance,
                          "Fit nuisance models with calibration weights");
        }
    }
};

struct CalibrationFlags {
    CalibrationOptions options;

    void add(CLI::App* app) {
        app->add_option("--moments", options.moments, "Moment order to balance (1 = means, 2 = adds squares)")
            ->check(CLI::IsMember({1, 2}))
            ->capture_default_str();
        app->add_option("--tol", options.solver.tol, "Max-norm tolerance on the moment residual")
            ->capture_default_str();
        app->add_option("--max-iter", options.solver.max_iter, "Newton iteration limit")->capture_default_str();
    }
};

void emit(const json& j, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << j.dump(2) << '\n';
    } else {
        write_json_file(path, j);
    }
}

// Source arrays plus calibration weights (uniform when there are no target rows).
struct Prepared {
    Dataset ds;
    SourceArrays source;
    std::optional<MomentTargets> targets;
    std::optional<CalibrationWeights> calibration;
    Eigen::VectorXd weights;
    bool weighted = false;
};

Prepared prepare(const RunConfig& cfg, const CalibrationOptions& cal, bool use_weights) {
    Prepared p;
    p.ds = load_study(cfg);
    if (p.ds.n_source() == 0) throw InputError("no source rows in the input");
    p.source = source_arrays(p.ds);
    if (use_weights && p.ds.n_target() > 0) {
        p.targets = target_moments(p.ds, cal.moments);
        p.calibration = solve_entropy_balance(p.source.X, *p.targets, cal.solver);
        p.weights = p.calibration->weights;
        p.weighted = true;
    } else {
        p.weights = uniform_weights(p.source.X.rows());
    }
    return p;
}

NuisanceModels nuisance_for(const Prepared& p, const NuisanceOptions& options) {
    if (options.weighted_nuisance && !p.weighted) {
        throw InputError("--weighted-nuisance needs target rows to calibrate against");
    }
    return fit_nuisance(p.source, options, p.weights);
}

void write_truth_csv(const SimulatedPopulation& pop, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << "id,y0,y1,true_propensity,true_optimal\n";
    const auto& recs = pop.data.records();
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        out << recs[i].id << ',' << format_double(pop.truth.y0(k)) << ',' << format_double(pop.truth.y1(k)) << ','
            << format_double(pop.truth.true_propensity(k)) << ',' << int(pop.truth.optimal[i]) << '\n';
    }
}

json load_config_json(const std::string& path) {
    if (!std::filesystem::exists(path)) throw InputError("config file '" + path + "' does not exist");
    return read_json_file(path);
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Calibrated individualized treatment rules: entropy-balancing weights, AIPW value "
                 "estimation and genetic-algorithm rule search."};
    app.name("itr");
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    std::function<int()> action;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate a general population with source RCT and target samples");
    std::string sim_config, sim_out;
    std::optional<std::uint64_t> sim_seed;
    std::optional<std::size_t> sim_n_general, sim_n_target;
    sim->add_option("--config", sim_config, "JSON file: a run config or its 'simulation' section");
    sim->add_option("--seed", sim_seed, "Random seed");
    sim->add_option("--n-general", sim_n_general, "General population size");
    sim->add_option("--n-target", sim_n_target, "Target sample size");
    sim->add_option("--out-dir", sim_out, "Output directory")->required();
    sim->callback([&] {
        action = [&] {
            SimConfig cfg;
            if (!sim_config.empty()) {
                const json j = load_config_json(sim_config);
                cfg = sim_config_from_json(j.contains("simulation") ? j.at("simulation") : j);
            }
            if (sim_seed) cfg.seed = *sim_seed;
            if (sim_n_general) cfg.n_general = *sim_n_general;
            if (sim_n_target) cfg.n_target = *sim_n_target;
            const auto study = simulate_study(cfg);
            const std::filesystem::path dir = sim_out;
            std::filesystem::create_directories(dir);
            write_dataset(study.general.data, dir / "general.csv");
            write_dataset(study.source.data, dir / "source.csv");
            write_dataset(study.target.data, dir / "target.csv");
            write_truth_csv(study.general, dir / "truth.csv");
            const json meta = {{"tool", {{"name", "itr"}, {"version", kToolVersion}}},
                               {"config", to_json(cfg)},
                               {"n_general", study.general.size()},
                               {"n_source", study.source.size()},
                               {"n_target", study.target.size()},
                               {"true_ate", true_ate(cfg)}};
            write_json_file(dir / "sim_meta.json", meta);
            out << meta.dump(2) << '\n';
            return 0;
        };
    });

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Entropy-balancing weights matching source moments to the target");
    DataFlags cal_data;
    CalibrationFlags cal_flags;
    std::string cal_out, cal_report;
    cal_data.add(cal);
    cal_flags.add(cal);
    cal->add_option("--out", cal_out, "Weights CSV (id,weight)")->required();
    cal->add_option("--report", cal_report, "Balance report JSON (default: standard output)");
    cal->callback([&] {
        action = [&] {
            auto cfg = cal_data.config();
            const Dataset ds = load_study(cfg);
            if (ds.n_source() == 0 || ds.n_target() == 0) throw InputError("calibrate needs source and target rows");
            const Eigen::MatrixXd Xs = ds.covariate_matrix(PopulationFilter::Source);
            const auto targets = target_moments(ds, cal_flags.options.moments);
            const auto cw = solve_entropy_balance(Xs, targets, cal_flags.options.solver);
            write_weights_csv(cal_out, ds.ids(PopulationFilter::Source), cw.weights);
            emit({{"weights", to_json(cw)}, {"balance", to_json(balance_diagnostics(Xs, cw.weights, targets))}},
                 cal_report, out);
            return 0;
        };
    });

    // estimate
    auto* est = app.add_subcommand("estimate", "Naive, IPW, outcome-regression and AIPW treatment effects");
    DataFlags est_data;
    NuisanceFlags est_nuis;
    std::string est_out;
    est_data.add(est, false);
    est_nuis.add(est, false);
    est->add_option("--out", est_out, "Output JSON (default: standard output)");
    est->callback([&] {
        action = [&] {
            auto cfg = est_data.config();
            const auto p = prepare(cfg, {}, false);
            const auto nuisance = nuisance_for(p, est_nuis.options);
            emit(to_json(estimate_all(p.source, nuisance)), est_out, out);
            return 0;
        };
    });

    // value
    auto* val = app.add_subcommand("value", "Calibrated AIPW value of a rule");
    DataFlags val_data;
    NuisanceFlags val_nuis;
    CalibrationFlags val_cal;
    std::string val_rule, val_out;
    bool val_unweighted = false;
    val->add_option("--rule", val_rule, "Rule JSON (covariate_names, eta)")->required();
    val_data.add(val);
    val_nuis.add(val);
    val_cal.add(val);
    val->add_flag("--unweighted", val_unweighted, "Use uniform weights even when target rows are present");
    val->add_option("--out", val_out, "Output JSON (default: standard output)");
    val->callback([&] {
        action = [&] {
            const auto rule = load_rule(val_rule);
            const auto p = prepare(val_data.config(), val_cal.options, !val_unweighted);
            if (rule.covariate_names() != p.source.covariate_names) {
                throw InputError("rule covariates do not match the data columns");
            }
            const auto nuisance = nuisance_for(p, val_nuis.options);
            const auto v = caipw_value(rule, p.source, p.weights, nuisance.pi_hat,
                                       nuisance.value_predictions(p.source.X), p.weighted);
            emit(to_json(v), val_out, out);
            return 0;
        };
    });

    // optimize
    auto* opt = app.add_subcommand("optimize", "Search for the linear rule maximizing the calibrated value");
    DataFlags opt_data;
    NuisanceFlags opt_nuis;
    CalibrationFlags opt_cal;
    std::string opt_config, opt_out, opt_rule_out;
    bool opt_unweighted = false;
    std::optional<std::uint64_t> opt_seed;
    std::optional<std::size_t> opt_pop, opt_gens, opt_restarts;
    opt_data.add(opt);
    opt_nuis.add(opt);
    opt_cal.add(opt);
    opt->add_option("--config", opt_config, "JSON file: a run config or its 'ga' section");
    opt->add_option("--seed", opt_seed, "GA seed");
    opt->add_option("--population-size", opt_pop, "GA population size");
    opt->add_option("--generations", opt_gens, "GA generations per restart");
    opt->add_option("--restarts", opt_restarts, "GA restarts");
    opt->add_flag("--unweighted", opt_unweighted, "Optimize with uniform weights");
    opt->add_option("--out", opt_out, "GA result JSON (default: standard output)");
    opt->add_option("--rule-out", opt_rule_out, "Also write the best rule as rule JSON");
    opt->callback([&] {
        action = [&] {
            GaConfig ga;
            if (!opt_config.empty()) {
                const json j = load_config_json(opt_config);
                ga = ga_config_from_json(j.contains("ga") ? j.at("ga") : j);
            }
            if (opt_seed) ga.seed = *opt_seed;
            if (opt_pop) ga.population_size = *opt_pop;
            if (opt_gens) ga.generations = *opt_gens;
            if (opt_restarts) ga.restarts = *opt_restarts;
            const auto p = prepare(opt_data.config(), opt_cal.options, !opt_unweighted);
            const auto nuisance = nuisance_for(p, opt_nuis.options);
            const auto fit = learn_itr(p.source, p.weights, nuisance.pi_hat, nuisance.value_predictions(p.source.X),
                                       p.weighted, ga);
            json j = to_json(fit.ga);
            j["weighted"] = p.weighted;
            emit(j, opt_out, out);
            if (!opt_rule_out.empty()) write_json_file(opt_rule_out, to_json(fit.rule));
            return 0;
        };
    });

    // importance
    auto* imp = app.add_subcommand("importance", "Rank covariates by |coefficient| times target standard deviation");
    std::string imp_rule, imp_data, imp_out;
    imp->add_option("--rule", imp_rule, "Rule JSON")->required();
    imp->add_option("--data", imp_data, "Target CSV (target rows are used when a population column is present)")
        ->required();
    imp->add_option("--out", imp_out, "Output JSON (default: standard output)");
    imp->callback([&] {
        action = [&] {
            const auto rule = load_rule(imp_rule);
            if (!std::filesystem::exists(imp_data)) throw InputError("data file '" + imp_data + "' does not exist");
            CsvSchema schema;
            schema.default_population = Population::Target;
            schema.covariates = rule.covariate_names();
            const Dataset ds = load_dataset(imp_data, schema);
            const auto filter = ds.n_target() > 0 ? PopulationFilter::Target : PopulationFilter::All;
            emit(to_json(covariate_importance(rule, covariate_summary(ds, filter))), imp_out, out);
            return 0;
        };
    });

    // run
    auto* run = app.add_subcommand("run", "Full pipeline from a JSON config; writes report.json and the rule");
    std::string run_config_path, run_output;
    std::optional<std::uint64_t> run_seed;
    bool run_plot = false;
    run->add_option("--config", run_config_path, "Run config JSON")->required();
    run->add_option("--seed", run_seed, "Seed for every stochastic stage (overrides the config)");
    run->add_option("--output-dir", run_output, "Output directory (overrides the config)");
    run->add_flag("--plot-data", run_plot, "Write GA history and balance tables as CSV");
    run->callback([&] {
        action = [&] {
            auto cfg = run_config_from_json(load_config_json(run_config_path));
            if (run_seed) cfg.seed = *run_seed;
            if (!run_output.empty()) cfg.output_dir = run_output;
            if (run_plot) cfg.plot_data = true;
            const auto outcome = run_pipeline(cfg);
            if (outcome.exit_code != 0) {
                err << "itr run: stage '" << outcome.failed_stage << "' failed: " << outcome.error << '\n';
                return outcome.exit_code;
            }
            const auto& r = outcome.report;
            json brief = {{"status", "ok"},
                          {"output_dir", cfg.effective().output_dir.string()},
                          {"rule_string", r.at("rules").at("weighted").at("rule_string")},
                          {"value_weighted", r.at("rules").at("weighted").at("value_weighted")}};
            if (r.contains("oracle")) brief["oracle"] = r.at("oracle");
            out << brief.dump(2) << '\n';
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "itr: " << e.what() << "\n\n";
        const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return 2;
    }

    try {
        return action ? action() : 2;
    } catch (const InputError& e) {
        err << "itr: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "itr: " << e.what() << '\n';
        return 1;
    }
}

} // namespace itr
