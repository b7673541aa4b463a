#include <cmenet/cli.hpp>
#include <cmenet/io.hpp>
#include <cmenet/simlab.hpp>
#include <cmenet/solver.hpp>
#include <cmenet/tuning.hpp>

#include "CLI11.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace cmenet {

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::parse_error:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::constant_column:
    case ErrorCode::degenerate_response:
    case ErrorCode::index_out_of_range:
        return exit_input;
    case ErrorCode::invalid_params:
    case ErrorCode::invalid_argument:
    case ErrorCode::invalid_rho:
    case ErrorCode::model_not_realizable:
        return exit_params;
    case ErrorCode::non_convergence:
        return exit_nonconvergence;
    default:
        return exit_runtime;
    }
}

namespace {

struct DataArgs {
    std::string input;
    std::string response = "y";
    bool map01 = false;
    bool drop_degenerate = false;
};

void add_data_args(CLI::App* cmd, DataArgs& a) {
    cmd->add_option("--input", a.input, "CSV file with a header row")->required();
    cmd->add_option("--response", a.response, "name of the response column")->capture_default_str();
    cmd->add_flag("--map01", a.map01, "factor columns are coded 0/1 instead of -1/+1");
    cmd->add_flag("--drop-degenerate", a.drop_degenerate,
                  "drop constant effect columns instead of failing");
}

struct Loaded {
    Dataset data;
    CmeDesign design;
    std::string hash;
};

Loaded load(const DataArgs& a) {
    const std::string text = read_file(a.input);
    Dataset data = parse_csv(text, a.response, a.map01);
    DesignOptions o;
    o.degenerate = a.drop_degenerate ? DegeneratePolicy::drop : DegeneratePolicy::reject;
    CmeDesign design = build_cme_design(data.factors, o);
    return {std::move(data), std::move(design), hex64(fnv1a(text))};
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::parse_error, "cannot write '" + path + "'");
    f << text;
}

struct ScenarioArgs {
    std::string file;
    Scenario s;
    std::string structure = "sibling";
};

void add_scenario_args(CLI::App* cmd, ScenarioArgs& a, bool bench) {
    cmd->add_option("--scenario", a.file, "JSON scenario file; explicit flags override it");
    cmd->add_option("--n", a.s.n, "observations")->capture_default_str();
    cmd->add_option("--p", a.s.p, "binary factors")->capture_default_str();
    cmd->add_option("--rho", a.s.rho, "latent equicorrelation in [0, 1)")->capture_default_str();
    cmd->add_option("--structure", a.structure, "sibling, cousin or main_effects")->capture_default_str();
    cmd->add_option("--groups", a.s.model.n_groups, "number of active groups")->capture_default_str();
    cmd->add_option("--per-group", a.s.model.n_per_group, "active effects per group")->capture_default_str();
    cmd->add_option("--coefficient", a.s.model.coefficient, "active coefficient")->capture_default_str();
    cmd->add_option("--noise-sd", a.s.model.noise_sd, "noise standard deviation")->capture_default_str();
    cmd->add_option("--seed", a.s.seed, "random seed")->capture_default_str();
    if (bench) {
        cmd->add_option("--reps", a.s.reps, "replications")->capture_default_str();
        cmd->add_option("--folds", a.s.folds, "cross-validation folds")->capture_default_str();
        cmd->add_option("--grid-size", a.s.grid_size, "lambda grid length per penalty")->capture_default_str();
        cmd->add_option("--n-new", a.s.n_new, "fresh observations for prediction error")->capture_default_str();
    }
}

Scenario resolve(const CLI::App* cmd, const ScenarioArgs& a) {
    Scenario s = a.s;
    s.model.structure = parse_structure(a.structure);
    if (a.file.empty()) return s;
    Scenario f;
    try {
        f = scenario_from_json(nlohmann::json::parse(read_file(a.file)));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::parse_error, std::string("scenario: ") + ex.what());
    }
    auto set = [cmd](const char* flag) { return cmd->count(flag) > 0; };
    if (set("--n")) f.n = s.n;
    if (set("--p")) f.p = s.p;
    if (set("--rho")) f.rho = s.rho;
    if (set("--structure")) f.model.structure = s.model.structure;
    if (set("--groups")) f.model.n_groups = s.model.n_groups;
    if (set("--per-group")) f.model.n_per_group = s.model.n_per_group;
    if (set("--coefficient")) f.model.coefficient = s.model.coefficient;
    if (set("--noise-sd")) f.model.noise_sd = s.model.noise_sd;
    if (set("--seed")) f.seed = s.seed;
    if (cmd->get_option_no_throw("--reps")) {
        if (set("--reps")) f.reps = s.reps;
        if (set("--folds")) f.folds = s.folds;
        if (set("--grid-size")) f.grid_size = s.grid_size;
        if (set("--n-new")) f.n_new = s.n_new;
    }
    return f;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bi-level selection of main effects and conditional main effects"};
    app.require_subcommand(1);

    // fit
    DataArgs fit_data;
    PenaltyParams fit_params;
    SolverOptions fit_solver;
    bool fit_no_active = false;
    std::string fit_output;
    int fit_threads = 1;
    auto* fit_cmd = app.add_subcommand("fit", "fit at fixed penalty parameters");
    add_data_args(fit_cmd, fit_data);
    fit_cmd->add_option("--lambda-s", fit_params.lambda_s, "sibling penalty")->required();
    fit_cmd->add_option("--lambda-c", fit_params.lambda_c, "cousin penalty")->required();
    fit_cmd->add_option("--gamma", fit_params.gamma, "MC+ concavity, > 1")->required();
    fit_cmd->add_option("--tau", fit_params.tau, "exponential decay; tau + 1/gamma < 1/2")->required();
    fit_cmd->add_option("--tol", fit_solver.tol, "convergence tolerance")->capture_default_str();
    fit_cmd->add_option("--max-sweeps", fit_solver.max_sweeps, "sweep limit")->capture_default_str();
    fit_cmd->add_flag("--no-active-set", fit_no_active, "always sweep all coordinates");
    fit_cmd->add_option("--output", fit_output, "report path (default: stdout)");
    fit_cmd->add_option("--threads", fit_threads, "worker threads (a single fit is sequential)");

    // cv
    DataArgs cv_data;
    int cv_folds = 10;
    std::uint64_t cv_seed = 1;
    bool cv_no_screen = false;
    bool cv_no_active = false;
    int cv_threads = 1;
    Index cv_grid = 20;
    std::string cv_output;
    auto* cv_cmd = app.add_subcommand("cv", "tune all four parameters by K-fold cross-validation");
    add_data_args(cv_cmd, cv_data);
    cv_cmd->add_option("--folds", cv_folds, "number of folds")->capture_default_str();
    cv_cmd->add_option("--seed", cv_seed, "fold assignment seed")->capture_default_str();
    cv_cmd->add_option("--grid-size", cv_grid, "lambda grid length per penalty")->capture_default_str();
    cv_cmd->add_flag("--no-screen", cv_no_screen, "disable the strong rules");
    cv_cmd->add_flag("--no-active-set", cv_no_active, "always sweep all coordinates");
    cv_cmd->add_option("--threads", cv_threads, "parallel folds")->capture_default_str();
    cv_cmd->add_option("--output", cv_output, "report path (default: stdout)");

    // simulate
    ScenarioArgs sim;
    std::string sim_output;
    std::string sim_truth;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a dataset from the latent model");
    add_scenario_args(sim_cmd, sim, false);
    sim_cmd->add_option("--output", sim_output, "CSV path (default: stdout)");
    sim_cmd->add_option("--truth", sim_truth, "JSON path for the scenario and true effects");

    // bench
    ScenarioArgs bench;
    std::string bench_methods = "cmenet,lasso_limit";
    std::string bench_output;
    std::string bench_csv;
    int bench_threads = 1;
    bool bench_no_screen = false;
    auto* bench_cmd = app.add_subcommand("bench", "selection benchmark over seeded replications");
    add_scenario_args(bench_cmd, bench, true);
    bench_cmd->add_option("--methods", bench_methods, "comma list of cmenet, lasso_limit, oracle")
        ->capture_default_str();
    bench_cmd->add_option("--threads", bench_threads, "parallel replications")->capture_default_str();
    bench_cmd->add_flag("--no-screen", bench_no_screen, "disable the strong rules");
    bench_cmd->add_option("--output", bench_output, "JSON report path (default: stdout)");
    bench_cmd->add_option("--csv", bench_csv, "quantile table CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*fit_cmd) {
            const Loaded in = load(fit_data);
            const PenaltyParams params = PenaltyParams::checked(
                fit_params.lambda_s, fit_params.lambda_c, fit_params.gamma, fit_params.tau);
            fit_solver.use_active_set = !fit_no_active;
            const FitState st = fit(in.design, in.data.y, params, {}, fit_solver);
            const LinearModel model = make_model(in.design, st.beta, in.data.y.mean());
            emit(dump(fit_report(in.design, st, params, model, {in.hash, 0})), fit_output, out);
            if (!st.converged) {
                err << "error: no convergence within " << fit_solver.max_sweeps << " sweeps\n";
                return exit_nonconvergence;
            }
            return exit_ok;
        }
        if (*cv_cmd) {
            const Loaded in = load(cv_data);
            CvGrid grid = default_grid(in.design, in.data.y, cv_grid, cv_grid);
            grid.folds = cv_folds;
            grid.seed = cv_seed;
            CvOptions opts;
            opts.screen = !cv_no_screen;
            opts.threads = cv_threads;
            opts.solver.use_active_set = !cv_no_active;
            const CvResult cv = cv_cmenet(in.data.factors, in.design, in.data.y, grid, opts);
            const LinearModel model = make_model(in.design, cv.final_fit.beta, cv.y_mean);
            emit(dump(cv_report(in.design, cv, model, {in.hash, cv_seed})), cv_output, out);
            if (!cv.final_fit.converged) {
                err << "error: the final refit did not converge\n";
                return exit_nonconvergence;
            }
            return exit_ok;
        }
        if (*sim_cmd) {
            const Scenario s = resolve(sim_cmd, sim);
            const FactorMatrix x = gen_factors({s.n, s.p, s.rho, derive_seed(s.seed, 0, 1)});
            const TrueModel truth = draw_true_model(s.p, s.model, derive_seed(s.seed, 0, 2));
            const Vector y = gen_response(x, truth, s.model.noise_sd, derive_seed(s.seed, 0, 3));
            std::ostringstream csv;
            write_csv(csv, x, y);
            emit(csv.str(), sim_output, out);
            if (!sim_truth.empty()) {
                nlohmann::json effects = nlohmann::json::array();
                for (std::size_t k = 0; k < truth.effects.size(); ++k) {
                    effects.push_back({{"effect", truth.effects[k].name(x.names())},
                                       {"coefficient", truth.coefficients[k]}});
                }
                nlohmann::json j = {{"schema_version", report_schema_version},
                                    {"version", library_version},
                                    {"command", "simulate"},
                                    {"scenario", to_json(s)},
                                    {"effects", effects}};
                emit(dump(j), sim_truth, out);
            }
            return exit_ok;
        }
        if (*bench_cmd) {
            const Scenario s = resolve(bench_cmd, bench);
            BenchOptions opts;
            opts.methods.clear();
            std::stringstream list(bench_methods);
            for (std::string m; std::getline(list, m, ',');) {
                if (!m.empty()) opts.methods.push_back(parse_method(m));
            }
            opts.threads = bench_threads;
            opts.cv.screen = !bench_no_screen;
            const BenchmarkReport r = run_benchmark(s, opts);
            emit(dump(bench_report(r)), bench_output, out);
            if (!bench_csv.empty()) emit(bench_quantile_csv(r), bench_csv, out);
            return exit_ok;
        }
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_usage;
}

} // namespace cmenet
