#include "dscw/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dscw/benchmarks.hpp"
#include "dscw/estimator.hpp"
#include "dscw/inference.hpp"
#include "dscw/ot.hpp"
#include "dscw/panel_io.hpp"
#include "dscw/report_io.hpp"
#include "dscw/rng.hpp"
#include "dscw/simlab.hpp"

namespace dscw {

namespace {

using nlohmann::json;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        while (!item.empty() && item.back() == ' ') item.pop_back();
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& csv) {
    std::vector<double> out;
    for (const std::string& item : split_list(csv)) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument("");
            out.push_back(v);
        } catch (const std::exception&) {
            throw std::invalid_argument("invalid number '" + item + "' in list '" + csv + "'");
        }
    }
    return out;
}

void require_file(const std::string& path, const std::string& flag) {
    if (!std::filesystem::exists(path)) {
        throw std::invalid_argument(flag + ": file '" + path + "' does not exist");
    }
}

EstimatorConfig load_config(const std::string& path) {
    if (path.empty()) return EstimatorConfig{};
    require_file(path, "--config");
    std::ifstream in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("--config: cannot parse '" + path + "': " + e.what());
    }
    return estimator_config_from_json(j);
}

struct OracleArgs {
    std::string metric;
    std::string a;
    std::string b;
};

struct EstimateArgs {
    std::string data;
    std::string treated;
    std::string cutoff;
    std::string config_path;
    std::string out;
    std::string method = "wgan";
    std::string period_order;
    std::optional<std::uint64_t> seed;
    std::size_t quantile_grid = 512;
    int jobs = 1;
};

struct SimulateArgs {
    std::string scenario;
    std::size_t nsim = 20;
    std::uint64_t seed = 0;
    std::string out;
    std::string csv_dir;
    std::string plots_dir;
    std::string methods;
    std::string config_path;
    std::optional<std::size_t> n_micro;
    std::optional<std::size_t> t0;
    std::optional<double> eps;
    std::string eps_grid;
    std::optional<double> gamma;
    std::string gamma_grid;
    std::size_t quantile_grid = 512;
    int jobs = 1;
};

struct PlaceboArgs {
    std::string data;
    std::string treated;
    std::string cutoff;
    std::string config_path;
    std::string out;
    std::string method = "cdfl2";
    std::string period_order;
    std::uint64_t seed = 0;
    bool exclude_treated = false;
    std::size_t quantile_grid = 512;
    int jobs = 1;
};

int run_oracle(const OracleArgs& args) {
    require_file(args.a, "--a");
    require_file(args.b, "--b");
    const EmpiricalMeasure a = read_measure_csv(args.a);
    const EmpiricalMeasure b = read_measure_csv(args.b);
    double value = 0.0;
    if (args.metric == "w1") {
        value = a.dim() == 1 ? w1_exact_1d(a, b).value : w1_exact_lp(a, b).value;
    } else if (args.metric == "w2") {
        value = w2_exact_1d(a, b).value;
    } else if (args.metric == "cdfl2") {
        value = cdf_l2_sq(a, b);
    } else {
        throw std::invalid_argument("--metric: unknown metric '" + args.metric +
                                    "' (expected w1|w2|cdfl2)");
    }
    std::printf("%.12f\n", value);
    return 0;
}

int run_estimate(const EstimateArgs& args) {
    RunManifest manifest;
    manifest.subcommand = "estimate";
    manifest.started_at = iso8601_utc_now();

    require_file(args.data, "--data");
    const Method method = method_from_name(args.method);
    EstimatorConfig config = load_config(args.config_path);
    if (args.seed) config.seed = *args.seed;

    const std::vector<std::string> order = split_list(args.period_order);
    const PanelDataset panel = read_panel_csv(args.data, args.treated, args.cutoff, order);
    const EstimationReport report = fit_panel(panel, method, config, args.quantile_grid);

    manifest.resolved_config = {{"data", args.data},
                                {"treated", args.treated},
                                {"cutoff", args.cutoff},
                                {"method", method_name(method)},
                                {"period_order", order},
                                {"estimator", to_json(config)},
                                {"quantile_grid", args.quantile_grid},
                                {"jobs", std::max(args.jobs, 1)}};
    manifest.input_digests.emplace_back(args.data, fnv1a_file_digest(args.data));
    if (!args.config_path.empty()) {
        manifest.input_digests.emplace_back(args.config_path, fnv1a_file_digest(args.config_path));
    }
    manifest.master_seed = config.seed;
    manifest.finished_at = iso8601_utc_now();

    write_json_file(args.out, json{{"schema_version", k_schema_version},
                                   {"manifest", to_json(manifest)},
                                   {"report", to_json(report)}});
    return 0;
}

int run_simulate(const SimulateArgs& args) {
    RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.started_at = iso8601_utc_now();

    const Scenario scenario = scenario_from_name(args.scenario);
    DgpSpec base;
    base.scenario = scenario;
    base.seed = args.seed;
    if (args.n_micro) base.n_micro = *args.n_micro;
    if (args.t0) base.t0 = *args.t0;

    std::vector<Method> methods;
    if (args.methods.empty()) {
        methods = scenario == Scenario::multivariate
                      ? std::vector<Method>{Method::wgan}
                      : std::vector<Method>{Method::wgan, Method::cdfl2, Method::w2quantile};
    } else {
        for (const std::string& name : split_list(args.methods)) {
            methods.push_back(method_from_name(name));
        }
    }

    McConfig mc;
    mc.estimator = load_config(args.config_path);
    mc.quantile_grid = args.quantile_grid;

    // One run per grid point; scalar scenarios get a single run.
    std::vector<DgpSpec> grid;
    if (scenario == Scenario::contamination) {
        std::vector<double> eps_list =
            !args.eps_grid.empty() ? split_doubles(args.eps_grid)
                                   : std::vector<double>{args.eps.value_or(0.04)};
        for (double e : eps_list) {
            DgpSpec s = base;
            s.epsilon = e;
            grid.push_back(s);
        }
    } else if (scenario == Scenario::support_gap) {
        std::vector<double> gamma_list =
            !args.gamma_grid.empty()
                ? split_doubles(args.gamma_grid)
                : (args.gamma ? std::vector<double>{*args.gamma}
                              : std::vector<double>{0.0, 0.45, 0.9});
        for (double g : gamma_list) {
            DgpSpec s = base;
            s.gamma = g;
            grid.push_back(s);
        }
    } else {
        grid.push_back(base);
    }
    for (const DgpSpec& s : grid) validate_spec(s);

    std::vector<McReport> runs;
    runs.reserve(grid.size());
    for (const DgpSpec& s : grid) {
        runs.push_back(run_monte_carlo(s, methods, args.nsim, mc));
    }

    json method_names = json::array();
    for (Method m : methods) method_names.push_back(method_name(m));
    manifest.resolved_config = {{"scenario", scenario_name(scenario)},
                                {"nsim", args.nsim},
                                {"methods", method_names},
                                {"estimator", to_json(mc.estimator)},
                                {"quantile_grid", args.quantile_grid},
                                {"jobs", std::max(args.jobs, 1)}};
    {
        json specs = json::array();
        for (const DgpSpec& s : grid) specs.push_back(to_json(s));
        manifest.resolved_config["grid"] = specs;
    }
    if (!args.config_path.empty()) {
        manifest.input_digests.emplace_back(args.config_path, fnv1a_file_digest(args.config_path));
    }
    manifest.master_seed = args.seed;
    manifest.finished_at = iso8601_utc_now();

    json runs_json = json::array();
    for (const McReport& run : runs) runs_json.push_back(to_json(run));
    write_json_file(args.out, json{{"schema_version", k_schema_version},
                                   {"manifest", to_json(manifest)},
                                   {"runs", runs_json}});

    if (!args.csv_dir.empty()) {
        namespace fs = std::filesystem;
        for (const McReport& run : runs) {
            std::string name = "sim_" + scenario_name(scenario);
            char buf[32];
            if (scenario == Scenario::contamination) {
                std::snprintf(buf, sizeof(buf), "_eps%g", run.spec.epsilon);
                name += buf;
            } else if (scenario == Scenario::support_gap) {
                std::snprintf(buf, sizeof(buf), "_gamma%g", run.spec.gamma);
                name += buf;
            }
            write_summary_csv(run, (fs::path(args.csv_dir) / (name + ".csv")).string());
        }
    }
    if (!args.plots_dir.empty()) emit_plot_data(runs, args.plots_dir);
    return 0;
}

int run_placebo(const PlaceboArgs& args) {
    RunManifest manifest;
    manifest.subcommand = "placebo";
    manifest.started_at = iso8601_utc_now();

    require_file(args.data, "--data");
    const Method method = method_from_name(args.method);
    const EstimatorConfig config = load_config(args.config_path);
    const std::vector<std::string> order = split_list(args.period_order);
    const PanelDataset panel = read_panel_csv(args.data, args.treated, args.cutoff, order);

    const std::size_t grid = args.quantile_grid;
    PlaceboFit fit = [method, config, grid](const PanelDataset& p, std::uint64_t seed) {
        EstimatorConfig c = config;
        c.seed = seed;
        return fit_panel(p, method, c, grid).aggregated;
    };
    PlaceboOptions options;
    options.exclude_true_treated = args.exclude_treated;
    const PlaceboResult result = placebo_distribution(panel, fit, args.seed, options);

    manifest.resolved_config = {{"data", args.data},
                                {"treated", args.treated},
                                {"cutoff", args.cutoff},
                                {"method", method_name(method)},
                                {"period_order", order},
                                {"estimator", to_json(config)},
                                {"quantile_grid", grid},
                                {"exclude_true_treated", options.exclude_true_treated},
                                {"jobs", std::max(args.jobs, 1)}};
    manifest.input_digests.emplace_back(args.data, fnv1a_file_digest(args.data));
    if (!args.config_path.empty()) {
        manifest.input_digests.emplace_back(args.config_path, fnv1a_file_digest(args.config_path));
    }
    manifest.master_seed = args.seed;
    manifest.finished_at = iso8601_utc_now();

    write_json_file(args.out, json{{"schema_version", k_schema_version},
                                   {"manifest", to_json(manifest)},
                                   {"result", to_json(result)}});
    return 0;
}

} // namespace

int parse_and_dispatch(int argc, char** argv) {
    CLI::App app{"Distributional synthetic controls with exact and adversarial transport"};
    app.require_subcommand(1);

    OracleArgs oracle;
    CLI::App* oracle_cmd = app.add_subcommand("oracle", "Exact transport distance between two sample files");
    oracle_cmd->add_option("--metric", oracle.metric, "w1|w2|cdfl2")->required();
    oracle_cmd->add_option("--a", oracle.a, "first sample CSV")->required();
    oracle_cmd->add_option("--b", oracle.b, "second sample CSV")->required();

    EstimateArgs estimate;
    CLI::App* estimate_cmd = app.add_subcommand("estimate", "Fit donor weights on a panel CSV");
    estimate_cmd->add_option("--data", estimate.data, "panel CSV")->required();
    estimate_cmd->add_option("--treated", estimate.treated, "treated unit name")->required();
    estimate_cmd->add_option("--cutoff", estimate.cutoff, "last pre-treatment period label")->required();
    estimate_cmd->add_option("--method", estimate.method, "wgan|cdfl2|w2quantile");
    estimate_cmd->add_option("--config", estimate.config_path, "estimator config JSON");
    estimate_cmd->add_option("--out", estimate.out, "output report JSON")->required();
    estimate_cmd->add_option("--period-order", estimate.period_order, "comma-separated period labels");
    estimate_cmd->add_option("--seed", estimate.seed, "override the config seed");
    estimate_cmd->add_option("--quantile-grid", estimate.quantile_grid, "quantile benchmark grid size");
    estimate_cmd->add_option("--jobs", estimate.jobs, "worker hint (single-threaded engine clamps to 1)");

    SimulateArgs simulate;
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "Run a Monte Carlo study");
    simulate_cmd->add_option("--scenario", simulate.scenario,
                             "contamination|support|bimodal|multivariate")->required();
    simulate_cmd->add_option("--nsim", simulate.nsim, "replications per grid point");
    simulate_cmd->add_option("--seed", simulate.seed, "master seed")->required();
    simulate_cmd->add_option("--out", simulate.out, "output report JSON")->required();
    simulate_cmd->add_option("--csv", simulate.csv_dir, "summary table directory");
    simulate_cmd->add_option("--plots", simulate.plots_dir, "plot data directory");
    simulate_cmd->add_option("--methods", simulate.methods, "comma-separated method names");
    simulate_cmd->add_option("--config", simulate.config_path, "estimator config JSON");
    simulate_cmd->add_option("--n", simulate.n_micro, "atoms per cell");
    simulate_cmd->add_option("--t0", simulate.t0, "pre-treatment periods");
    simulate_cmd->add_option("--eps", simulate.eps, "contamination share");
    simulate_cmd->add_option("--eps-grid", simulate.eps_grid, "comma-separated contamination shares");
    simulate_cmd->add_option("--gamma", simulate.gamma, "support gap half-width");
    simulate_cmd->add_option("--gamma-grid", simulate.gamma_grid, "comma-separated gap half-widths");
    simulate_cmd->add_option("--quantile-grid", simulate.quantile_grid, "quantile benchmark grid size");
    simulate_cmd->add_option("--jobs", simulate.jobs, "worker hint (single-threaded engine clamps to 1)");

    PlaceboArgs placebo;
    CLI::App* placebo_cmd = app.add_subcommand("placebo", "Placebo permutation test");
    placebo_cmd->add_option("--data", placebo.data, "panel CSV")->required();
    placebo_cmd->add_option("--treated", placebo.treated, "treated unit name")->required();
    placebo_cmd->add_option("--cutoff", placebo.cutoff, "last pre-treatment period label")->required();
    placebo_cmd->add_option("--method", placebo.method, "wgan|cdfl2|w2quantile");
    placebo_cmd->add_option("--config", placebo.config_path, "estimator config JSON");
    placebo_cmd->add_option("--out", placebo.out, "output report JSON")->required();
    placebo_cmd->add_option("--period-order", placebo.period_order, "comma-separated period labels");
    placebo_cmd->add_option("--seed", placebo.seed, "master seed");
    placebo_cmd->add_flag("--exclude-treated", placebo.exclude_treated,
                          "drop the true treated unit from placebo donor pools");
    placebo_cmd->add_option("--quantile-grid", placebo.quantile_grid, "quantile benchmark grid size");
    placebo_cmd->add_option("--jobs", placebo.jobs, "worker hint (single-threaded engine clamps to 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(oracle_cmd)) return run_oracle(oracle);
        if (app.got_subcommand(estimate_cmd)) return run_estimate(estimate);
        if (app.got_subcommand(simulate_cmd)) return run_simulate(simulate);
        if (app.got_subcommand(placebo_cmd)) return run_placebo(placebo);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace dscw
