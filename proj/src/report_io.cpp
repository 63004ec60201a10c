#include "dscw/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dscw/rng.hpp"

namespace dscw {

namespace {

using nlohmann::json;

// NaN marks "not applicable" in reports; strict JSON spells that null.
json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

json to_json(const WeightStats& stats) {
    json j;
    j["mean_weights"] = stats.mean_weights;
    if (!stats.bias.empty()) j["bias"] = stats.bias;
    j["var"] = stats.var;
    j["rmse"] = number_or_null(stats.rmse);
    j["rmse_alt"] = number_or_null(stats.rmse_alt);
    j["w1_mean"] = number_or_null(stats.w1_mean);
    j["w2_mean"] = number_or_null(stats.w2_mean);
    return j;
}

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace

json to_json(const RunManifest& manifest) {
    json inputs = json::array();
    for (const auto& [path, digest] : manifest.input_digests) {
        inputs.push_back({{"path", path}, {"fnv1a64", digest}});
    }
    return json{{"subcommand", manifest.subcommand},
                {"resolved_config", manifest.resolved_config},
                {"inputs", inputs},
                {"master_seed", manifest.master_seed},
                {"tool_version", manifest.tool_version},
                {"started_at", manifest.started_at},
                {"finished_at", manifest.finished_at}};
}

json to_json(const EstimatorConfig& config) {
    return json{{"eta", config.eta},
                {"zeta", config.zeta},
                {"alpha_theta", config.alpha_theta},
                {"alpha_lambda", config.alpha_lambda},
                {"n_critic", config.n_critic},
                {"max_outer_iters", config.max_outer_iters},
                {"lambda_tol", config.lambda_tol},
                {"batch_size", config.batch_size},
                {"temporal_weights", config.temporal_weights},
                {"seed", config.seed},
                {"width", config.width},
                {"hidden_layers", config.hidden_layers},
                {"leaky_slope", config.leaky_slope}};
}

EstimatorConfig estimator_config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("estimator config must be a JSON object");
    EstimatorConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "eta") cfg.eta = value.get<double>();
        else if (key == "zeta") cfg.zeta = value.get<double>();
        else if (key == "alpha_theta") cfg.alpha_theta = value.get<double>();
        else if (key == "alpha_lambda") cfg.alpha_lambda = value.get<double>();
        else if (key == "n_critic") cfg.n_critic = value.get<std::size_t>();
        else if (key == "max_outer_iters") cfg.max_outer_iters = value.get<std::size_t>();
        else if (key == "lambda_tol") cfg.lambda_tol = value.get<double>();
        else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
        else if (key == "temporal_weights") cfg.temporal_weights = value.get<std::vector<double>>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "width") cfg.width = value.get<std::size_t>();
        else if (key == "hidden_layers") cfg.hidden_layers = value.get<std::size_t>();
        else if (key == "leaky_slope") cfg.leaky_slope = value.get<double>();
        else throw std::invalid_argument("unknown estimator config key '" + key + "'");
    }
    validate_config(cfg);
    return cfg;
}

json to_json(const EstimationReport& report) {
    json periods = json::array();
    for (const SimplexWeights& w : report.per_period_weights) periods.push_back(w.values());
    json traces = json::array();
    for (const auto& trace : report.loss_traces) {
        json t = json::array();
        for (const PeriodTracePoint& p : trace) {
            t.push_back({{"critic_objective", p.critic_objective},
                         {"regularized_objective", p.regularized_objective}});
        }
        traces.push_back(std::move(t));
    }
    return json{{"per_period_weights", periods},
                {"aggregated", report.aggregated.values()},
                {"loss_traces", traces},
                {"iterations_used", report.iterations_used},
                {"config", to_json(report.config)},
                {"seed", report.seed}};
}

json to_json(const DgpSpec& spec) {
    return json{{"scenario", scenario_name(spec.scenario)},
                {"epsilon", spec.epsilon},
                {"mu_out", number_or_null(spec.mu_out)},
                {"sigma_out", spec.sigma_out},
                {"gamma", spec.gamma},
                {"n_micro", spec.n_micro},
                {"t0", spec.t0},
                {"t_post", spec.t_post},
                {"j_donors", spec.j_donors},
                {"lambda_true", spec.lambda_true},
                {"sigma_noise", spec.sigma_noise},
                {"seed", spec.seed}};
}

json to_json(const McReport& report) {
    json methods = json::array();
    for (const MethodReport& mr : report.methods) {
        json per_period = json::array();
        for (const WeightStats& s : mr.per_period) per_period.push_back(to_json(s));
        methods.push_back({{"method", method_name(mr.method)},
                           {"per_period", per_period},
                           {"aggregated", to_json(mr.aggregated)},
                           {"aggregated_weights", mr.aggregated_weights},
                           {"timing", {{"wall_clock_seconds", mr.wall_clock_seconds}}}});
    }
    json artifacts;
    if (!report.pmf_values.empty()) {
        artifacts["pmf"] = {{"values", report.pmf_values},
                            {"series", report.pmf_series},
                            {"mass", report.pmf_mass}};
    }
    if (!report.scatter.empty()) {
        json scatter = json::array();
        for (const ScatterSeries& s : report.scatter) {
            scatter.push_back({{"label", s.label}, {"xy", s.xy}});
        }
        artifacts["scatter"] = std::move(scatter);
    }
    return json{{"spec", to_json(report.spec)},
                {"n_sim", report.n_sim},
                {"failed_replications", report.failed_replications},
                {"methods", methods},
                {"artifacts", artifacts}};
}

json to_json(const PlaceboResult& result) {
    json weights = json::array();
    for (const SimplexWeights& w : result.weights) weights.push_back(w.values());
    return json{{"units", result.units},
                {"statistics", result.statistics},
                {"weights", weights},
                {"count_ge", result.count_ge},
                {"n_units", result.n_units},
                {"p_value", result.p_value}};
}

std::string fnv1a_file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read input file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(hash_name(bytes)));
    return hex;
}

std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

void write_summary_csv(const McReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    const std::size_t j_count = report.spec.j_donors;
    out << "Period,Method,W2_mean,W1_mean";
    for (std::size_t j = 1; j <= j_count; ++j) out << ",Bias_l" << j << ",Var_l" << j;
    out << '\n';

    auto row = [&](const std::string& period, const MethodReport& mr, const WeightStats& s) {
        out << period << ',' << method_name(mr.method) << ',' << fmt_g(s.w2_mean) << ','
            << fmt_g(s.w1_mean);
        for (std::size_t j = 0; j < j_count; ++j) {
            out << ',' << (s.bias.empty() ? "" : fmt_g(s.bias[j])) << ',' << fmt_g(s.var[j]);
        }
        out << '\n';
    };
    for (const MethodReport& mr : report.methods) {
        for (std::size_t t = 0; t < mr.per_period.size(); ++t) {
            row(std::to_string(t + 1), mr, mr.per_period[t]);
        }
        row("aggregate", mr, mr.aggregated);
    }
    if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

void emit_plot_data(const std::vector<McReport>& runs, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    bool any_contamination = false;
    bool any_support = false;
    for (const McReport& run : runs) {
        any_contamination |= run.spec.scenario == Scenario::contamination;
        any_support |= run.spec.scenario == Scenario::support_gap;
    }

    if (any_contamination) {
        std::ofstream out = open_out(fs::path(out_dir) / "rmse_vs_eps.csv");
        out << "eps,method,rmse\n";
        for (const McReport& run : runs) {
            if (run.spec.scenario != Scenario::contamination) continue;
            for (const MethodReport& mr : run.methods) {
                out << fmt_g(run.spec.epsilon) << ',' << method_name(mr.method) << ','
                    << fmt_g(mr.aggregated.rmse) << '\n';
            }
        }
    }

    if (any_support) {
        std::ofstream out = open_out(fs::path(out_dir) / "weights_vs_gamma.csv");
        out << "gamma,method,donor,mean_weight,var_weight\n";
        for (const McReport& run : runs) {
            if (run.spec.scenario != Scenario::support_gap) continue;
            for (const MethodReport& mr : run.methods) {
                for (std::size_t j = 0; j < mr.aggregated.mean_weights.size(); ++j) {
                    out << fmt_g(run.spec.gamma) << ',' << method_name(mr.method) << ',' << (j + 1)
                        << ',' << fmt_g(mr.aggregated.mean_weights[j]) << ','
                        << fmt_g(mr.aggregated.var[j]) << '\n';
                }
            }
        }
    }

    for (const McReport& run : runs) {
        if (run.spec.scenario != Scenario::bimodal_poisson || run.pmf_values.empty()) continue;
        auto series_row = [&](const std::string& label) -> const std::vector<double>* {
            for (std::size_t s = 0; s < run.pmf_series.size(); ++s) {
                if (run.pmf_series[s] == label) return &run.pmf_mass[s];
            }
            return nullptr;
        };
        const auto* target = series_row("target");
        const auto* wgan = series_row(method_name(Method::wgan));
        const auto* w2q = series_row(method_name(Method::w2quantile));
        std::ofstream out = open_out(fs::path(out_dir) / "pmf_overlay.csv");
        out << "value,target_mass,wgan_mass,w2q_mass\n";
        for (std::size_t i = 0; i < run.pmf_values.size(); ++i) {
            out << fmt_g(run.pmf_values[i]) << ',' << fmt_g(target ? (*target)[i] : 0.0) << ','
                << fmt_g(wgan ? (*wgan)[i] : 0.0) << ',' << fmt_g(w2q ? (*w2q)[i] : 0.0) << '\n';
        }
        break; // one overlay per emission
    }

    for (const McReport& run : runs) {
        if (run.spec.scenario != Scenario::multivariate || run.scatter.empty()) continue;
        std::ofstream out = open_out(fs::path(out_dir) / "scatter_2d.csv");
        out << "series,x,y\n";
        for (const ScatterSeries& s : run.scatter) {
            for (std::size_t i = 0; i + 1 < s.xy.size(); i += 2) {
                out << s.label << ',' << fmt_g(s.xy[i]) << ',' << fmt_g(s.xy[i + 1]) << '\n';
            }
        }
        break;
    }
}

} // namespace dscw
