#pragma once
// JSON report payloads, run manifests, and tidy plot-series emission.
//
// Reruns with an identical manifest produce byte-identical payloads except
// for the fields explicitly documented as timing (manifest timestamps and
// per-method wall-clock seconds).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dscw/estimator.hpp"
#include "dscw/inference.hpp"
#include "dscw/simlab.hpp"

namespace dscw {

inline constexpr int k_schema_version = 1;
inline constexpr const char* k_tool_version = "dscw 1.0.0";

struct RunManifest {
    std::string subcommand;
    nlohmann::json resolved_config; // every knob after defaulting
    std::vector<std::pair<std::string, std::string>> input_digests; // (path, fnv1a-64 hex)
    std::uint64_t master_seed = 0;
    std::string tool_version = k_tool_version;
    std::string started_at;  // ISO-8601 UTC; excluded from determinism
    std::string finished_at; // ISO-8601 UTC; excluded from determinism
};

nlohmann::json to_json(const RunManifest& manifest);
nlohmann::json to_json(const EstimatorConfig& config);
nlohmann::json to_json(const EstimationReport& report);
nlohmann::json to_json(const DgpSpec& spec);
nlohmann::json to_json(const McReport& report);
nlohmann::json to_json(const PlaceboResult& result);

// Fills unset fields from defaults; rejects unknown keys.
EstimatorConfig estimator_config_from_json(const nlohmann::json& j);

std::string fnv1a_file_digest(const std::string& path);
std::string iso8601_utc_now();

void write_json_file(const std::string& path, const nlohmann::json& j);

// One tidy CSV per figure, derived from the simulation runs present:
// rmse_vs_eps.csv, weights_vs_gamma.csv, pmf_overlay.csv, scatter_2d.csv.
void emit_plot_data(const std::vector<McReport>& runs, const std::string& out_dir);

// Per-run summary table (one row per period and method).
void write_summary_csv(const McReport& report, const std::string& path);

} // namespace dscw
