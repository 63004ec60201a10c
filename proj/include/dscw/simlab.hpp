#pragma once
// Monte Carlo laboratory: synthetic data-generating processes for the four
// simulation studies, the replication harness, and summary tables.

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dscw/estimator.hpp"
#include "dscw/measures.hpp"
#include "dscw/rng.hpp"

namespace dscw {

enum class Scenario { contamination, support_gap, bimodal_poisson, multivariate };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

struct DgpSpec {
    Scenario scenario = Scenario::contamination;
    double epsilon = 0.0;    // contamination share of atoms per cell
    double mu_out = std::numeric_limits<double>::quiet_NaN(); // NaN: clean cell mean + 8
    double sigma_out = 10.0; // outlier standard deviation
    double gamma = 0.0;      // support gap half-width
    std::size_t n_micro = 300;
    std::size_t t0 = 3;      // pre-treatment periods
    std::size_t t_post = 1;  // post-treatment periods
    std::size_t j_donors = 4;
    std::vector<double> lambda_true = {0.15, 0.25, 0.35, 0.25};
    double sigma_noise = 1.0;
    std::uint64_t seed = 0;
};

void validate_spec(const DgpSpec& spec);

// Gaussian donor mixture with symmetric outlier contamination in every cell.
std::pair<PanelDataset, SimplexWeights> dgp_contamination(const DgpSpec& spec, RandomStream& rng);

// Treated unit lives on [-1/2, 1/2]; donors leave a gap of half-width gamma
// around zero.  No ground-truth weights.
PanelDataset dgp_support_gap(const DgpSpec& spec, RandomStream& rng);

// Treated unit is an equal mixture of Poisson(5) and Poisson(20); the four
// donors are Poisson with means 2, 12, 18, 25.  No ground-truth weights.
PanelDataset dgp_bimodal_poisson(const DgpSpec& spec, RandomStream& rng);

// Correlated bivariate Gaussian donors centred on the four corners of a
// square; the treated unit is their lambda_true mixture.
std::pair<PanelDataset, SimplexWeights> dgp_multivariate(const DgpSpec& spec, RandomStream& rng);

// Integer-bin histogram modes after 3-bin moving-average smoothing (bins past
// the observed range count as empty).  Fractional atom positions split their
// mass linearly between the two adjacent bins.  Returns the bin centres of
// strict local maxima in ascending order.
std::vector<double> detect_modes(const EmpiricalMeasure& m);

struct WeightStats {
    std::vector<double> mean_weights;
    std::vector<double> bias;     // empty when the scenario has no ground truth
    std::vector<double> var;      // sample variance across replications
    double rmse = std::numeric_limits<double>::quiet_NaN();     // sqrt(mean_rep mean_j err^2)
    double rmse_alt = std::numeric_limits<double>::quiet_NaN(); // mean_rep sqrt(mean_j err^2)
    double w1_mean = std::numeric_limits<double>::quiet_NaN();  // synthetic vs observed treated
    double w2_mean = std::numeric_limits<double>::quiet_NaN();
};

struct MethodReport {
    Method method = Method::wgan;
    std::vector<WeightStats> per_period;                 // pre periods, in order
    WeightStats aggregated;
    std::vector<std::vector<double>> aggregated_weights; // one row per replication
    double wall_clock_seconds = 0.0;
};

struct ScatterSeries {
    std::string label;
    std::vector<double> xy; // flat (x, y) pairs
};

struct McReport {
    DgpSpec spec;
    std::size_t n_sim = 0;
    std::vector<MethodReport> methods;
    std::size_t failed_replications = 0;
    // First-replication artifacts for plot emission.
    std::vector<double> pmf_values;               // bimodal: integer support bins
    std::vector<std::string> pmf_series;          // "target" plus per-method labels
    std::vector<std::vector<double>> pmf_mass;    // one row per series
    std::vector<ScatterSeries> scatter;           // multivariate: 2D samples
};

struct McConfig {
    EstimatorConfig estimator;       // adversarial fits; seed is re-derived per replication
    std::size_t quantile_grid = 512; // quantile benchmark grid size
    std::vector<std::size_t> replication_order; // testing hook; empty = 0..n_sim-1
};

// Fits one panel with the given method.  Benchmark reports carry empty loss
// traces and one iteration per period.
EstimationReport fit_panel(const PanelDataset& panel, Method method,
                           const EstimatorConfig& config, std::size_t quantile_grid = 512);

McReport run_monte_carlo(const DgpSpec& spec, const std::vector<Method>& methods,
                         std::size_t n_sim, const McConfig& config = {});

} // namespace dscw
