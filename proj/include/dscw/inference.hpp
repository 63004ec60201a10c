#pragma once
// Placebo permutation test of no distributional effect.
//
// Each unit is assigned the "treated" role in turn, weights are fit on its
// pre-window against the remaining units, and the effect statistic is the
// exact transport distance between the observed and synthetic post-window
// (mean across post periods).  The p-value is the proportion of units whose
// statistic reaches the true treated unit's.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dscw/measures.hpp"

namespace dscw {

struct PlaceboOptions {
    // When set, the true treated unit is dropped from every placebo donor
    // pool rather than serving as a donor for pseudo-treated fits.
    bool exclude_true_treated = false;
};

struct PlaceboResult {
    std::vector<std::string> units;      // true treated first, then donors
    std::vector<double> statistics;      // effect size per unit, same order
    std::vector<SimplexWeights> weights; // fitted weights per unit
    std::size_t count_ge = 0;            // units with statistic >= the treated one
    std::size_t n_units = 0;             // J + 1
    double p_value = 1.0;                // count_ge / n_units
};

// Exact transport distance; 1D uses the closed-form oracle, small
// multivariate instances the LP oracle.
double effect_statistic(const EmpiricalMeasure& observed_post,
                        const EmpiricalMeasure& synthetic_post);

// Fits aggregated donor weights on the pre-window of a (reduced) panel whose
// unit 0 is the pseudo-treated unit; the seed is derived per unit.
using PlaceboFit = std::function<SimplexWeights(const PanelDataset&, std::uint64_t seed)>;

PlaceboResult placebo_distribution(const PanelDataset& panel, const PlaceboFit& fit,
                                   std::uint64_t master_seed,
                                   const PlaceboOptions& options = {});

} // namespace dscw
