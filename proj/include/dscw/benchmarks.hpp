#pragma once
// Euclidean comparison estimators.
//
// Both benchmarks reduce to a quadratic program over the simplex on a fixed
// grid: CDF-L2 weight fitting integrates the squared CDF gap exactly on the
// merged atom grid; the W2 benchmark least-squares-fits averaged quantile
// functions on a midpoint tau grid.  The shared solver is projected gradient
// with exact simplex projection and deterministic random restarts.

#include <cstddef>
#include <span>
#include <vector>

#include "dscw/measures.hpp"

namespace dscw {

// Objective lambda' A lambda - 2 b' lambda + c with A symmetric PSD.
struct QuadraticSimplexProblem {
    std::vector<double> a; // j_count x j_count, row-major
    std::vector<double> b; // j_count
    double c = 0.0;
    std::size_t j_count = 0;

    double objective(const std::vector<double>& lambda) const;
    std::vector<double> gradient(const std::vector<double>& lambda) const;
};

// Euclidean projection onto the probability simplex (sort-based, exact).
std::vector<double> project_to_simplex(std::vector<double> x);

// Projected gradient with 10 deterministic restarts; best objective kept.
SimplexWeights solve_simplex_qp(const QuadraticSimplexProblem& prob);

// Weights minimizing the integrated squared gap between the treated CDF and
// the weighted donor CDF mixture.  1D only.
SimplexWeights cdf_l2_estimate(const EmpiricalMeasure& treated,
                               std::span<const EmpiricalMeasure> donors);

// Weights minimizing the mean squared gap between the treated quantile
// function and the lambda-average of donor quantiles on the midpoint grid
// tau_k = (k - 0.5) / K.  1D only, K >= 16.
SimplexWeights quantile_w2_estimate(const EmpiricalMeasure& treated,
                                    std::span<const EmpiricalMeasure> donors,
                                    std::size_t grid_size = 512);

// The benchmark's synthetic object: K uniform atoms at the averaged donor
// quantiles (distinct from the measure mixture).
EmpiricalMeasure quantile_average_synthesis(std::span<const EmpiricalMeasure> donors,
                                            const SimplexWeights& lambda,
                                            std::size_t grid_size = 512);

} // namespace dscw
