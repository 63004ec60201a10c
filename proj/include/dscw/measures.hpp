#pragma once
// Empirical probability measures, simplex weight vectors, and panels.
//
// An EmpiricalMeasure is a finite list of weighted atoms in R^d, immutable
// after construction.  Atoms are stored flat and row-major; weights are
// validated to the simplex and renormalized exactly.  One-dimensional
// measures eagerly cache a sorted view so CDF/quantile evaluation and the
// exact transport sweeps are O(log n) / O(n).

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dscw/rng.hpp"

namespace dscw {

// Nonnegative weights summing to one (validated within 1e-9, then
// renormalized exactly).
class SimplexWeights {
public:
    explicit SimplexWeights(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t j) const { return values_[j]; }
    const std::vector<double>& values() const { return values_; }

    static SimplexWeights uniform(std::size_t j_count);
    static SimplexWeights indicator(std::size_t j_count, std::size_t j);

private:
    std::vector<double> values_;
};

class EmpiricalMeasure {
public:
    // points: n*d flat row-major atom coordinates; weights: n entries.
    EmpiricalMeasure(std::vector<double> points, std::vector<double> weights, std::size_t dim);

    // Uniform-weight construction from raw samples.
    static EmpiricalMeasure from_samples(const std::vector<double>& values_1d);
    static EmpiricalMeasure from_samples(std::vector<double> rows_flat, std::size_t dim);

    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }
    const double* point(std::size_t i) const { return points_.data() + i * dim_; }
    double value(std::size_t i) const { return points_[i * dim_]; } // 1D shorthand
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<double>& points_flat() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }

    // Right-continuous CDF F(x) = sum of weights at atoms <= x.  1D only.
    double cdf_eval(double x) const;

    // Generalized inverse Q(tau) = inf{x : F(x) >= tau}, tau in (0,1).
    double quantile_eval(double tau) const;

    // Sorted 1D view: atom values ascending with matching cumulative weights
    // (cum.back() == 1).  1D only.
    const std::vector<double>& sorted_values() const;
    const std::vector<double>& sorted_cumweights() const;

    // Weight-proportional atom draw (uniform atom for uniform weights).
    std::size_t sample_atom(RandomStream& rng) const;

    std::vector<double> mean() const;

private:
    void require_1d(const char* op) const;

    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> points_;
    std::vector<double> weights_;
    std::vector<double> cum_weights_;    // stored-order cumulative weights
    std::vector<double> sorted_values_;  // 1D only
    std::vector<double> sorted_cum_;     // 1D only
};

// Exact mixture: union of donor atoms, donor-j atom weights scaled by
// lambda_j; donors with lambda_j = 0 contribute no atoms.
EmpiricalMeasure weighted_mixture(std::span<const EmpiricalMeasure> donors,
                                  const SimplexWeights& lambda);

// n i.i.d. draws from the mixture: donor by lambda, then an atom of that
// donor.  Returns flat row-major rows (n x d).
std::vector<double> sample_mixture(std::span<const EmpiricalMeasure> donors,
                                   const SimplexWeights& lambda,
                                   std::size_t n, RandomStream& rng);

// Panel of J+1 units by T periods of empirical measures; unit 0 is treated,
// periods [0, cutoff) are pre-treatment.
class PanelDataset {
public:
    // cells are period-major: cells[t * n_units + u].
    PanelDataset(std::vector<std::string> units, std::vector<std::string> periods,
                 std::size_t cutoff, std::vector<EmpiricalMeasure> cells);

    std::size_t n_units() const { return units_.size(); }
    std::size_t n_donors() const { return units_.size() - 1; }
    std::size_t n_periods() const { return periods_.size(); }
    std::size_t cutoff() const { return cutoff_; } // count of pre periods
    std::size_t dim() const { return cells_.front().dim(); }
    bool is_pre(std::size_t t) const { return t < cutoff_; }

    const std::vector<std::string>& units() const { return units_; }
    const std::vector<std::string>& periods() const { return periods_; }

    const EmpiricalMeasure& cell(std::size_t unit, std::size_t t) const;
    const EmpiricalMeasure& treated_cell(std::size_t t) const { return cell(0, t); }
    // Donor cells of one period as a contiguous span (donor j = unit j+1).
    std::span<const EmpiricalMeasure> donor_cells(std::size_t t) const;

private:
    std::vector<std::string> units_;
    std::vector<std::string> periods_;
    std::size_t cutoff_ = 0;
    std::vector<EmpiricalMeasure> cells_;
};

} // namespace dscw
