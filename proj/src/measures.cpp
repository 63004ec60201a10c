#include "dscw/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace dscw {

namespace {

void check_weights(const std::vector<double>& w, const char* what) {
    if (w.empty()) throw std::invalid_argument(std::string(what) + ": empty weight vector");
    double total = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0)
            throw std::invalid_argument(std::string(what) + ": weights must be finite and nonnegative");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": weights must sum to 1 within 1e-9");
}

void normalize(std::vector<double>& w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
}

} // namespace

SimplexWeights::SimplexWeights(std::vector<double> values) : values_(std::move(values)) {
    check_weights(values_, "SimplexWeights");
    normalize(values_);
}

SimplexWeights SimplexWeights::uniform(std::size_t j_count) {
    if (j_count == 0) throw std::invalid_argument("SimplexWeights::uniform: empty");
    return SimplexWeights(std::vector<double>(j_count, 1.0 / static_cast<double>(j_count)));
}

SimplexWeights SimplexWeights::indicator(std::size_t j_count, std::size_t j) {
    if (j >= j_count) throw std::invalid_argument("SimplexWeights::indicator: index out of range");
    std::vector<double> v(j_count, 0.0);
    v[j] = 1.0;
    return SimplexWeights(std::move(v));
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points, std::vector<double> weights,
                                   std::size_t dim)
    : dim_(dim), points_(std::move(points)), weights_(std::move(weights)) {
    if (dim_ == 0) throw std::invalid_argument("EmpiricalMeasure: dim must be positive");
    if (weights_.empty()) throw std::invalid_argument("EmpiricalMeasure: needs at least one atom");
    if (points_.size() != weights_.size() * dim_)
        throw std::invalid_argument("EmpiricalMeasure: points/weights length mismatch");
    for (double x : points_)
        if (!std::isfinite(x)) throw std::invalid_argument("EmpiricalMeasure: non-finite atom");
    check_weights(weights_, "EmpiricalMeasure");
    normalize(weights_);
    n_ = weights_.size();

    cum_weights_.resize(n_);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        acc += weights_[i];
        cum_weights_[i] = acc;
    }
    cum_weights_.back() = 1.0;

    if (dim_ == 1) {
        std::vector<std::size_t> order(n_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return points_[a] < points_[b]; });
        sorted_values_.resize(n_);
        sorted_cum_.resize(n_);
        acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            sorted_values_[i] = points_[order[i]];
            acc += weights_[order[i]];
            sorted_cum_[i] = acc;
        }
        sorted_cum_.back() = 1.0;
    }
}

EmpiricalMeasure EmpiricalMeasure::from_samples(const std::vector<double>& values_1d) {
    if (values_1d.empty()) throw std::invalid_argument("from_samples: empty input");
    const double w = 1.0 / static_cast<double>(values_1d.size());
    return EmpiricalMeasure(values_1d, std::vector<double>(values_1d.size(), w), 1);
}

EmpiricalMeasure EmpiricalMeasure::from_samples(std::vector<double> rows_flat, std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("from_samples: dim must be positive");
    if (rows_flat.empty() || rows_flat.size() % dim != 0)
        throw std::invalid_argument("from_samples: ragged or empty input");
    const std::size_t n = rows_flat.size() / dim;
    const double w = 1.0 / static_cast<double>(n);
    return EmpiricalMeasure(std::move(rows_flat), std::vector<double>(n, w), dim);
}

void EmpiricalMeasure::require_1d(const char* op) const {
    if (dim_ != 1) throw std::invalid_argument(std::string(op) + ": measure must be one-dimensional");
}

double EmpiricalMeasure::cdf_eval(double x) const {
    require_1d("cdf_eval");
    // Count of sorted atoms <= x; cumulative weight at that count.
    const auto it = std::upper_bound(sorted_values_.begin(), sorted_values_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - sorted_values_.begin());
    return k == 0 ? 0.0 : sorted_cum_[k - 1];
}

double EmpiricalMeasure::quantile_eval(double tau) const {
    require_1d("quantile_eval");
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("quantile_eval: tau must lie in (0,1)");
    // First sorted atom whose cumulative weight reaches tau.
    const auto it = std::lower_bound(sorted_cum_.begin(), sorted_cum_.end(), tau);
    const std::size_t k = std::min(static_cast<std::size_t>(it - sorted_cum_.begin()), n_ - 1);
    return sorted_values_[k];
}

const std::vector<double>& EmpiricalMeasure::sorted_values() const {
    require_1d("sorted_values");
    return sorted_values_;
}

const std::vector<double>& EmpiricalMeasure::sorted_cumweights() const {
    require_1d("sorted_cumweights");
    return sorted_cum_;
}

std::size_t EmpiricalMeasure::sample_atom(RandomStream& rng) const {
    const double u = rng.uniform01();
    const auto it = std::upper_bound(cum_weights_.begin(), cum_weights_.end(), u);
    return std::min(static_cast<std::size_t>(it - cum_weights_.begin()), n_ - 1);
}

std::vector<double> EmpiricalMeasure::mean() const {
    std::vector<double> m(dim_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = 0; k < dim_; ++k) m[k] += weights_[i] * points_[i * dim_ + k];
    return m;
}

EmpiricalMeasure weighted_mixture(std::span<const EmpiricalMeasure> donors,
                                  const SimplexWeights& lambda) {
    if (donors.empty()) throw std::invalid_argument("weighted_mixture: no donors");
    if (donors.size() != lambda.size())
        throw std::invalid_argument("weighted_mixture: donor/weight length mismatch");
    const std::size_t d = donors[0].dim();
    for (const auto& m : donors)
        if (m.dim() != d) throw std::invalid_argument("weighted_mixture: donor dimension mismatch");

    std::vector<double> points;
    std::vector<double> weights;
    for (std::size_t j = 0; j < donors.size(); ++j) {
        if (lambda[j] == 0.0) continue; // zero-weight donors contribute no atoms
        const auto& m = donors[j];
        points.insert(points.end(), m.points_flat().begin(), m.points_flat().end());
        for (std::size_t i = 0; i < m.size(); ++i) weights.push_back(lambda[j] * m.weight(i));
    }
    return EmpiricalMeasure(std::move(points), std::move(weights), d);
}

std::vector<double> sample_mixture(std::span<const EmpiricalMeasure> donors,
                                   const SimplexWeights& lambda,
                                   std::size_t n, RandomStream& rng) {
    if (n == 0) throw std::invalid_argument("sample_mixture: n must be positive");
    if (donors.empty() || donors.size() != lambda.size())
        throw std::invalid_argument("sample_mixture: donor/weight length mismatch");
    const std::size_t d = donors[0].dim();
    for (const auto& m : donors)
        if (m.dim() != d) throw std::invalid_argument("sample_mixture: donor dimension mismatch");

    // Cumulative lambda for the categorical donor draw.
    std::vector<double> cum(lambda.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < lambda.size(); ++j) {
        acc += lambda[j];
        cum[j] = acc;
    }
    cum.back() = 1.0;

    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const std::size_t j = std::min(static_cast<std::size_t>(it - cum.begin()), lambda.size() - 1);
        const std::size_t a = donors[j].sample_atom(rng);
        const double* p = donors[j].point(a);
        std::copy(p, p + d, out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return out;
}

PanelDataset::PanelDataset(std::vector<std::string> units, std::vector<std::string> periods,
                           std::size_t cutoff, std::vector<EmpiricalMeasure> cells)
    : units_(std::move(units)), periods_(std::move(periods)), cutoff_(cutoff),
      cells_(std::move(cells)) {
    if (units_.size() < 2) throw std::invalid_argument("PanelDataset: needs a treated unit and at least one donor");
    if (periods_.size() < 2) throw std::invalid_argument("PanelDataset: needs at least two periods");
    if (cutoff_ < 1 || cutoff_ >= periods_.size())
        throw std::invalid_argument("PanelDataset: cutoff must satisfy 1 <= cutoff < n_periods");
    if (cells_.size() != units_.size() * periods_.size())
        throw std::invalid_argument("PanelDataset: cell count must be n_units * n_periods");
    const std::size_t d = cells_.front().dim();
    for (const auto& c : cells_)
        if (c.dim() != d) throw std::invalid_argument("PanelDataset: cells must share one dimension");
    std::unordered_set<std::string> seen(units_.begin(), units_.end());
    if (seen.size() != units_.size()) throw std::invalid_argument("PanelDataset: duplicate unit names");
    seen = std::unordered_set<std::string>(periods_.begin(), periods_.end());
    if (seen.size() != periods_.size()) throw std::invalid_argument("PanelDataset: duplicate period labels");
}

const EmpiricalMeasure& PanelDataset::cell(std::size_t unit, std::size_t t) const {
    if (unit >= units_.size() || t >= periods_.size())
        throw std::invalid_argument("PanelDataset::cell: index out of range");
    return cells_[t * units_.size() + unit];
}

std::span<const EmpiricalMeasure> PanelDataset::donor_cells(std::size_t t) const {
    if (t >= periods_.size()) throw std::invalid_argument("PanelDataset::donor_cells: period out of range");
    return {cells_.data() + t * units_.size() + 1, units_.size() - 1};
}

} // namespace dscw
