#include "dscw/inference.hpp"

#include <algorithm>
#include <stdexcept>

#include "dscw/ot.hpp"
#include "dscw/rng.hpp"

namespace dscw {

double effect_statistic(const EmpiricalMeasure& observed_post,
                        const EmpiricalMeasure& synthetic_post) {
    if (observed_post.dim() != synthetic_post.dim()) {
        throw std::invalid_argument("effect_statistic: dimension mismatch between observed and synthetic measures");
    }
    if (observed_post.dim() == 1) {
        return w1_exact_1d(observed_post, synthetic_post).value;
    }
    return w1_exact_lp(observed_post, synthetic_post).value;
}

namespace {

// Rebuilds the panel with `pseudo` in the treated slot and the remaining
// units as donors in name order, so the fit and its seed are invariant to
// the labelling of the original panel.
PanelDataset reduced_panel(const PanelDataset& panel, std::size_t pseudo,
                           bool drop_true_treated) {
    std::vector<std::size_t> donors;
    donors.reserve(panel.n_units() - 1);
    for (std::size_t u = 0; u < panel.n_units(); ++u) {
        if (u == pseudo) continue;
        if (drop_true_treated && u == 0) continue;
        donors.push_back(u);
    }
    std::sort(donors.begin(), donors.end(), [&](std::size_t a, std::size_t b) {
        return panel.units()[a] < panel.units()[b];
    });

    std::vector<std::size_t> order;
    order.reserve(donors.size() + 1);
    order.push_back(pseudo);
    order.insert(order.end(), donors.begin(), donors.end());

    std::vector<std::string> units;
    units.reserve(order.size());
    for (std::size_t u : order) units.push_back(panel.units()[u]);

    std::vector<EmpiricalMeasure> cells;
    cells.reserve(order.size() * panel.n_periods());
    for (std::size_t t = 0; t < panel.n_periods(); ++t) {
        for (std::size_t u : order) cells.push_back(panel.cell(u, t));
    }
    return PanelDataset(std::move(units), panel.periods(), panel.cutoff(), std::move(cells));
}

} // namespace

PlaceboResult placebo_distribution(const PanelDataset& panel, const PlaceboFit& fit,
                                   std::uint64_t master_seed,
                                   const PlaceboOptions& options) {
    if (!fit) throw std::invalid_argument("placebo_distribution: fit callback is empty");
    if (panel.cutoff() >= panel.n_periods()) {
        throw std::invalid_argument("placebo_distribution: panel has no post-treatment periods");
    }
    if (panel.n_units() < 3) {
        throw std::invalid_argument("placebo_distribution: need at least two donors for placebo fits");
    }

    PlaceboResult result;
    result.n_units = panel.n_units();
    result.units.reserve(panel.n_units());
    result.statistics.reserve(panel.n_units());
    result.weights.reserve(panel.n_units());

    for (std::size_t u = 0; u < panel.n_units(); ++u) {
        const bool drop = options.exclude_true_treated && u != 0;
        PanelDataset sub = reduced_panel(panel, u, drop);
        const std::uint64_t unit_seed = derive_seed(master_seed, hash_name(panel.units()[u]));
        SimplexWeights lambda = fit(sub, unit_seed);

        double stat = 0.0;
        std::size_t n_post = 0;
        for (std::size_t t = sub.cutoff(); t < sub.n_periods(); ++t) {
            EmpiricalMeasure synth = weighted_mixture(sub.donor_cells(t), lambda);
            stat += effect_statistic(sub.treated_cell(t), synth);
            ++n_post;
        }
        stat /= static_cast<double>(n_post);

        result.units.push_back(panel.units()[u]);
        result.statistics.push_back(stat);
        result.weights.push_back(std::move(lambda));
    }

    const double treated_stat = result.statistics.front();
    for (double s : result.statistics) {
        if (s >= treated_stat) ++result.count_ge;
    }
    result.p_value = static_cast<double>(result.count_ge) / static_cast<double>(result.n_units);
    return result;
}

} // namespace dscw
