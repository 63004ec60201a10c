#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dscw/inference.hpp"
#include "dscw/measures.hpp"
#include "dscw/rng.hpp"
#include "test_util.hpp"

using namespace dscw;
using namespace dscw::testutil;

namespace {

const PlaceboFit uniform_fit = [](const PanelDataset& panel, std::uint64_t) {
    return SimplexWeights::uniform(panel.n_donors());
};

std::vector<double> draws(RandomStream& rng, std::size_t n, double mean, double sd = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal(mean, sd);
    return v;
}

// Five units, one pre and one post period; the treated post cell sits `shift`
// away from a common baseline while donors scatter tightly around it.
PanelDataset shifted_panel(double shift, std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<std::vector<std::vector<double>>> cells;
    for (int u = 0; u < 5; ++u) {
        const double post_mean = (u == 0) ? shift : 0.05 * u;
        cells.push_back({draws(rng, 30, 0.0), draws(rng, 30, post_mean, 0.3)});
    }
    return panel_1d(cells, 1);
}

} // namespace

TEST_CASE("effect statistic is the transport gap") {
    CHECK(effect_statistic(dirac(0.0), dirac(0.0)) == 0.0);
    CHECK(effect_statistic(dirac(0.0), dirac(2.0)) == doctest::Approx(2.0));
    CHECK(effect_statistic(atoms({0.0, 1.0}), atoms({0.0, 1.0})) == 0.0);
    const EmpiricalMeasure a2 = EmpiricalMeasure::from_samples({0.0, 0.0}, 2);
    const EmpiricalMeasure b2 = EmpiricalMeasure::from_samples({3.0, 4.0}, 2);
    CHECK(effect_statistic(a2, b2) == doctest::Approx(5.0));
    CHECK_THROWS_AS(effect_statistic(dirac(0.0), a2), std::invalid_argument);
}

TEST_CASE("identical units force p = 1") {
    RandomStream rng(71);
    const std::vector<double> pre = draws(rng, 20, 0.0);
    const std::vector<double> post = draws(rng, 20, 1.0);
    const PanelDataset panel =
        panel_1d({{pre, post}, {pre, post}, {pre, post}, {pre, post}, {pre, post}}, 1);
    const PlaceboResult res = placebo_distribution(panel, uniform_fit, 3);
    CHECK(res.p_value == 1.0);
    CHECK(res.count_ge == 5);
    for (double s : res.statistics) CHECK(s <= 1e-12);
}

TEST_CASE("a clearly shifted treated unit earns the smallest attainable p") {
    const PlaceboResult res = placebo_distribution(shifted_panel(6.0, 72), uniform_fit, 9);
    CHECK(res.p_value == doctest::Approx(0.2));
    CHECK(res.count_ge == 1);
    CHECK(res.units.front() == "treated");
    CHECK(res.statistics.front() ==
          *std::max_element(res.statistics.begin(), res.statistics.end()));
}

TEST_CASE("p values live on the placebo support grid") {
    for (std::uint64_t seed : {101ull, 202ull, 303ull, 404ull}) {
        const PlaceboResult res =
            placebo_distribution(shifted_panel(0.0, seed), uniform_fit, seed);
        const double scaled = res.p_value * 5.0;
        CHECK(std::fabs(scaled - std::llround(scaled)) <= 1e-12);
        CHECK(res.p_value >= 0.2 - 1e-12);
        CHECK(res.p_value <= 1.0 + 1e-12);
    }
}

TEST_CASE("the p value ignores donor labelling order") {
    const PanelDataset base = shifted_panel(1.0, 73);
    const PlaceboResult want = placebo_distribution(base, uniform_fit, 5);

    std::vector<std::size_t> donor_order = {1, 2, 3, 4};
    int tried = 0;
    do {
        std::vector<std::size_t> order = {0};
        order.insert(order.end(), donor_order.begin(), donor_order.end());
        std::vector<std::string> units;
        for (std::size_t u : order) units.push_back(base.units()[u]);
        std::vector<EmpiricalMeasure> cells;
        for (std::size_t t = 0; t < base.n_periods(); ++t) {
            for (std::size_t u : order) cells.push_back(base.cell(u, t));
        }
        const PanelDataset shuffled(units, base.periods(), base.cutoff(), cells);
        const PlaceboResult got = placebo_distribution(shuffled, uniform_fit, 5);
        CHECK(got.p_value == want.p_value);
        CHECK(got.statistics.front() == doctest::Approx(want.statistics.front()).epsilon(1e-12));
        tried += 1;
    } while (std::next_permutation(donor_order.begin(), donor_order.end()));
    CHECK(tried == 24);
}

TEST_CASE("p is monotone in the size of the treated shift") {
    double prev = 2.0;
    for (double shift : {0.0, 0.5, 1.0, 2.0}) {
        const PlaceboResult res =
            placebo_distribution(shifted_panel(shift, 74), uniform_fit, 11);
        CHECK(res.p_value <= prev + 1e-12);
        prev = res.p_value;
    }
    CHECK(prev == doctest::Approx(0.2));
}

TEST_CASE("excluding the true treated unit shrinks placebo donor pools") {
    const PanelDataset base = shifted_panel(4.0, 75);
    std::vector<std::size_t> pool_sizes;
    const PlaceboFit probe = [&](const PanelDataset& sub, std::uint64_t) {
        pool_sizes.push_back(sub.n_donors());
        return SimplexWeights::uniform(sub.n_donors());
    };
    PlaceboOptions opt;
    opt.exclude_true_treated = true;
    placebo_distribution(base, probe, 1, opt);
    REQUIRE(pool_sizes.size() == 5);
    CHECK(pool_sizes[0] == 4); // the true treated unit keeps every donor
    for (std::size_t i = 1; i < 5; ++i) CHECK(pool_sizes[i] == 3);
}

TEST_CASE("per-unit seeds are stable under the master seed") {
    const PanelDataset base = shifted_panel(2.0, 76);
    std::vector<std::uint64_t> seen_a, seen_b;
    const PlaceboFit grab_a = [&](const PanelDataset& sub, std::uint64_t s) {
        seen_a.push_back(s);
        return SimplexWeights::uniform(sub.n_donors());
    };
    const PlaceboFit grab_b = [&](const PanelDataset& sub, std::uint64_t s) {
        seen_b.push_back(s);
        return SimplexWeights::uniform(sub.n_donors());
    };
    placebo_distribution(base, grab_a, 17);
    placebo_distribution(base, grab_b, 17);
    CHECK(seen_a == seen_b);
    std::sort(seen_a.begin(), seen_a.end());
    CHECK(std::adjacent_find(seen_a.begin(), seen_a.end()) == seen_a.end());
}

TEST_CASE("placebo rejects degenerate inputs and propagates fit failures") {
    const PanelDataset base = shifted_panel(1.0, 77);
    CHECK_THROWS_AS(placebo_distribution(base, PlaceboFit{}, 1), std::invalid_argument);

    // A post-period-free panel is unrepresentable: the dataset type itself
    // requires at least one period on each side of the cutoff.
    RandomStream rng(78);
    CHECK_THROWS_AS(
        panel_1d({{draws(rng, 5, 0.0)}, {draws(rng, 5, 0.0)}, {draws(rng, 5, 0.0)}}, 1),
        std::invalid_argument);

    const PanelDataset two_units =
        panel_1d({{draws(rng, 5, 0.0), draws(rng, 5, 0.0)},
                  {draws(rng, 5, 0.0), draws(rng, 5, 0.0)}},
                 1);
    CHECK_THROWS_AS(placebo_distribution(two_units, uniform_fit, 1), std::invalid_argument);

    const PlaceboFit failing = [](const PanelDataset&, std::uint64_t) -> SimplexWeights {
        throw std::runtime_error("fit exploded");
    };
    CHECK_THROWS_AS(placebo_distribution(base, failing, 1), std::runtime_error);
}
