#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dscw/measures.hpp"
#include "dscw/rng.hpp"
#include "test_util.hpp"

using namespace dscw;
using namespace dscw::testutil;

TEST_CASE("from_samples builds uniform-weight measures") {
    const EmpiricalMeasure m = atoms({1.0, 2.0, 3.0});
    REQUIRE(m.size() == 3);
    CHECK(m.dim() == 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(m.weight(i) == doctest::Approx(1.0 / 3.0));
    CHECK(m.value(0) == 1.0);
    CHECK(m.value(2) == 3.0);

    const EmpiricalMeasure origin = EmpiricalMeasure::from_samples({0.0, 0.0}, 2);
    CHECK(origin.size() == 1);
    CHECK(origin.dim() == 2);
    CHECK(origin.weight(0) == 1.0);

    RandomStream rng(1);
    std::vector<double> draws(300);
    for (double& d : draws) d = rng.normal();
    const EmpiricalMeasure big = atoms(draws);
    CHECK(big.size() == 300);
    CHECK(big.weight(17) == doctest::Approx(1.0 / 300.0));
}

TEST_CASE("from_samples rejects empty and ragged input") {
    CHECK_THROWS_AS(EmpiricalMeasure::from_samples(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure::from_samples({1.0, 2.0, 3.0}, 2), std::invalid_argument);
}

TEST_CASE("simplex weights validate and normalize") {
    const SimplexWeights w({0.25, 0.75});
    CHECK(w[0] == doctest::Approx(0.25));
    CHECK_THROWS_AS(SimplexWeights({-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(SimplexWeights({0.4, 0.4}), std::invalid_argument);
    const SimplexWeights u = SimplexWeights::uniform(4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(u[j] == doctest::Approx(0.25));
    const SimplexWeights e2 = SimplexWeights::indicator(4, 2);
    CHECK(e2[2] == 1.0);
    CHECK(e2[0] == 0.0);
}

TEST_CASE("weighted_mixture matches the worked cases") {
    const std::vector<EmpiricalMeasure> donors = {dirac(0.0), dirac(1.0)};

    const EmpiricalMeasure degenerate = weighted_mixture(donors, SimplexWeights({1.0, 0.0}));
    REQUIRE(degenerate.size() == 1);
    CHECK(degenerate.value(0) == 0.0);
    CHECK(degenerate.weight(0) == 1.0);

    const EmpiricalMeasure half = weighted_mixture(donors, SimplexWeights({0.5, 0.5}));
    REQUIRE(half.size() == 2);
    CHECK(half.value(0) == 0.0);
    CHECK(half.value(1) == 1.0);
    CHECK(half.weight(0) == doctest::Approx(0.5));
    CHECK(half.weight(1) == doctest::Approx(0.5));
}

TEST_CASE("weighted_mixture of 300-atom donors carries lambda-scaled weights") {
    RandomStream rng(2);
    std::vector<EmpiricalMeasure> donors;
    for (int j = 0; j < 4; ++j) {
        std::vector<double> v(300);
        for (double& x : v) x = rng.normal(j, 1.0);
        donors.push_back(atoms(v));
    }
    const EmpiricalMeasure mix =
        weighted_mixture(donors, SimplexWeights({0.15, 0.25, 0.35, 0.25}));
    REQUIRE(mix.size() == 1200);
    // Donor 3's block starts after donors 1-2 (600 atoms in).
    CHECK(mix.weight(600) == doctest::Approx(0.35 / 300.0));
    double total = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i) total += mix.weight(i);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weighted_mixture drops zero-weight donors and validates shapes") {
    const std::vector<EmpiricalMeasure> donors = {atoms({0.0, 1.0}), dirac(5.0)};
    const EmpiricalMeasure mix = weighted_mixture(donors, SimplexWeights({0.0, 1.0}));
    CHECK(mix.size() == 1);
    CHECK(mix.value(0) == 5.0);
    CHECK_THROWS_AS(weighted_mixture(donors, SimplexWeights({1.0})), std::invalid_argument);
}

TEST_CASE("mixture mass sums to one under fuzzing") {
    RandomStream rng(3);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t j_count = 2 + rng.uniform_index(4);
        std::vector<EmpiricalMeasure> donors;
        std::vector<double> raw(j_count);
        double sum = 0.0;
        for (std::size_t j = 0; j < j_count; ++j) {
            std::vector<double> v(1 + rng.uniform_index(8));
            for (double& x : v) x = rng.normal();
            donors.push_back(atoms(v));
            raw[j] = rng.uniform01() + 1e-3;
            sum += raw[j];
        }
        for (double& r : raw) r /= sum;
        const EmpiricalMeasure mix = weighted_mixture(donors, SimplexWeights(raw));
        double total = 0.0;
        for (std::size_t i = 0; i < mix.size(); ++i) total += mix.weight(i);
        CHECK(std::fabs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("sample_mixture selects donors with probability lambda") {
    std::vector<EmpiricalMeasure> donors = {atoms({10.0, 11.0}), atoms({20.0, 21.0}),
                                            atoms({30.0, 31.0}), atoms({40.0, 41.0})};

    RandomStream rng(4);
    const std::vector<double> only_first =
        sample_mixture(donors, SimplexWeights({1.0, 0.0, 0.0, 0.0}), 200, rng);
    for (double x : only_first) CHECK(x < 12.0);

    RandomStream rng2(5);
    const std::vector<double> draws =
        sample_mixture(donors, SimplexWeights::uniform(4), 40000, rng2);
    std::vector<int> counts(4, 0);
    for (double x : draws) counts[static_cast<int>(x / 10.0) - 1] += 1;
    // Binomial(40000, 1/4): sd = sqrt(40000 * 3/16) ~ 86.6; 3 sigma ~ 260.
    for (int c : counts) CHECK(std::fabs(c - 10000.0) <= 260.0);

    RandomStream a(42), b(42);
    CHECK(sample_mixture(donors, SimplexWeights::uniform(4), 100, a) ==
          sample_mixture(donors, SimplexWeights::uniform(4), 100, b));
    RandomStream c(6);
    CHECK_THROWS_AS(sample_mixture(donors, SimplexWeights::uniform(4), 0, c),
                    std::invalid_argument);
}

TEST_CASE("sample_mixture selection frequencies tighten as n grows") {
    std::vector<EmpiricalMeasure> donors = {dirac(0.0), dirac(1.0), dirac(2.0)};
    const SimplexWeights lambda({0.2, 0.5, 0.3});
    int monotone = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
        auto tv_at = [&](std::size_t n, std::uint64_t seed) {
            RandomStream rng(seed);
            const std::vector<double> draws = sample_mixture(donors, lambda, n, rng);
            std::vector<double> freq(3, 0.0);
            for (double x : draws) freq[static_cast<int>(x)] += 1.0 / n;
            double tv = 0.0;
            for (int j = 0; j < 3; ++j) tv += 0.5 * std::fabs(freq[j] - lambda[j]);
            return tv;
        };
        if (tv_at(10000, 100 + s) < tv_at(100, 100 + s)) monotone += 1;
    }
    CHECK(monotone >= static_cast<int>(0.85 * seeds));
}

TEST_CASE("cdf_eval is the right-continuous step function") {
    CHECK(dirac(0.0).cdf_eval(-1.0) == 0.0);
    CHECK(dirac(0.0).cdf_eval(0.0) == 1.0);
    CHECK(atoms({1.0, 2.0, 3.0}).cdf_eval(2.0) == doctest::Approx(2.0 / 3.0));
    const EmpiricalMeasure mix({0.0, 5.0}, {0.3, 0.7}, 1);
    CHECK(mix.cdf_eval(3.0) == doctest::Approx(0.3));
    const EmpiricalMeasure flat = EmpiricalMeasure::from_samples({0.0, 0.0, 1.0, 1.0}, 2);
    CHECK_THROWS_AS(flat.cdf_eval(0.0), std::invalid_argument);
}

TEST_CASE("quantile_eval is the generalized inverse") {
    CHECK(dirac(5.0).quantile_eval(0.01) == 5.0);
    CHECK(dirac(5.0).quantile_eval(0.99) == 5.0);
    const EmpiricalMeasure mix({0.0, 10.0}, {0.5, 0.5}, 1);
    CHECK(mix.quantile_eval(0.4) == 0.0);
    CHECK(mix.quantile_eval(0.6) == 10.0);
    CHECK(atoms({1.0, 2.0, 3.0, 4.0}).quantile_eval(0.5) == 2.0);
    CHECK_THROWS_AS(mix.quantile_eval(0.0), std::invalid_argument);
    CHECK_THROWS_AS(mix.quantile_eval(1.0), std::invalid_argument);
}

TEST_CASE("quantile and cdf satisfy the Galois inequality") {
    RandomStream rng(8);
    std::vector<double> v(50);
    for (double& x : v) x = rng.normal();
    const EmpiricalMeasure m = atoms(v);
    for (int k = 1; k < 100; ++k) {
        const double tau = k / 100.0;
        CHECK(m.cdf_eval(m.quantile_eval(tau)) >= tau - 1e-12);
    }
    // Just above the mass to the left of an atom, the quantile returns it.
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double below = i / 50.0;
        CHECK(m.quantile_eval(below + 1e-9) == sorted[i]);
    }
}

TEST_CASE("panel dataset validates its shape") {
    const auto panel = panel_1d(
        {
            {{1.0, 2.0}, {3.0}},       // treated
            {{0.0}, {0.5}},            // donor1
            {{1.5, 2.5, 3.5}, {4.0}},  // donor2
        },
        1);
    CHECK(panel.n_units() == 3);
    CHECK(panel.n_donors() == 2);
    CHECK(panel.n_periods() == 2);
    CHECK(panel.cutoff() == 1);
    CHECK(panel.is_pre(0));
    CHECK(!panel.is_pre(1));
    CHECK(panel.treated_cell(0).size() == 2);
    CHECK(panel.donor_cells(1).size() == 2);
    CHECK(panel.donor_cells(1)[1].value(0) == 4.0);
    CHECK(panel.cell(2, 0).size() == 3); // unbalanced cells allowed

    std::vector<EmpiricalMeasure> cells;
    for (int i = 0; i < 4; ++i) cells.push_back(dirac(i));
    CHECK_THROWS_AS(PanelDataset({"a", "b"}, {"1", "2"}, 2, cells), std::invalid_argument);
    CHECK_THROWS_AS(PanelDataset({"a", "b"}, {"1", "2"}, 0, cells), std::invalid_argument);
    CHECK_THROWS_AS(PanelDataset({"a", "a"}, {"1", "2"}, 1, cells), std::invalid_argument);
    std::vector<EmpiricalMeasure> mixed = {dirac(0.0), dirac(1.0), dirac(2.0),
                                           EmpiricalMeasure::from_samples({0.0, 0.0}, 2)};
    CHECK_THROWS_AS(PanelDataset({"a", "b"}, {"1", "2"}, 1, mixed), std::invalid_argument);
}

TEST_CASE("measure mean is the weighted atom average") {
    const EmpiricalMeasure m({0.0, 10.0}, {0.25, 0.75}, 1);
    CHECK(m.mean()[0] == doctest::Approx(7.5));
}
