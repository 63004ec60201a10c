#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "dscw/benchmarks.hpp"
#include "dscw/measures.hpp"
#include "dscw/ot.hpp"
#include "dscw/rng.hpp"
#include "dscw/simlab.hpp"
#include "test_util.hpp"

using namespace dscw;
using namespace dscw::testutil;

namespace {

std::vector<double> draws(RandomStream& rng, std::size_t n, double mean, double sd = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal(mean, sd);
    return v;
}

QuadraticSimplexProblem random_psd_problem(RandomStream& rng, std::size_t j) {
    QuadraticSimplexProblem prob;
    prob.j_count = j;
    std::vector<double> m(j * j);
    for (double& x : m) x = rng.normal();
    prob.a.assign(j * j, 0.0);
    for (std::size_t r = 0; r < j; ++r) {
        for (std::size_t c = 0; c < j; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < j; ++k) s += m[k * j + r] * m[k * j + c];
            prob.a[r * j + c] = s;
        }
    }
    prob.b.resize(j);
    for (double& x : prob.b) x = rng.normal(0.0, 2.0);
    prob.c = rng.normal();
    return prob;
}

} // namespace

TEST_CASE("simplex projection on hand cases") {
    const std::vector<double> kept = project_to_simplex({0.25, 0.75});
    CHECK(kept[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(kept[1] == doctest::Approx(0.75).epsilon(1e-15));

    const std::vector<double> clipped = project_to_simplex({2.0, 0.0});
    CHECK(clipped[0] == doctest::Approx(1.0));
    CHECK(clipped[1] == doctest::Approx(0.0));

    const std::vector<double> centered = project_to_simplex({1.0, 1.0});
    CHECK(centered[0] == doctest::Approx(0.5));
    CHECK(centered[1] == doctest::Approx(0.5));

    const std::vector<double> negative = project_to_simplex({-1.0, 0.0});
    CHECK(negative[0] == doctest::Approx(0.0));
    CHECK(negative[1] == doctest::Approx(1.0));
}

TEST_CASE("simplex projection is idempotent and closest-point") {
    RandomStream rng(61);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t j = 2 + rng.uniform_index(6);
        std::vector<double> x(j);
        for (double& v : x) v = rng.normal(0.0, 2.0);
        const std::vector<double> p = project_to_simplex(x);
        double total = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(std::fabs(total - 1.0) <= 1e-12);
        const std::vector<double> pp = project_to_simplex(p);
        for (std::size_t k = 0; k < j; ++k) CHECK(std::fabs(pp[k] - p[k]) <= 1e-12);

        // No random simplex point may be closer to x than the projection.
        std::vector<double> y(j);
        double s = 0.0;
        for (double& v : y) {
            v = rng.uniform01() + 1e-9;
            s += v;
        }
        for (double& v : y) v /= s;
        double dp = 0.0, dy = 0.0;
        for (std::size_t k = 0; k < j; ++k) {
            dp += (x[k] - p[k]) * (x[k] - p[k]);
            dy += (x[k] - y[k]) * (x[k] - y[k]);
        }
        CHECK(dp <= dy + 1e-12);
    }
}

TEST_CASE("quadratic problem gradient matches finite differences") {
    RandomStream rng(62);
    const QuadraticSimplexProblem prob = random_psd_problem(rng, 4);
    std::vector<double> lambda = {0.1, 0.2, 0.3, 0.4};
    const std::vector<double> g = prob.gradient(lambda);
    const double h = 1e-6;
    for (std::size_t k = 0; k < 4; ++k) {
        std::vector<double> up = lambda, dn = lambda;
        up[k] += h;
        dn[k] -= h;
        const double fd = (prob.objective(up) - prob.objective(dn)) / (2.0 * h);
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("qp solutions satisfy the projected-gradient stationarity test") {
    RandomStream rng(63);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t j = 2 + rng.uniform_index(5);
        const QuadraticSimplexProblem prob = random_psd_problem(rng, j);
        const SimplexWeights lambda = solve_simplex_qp(prob);
        const std::vector<double> lvec = lambda.values();
        const std::vector<double> grad = prob.gradient(lvec);
        const double s = 1e-3;
        std::vector<double> stepped(j);
        for (std::size_t k = 0; k < j; ++k) stepped[k] = lvec[k] - s * grad[k];
        const std::vector<double> proj = project_to_simplex(stepped);
        double norm = 0.0;
        for (std::size_t k = 0; k < j; ++k) norm += (lvec[k] - proj[k]) * (lvec[k] - proj[k]);
        CHECK(std::sqrt(norm) / s < 1e-7);
    }
}

TEST_CASE("qp solver is deterministic") {
    RandomStream rng(64);
    const QuadraticSimplexProblem prob = random_psd_problem(rng, 5);
    const SimplexWeights a = solve_simplex_qp(prob);
    const SimplexWeights b = solve_simplex_qp(prob);
    for (std::size_t k = 0; k < 5; ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("cdf_l2 recovers an exactly matching donor") {
    RandomStream rng(65);
    const std::vector<double> target = draws(rng, 60, 0.0);
    std::vector<double> lo = draws(rng, 60, -9.0);
    std::vector<double> hi = draws(rng, 60, 9.0);
    const std::vector<EmpiricalMeasure> donors = {atoms(lo), atoms(target), atoms(hi)};
    const EmpiricalMeasure treated = atoms(target);
    const SimplexWeights lambda = cdf_l2_estimate(treated, donors);
    CHECK(std::fabs(lambda[1] - 1.0) <= 1e-6);
    CHECK(std::fabs(lambda[0]) <= 1e-6);
    CHECK(std::fabs(lambda[2]) <= 1e-6);
    CHECK(cdf_l2_sq(treated, weighted_mixture(donors, lambda)) <= 1e-10);
}

TEST_CASE("cdf_l2 with duplicated exact donors reaches zero objective") {
    RandomStream rng(66);
    const std::vector<double> target = draws(rng, 40, 1.0);
    const std::vector<EmpiricalMeasure> donors = {atoms(target), atoms(target)};
    const EmpiricalMeasure treated = atoms(target);
    const SimplexWeights lambda = cdf_l2_estimate(treated, donors);
    CHECK(cdf_l2_sq(treated, weighted_mixture(donors, lambda)) < 1e-10);
}

TEST_CASE("quantile benchmark recovers an exactly matching donor") {
    RandomStream rng(67);
    const std::vector<double> target = draws(rng, 50, 0.0);
    const std::vector<EmpiricalMeasure> donors = {atoms(draws(rng, 50, -7.0)), atoms(target),
                                                  atoms(draws(rng, 50, 7.0))};
    const SimplexWeights lambda = quantile_w2_estimate(atoms(target), donors);
    CHECK(std::fabs(lambda[1] - 1.0) <= 1e-6);
    CHECK(std::fabs(lambda[0]) <= 1e-6);
    CHECK(std::fabs(lambda[2]) <= 1e-6);
}

TEST_CASE("quantile benchmark splits a two-spike target and leaves residual 25") {
    const EmpiricalMeasure treated({0.0, 10.0}, {0.5, 0.5}, 1);
    const std::vector<EmpiricalMeasure> donors = {dirac(0.0), dirac(10.0)};
    const std::size_t grid = 512;
    const SimplexWeights lambda = quantile_w2_estimate(treated, donors, grid);
    CHECK(lambda[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(lambda[1] == doctest::Approx(0.5).epsilon(1e-9));

    // The synthetic quantile function is the constant 5, so every grid point
    // contributes exactly 25 to the mean squared residual.
    const EmpiricalMeasure synth = quantile_average_synthesis(donors, lambda, grid);
    REQUIRE(synth.size() >= 1);
    double residual = 0.0;
    for (std::size_t k = 1; k <= grid; ++k) {
        const double tau = (k - 0.5) / grid;
        const double gap = treated.quantile_eval(tau) - 5.0;
        residual += gap * gap;
    }
    residual /= grid;
    CHECK(residual == 25.0);
}

TEST_CASE("quantile synthesis discretizes a single donor on the tau grid") {
    const std::vector<EmpiricalMeasure> donors = {atoms({1.0, 2.0, 3.0, 4.0}), dirac(0.0)};
    const EmpiricalMeasure synth =
        quantile_average_synthesis(donors, SimplexWeights({1.0, 0.0}), 16);
    REQUIRE(synth.size() >= 1);
    double total = 0.0;
    for (std::size_t i = 0; i < synth.size(); ++i) total += synth.weight(i);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // Atoms are exactly the donor quantiles at the 16 midpoints: four runs of
    // four identical values.
    const EmpiricalMeasure want = atoms({1.0, 2.0, 3.0, 4.0});
    CHECK(w1_exact_1d(synth, want).value <= 1e-12);
}

TEST_CASE("quantile synthesis of two spikes collapses to the midpoint") {
    const std::vector<EmpiricalMeasure> donors = {dirac(0.0), dirac(10.0)};
    const EmpiricalMeasure synth =
        quantile_average_synthesis(donors, SimplexWeights({0.5, 0.5}), 64);
    for (std::size_t i = 0; i < synth.size(); ++i) CHECK(synth.value(i) == 5.0);
}

TEST_CASE("mixture and quantile synthesis diverge on separated spikes") {
    const std::vector<EmpiricalMeasure> donors = {dirac(0.0), dirac(10.0)};
    const SimplexWeights half({0.5, 0.5});
    const EmpiricalMeasure mixture = weighted_mixture(donors, half);
    const EmpiricalMeasure averaged = quantile_average_synthesis(donors, half, 128);
    CHECK(w1_exact_1d(mixture, averaged).value == doctest::Approx(5.0).epsilon(1e-12));

    const std::vector<EmpiricalMeasure> same = {atoms({0.0, 10.0}), atoms({0.0, 10.0})};
    const EmpiricalMeasure m2 = weighted_mixture(same, half);
    const EmpiricalMeasure a2 = quantile_average_synthesis(same, half, 128);
    CHECK(w1_exact_1d(m2, a2).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("quantile averaging hides a separated poisson mixture") {
    RandomStream rng(68);
    std::vector<double> lo(2000), hi(2000);
    for (double& x : lo) x = rng.poisson(2.0);
    for (double& x : hi) x = rng.poisson(25.0);
    const std::vector<EmpiricalMeasure> donors = {atoms(lo), atoms(hi)};
    const SimplexWeights half({0.5, 0.5});

    // The half/half measure mixture keeps a peak in each poisson cluster.
    const std::vector<double> mix_modes = detect_modes(weighted_mixture(donors, half));
    const auto has_mode_near = [&mix_modes](double at) {
        for (double m : mix_modes)
            if (std::fabs(m - at) <= 2.0) return true;
        return false;
    };
    CHECK(has_mode_near(2.0));
    CHECK(has_mode_near(25.0));

    // Quantile averaging collapses the same donors into a single hump
    // centred between the clusters, near 13.5.
    const std::vector<double> synth_modes =
        detect_modes(quantile_average_synthesis(donors, half, 512));
    REQUIRE(synth_modes.size() == 1);
    CHECK(std::fabs(synth_modes[0] - 13.5) <= 2.5);
}

TEST_CASE("benchmarks validate their inputs") {
    const EmpiricalMeasure flat = EmpiricalMeasure::from_samples({0.0, 0.0, 1.0, 1.0}, 2);
    const std::vector<EmpiricalMeasure> donors1d = {dirac(0.0), dirac(1.0)};
    CHECK_THROWS_AS(cdf_l2_estimate(flat, donors1d), std::invalid_argument);
    CHECK_THROWS_AS(quantile_w2_estimate(flat, donors1d), std::invalid_argument);
    CHECK_THROWS_AS(quantile_w2_estimate(dirac(0.0), donors1d, 8), std::invalid_argument);
    // A single donor is legal: the simplex collapses to the point lambda = 1.
    const std::vector<EmpiricalMeasure> single = {dirac(0.0)};
    const SimplexWeights lone = cdf_l2_estimate(dirac(0.0), single);
    REQUIRE(lone.size() == 1);
    CHECK(lone[0] == 1.0);

    QuadraticSimplexProblem bad;
    bad.j_count = 2;
    bad.a = {1.0, 0.5, 0.1, 1.0}; // asymmetric
    bad.b = {0.0, 0.0};
    CHECK_THROWS_AS(solve_simplex_qp(bad), std::invalid_argument);
}
