#include "dscw/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dscw/rng.hpp"

namespace dscw {

double QuadraticSimplexProblem::objective(const std::vector<double>& lambda) const {
    double quad = 0.0, lin = 0.0;
    for (std::size_t j = 0; j < j_count; ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < j_count; ++k) row += a[j * j_count + k] * lambda[k];
        quad += lambda[j] * row;
        lin += b[j] * lambda[j];
    }
    return quad - 2.0 * lin + c;
}

std::vector<double> QuadraticSimplexProblem::gradient(const std::vector<double>& lambda) const {
    std::vector<double> g(j_count, 0.0);
    for (std::size_t j = 0; j < j_count; ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < j_count; ++k) row += a[j * j_count + k] * lambda[k];
        g[j] = 2.0 * (row - b[j]);
    }
    return g;
}

std::vector<double> project_to_simplex(std::vector<double> x) {
    std::vector<double> u = x;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) {
            rho = k + 1;
            theta = t;
        }
    }
    (void)rho;
    for (double& v : x) v = std::max(v - theta, 0.0);
    return x;
}

SimplexWeights solve_simplex_qp(const QuadraticSimplexProblem& prob) {
    const std::size_t j_count = prob.j_count;
    if (j_count == 0 || prob.a.size() != j_count * j_count || prob.b.size() != j_count)
        throw std::invalid_argument("solve_simplex_qp: malformed problem");
    for (std::size_t j = 0; j < j_count; ++j)
        for (std::size_t k = j + 1; k < j_count; ++k)
            if (std::abs(prob.a[j * j_count + k] - prob.a[k * j_count + j]) > 1e-12)
                throw std::invalid_argument("solve_simplex_qp: A must be symmetric");
    if (j_count == 1) return SimplexWeights({1.0});

    // Lipschitz constant of the gradient: 2 lambda_max(A) by power iteration.
    std::vector<double> v(j_count, 1.0 / std::sqrt(static_cast<double>(j_count)));
    double eig = 0.0;
    for (int it = 0; it < 100; ++it) {
        std::vector<double> av(j_count, 0.0);
        for (std::size_t j = 0; j < j_count; ++j)
            for (std::size_t k = 0; k < j_count; ++k) av[j] += prob.a[j * j_count + k] * v[k];
        double nrm = 0.0;
        for (double x : av) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-300) break;
        eig = nrm;
        for (std::size_t j = 0; j < j_count; ++j) v[j] = av[j] / nrm;
    }
    const double step = 1.0 / std::max(2.0 * eig, 1e-12);

    std::vector<double> best;
    double best_obj = 0.0;
    RandomStream restarts(derive_seed(0x51137a5ece5ull, j_count));
    for (int r = 0; r < 10; ++r) {
        std::vector<double> x(j_count, 1.0 / static_cast<double>(j_count));
        if (r > 0) {
            // Uniform-on-the-simplex start via normalized exponentials.
            double total = 0.0;
            for (auto& xi : x) {
                xi = -std::log(1.0 - restarts.uniform01());
                total += xi;
            }
            for (auto& xi : x) xi /= total;
        }
        // Fixed-step projected gradient converges linearly but the rate
        // degrades with the Gram condition number; quantile Grams of
        // similarly-shaped donors are nearly rank-deficient, so a generous
        // iteration cap is needed to resolve vertex optima sharply.  Each
        // iteration is O(J^2) with J <= ~10, so the cap stays cheap.
        for (int it = 0; it < 200000; ++it) {
            const auto g = prob.gradient(x);
            std::vector<double> y(j_count);
            for (std::size_t j = 0; j < j_count; ++j) y[j] = x[j] - step * g[j];
            y = project_to_simplex(std::move(y));
            double move = 0.0;
            for (std::size_t j = 0; j < j_count; ++j) move = std::max(move, std::abs(y[j] - x[j]));
            x.swap(y);
            if (move < 1e-15) break;
        }
        const double obj = prob.objective(x);
        if (best.empty() || obj < best_obj) {
            best = x;
            best_obj = obj;
        }
    }
    return SimplexWeights(std::move(best));
}

namespace {

void require_1d_cellset(const EmpiricalMeasure& treated, std::span<const EmpiricalMeasure> donors,
                        const char* op) {
    if (donors.empty()) throw std::invalid_argument(std::string(op) + ": no donors");
    if (treated.dim() != 1)
        throw std::invalid_argument(std::string(op) + ": undefined for multivariate data");
    for (const auto& m : donors)
        if (m.dim() != 1)
            throw std::invalid_argument(std::string(op) + ": undefined for multivariate data");
}

} // namespace

SimplexWeights cdf_l2_estimate(const EmpiricalMeasure& treated,
                               std::span<const EmpiricalMeasure> donors) {
    require_1d_cellset(treated, donors, "cdf_l2_estimate");
    const std::size_t j_count = donors.size();

    // Merged grid over every atom of every measure involved.
    std::vector<double> grid = treated.sorted_values();
    for (const auto& m : donors)
        grid.insert(grid.end(), m.sorted_values().begin(), m.sorted_values().end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::size_t g = grid.size();
    if (g < 2) {
        // All atoms coincide: every mixture is exact; fall back to uniform.
        return SimplexWeights::uniform(j_count);
    }

    // CDF of each measure at every grid point (value on [x_i, x_{i+1})).
    const auto cdf_on_grid = [&grid, g](const EmpiricalMeasure& m) {
        const auto& sv = m.sorted_values();
        const auto& sc = m.sorted_cumweights();
        std::vector<double> f(g);
        std::size_t i = 0;
        double cur = 0.0;
        for (std::size_t k = 0; k < g; ++k) {
            while (i < sv.size() && sv[i] <= grid[k]) cur = sc[i++];
            f[k] = cur;
        }
        return f;
    };
    const auto f1 = cdf_on_grid(treated);
    std::vector<std::vector<double>> fj(j_count);
    for (std::size_t j = 0; j < j_count; ++j) fj[j] = cdf_on_grid(donors[j]);

    QuadraticSimplexProblem prob;
    prob.j_count = j_count;
    prob.a.assign(j_count * j_count, 0.0);
    prob.b.assign(j_count, 0.0);
    prob.c = 0.0;
    for (std::size_t i = 0; i + 1 < g; ++i) {
        const double len = grid[i + 1] - grid[i];
        for (std::size_t j = 0; j < j_count; ++j) {
            const double vj = fj[j][i];
            prob.b[j] += len * f1[i] * vj;
            for (std::size_t k = j; k < j_count; ++k) {
                const double add = len * vj * fj[k][i];
                prob.a[j * j_count + k] += add;
                if (k != j) prob.a[k * j_count + j] += add;
            }
        }
        prob.c += len * f1[i] * f1[i];
    }
    return solve_simplex_qp(prob);
}

namespace {

// Donor and treated quantiles on the midpoint grid.
std::vector<double> quantiles_on_grid(const EmpiricalMeasure& m, std::size_t k_grid) {
    std::vector<double> q(k_grid);
    for (std::size_t k = 0; k < k_grid; ++k)
        q[k] = m.quantile_eval((static_cast<double>(k) + 0.5) / static_cast<double>(k_grid));
    return q;
}

} // namespace

SimplexWeights quantile_w2_estimate(const EmpiricalMeasure& treated,
                                    std::span<const EmpiricalMeasure> donors,
                                    std::size_t grid_size) {
    require_1d_cellset(treated, donors, "quantile_w2_estimate");
    if (grid_size < 16) throw std::invalid_argument("quantile_w2_estimate: grid_size must be >= 16");
    const std::size_t j_count = donors.size();
    const auto q1 = quantiles_on_grid(treated, grid_size);
    std::vector<std::vector<double>> qj(j_count);
    for (std::size_t j = 0; j < j_count; ++j) qj[j] = quantiles_on_grid(donors[j], grid_size);

    QuadraticSimplexProblem prob;
    prob.j_count = j_count;
    prob.a.assign(j_count * j_count, 0.0);
    prob.b.assign(j_count, 0.0);
    prob.c = 0.0;
    const double inv_k = 1.0 / static_cast<double>(grid_size);
    for (std::size_t k = 0; k < grid_size; ++k) {
        for (std::size_t j = 0; j < j_count; ++j) {
            prob.b[j] += inv_k * q1[k] * qj[j][k];
            for (std::size_t jj = j; jj < j_count; ++jj) {
                const double add = inv_k * qj[j][k] * qj[jj][k];
                prob.a[j * j_count + jj] += add;
                if (jj != j) prob.a[jj * j_count + j] += add;
            }
        }
        prob.c += inv_k * q1[k] * q1[k];
    }
    return solve_simplex_qp(prob);
}

EmpiricalMeasure quantile_average_synthesis(std::span<const EmpiricalMeasure> donors,
                                            const SimplexWeights& lambda,
                                            std::size_t grid_size) {
    if (donors.empty() || donors.size() != lambda.size())
        throw std::invalid_argument("quantile_average_synthesis: donor/weight length mismatch");
    for (const auto& m : donors)
        if (m.dim() != 1)
            throw std::invalid_argument("quantile_average_synthesis: undefined for multivariate data");
    if (grid_size < 1) throw std::invalid_argument("quantile_average_synthesis: empty grid");
    std::vector<double> atoms(grid_size, 0.0);
    for (std::size_t j = 0; j < donors.size(); ++j) {
        if (lambda[j] == 0.0) continue;
        const auto q = quantiles_on_grid(donors[j], grid_size);
        for (std::size_t k = 0; k < grid_size; ++k) atoms[k] += lambda[j] * q[k];
    }
    return EmpiricalMeasure::from_samples(atoms);
}

} // namespace dscw
