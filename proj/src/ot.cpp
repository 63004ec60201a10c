#include "dscw/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dscw {

namespace {

void require_1d_pair(const EmpiricalMeasure& p, const EmpiricalMeasure& q, const char* op) {
    if (p.dim() != 1 || q.dim() != 1)
        throw std::invalid_argument(std::string(op) + ": both measures must be one-dimensional");
}

// Merged-support sweep over both CDFs; gap_fn maps the CDF difference on a
// segment to the integrand value.
template <typename GapFn>
double cdf_sweep(const EmpiricalMeasure& p, const EmpiricalMeasure& q, GapFn gap_fn) {
    const auto& pv = p.sorted_values();
    const auto& pc = p.sorted_cumweights();
    const auto& qv = q.sorted_values();
    const auto& qc = q.sorted_cumweights();
    const std::size_t np = pv.size(), nq = qv.size();
    std::size_t i = 0, j = 0;
    double fp = 0.0, fq = 0.0, acc = 0.0, last_x = 0.0;
    bool first = true;
    while (i < np || j < nq) {
        const double x = (i < np && (j >= nq || pv[i] <= qv[j])) ? pv[i] : qv[j];
        if (!first) acc += gap_fn(fp - fq) * (x - last_x);
        while (i < np && pv[i] == x) fp = pc[i++];
        while (j < nq && qv[j] == x) fq = qc[j++];
        last_x = x;
        first = false;
    }
    return acc;
}

// Per-atom weights of the sorted view, recovered from cumulative weights.
std::vector<double> sorted_weights(const EmpiricalMeasure& m) {
    const auto& cum = m.sorted_cumweights();
    std::vector<double> w(cum.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < cum.size(); ++i) {
        w[i] = cum[i] - prev;
        prev = cum[i];
    }
    return w;
}

double euclidean(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
    }
    return std::sqrt(s);
}

} // namespace

TransportCost w1_exact_1d(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
    require_1d_pair(p, q, "w1_exact_1d");
    return {cdf_sweep(p, q, [](double g) { return std::abs(g); }), 1};
}

double cdf_l2_sq(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
    require_1d_pair(p, q, "cdf_l2_sq");
    return cdf_sweep(p, q, [](double g) { return g * g; });
}

TransportCost w2_exact_1d(const EmpiricalMeasure& p, const EmpiricalMeasure& q) {
    require_1d_pair(p, q, "w2_exact_1d");
    // Monotone coupling: walk both sorted atom lists consuming equal mass.
    const auto& pv = p.sorted_values();
    const auto& qv = q.sorted_values();
    const auto pw = sorted_weights(p);
    const auto qw = sorted_weights(q);
    const std::size_t np = pv.size(), nq = qv.size();
    std::size_t i = 0, j = 0;
    double ra = pw[0], rb = qw[0], acc = 0.0;
    while (true) {
        const double m = std::min(ra, rb);
        const double diff = pv[i] - qv[j];
        acc += m * diff * diff;
        ra -= m;
        rb -= m;
        const bool ai = ra <= 0.0, aj = rb <= 0.0;
        if ((ai && i + 1 >= np) || (aj && j + 1 >= nq)) break;
        if (ai) ra = pw[++i];
        if (aj) rb = qw[++j];
    }
    return {std::sqrt(acc), 2};
}

// ---------------------------------------------------------------------------
// Transportation simplex for the exact multivariate LP.
// ---------------------------------------------------------------------------

namespace {

struct TransportLp {
    std::size_t n, m;              // sources (P atoms), sinks (Q atoms)
    std::vector<double> cost;      // n*m, Euclidean ground cost
    std::vector<double> flow;      // n*m, current basic flows
    std::vector<char> basic;       // n*m, basis membership
    std::vector<double> u, v;      // dual potentials

    std::size_t at(std::size_t i, std::size_t j) const { return i * m + j; }

    // Northwest-corner start: exactly n+m-1 basic cells, a spanning tree.
    void northwest_corner(const std::vector<double>& a, const std::vector<double>& b) {
        std::size_t i = 0, j = 0;
        double ra = a[0], rb = b[0];
        while (true) {
            basic[at(i, j)] = 1;
            flow[at(i, j)] = std::max(std::min(ra, rb), 0.0);
            if (i == n - 1 && j == m - 1) break;
            if (ra <= rb && i < n - 1) {
                rb -= ra;
                ra = a[++i];
            } else if (j < m - 1) {
                ra -= rb;
                rb = b[++j];
            } else {
                rb -= ra;
                ra = a[++i];
            }
        }
    }

    // Solves u_i + v_j = c_ij over the basis tree (u_0 anchored at 0).
    void compute_potentials() {
        std::fill(u.begin(), u.end(), std::numeric_limits<double>::quiet_NaN());
        std::fill(v.begin(), v.end(), std::numeric_limits<double>::quiet_NaN());
        u[0] = 0.0;
        std::vector<std::size_t> stack{0}; // rows as [0,n), cols as [n,n+m)
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            if (node < n) {
                for (std::size_t j = 0; j < m; ++j)
                    if (basic[at(node, j)] && std::isnan(v[j])) {
                        v[j] = cost[at(node, j)] - u[node];
                        stack.push_back(n + j);
                    }
            } else {
                const std::size_t j = node - n;
                for (std::size_t i = 0; i < n; ++i)
                    if (basic[at(i, j)] && std::isnan(u[i])) {
                        u[i] = cost[at(i, j)] - v[j];
                        stack.push_back(i);
                    }
            }
        }
    }

    // Alternating cycle created by the entering arc (ei,ej): path from row ei
    // to col ej through the basis tree, found by depth-first search.
    std::vector<std::size_t> find_cycle(std::size_t ei, std::size_t ej) const {
        const std::size_t nodes = n + m;
        std::vector<std::ptrdiff_t> parent(nodes, -1);
        std::vector<char> seen(nodes, 0);
        std::vector<std::size_t> stack{ei};
        seen[ei] = 1;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            if (node == n + ej) break;
            if (node < n) {
                for (std::size_t j = 0; j < m; ++j)
                    if (basic[at(node, j)] && !seen[n + j]) {
                        seen[n + j] = 1;
                        parent[n + j] = static_cast<std::ptrdiff_t>(node);
                        stack.push_back(n + j);
                    }
            } else {
                const std::size_t j = node - n;
                for (std::size_t i = 0; i < n; ++i)
                    if (basic[at(i, j)] && !seen[i]) {
                        seen[i] = 1;
                        parent[i] = static_cast<std::ptrdiff_t>(n + j);
                        stack.push_back(i);
                    }
            }
        }
        // Node path ej -> ... -> ei, then reversed to start at the entering row.
        std::vector<std::size_t> path;
        std::ptrdiff_t cur = static_cast<std::ptrdiff_t>(n + ej);
        while (cur >= 0) {
            path.push_back(static_cast<std::size_t>(cur));
            cur = parent[static_cast<std::size_t>(cur)];
        }
        std::reverse(path.begin(), path.end());
        return path; // path[0] == ei, path.back() == n+ej
    }
};

} // namespace

TransportCost w1_exact_lp(const EmpiricalMeasure& p, const EmpiricalMeasure& q,
                          std::size_t max_atoms) {
    if (p.dim() != q.dim())
        throw std::invalid_argument("w1_exact_lp: dimension mismatch");
    if (p.size() + q.size() > max_atoms)
        throw std::invalid_argument("w1_exact_lp: instance too large (" +
                                    std::to_string(p.size() + q.size()) + " atoms, limit " +
                                    std::to_string(max_atoms) + ")");

    TransportLp lp;
    lp.n = p.size();
    lp.m = q.size();
    lp.cost.resize(lp.n * lp.m);
    lp.flow.assign(lp.n * lp.m, 0.0);
    lp.basic.assign(lp.n * lp.m, 0);
    lp.u.resize(lp.n);
    lp.v.resize(lp.m);
    for (std::size_t i = 0; i < lp.n; ++i)
        for (std::size_t j = 0; j < lp.m; ++j)
            lp.cost[lp.at(i, j)] = euclidean(p.point(i), q.point(j), p.dim());

    lp.northwest_corner(p.weights(), q.weights());

    const std::size_t dantzig_limit = 5 * lp.n * lp.m + 50;
    const std::size_t hard_limit = 50 * lp.n * lp.m + 1000;
    for (std::size_t iter = 0;; ++iter) {
        if (iter > hard_limit) throw std::runtime_error("w1_exact_lp: pivot limit exceeded");
        lp.compute_potentials();

        // Entering arc: most negative reduced cost (Dantzig), switching to
        // first-negative (Bland) if the instance cycles on degenerate pivots.
        std::size_t ei = 0, ej = 0;
        double best = -1e-12;
        bool found = false;
        for (std::size_t i = 0; i < lp.n && !(found && iter >= dantzig_limit); ++i)
            for (std::size_t j = 0; j < lp.m; ++j) {
                if (lp.basic[lp.at(i, j)]) continue;
                const double r = lp.cost[lp.at(i, j)] - lp.u[i] - lp.v[j];
                if (r < best) {
                    best = r;
                    ei = i;
                    ej = j;
                    found = true;
                    if (iter >= dantzig_limit) break; // Bland: take the first
                }
            }
        if (!found) break; // optimal

        const auto path = lp.find_cycle(ei, ej);
        // Path nodes alternate row, col, row, ..., col; edge k joins
        // path[k]..path[k+1].  With the entering arc (+), path edges take
        // signs -, +, -, ... from the ei end.
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k + 1 < path.size(); k += 2) { // minus edges at even k
            const std::size_t i = path[k] < lp.n ? path[k] : path[k + 1];
            const std::size_t j = path[k] < lp.n ? path[k + 1] - lp.n : path[k] - lp.n;
            theta = std::min(theta, lp.flow[lp.at(i, j)]);
        }
        // Leaving arc: lexicographically smallest minus edge achieving theta.
        std::size_t leave_i = lp.n, leave_j = lp.m;
        for (std::size_t k = 0; k + 1 < path.size(); k += 2) {
            const std::size_t i = path[k] < lp.n ? path[k] : path[k + 1];
            const std::size_t j = path[k] < lp.n ? path[k + 1] - lp.n : path[k] - lp.n;
            if (lp.flow[lp.at(i, j)] <= theta &&
                (i < leave_i || (i == leave_i && j < leave_j))) {
                leave_i = i;
                leave_j = j;
            }
        }

        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            const std::size_t i = path[k] < lp.n ? path[k] : path[k + 1];
            const std::size_t j = path[k] < lp.n ? path[k + 1] - lp.n : path[k] - lp.n;
            lp.flow[lp.at(i, j)] += (k % 2 == 0) ? -theta : theta;
        }
        lp.flow[lp.at(ei, ej)] = theta;
        lp.basic[lp.at(ei, ej)] = 1;
        lp.basic[lp.at(leave_i, leave_j)] = 0;
        lp.flow[lp.at(leave_i, leave_j)] = 0.0;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < lp.n; ++i)
        for (std::size_t j = 0; j < lp.m; ++j)
            if (lp.basic[lp.at(i, j)]) total += lp.flow[lp.at(i, j)] * lp.cost[lp.at(i, j)];
    return {std::max(total, 0.0), 1};
}

} // namespace dscw
