#pragma once
// Exact optimal-transport distances on discrete measures.
//
// One-dimensional W1 and the squared CDF-L2 gap are computed by a single
// merged-support sweep over both CDFs; W2 by the monotone quantile coupling.
// The multivariate W1 oracle solves the discrete Monge-Kantorovich LP with
// Euclidean ground cost by the transportation simplex and is restricted to
// small instances: it exists to validate the adversarial estimator, not to
// compete with it.

#include <cstddef>

#include "dscw/measures.hpp"

namespace dscw {

struct TransportCost {
    double value = 0.0; // outcome units (both orders return a distance)
    int order = 1;      // 1 or 2
};

// W1(P,Q) = integral of |F_P - F_Q|; exact for arbitrary nonuniform weights.
TransportCost w1_exact_1d(const EmpiricalMeasure& p, const EmpiricalMeasure& q);

// W2(P,Q) = sqrt(integral over (0,1) of (Q_P - Q_Q)^2); exact quantile coupling.
TransportCost w2_exact_1d(const EmpiricalMeasure& p, const EmpiricalMeasure& q);

// Exact multivariate W1 with Euclidean cost; total atoms must not exceed
// max_atoms.  Agrees with w1_exact_1d when dim = 1.
TransportCost w1_exact_lp(const EmpiricalMeasure& p, const EmpiricalMeasure& q,
                          std::size_t max_atoms = 128);

// Integral of (F_P - F_Q)^2, exact merged-support sweep.
double cdf_l2_sq(const EmpiricalMeasure& p, const EmpiricalMeasure& q);

} // namespace dscw
