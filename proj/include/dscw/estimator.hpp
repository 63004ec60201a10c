#pragma once
// The adversarial distributional synthetic-control estimator.
//
// Per pre-period: alternate K_critic Adam ascent steps on the critic (with
// fresh gradient-penalty interpolates every step) with one entropic
// mirror-descent step on the donor weights, until the weight movement
// stalls.  Periods use independent derived rng streams; the per-period
// weights are aggregated with the temporal weights.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dscw/critic.hpp"
#include "dscw/measures.hpp"
#include "dscw/rng.hpp"

namespace dscw {

enum class Method { wgan, cdfl2, w2quantile };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct EstimatorConfig {
    double eta = 0.01;            // entropic coefficient on the weights
    double zeta = 10.0;           // gradient-penalty coefficient
    double alpha_theta = 1e-3;    // critic learning rate
    double alpha_lambda = 0.05;   // mirror-descent learning rate
    std::size_t n_critic = 5;     // critic steps per weight step
    std::size_t max_outer_iters = 300;
    double lambda_tol = 1e-5;     // mean max-abs weight movement over 10 iters
    std::size_t batch_size = 0;   // 0 = full batch
    std::vector<double> temporal_weights; // empty = uniform over pre-periods
    std::uint64_t seed = 0;
    std::size_t width = 64;       // hidden width of the critic
    std::size_t hidden_layers = 2;
    double leaky_slope = 0.2;
};

void validate_config(const EstimatorConfig& cfg);

struct PeriodTracePoint {
    double critic_objective = 0.0;      // transport - zeta * penalty
    double regularized_objective = 0.0; // transport estimate + eta * sum lambda log lambda
};

struct EstimationReport {
    std::vector<SimplexWeights> per_period_weights;
    SimplexWeights aggregated;
    std::vector<std::vector<PeriodTracePoint>> loss_traces;
    std::vector<std::size_t> iterations_used;
    EstimatorConfig config;
    std::uint64_t seed = 0;
};

/// One multiplicative update: lambda_j' ~ lambda_j exp(-alpha (g_j +
// eta (1 + log lambda_j))), normalized.  When alpha*eta is large enough to
// destabilize that explicit form, the proximal variant with the same fixed
// points is used (see the implementation note).
SimplexWeights mirror_descent_step(const SimplexWeights& lambda, const std::vector<double>& g,
                                   double eta, double alpha_lambda);

// Minimax solve for one pre-period; returns the weights and the loss trace.
std::pair<SimplexWeights, std::vector<PeriodTracePoint>> estimate_period(
    const PanelDataset& panel, std::size_t period, const EstimatorConfig& config,
    RandomStream& rng);

EstimationReport estimate(const PanelDataset& panel, const EstimatorConfig& config);

// Donor mixture at any period under the given weights.
EmpiricalMeasure synthesize_counterfactual(const PanelDataset& panel,
                                           const SimplexWeights& lambda_star, std::size_t period);

} // namespace dscw
