#pragma once
// The Kantorovich-potential approximator.
//
// A fully-connected scalar-output network (Leaky-ReLU hidden layers, linear
// output) with analytic reverse-mode gradients for parameters and inputs,
// second-order backprop through the input-gradient norm for the gradient
// penalty, and a hand-rolled Adam optimizer.  All batch entry points run on
// flat row-major sample blocks so the hot loops vectorize.

#include <cstddef>
#include <vector>

#include "dscw/measures.hpp"
#include "dscw/rng.hpp"

namespace dscw {

// Non-owning view over a flat row-major batch (count x dim).
struct BatchView {
    const double* data = nullptr;
    std::size_t count = 0;
};

struct CriticLossBreakdown {
    double transport_term = 0.0;
    double penalty_term = 0.0; // mean squared deviation of the grad norm from 1
    double total = 0.0;        // transport_term - zeta * penalty_term
};

class CriticNetwork {
public:
    // hidden_layers hidden layers of `width` units each; parameters start at
    // zero (use glorot_init for training).
    CriticNetwork(std::size_t input_dim, std::size_t width, std::size_t hidden_layers = 2,
                  double slope = 0.2);

    // Uniform Glorot weights, zero biases, drawn from rng layer by layer.
    static CriticNetwork glorot_init(std::size_t input_dim, std::size_t width,
                                     std::size_t hidden_layers, double slope, RandomStream& rng);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t width() const { return width_; }
    std::size_t hidden_layers() const { return n_layers_ - 1; }
    double slope() const { return slope_; }
    std::size_t n_params() const { return params_.size(); }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Linear layer l in [0, hidden_layers]: rows(l) x cols(l) weight block
    // and rows(l) bias block inside the flat parameter vector.
    std::size_t n_linear() const { return n_layers_; }
    std::size_t rows(std::size_t l) const { return rows_[l]; }
    std::size_t cols(std::size_t l) const { return cols_[l]; }
    std::size_t weight_offset(std::size_t l) const { return w_off_[l]; }
    std::size_t bias_offset(std::size_t l) const { return b_off_[l]; }
    const double* weights(std::size_t l) const { return params_.data() + w_off_[l]; }
    const double* biases(std::size_t l) const { return params_.data() + b_off_[l]; }

    // Scalar evaluation f(x); x must hold input_dim finite coordinates.
    double forward(const double* x, std::size_t dim) const;

    // Exact input gradient by reverse accumulation; at activation kinks the
    // positive branch (slope 1) is used.
    void grad_input(const double* x, std::size_t dim, double* grad_out) const;

    // Batched evaluation: y gets count scalars.
    void forward_batch(BatchView x, double* y) const;

private:
    std::size_t input_dim_ = 0;
    std::size_t width_ = 0;
    std::size_t n_layers_ = 0; // linear layers = hidden_layers + 1
    double slope_ = 0.2;
    std::vector<std::size_t> rows_, cols_, w_off_, b_off_;
    std::vector<double> params_;
};

// Reusable buffers for the batched loss; callers in hot loops keep one
// instance alive across calls.
struct CriticWorkspace {
    std::vector<double> concat;                // transport batch, concatenated
    std::vector<double> dy;                    // per-sample output coefficients
    std::vector<std::vector<double>> acts;     // per-layer activations
    std::vector<std::vector<double>> masks;    // per-hidden-layer lrelu slopes
    std::vector<std::vector<double>> vvecs;    // input-grad backward vectors
    std::vector<double> y, gin, norms, scratch_a, scratch_b;
};

// Loss and exact parameter gradient of
//   transport - zeta * penalty
// where transport = mean_{treated} f - sum_j lambda_j mean_{donor j} f and
// penalty = mean over interpolates of (||grad_x f|| - 1)^2.  grads is
// resized to net.n_params().  An empty interpolate batch yields penalty 0.
CriticLossBreakdown critic_loss_and_grads(const CriticNetwork& net, BatchView treated,
                                          const std::vector<BatchView>& donors,
                                          const SimplexWeights& lambda, double zeta,
                                          BatchView interpolates, std::vector<double>& grads,
                                          CriticWorkspace* ws = nullptr);

struct AdamState {
    explicit AdamState(std::size_t n_params)
        : m(n_params, 0.0), v(n_params, 0.0) {}
    std::vector<double> m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Bias-corrected Adam update, ascending (maximization) by default.
void adam_step(CriticNetwork& net, AdamState& state, const std::vector<double>& grads,
               double alpha_theta, bool ascend = true);

} // namespace dscw
