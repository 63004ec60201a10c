#include "dscw/critic.hpp"

#include <cmath>
#include <stdexcept>

namespace dscw {

namespace {

// Dot product with split accumulators so the reduction vectorizes without
// reassociation flags.
double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
        s4 += a[k + 4] * b[k + 4];
        s5 += a[k + 5] * b[k + 5];
        s6 += a[k + 6] * b[k + 6];
        s7 += a[k + 7] * b[k + 7];
    }
    double tail = 0;
    for (; k < n; ++k) tail += a[k] * b[k];
    return (((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7))) + tail;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

// OUT (B x r) = A (B x c) . W(r x c)^T + bias (bias may be null).
void linear_nt(const double* a, std::size_t batch, std::size_t c, const double* w,
               const double* bias, std::size_t r, double* out) {
    for (std::size_t b = 0; b < batch; ++b) {
        const double* arow = a + b * c;
        double* orow = out + b * r;
        for (std::size_t h = 0; h < r; ++h)
            orow[h] = (bias ? bias[h] : 0.0) + dot(arow, w + h * c, c);
    }
}

// OUT (B x c) = V (B x r) . W (r x c).
void linear_nn(const double* v, std::size_t batch, std::size_t r, const double* w, std::size_t c,
               double* out) {
    for (std::size_t b = 0; b < batch; ++b) {
        const double* vrow = v + b * r;
        double* orow = out + b * c;
        for (std::size_t k = 0; k < c; ++k) orow[k] = 0.0;
        for (std::size_t h = 0; h < r; ++h)
            if (vrow[h] != 0.0) axpy(orow, vrow[h], w + h * c, c);
    }
}

// G (r x c) += V (B x r)^T . A (B x c): sum of per-sample outer products.
void outer_acc(const double* v, const double* a, std::size_t batch, std::size_t r, std::size_t c,
               double* g) {
    for (std::size_t b = 0; b < batch; ++b) {
        const double* vrow = v + b * r;
        const double* arow = a + b * c;
        for (std::size_t h = 0; h < r; ++h)
            if (vrow[h] != 0.0) axpy(g + h * c, vrow[h], arow, c);
    }
}

void colsum_acc(const double* v, std::size_t batch, std::size_t r, double* out) {
    for (std::size_t b = 0; b < batch; ++b) axpy(out, 1.0, v + b * r, r);
}

} // namespace

CriticNetwork::CriticNetwork(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                             double slope)
    : input_dim_(input_dim), width_(width), n_layers_(hidden_layers + 1), slope_(slope) {
    if (input_dim_ == 0 || width_ == 0 || hidden_layers == 0)
        throw std::invalid_argument("CriticNetwork: dimensions must be positive");
    if (!(slope_ > 0.0 && slope_ < 1.0))
        throw std::invalid_argument("CriticNetwork: slope must lie in (0,1)");
    std::size_t off = 0;
    for (std::size_t l = 0; l < n_layers_; ++l) {
        const std::size_t r = (l == n_layers_ - 1) ? 1 : width_;
        const std::size_t c = (l == 0) ? input_dim_ : width_;
        rows_.push_back(r);
        cols_.push_back(c);
        w_off_.push_back(off);
        off += r * c;
        b_off_.push_back(off);
        off += r;
    }
    params_.assign(off, 0.0);
}

CriticNetwork CriticNetwork::glorot_init(std::size_t input_dim, std::size_t width,
                                         std::size_t hidden_layers, double slope,
                                         RandomStream& rng) {
    CriticNetwork net(input_dim, width, hidden_layers, slope);
    for (std::size_t l = 0; l < net.n_layers_; ++l) {
        const double fan = static_cast<double>(net.rows_[l] + net.cols_[l]);
        const double limit = std::sqrt(6.0 / fan);
        double* w = net.params_.data() + net.w_off_[l];
        for (std::size_t k = 0; k < net.rows_[l] * net.cols_[l]; ++k)
            w[k] = rng.uniform(-limit, limit);
        // biases stay zero
    }
    return net;
}

namespace {

// Forward over a batch, keeping post-activation values and the Leaky-ReLU
// slope mask of every hidden layer (kink convention: slope 1 at exactly 0).
void forward_cached(const CriticNetwork& net, const double* x, std::size_t batch,
                    std::vector<std::vector<double>>& acts,
                    std::vector<std::vector<double>>& masks) {
    const std::size_t nl = net.n_linear();
    acts.resize(nl);
    masks.resize(nl - 1);
    const double* cur = x;
    std::size_t ccols = net.input_dim();
    for (std::size_t l = 0; l < nl; ++l) {
        acts[l].resize(batch * net.rows(l));
        linear_nt(cur, batch, ccols, net.weights(l), net.biases(l), net.rows(l), acts[l].data());
        if (l + 1 < nl) {
            masks[l].resize(batch * net.rows(l));
            double* a = acts[l].data();
            double* m = masks[l].data();
            const double slope = net.slope();
            const std::size_t total = batch * net.rows(l);
            for (std::size_t k = 0; k < total; ++k) {
                if (a[k] >= 0.0) {
                    m[k] = 1.0;
                } else {
                    m[k] = slope;
                    a[k] *= slope;
                }
            }
        }
        cur = acts[l].data();
        ccols = net.rows(l);
    }
}

// Accumulates the parameter gradient of sum_b dy_b * f(x_b) into grads.
void backward_params(const CriticNetwork& net, const double* x, std::size_t batch,
                     const std::vector<std::vector<double>>& acts,
                     const std::vector<std::vector<double>>& masks, const double* dy,
                     std::vector<double>& grads, std::vector<double>& vbuf,
                     std::vector<double>& ubuf) {
    const std::size_t hid = net.n_linear() - 1;
    const std::size_t w = net.width();
    // Output layer.
    {
        double* gw = grads.data() + net.weight_offset(hid);
        double* gb = grads.data() + net.bias_offset(hid);
        const double* alast = acts[hid - 1].data();
        for (std::size_t b = 0; b < batch; ++b) {
            if (dy[b] == 0.0) continue;
            axpy(gw, dy[b], alast + b * w, w);
            gb[0] += dy[b];
        }
    }
    // dL/dz at the top hidden layer.
    vbuf.resize(batch * w);
    {
        const double* wlast = net.weights(hid);
        const double* m = masks[hid - 1].data();
        for (std::size_t b = 0; b < batch; ++b) {
            const double c = dy[b];
            double* vrow = vbuf.data() + b * w;
            const double* mrow = m + b * w;
            for (std::size_t h = 0; h < w; ++h) vrow[h] = c * wlast[h] * mrow[h];
        }
    }
    // Walk hidden layers top-down.
    for (std::size_t l = hid; l-- > 0;) {
        const double* below = (l == 0) ? x : acts[l - 1].data();
        outer_acc(vbuf.data(), below, batch, net.rows(l), net.cols(l),
                  grads.data() + net.weight_offset(l));
        colsum_acc(vbuf.data(), batch, net.rows(l), grads.data() + net.bias_offset(l));
        if (l == 0) break;
        // Propagate: u = v . W_l, then apply the mask of hidden layer l-1.
        ubuf.resize(batch * net.cols(l));
        linear_nn(vbuf.data(), batch, net.rows(l), net.weights(l), net.cols(l), ubuf.data());
        const double* m = masks[l - 1].data();
        vbuf.resize(batch * net.cols(l));
        const std::size_t total = batch * net.cols(l);
        for (std::size_t k = 0; k < total; ++k) vbuf[k] = ubuf[k] * m[k];
    }
}

} // namespace

double CriticNetwork::forward(const double* x, std::size_t dim) const {
    if (dim != input_dim_) throw std::invalid_argument("CriticNetwork::forward: dimension mismatch");
    for (std::size_t k = 0; k < dim; ++k)
        if (!std::isfinite(x[k]))
            throw std::invalid_argument("CriticNetwork::forward: non-finite input");
    double y = 0.0;
    forward_batch({x, 1}, &y);
    return y;
}

void CriticNetwork::forward_batch(BatchView x, double* y) const {
    std::vector<std::vector<double>> acts, masks;
    forward_cached(*this, x.data, x.count, acts, masks);
    const auto& top = acts[n_layers_ - 1];
    for (std::size_t b = 0; b < x.count; ++b) y[b] = top[b];
}

void CriticNetwork::grad_input(const double* x, std::size_t dim, double* grad_out) const {
    if (dim != input_dim_)
        throw std::invalid_argument("CriticNetwork::grad_input: dimension mismatch");
    for (std::size_t k = 0; k < dim; ++k)
        if (!std::isfinite(x[k]))
            throw std::invalid_argument("CriticNetwork::grad_input: non-finite input");
    std::vector<std::vector<double>> acts, masks;
    forward_cached(*this, x, 1, acts, masks);
    const std::size_t hid = n_layers_ - 1;
    // v = dy/dz at the top hidden layer, then walk down to the input.
    std::vector<double> v(width_), u;
    const double* wlast = weights(hid);
    for (std::size_t h = 0; h < width_; ++h) v[h] = wlast[h] * masks[hid - 1][h];
    for (std::size_t l = hid; l-- > 0;) {
        u.assign(cols_[l], 0.0);
        for (std::size_t h = 0; h < rows_[l]; ++h)
            axpy(u.data(), v[h], weights(l) + h * cols_[l], cols_[l]);
        if (l == 0) break;
        v.resize(cols_[l]);
        for (std::size_t k = 0; k < cols_[l]; ++k) v[k] = u[k] * masks[l - 1][k];
    }
    for (std::size_t k = 0; k < dim; ++k) grad_out[k] = u[k];
}

CriticLossBreakdown critic_loss_and_grads(const CriticNetwork& net, BatchView treated,
                                          const std::vector<BatchView>& donors,
                                          const SimplexWeights& lambda, double zeta,
                                          BatchView interpolates, std::vector<double>& grads,
                                          CriticWorkspace* ws) {
    if (treated.count == 0) throw std::invalid_argument("critic_loss_and_grads: empty treated batch");
    if (donors.empty() || donors.size() != lambda.size())
        throw std::invalid_argument("critic_loss_and_grads: donor/lambda length mismatch");
    for (const auto& d : donors)
        if (d.count == 0) throw std::invalid_argument("critic_loss_and_grads: empty donor batch");

    CriticWorkspace local;
    CriticWorkspace& w = ws ? *ws : local;
    const std::size_t d = net.input_dim();
    const std::size_t hid = net.n_linear() - 1;
    const std::size_t width = net.width();

    grads.assign(net.n_params(), 0.0);

    // ---- transport term over the concatenated treated + donor batches ----
    std::size_t total = treated.count;
    for (const auto& b : donors) total += b.count;
    w.concat.resize(total * d);
    w.dy.resize(total);
    std::size_t off = 0;
    std::copy(treated.data, treated.data + treated.count * d, w.concat.begin());
    std::fill(w.dy.begin(), w.dy.begin() + treated.count, 1.0 / static_cast<double>(treated.count));
    off = treated.count;
    for (std::size_t j = 0; j < donors.size(); ++j) {
        std::copy(donors[j].data, donors[j].data + donors[j].count * d,
                  w.concat.begin() + off * d);
        std::fill(w.dy.begin() + off, w.dy.begin() + off + donors[j].count,
                  -lambda[j] / static_cast<double>(donors[j].count));
        off += donors[j].count;
    }

    forward_cached(net, w.concat.data(), total, w.acts, w.masks);
    const auto& yall = w.acts[hid];
    // Per-segment means so that identical treated/donor batches cancel exactly.
    double transport = 0.0;
    {
        double s = 0.0;
        for (std::size_t b = 0; b < treated.count; ++b) s += yall[b];
        transport = s / static_cast<double>(treated.count);
        std::size_t at = treated.count;
        for (std::size_t j = 0; j < donors.size(); ++j) {
            s = 0.0;
            for (std::size_t b = 0; b < donors[j].count; ++b) s += yall[at + b];
            transport -= lambda[j] * (s / static_cast<double>(donors[j].count));
            at += donors[j].count;
        }
    }
    backward_params(net, w.concat.data(), total, w.acts, w.masks, w.dy.data(), grads, w.scratch_a,
                    w.scratch_b);

    // ---- gradient penalty over the interpolates ----
    double penalty = 0.0;
    if (interpolates.count > 0) {
        const std::size_t bn = interpolates.count;
        forward_cached(net, interpolates.data, bn, w.acts, w.masks);

        // Input-gradient pass; keep v at every hidden layer for the second
        // backward sweep.
        w.vvecs.resize(hid);
        w.vvecs[hid - 1].resize(bn * width);
        {
            const double* wlast = net.weights(hid);
            const double* m = w.masks[hid - 1].data();
            double* v = w.vvecs[hid - 1].data();
            for (std::size_t b = 0; b < bn; ++b)
                for (std::size_t h = 0; h < width; ++h)
                    v[b * width + h] = wlast[h] * m[b * width + h];
        }
        for (std::size_t l = hid - 1; l > 0; --l) {
            w.scratch_a.resize(bn * net.cols(l));
            linear_nn(w.vvecs[l].data(), bn, net.rows(l), net.weights(l), net.cols(l),
                      w.scratch_a.data());
            w.vvecs[l - 1].resize(bn * net.cols(l));
            const double* m = w.masks[l - 1].data();
            double* v = w.vvecs[l - 1].data();
            const std::size_t tot = bn * net.cols(l);
            for (std::size_t k = 0; k < tot; ++k) v[k] = w.scratch_a[k] * m[k];
        }
        w.gin.resize(bn * d);
        linear_nn(w.vvecs[0].data(), bn, net.rows(0), net.weights(0), d, w.gin.data());

        w.norms.resize(bn);
        for (std::size_t b = 0; b < bn; ++b) {
            const double nrm = std::sqrt(dot(w.gin.data() + b * d, w.gin.data() + b * d, d));
            w.norms[b] = nrm;
            const double dev = nrm - 1.0;
            penalty += dev * dev;
        }
        penalty /= static_cast<double>(bn);

        if (zeta != 0.0) {
            // q_b = d(total)/d(g_b) = -zeta * (2/bn) * (|g|-1)/|g| * g_b.
            std::vector<double>& q = w.scratch_a;
            q.resize(bn * d);
            const double scale = -zeta * 2.0 / static_cast<double>(bn);
            for (std::size_t b = 0; b < bn; ++b) {
                const double nrm = w.norms[b];
                const double coef = nrm > 1e-12 ? scale * (nrm - 1.0) / nrm : 0.0;
                for (std::size_t k = 0; k < d; ++k) q[b * d + k] = coef * w.gin[b * d + k];
            }
            // Second backward sweep: masks are treated as constants, so only
            // weight blocks receive gradient (biases get none).
            std::vector<double>& ubar = q; // reuse in place layer by layer
            std::vector<double>& vbar = w.scratch_b;
            std::size_t ubar_cols = d;
            for (std::size_t l = 0; l < hid; ++l) {
                outer_acc(w.vvecs[l].data(), ubar.data(), bn, net.rows(l), ubar_cols,
                          grads.data() + net.weight_offset(l));
                vbar.resize(bn * net.rows(l));
                linear_nt(ubar.data(), bn, ubar_cols, net.weights(l), nullptr, net.rows(l),
                          vbar.data());
                const double* m = w.masks[l].data();
                ubar.resize(bn * net.rows(l));
                const std::size_t tot = bn * net.rows(l);
                for (std::size_t k = 0; k < tot; ++k) ubar[k] = vbar[k] * m[k];
                ubar_cols = net.rows(l);
            }
            colsum_acc(ubar.data(), bn, width, grads.data() + net.weight_offset(hid));
        }
    }

    CriticLossBreakdown out;
    out.transport_term = transport;
    out.penalty_term = penalty;
    out.total = transport - zeta * penalty;
    return out;
}

void adam_step(CriticNetwork& net, AdamState& state, const std::vector<double>& grads,
               double alpha_theta, bool ascend) {
    if (grads.size() != net.n_params())
        throw std::invalid_argument("adam_step: gradient/parameter shape mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double sign = ascend ? 1.0 : -1.0;
    auto& p = net.params();
    for (std::size_t k = 0; k < p.size(); ++k) {
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * grads[k];
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * grads[k] * grads[k];
        const double mhat = state.m[k] / c1;
        const double vhat = state.v[k] / c2;
        p[k] += sign * alpha_theta * mhat / (std::sqrt(vhat) + state.eps);
    }
}

} // namespace dscw
