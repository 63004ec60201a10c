#include "dscw/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace dscw {

std::string method_name(Method m) {
    switch (m) {
        case Method::wgan: return "wgan";
        case Method::cdfl2: return "cdfl2";
        case Method::w2quantile: return "w2quantile";
    }
    throw std::invalid_argument("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
    if (name == "wgan") return Method::wgan;
    if (name == "cdfl2") return Method::cdfl2;
    if (name == "w2quantile") return Method::w2quantile;
    throw std::invalid_argument("unknown method '" + name + "' (expected wgan|cdfl2|w2quantile)");
}

void validate_config(const EstimatorConfig& cfg) {
    if (!(cfg.eta >= 0.0)) throw std::invalid_argument("config: eta must be >= 0");
    if (!(cfg.zeta > 0.0)) throw std::invalid_argument("config: zeta must be > 0");
    if (!(cfg.alpha_theta > 0.0) || !(cfg.alpha_lambda > 0.0))
        throw std::invalid_argument("config: learning rates must be > 0");
    if (cfg.n_critic < 1) throw std::invalid_argument("config: n_critic must be >= 1");
    if (cfg.max_outer_iters < 1) throw std::invalid_argument("config: max_outer_iters must be >= 1");
    if (!(cfg.lambda_tol > 0.0)) throw std::invalid_argument("config: lambda_tol must be > 0");
    if (cfg.width < 1 || cfg.hidden_layers < 1)
        throw std::invalid_argument("config: critic architecture must be nonempty");
    if (!(cfg.leaky_slope > 0.0 && cfg.leaky_slope < 1.0))
        throw std::invalid_argument("config: leaky_slope must lie in (0,1)");
    if (!cfg.temporal_weights.empty()) SimplexWeights(cfg.temporal_weights); // validates
}

SimplexWeights mirror_descent_step(const SimplexWeights& lambda, const std::vector<double>& g,
                                   double eta, double alpha_lambda) {
    if (g.size() != lambda.size())
        throw std::invalid_argument("mirror_descent_step: score length mismatch");
    for (double x : g)
        if (!std::isfinite(x)) throw std::invalid_argument("mirror_descent_step: non-finite score");
    if (!(eta >= 0.0) || !(alpha_lambda > 0.0))
        throw std::invalid_argument("mirror_descent_step: bad eta or alpha");

    const std::size_t j_count = lambda.size();
    const double floor_w = 1e-12;
    std::vector<double> logw(j_count);
    const double ae = alpha_lambda * eta;
    for (std::size_t j = 0; j < j_count; ++j) {
        const double lj = std::max(lambda[j], floor_w);
        // Explicit form: log' = (1 - a*eta) log l - a g - a*eta.  Its log-space
        // contraction factor (1 - a*eta) turns oscillatory/divergent once
        // a*eta > 1, so for large a*eta we switch to the proximal (implicit)
        // entropy step log' = (log l - a g) / (1 + a*eta), which shares the
        // fixed points lambda_j ~ exp(-g_j/eta) and the same first-order
        // behavior in a.
        if (ae <= 0.5)
            logw[j] = (1.0 - ae) * std::log(lj) - alpha_lambda * g[j] - ae;
        else
            logw[j] = (std::log(lj) - alpha_lambda * g[j]) / (1.0 + ae);
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    std::vector<double> w(j_count);
    double total = 0.0;
    for (std::size_t j = 0; j < j_count; ++j) {
        w[j] = std::exp(logw[j] - top);
        total += w[j];
    }
    for (std::size_t j = 0; j < j_count; ++j) w[j] = std::max(w[j] / total, floor_w);
    return SimplexWeights(std::move(w));
}

namespace {

// Weight-proportional minibatch of `count` atoms (with replacement), flat.
std::vector<double> draw_batch(const EmpiricalMeasure& m, std::size_t count, RandomStream& rng) {
    const std::size_t d = m.dim();
    std::vector<double> out(count * d);
    for (std::size_t i = 0; i < count; ++i) {
        const double* p = m.point(m.sample_atom(rng));
        std::copy(p, p + d, out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return out;
}

void shuffle_rows(std::vector<double>& rows, std::size_t d, RandomStream& rng) {
    const std::size_t n = rows.size() / d;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t k = rng.uniform_index(i);
        if (k != i - 1)
            std::swap_ranges(rows.begin() + static_cast<std::ptrdiff_t>(k * d),
                             rows.begin() + static_cast<std::ptrdiff_t>((k + 1) * d),
                             rows.begin() + static_cast<std::ptrdiff_t>((i - 1) * d));
    }
}

double entropy_term(const SimplexWeights& lambda, double eta) {
    double s = 0.0;
    for (std::size_t j = 0; j < lambda.size(); ++j) {
        const double lj = std::max(lambda[j], 1e-12);
        s += lj * std::log(lj);
    }
    return eta * s;
}

} // namespace

std::pair<SimplexWeights, std::vector<PeriodTracePoint>> estimate_period(
    const PanelDataset& panel, std::size_t period, const EstimatorConfig& config,
    RandomStream& rng) {
    validate_config(config);
    if (period >= panel.cutoff())
        throw std::invalid_argument("estimate_period: period must be pre-treatment");
    const auto donors = panel.donor_cells(period);
    const std::size_t j_count = donors.size();
    if (j_count < 2) throw std::invalid_argument("estimate_period: needs at least two donors");
    const auto& treated = panel.treated_cell(period);
    const std::size_t d = panel.dim();

    CriticNetwork net = CriticNetwork::glorot_init(d, config.width, config.hidden_layers,
                                                   config.leaky_slope, rng);
    AdamState adam(net.n_params());
    CriticWorkspace ws;
    std::vector<double> grads;

    SimplexWeights lambda = SimplexWeights::uniform(j_count);
    std::vector<PeriodTracePoint> trace;
    trace.reserve(config.max_outer_iters);
    std::deque<double> window;

    // Full-batch views stay valid for the whole fit.
    const bool full_batch = config.batch_size == 0;
    std::vector<double> treated_buf, interp_buf, synth_buf;
    std::vector<std::vector<double>> donor_bufs(j_count);

    // Buffers for donor scores evaluated over the full cells.
    std::vector<double> score_buf;
    std::vector<double> scores(j_count);

    double last_transport = 0.0;
    for (std::size_t outer = 0; outer < config.max_outer_iters; ++outer) {
        CriticLossBreakdown last_loss;
        for (std::size_t k = 0; k < config.n_critic; ++k) {
            // Assemble this step's batches.
            BatchView treated_view;
            std::vector<BatchView> donor_views(j_count);
            if (full_batch) {
                treated_buf = treated.points_flat();
                treated_view = {treated_buf.data(), treated.size()};
                for (std::size_t j = 0; j < j_count; ++j)
                    donor_views[j] = {donors[j].points_flat().data(), donors[j].size()};
            } else {
                treated_buf = draw_batch(treated, config.batch_size, rng);
                treated_view = {treated_buf.data(), config.batch_size};
                for (std::size_t j = 0; j < j_count; ++j) {
                    donor_bufs[j] = draw_batch(donors[j], config.batch_size, rng);
                    donor_views[j] = {donor_bufs[j].data(), config.batch_size};
                }
            }
            // Interpolates: pair the shuffled treated batch with a shuffled
            // mixture sample of equal size, one uniform u per pair.
            const std::size_t n_int = treated_view.count;
            shuffle_rows(treated_buf, d, rng);
            synth_buf = sample_mixture(donors, lambda, n_int, rng);
            shuffle_rows(synth_buf, d, rng);
            interp_buf.resize(n_int * d);
            for (std::size_t i = 0; i < n_int; ++i) {
                const double u = rng.uniform01();
                for (std::size_t c = 0; c < d; ++c)
                    interp_buf[i * d + c] =
                        u * treated_buf[i * d + c] + (1.0 - u) * synth_buf[i * d + c];
            }
            last_loss = critic_loss_and_grads(net, treated_view, donor_views, lambda, config.zeta,
                                              {interp_buf.data(), n_int}, grads, &ws);
            adam_step(net, adam, grads, config.alpha_theta, /*ascend=*/true);
        }
        last_transport = last_loss.transport_term;

        // Donor scores over the full cells with the current critic:
        // s_j = E_j[f]; the descent direction enters as g_j = -s_j, so donors
        // the critic scores high (mass near the treated) gain weight.
        for (std::size_t j = 0; j < j_count; ++j) {
            score_buf.resize(donors[j].size());
            net.forward_batch({donors[j].points_flat().data(), donors[j].size()},
                              score_buf.data());
            const double mean =
                std::accumulate(score_buf.begin(), score_buf.end(), 0.0) /
                static_cast<double>(donors[j].size());
            scores[j] = -mean;
        }
        SimplexWeights next = mirror_descent_step(lambda, scores, config.eta, config.alpha_lambda);

        double delta = 0.0;
        for (std::size_t j = 0; j < j_count; ++j)
            delta = std::max(delta, std::abs(next[j] - lambda[j]));
        lambda = std::move(next);

        trace.push_back({last_loss.total, last_transport + entropy_term(lambda, config.eta)});

        window.push_back(delta);
        if (window.size() > 10) window.pop_front();
        if (window.size() == 10) {
            const double mean_delta =
                std::accumulate(window.begin(), window.end(), 0.0) / 10.0;
            if (mean_delta < config.lambda_tol) break;
        }
    }
    return {lambda, std::move(trace)};
}

EstimationReport estimate(const PanelDataset& panel, const EstimatorConfig& config) {
    validate_config(config);
    const std::size_t t0 = panel.cutoff();
    const std::size_t j_count = panel.n_donors();
    if (j_count < 2) throw std::invalid_argument("estimate: needs at least two donors");

    SimplexWeights wts = config.temporal_weights.empty()
                             ? SimplexWeights::uniform(t0)
                             : SimplexWeights(config.temporal_weights);
    if (wts.size() != t0)
        throw std::invalid_argument("estimate: temporal_weights length must equal the pre-period count");

    std::vector<SimplexWeights> per_period;
    std::vector<std::vector<PeriodTracePoint>> traces;
    std::vector<std::size_t> iterations;
    std::vector<double> agg(j_count, 0.0);
    for (std::size_t t = 0; t < t0; ++t) {
        RandomStream stream(derive_seed(config.seed, t));
        auto [lam, trace] = estimate_period(panel, t, config, stream);
        for (std::size_t j = 0; j < j_count; ++j) agg[j] += wts[t] * lam[j];
        iterations.push_back(trace.size());
        per_period.push_back(std::move(lam));
        traces.push_back(std::move(trace));
    }
    return EstimationReport{std::move(per_period), SimplexWeights(std::move(agg)),
                            std::move(traces),     std::move(iterations),
                            config,                config.seed};
}

EmpiricalMeasure synthesize_counterfactual(const PanelDataset& panel,
                                           const SimplexWeights& lambda_star,
                                           std::size_t period) {
    if (period >= panel.n_periods())
        throw std::invalid_argument("synthesize_counterfactual: unknown period");
    return weighted_mixture(panel.donor_cells(period), lambda_star);
}

} // namespace dscw
