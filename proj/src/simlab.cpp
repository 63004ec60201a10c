#include "dscw/simlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <stdexcept>

#include "dscw/benchmarks.hpp"
#include "dscw/ot.hpp"

namespace dscw {

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::contamination: return "contamination";
        case Scenario::support_gap: return "support";
        case Scenario::bimodal_poisson: return "bimodal";
        case Scenario::multivariate: return "multivariate";
    }
    throw std::logic_error("scenario_name: unhandled scenario");
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "contamination") return Scenario::contamination;
    if (name == "support" || name == "support_gap") return Scenario::support_gap;
    if (name == "bimodal" || name == "bimodal_poisson") return Scenario::bimodal_poisson;
    if (name == "multivariate") return Scenario::multivariate;
    throw std::invalid_argument("unknown scenario '" + name +
                                "' (expected contamination|support|bimodal|multivariate)");
}

void validate_spec(const DgpSpec& spec) {
    if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0)) {
        throw std::invalid_argument("DgpSpec: epsilon must lie in [0, 1]");
    }
    if (!(spec.gamma >= 0.0) || spec.gamma >= 1.0) {
        throw std::invalid_argument("DgpSpec: gamma must lie in [0, 1)");
    }
    if (spec.n_micro < 2) throw std::invalid_argument("DgpSpec: n_micro must be at least 2");
    if (spec.t0 < 1) throw std::invalid_argument("DgpSpec: t0 must be at least 1");
    if (spec.t_post < 1) throw std::invalid_argument("DgpSpec: t_post must be at least 1");
    if (spec.j_donors < 2) throw std::invalid_argument("DgpSpec: j_donors must be at least 2");
    if (spec.lambda_true.size() != spec.j_donors) {
        throw std::invalid_argument("DgpSpec: lambda_true size must match j_donors");
    }
    SimplexWeights check(spec.lambda_true); // validates nonnegativity and normalization
    if (!(spec.sigma_noise >= 0.0)) throw std::invalid_argument("DgpSpec: sigma_noise must be nonnegative");
    if (!(spec.sigma_out > 0.0)) throw std::invalid_argument("DgpSpec: sigma_out must be positive");
    if (spec.scenario == Scenario::bimodal_poisson || spec.scenario == Scenario::multivariate) {
        if (spec.j_donors != 4) {
            throw std::invalid_argument("DgpSpec: the " + scenario_name(spec.scenario) +
                                        " scenario is defined for exactly 4 donors");
        }
    }
}

namespace {

// Largest-remainder apportionment of n atoms across mixture components; ties
// on the fractional part break toward the lower index.
std::vector<std::size_t> mixture_counts(const std::vector<double>& lambda, std::size_t n) {
    const std::size_t j_count = lambda.size();
    std::vector<std::size_t> counts(j_count);
    std::vector<double> frac(j_count);
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < j_count; ++j) {
        const double exact = lambda[j] * static_cast<double>(n);
        counts[j] = static_cast<std::size_t>(std::floor(exact));
        frac[j] = exact - std::floor(exact);
        assigned += counts[j];
    }
    std::vector<std::size_t> order(j_count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) counts[order[k % j_count]] += 1;
    return counts;
}

std::vector<std::string> panel_unit_names(std::size_t j_donors) {
    std::vector<std::string> units;
    units.reserve(j_donors + 1);
    units.push_back("treated");
    for (std::size_t j = 1; j <= j_donors; ++j) units.push_back("donor" + std::to_string(j));
    return units;
}

std::vector<std::string> panel_period_names(std::size_t n_periods) {
    std::vector<std::string> periods;
    periods.reserve(n_periods);
    for (std::size_t t = 1; t <= n_periods; ++t) periods.push_back(std::to_string(t));
    return periods;
}

// Replaces round(epsilon * n) atoms of `values` (chosen by a partial
// Fisher-Yates pass) with draws from N(mu_out, sigma_out^2).  A NaN mu_out
// targets the clean cell mean shifted up by 8.
//
// Index selection and outlier values come from substreams derived from
// `seed`, so for a fixed seed the replacement set at a smaller epsilon is a
// prefix of the set at a larger one, with identical outlier values at the
// shared indices.  That nesting is what makes the clean-vs-contaminated
// transport cost rise with epsilon on a fixed seed.
void contaminate_cell(std::vector<double>& values, const DgpSpec& spec, std::uint64_t seed) {
    const std::size_t n = values.size();
    const auto c = static_cast<std::size_t>(std::llround(spec.epsilon * static_cast<double>(n)));
    if (c == 0) return;
    double mu = spec.mu_out;
    if (std::isnan(mu)) {
        mu = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n) + 8.0;
    }
    RandomStream idx_rng(derive_seed(seed, 1));
    RandomStream val_rng(derive_seed(seed, 2));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < c; ++i) {
        std::swap(idx[i], idx[i + idx_rng.uniform_index(n - i)]);
    }
    for (std::size_t i = 0; i < c; ++i) {
        values[idx[i]] = val_rng.normal(mu, spec.sigma_out);
    }
}

PanelDataset assemble_panel(const DgpSpec& spec, std::vector<EmpiricalMeasure> cells) {
    const std::size_t n_periods = spec.t0 + spec.t_post;
    return PanelDataset(panel_unit_names(spec.j_donors), panel_period_names(n_periods),
                        spec.t0, std::move(cells));
}

} // namespace

std::pair<PanelDataset, SimplexWeights> dgp_contamination(const DgpSpec& spec, RandomStream& rng) {
    validate_spec(spec);
    const std::size_t n = spec.n_micro;
    const std::size_t n_periods = spec.t0 + spec.t_post;

    // One master draw from the caller's stream; every internal draw comes
    // from substreams derived from it.  The clean panel stream never sees
    // epsilon, so two specs differing only in epsilon share the same clean
    // draws atom for atom, and contamination is coupled per period.
    const std::uint64_t master = rng.next_u64();
    RandomStream panel_rng(derive_seed(master, 0));

    std::vector<double> f_t(n_periods);
    for (std::size_t t = 0; t < n_periods; ++t) f_t[t] = panel_rng.normal();
    std::vector<double> mu_j(spec.j_donors);
    for (std::size_t j = 0; j < spec.j_donors; ++j) mu_j[j] = panel_rng.uniform01();

    const std::vector<std::size_t> counts = mixture_counts(spec.lambda_true, n);

    std::vector<EmpiricalMeasure> cells;
    cells.reserve((spec.j_donors + 1) * n_periods);
    for (std::size_t t = 0; t < n_periods; ++t) {
        const double alpha = 0.1 * static_cast<double>(t + 1);
        std::vector<std::vector<double>> donor_vals(spec.j_donors);
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            donor_vals[j].resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                donor_vals[j][i] = alpha + mu_j[j] * f_t[t] + spec.sigma_noise * panel_rng.normal();
            }
        }
        std::vector<double> treated_vals;
        treated_vals.reserve(n);
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            for (std::size_t i = 0; i < counts[j]; ++i) {
                treated_vals.push_back(alpha + mu_j[j] * f_t[t] + spec.sigma_noise * panel_rng.normal());
            }
        }
        // Only the observed treated sample is contaminated; donors stay clean.
        contaminate_cell(treated_vals, spec, derive_seed(master, t + 1));

        cells.push_back(EmpiricalMeasure::from_samples(treated_vals));
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            cells.push_back(EmpiricalMeasure::from_samples(donor_vals[j]));
        }
    }
    return {assemble_panel(spec, std::move(cells)), SimplexWeights(spec.lambda_true)};
}

PanelDataset dgp_support_gap(const DgpSpec& spec, RandomStream& rng) {
    validate_spec(spec);
    const std::size_t n = spec.n_micro;
    const std::size_t n_periods = spec.t0 + spec.t_post;

    std::vector<EmpiricalMeasure> cells;
    cells.reserve((spec.j_donors + 1) * n_periods);
    for (std::size_t t = 0; t < n_periods; ++t) {
        std::vector<std::vector<double>> donor_vals(spec.j_donors);
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            donor_vals[j].resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double z = rng.normal();
                const double sign = z >= 0.0 ? 1.0 : -1.0;
                donor_vals[j][i] = sign * std::max(std::fabs(z), spec.gamma);
            }
        }
        std::vector<double> treated_vals(n);
        for (std::size_t i = 0; i < n; ++i) treated_vals[i] = 0.5 * std::tanh(rng.normal());

        cells.push_back(EmpiricalMeasure::from_samples(treated_vals));
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            cells.push_back(EmpiricalMeasure::from_samples(donor_vals[j]));
        }
    }
    return assemble_panel(spec, std::move(cells));
}

PanelDataset dgp_bimodal_poisson(const DgpSpec& spec, RandomStream& rng) {
    validate_spec(spec);
    const std::size_t n = spec.n_micro;
    const std::size_t n_periods = spec.t0 + spec.t_post;
    static constexpr double donor_means[4] = {2.0, 12.0, 18.0, 25.0};

    std::vector<EmpiricalMeasure> cells;
    cells.reserve((spec.j_donors + 1) * n_periods);
    for (std::size_t t = 0; t < n_periods; ++t) {
        std::vector<std::vector<double>> donor_vals(spec.j_donors);
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            donor_vals[j].resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                donor_vals[j][i] = static_cast<double>(rng.poisson(donor_means[j]));
            }
        }
        std::vector<double> treated_vals(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double mean = rng.uniform01() < 0.5 ? 5.0 : 20.0;
            treated_vals[i] = static_cast<double>(rng.poisson(mean));
        }

        cells.push_back(EmpiricalMeasure::from_samples(treated_vals));
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            cells.push_back(EmpiricalMeasure::from_samples(donor_vals[j]));
        }
    }
    return assemble_panel(spec, std::move(cells));
}

std::pair<PanelDataset, SimplexWeights> dgp_multivariate(const DgpSpec& spec, RandomStream& rng) {
    validate_spec(spec);
    const std::size_t n = spec.n_micro;
    const std::size_t n_periods = spec.t0 + spec.t_post;
    static constexpr double corners[4][2] = {{-3.0, -3.0}, {3.0, -3.0}, {-3.0, 3.0}, {3.0, 3.0}};
    constexpr double rho = 0.5;
    const double rho_c = std::sqrt(1.0 - rho * rho);

    const std::vector<std::size_t> counts = mixture_counts(spec.lambda_true, n);

    auto draw_pair = [&](std::size_t j, double* out) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        out[0] = corners[j][0] + z1;
        out[1] = corners[j][1] + rho * z1 + rho_c * z2;
    };

    std::vector<EmpiricalMeasure> cells;
    cells.reserve((spec.j_donors + 1) * n_periods);
    for (std::size_t t = 0; t < n_periods; ++t) {
        std::vector<std::vector<double>> donor_vals(spec.j_donors);
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            donor_vals[j].resize(2 * n);
            for (std::size_t i = 0; i < n; ++i) draw_pair(j, &donor_vals[j][2 * i]);
        }
        std::vector<double> treated_vals;
        treated_vals.reserve(2 * n);
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            for (std::size_t i = 0; i < counts[j]; ++i) {
                double xy[2];
                draw_pair(j, xy);
                treated_vals.push_back(xy[0]);
                treated_vals.push_back(xy[1]);
            }
        }

        cells.push_back(EmpiricalMeasure::from_samples(std::move(treated_vals), 2));
        for (std::size_t j = 0; j < spec.j_donors; ++j) {
            cells.push_back(EmpiricalMeasure::from_samples(std::move(donor_vals[j]), 2));
        }
    }
    return {assemble_panel(spec, std::move(cells)), SimplexWeights(spec.lambda_true)};
}

std::vector<double> detect_modes(const EmpiricalMeasure& m) {
    if (m.dim() != 1) throw std::invalid_argument("detect_modes: undefined for multivariate data");
    // Linear binning: an atom at a fractional position splits its mass
    // between the two adjacent integer bins in proportion to proximity.
    // Integer-valued atoms land in a single bin, so counting data keeps its
    // exact histogram; half-integer atoms (e.g. two-donor quantile averages)
    // do not alias into alternating bins.
    std::map<long long, double> hist;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double x = m.value(i);
        const double fl = std::floor(x);
        const double frac = x - fl;
        const long long bin = static_cast<long long>(fl);
        if (frac > 0.0) hist[bin + 1] += m.weight(i) * frac;
        hist[bin] += m.weight(i) * (1.0 - frac);
    }
    const long long lo = hist.begin()->first;
    const long long hi = hist.rbegin()->first;
    // Pad two empty bins on each side so boundary bins get well-defined
    // smoothed neighbours.
    const std::size_t width = static_cast<std::size_t>(hi - lo + 1) + 4;
    std::vector<double> h(width, 0.0);
    for (const auto& [bin, mass] : hist) h[static_cast<std::size_t>(bin - lo + 2)] = mass;

    std::vector<double> s(width, 0.0);
    for (std::size_t i = 1; i + 1 < width; ++i) s[i] = (h[i - 1] + h[i] + h[i + 1]) / 3.0;

    std::vector<double> modes;
    for (std::size_t i = 1; i + 1 < width; ++i) {
        if (s[i] > 0.0 && s[i] > s[i - 1] && s[i] > s[i + 1]) {
            modes.push_back(static_cast<double>(lo + static_cast<long long>(i) - 2));
        }
    }
    return modes;
}

EstimationReport fit_panel(const PanelDataset& panel, Method method,
                           const EstimatorConfig& config, std::size_t quantile_grid) {
    if (method == Method::wgan) return estimate(panel, config);

    validate_config(config);
    const std::size_t t0 = panel.cutoff();
    std::vector<double> temporal = config.temporal_weights;
    if (temporal.empty()) {
        temporal.assign(t0, 1.0 / static_cast<double>(t0));
    } else if (temporal.size() != t0) {
        throw std::invalid_argument("fit_panel: temporal_weights size must match the pre-period count");
    }

    std::vector<SimplexWeights> per_period;
    per_period.reserve(t0);
    std::vector<std::size_t> iters(t0, 1);
    for (std::size_t t = 0; t < t0; ++t) {
        if (method == Method::cdfl2) {
            per_period.push_back(cdf_l2_estimate(panel.treated_cell(t), panel.donor_cells(t)));
        } else {
            per_period.push_back(
                quantile_w2_estimate(panel.treated_cell(t), panel.donor_cells(t), quantile_grid));
        }
    }
    std::vector<double> agg(panel.n_donors(), 0.0);
    for (std::size_t t = 0; t < t0; ++t) {
        for (std::size_t j = 0; j < panel.n_donors(); ++j) agg[j] += temporal[t] * per_period[t][j];
    }
    return EstimationReport{std::move(per_period), SimplexWeights(std::move(agg)),
                            std::vector<std::vector<PeriodTracePoint>>(t0), std::move(iters),
                            config, config.seed};
}

namespace {

// Synthetic post-fit object a method is judged on: donor mixture for the
// adversarial and CDF estimators, the quantile-average measure otherwise.
EmpiricalMeasure synthesis_object(const PanelDataset& panel, std::size_t period, Method method,
                                  const SimplexWeights& lambda, std::size_t quantile_grid) {
    if (method == Method::w2quantile) {
        return quantile_average_synthesis(panel.donor_cells(period), lambda, quantile_grid);
    }
    return weighted_mixture(panel.donor_cells(period), lambda);
}

void accumulate_pmf(const EmpiricalMeasure& m, long long lo, std::vector<double>& mass) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        const long long bin = std::llround(m.value(i));
        if (bin >= lo && bin < lo + static_cast<long long>(mass.size())) {
            mass[static_cast<std::size_t>(bin - lo)] += m.weight(i);
        }
    }
}

std::vector<double> stride_subsample_xy(const EmpiricalMeasure& m, std::size_t cap) {
    const std::size_t stride = std::max<std::size_t>(1, m.size() / cap);
    std::vector<double> xy;
    xy.reserve(2 * std::min(cap, m.size()));
    for (std::size_t i = 0; i < m.size(); i += stride) {
        xy.push_back(m.point(i)[0]);
        xy.push_back(m.point(i)[1]);
    }
    return xy;
}

struct RepStorage {
    std::vector<char> ok;                                  // per replication
    std::vector<std::vector<std::vector<double>>> agg;     // [method][rep][j]
    std::vector<std::vector<std::vector<std::vector<double>>>> per_period; // [method][rep][t][j]
    std::vector<std::vector<std::vector<double>>> w1;      // [method][rep][t0 + 1]
    std::vector<std::vector<std::vector<double>>> w2;
};

WeightStats reduce_stats(const std::vector<const std::vector<double>*>& rows,
                         const std::vector<double>* truth,
                         const std::vector<double>* w1_col, const std::vector<double>* w2_col) {
    WeightStats out;
    if (rows.empty()) return out;
    const std::size_t j_count = rows.front()->size();
    const auto n = static_cast<double>(rows.size());

    out.mean_weights.assign(j_count, 0.0);
    for (const auto* row : rows) {
        for (std::size_t j = 0; j < j_count; ++j) out.mean_weights[j] += (*row)[j];
    }
    for (double& v : out.mean_weights) v /= n;

    out.var.assign(j_count, 0.0);
    if (rows.size() >= 2) {
        for (const auto* row : rows) {
            for (std::size_t j = 0; j < j_count; ++j) {
                const double d = (*row)[j] - out.mean_weights[j];
                out.var[j] += d * d;
            }
        }
        for (double& v : out.var) v /= (n - 1.0);
    }

    if (truth != nullptr) {
        out.bias.resize(j_count);
        for (std::size_t j = 0; j < j_count; ++j) out.bias[j] = out.mean_weights[j] - (*truth)[j];
        double mean_sq = 0.0;
        double mean_root = 0.0;
        for (const auto* row : rows) {
            double sq = 0.0;
            for (std::size_t j = 0; j < j_count; ++j) {
                const double d = (*row)[j] - (*truth)[j];
                sq += d * d;
            }
            sq /= static_cast<double>(j_count);
            mean_sq += sq;
            mean_root += std::sqrt(sq);
        }
        out.rmse = std::sqrt(mean_sq / n);
        out.rmse_alt = mean_root / n;
    }

    auto mean_of = [&](const std::vector<double>* col) {
        if (col == nullptr) return std::numeric_limits<double>::quiet_NaN();
        return std::accumulate(col->begin(), col->end(), 0.0) / static_cast<double>(col->size());
    };
    out.w1_mean = mean_of(w1_col);
    out.w2_mean = mean_of(w2_col);
    return out;
}

} // namespace

McReport run_monte_carlo(const DgpSpec& spec, const std::vector<Method>& methods,
                         std::size_t n_sim, const McConfig& config) {
    validate_spec(spec);
    if (n_sim == 0) throw std::invalid_argument("run_monte_carlo: n_sim must be positive");
    if (methods.empty()) throw std::invalid_argument("run_monte_carlo: no methods requested");
    for (std::size_t a = 0; a < methods.size(); ++a) {
        for (std::size_t b = a + 1; b < methods.size(); ++b) {
            if (methods[a] == methods[b]) {
                throw std::invalid_argument("run_monte_carlo: duplicate method " + method_name(methods[a]));
            }
        }
        if (spec.scenario == Scenario::multivariate && methods[a] != Method::wgan) {
            throw std::invalid_argument("run_monte_carlo: method " + method_name(methods[a]) +
                                        " is undefined for the multivariate scenario");
        }
    }

    std::vector<std::size_t> order = config.replication_order;
    if (order.empty()) {
        order.resize(n_sim);
        std::iota(order.begin(), order.end(), 0);
    } else {
        std::vector<char> seen(n_sim, 0);
        if (order.size() != n_sim) {
            throw std::invalid_argument("run_monte_carlo: replication_order must list every replication once");
        }
        for (std::size_t r : order) {
            if (r >= n_sim || seen[r]) {
                throw std::invalid_argument("run_monte_carlo: replication_order must be a permutation");
            }
            seen[r] = 1;
        }
    }

    const bool is_1d = spec.scenario != Scenario::multivariate;
    const bool has_truth =
        spec.scenario == Scenario::contamination || spec.scenario == Scenario::multivariate;
    const std::size_t n_methods = methods.size();
    const std::size_t t0 = spec.t0;

    RepStorage store;
    store.ok.assign(n_sim, 0);
    store.agg.assign(n_methods, std::vector<std::vector<double>>(n_sim));
    store.per_period.assign(n_methods, std::vector<std::vector<std::vector<double>>>(n_sim));
    store.w1.assign(n_methods, std::vector<std::vector<double>>(n_sim));
    store.w2.assign(n_methods, std::vector<std::vector<double>>(n_sim));

    McReport report;
    report.spec = spec;
    report.n_sim = n_sim;
    report.methods.reserve(n_methods);
    for (Method m : methods) {
        MethodReport mr;
        mr.method = m;
        report.methods.push_back(std::move(mr));
    }

    for (std::size_t r : order) {
        const std::uint64_t rep_seed = derive_seed(spec.seed, r);
        try {
            RandomStream rng(derive_seed(rep_seed, 1));
            PanelDataset panel = [&] {
                switch (spec.scenario) {
                    case Scenario::contamination: return dgp_contamination(spec, rng).first;
                    case Scenario::support_gap: return dgp_support_gap(spec, rng);
                    case Scenario::bimodal_poisson: return dgp_bimodal_poisson(spec, rng);
                    case Scenario::multivariate: return dgp_multivariate(spec, rng).first;
                }
                throw std::logic_error("run_monte_carlo: unhandled scenario");
            }();

            for (std::size_t m = 0; m < n_methods; ++m) {
                EstimatorConfig cfg = config.estimator;
                cfg.seed = derive_seed(rep_seed, 2 + static_cast<std::uint64_t>(methods[m]));
                const auto t_start = std::chrono::steady_clock::now();
                EstimationReport fit = fit_panel(panel, methods[m], cfg, config.quantile_grid);
                const auto t_end = std::chrono::steady_clock::now();
                report.methods[m].wall_clock_seconds +=
                    std::chrono::duration<double>(t_end - t_start).count();

                store.agg[m][r] = fit.aggregated.values();
                store.per_period[m][r].reserve(t0);
                for (const SimplexWeights& w : fit.per_period_weights) {
                    store.per_period[m][r].push_back(w.values());
                }
                if (is_1d) {
                    std::vector<double> w1_row(t0 + 1, 0.0);
                    std::vector<double> w2_row(t0 + 1, 0.0);
                    for (std::size_t t = 0; t < t0; ++t) {
                        EmpiricalMeasure synth = synthesis_object(panel, t, methods[m],
                                                                  fit.per_period_weights[t],
                                                                  config.quantile_grid);
                        w1_row[t] = w1_exact_1d(synth, panel.treated_cell(t)).value;
                        w2_row[t] = w2_exact_1d(synth, panel.treated_cell(t)).value;
                    }
                    for (std::size_t t = 0; t < t0; ++t) {
                        EmpiricalMeasure synth = synthesis_object(panel, t, methods[m],
                                                                  fit.aggregated, config.quantile_grid);
                        w1_row[t0] += w1_exact_1d(synth, panel.treated_cell(t)).value / static_cast<double>(t0);
                        w2_row[t0] +=
                            w2_exact_1d(synth, panel.treated_cell(t)).value / static_cast<double>(t0);
                    }
                    store.w1[m][r] = std::move(w1_row);
                    store.w2[m][r] = std::move(w2_row);
                }

                // Plot artifacts come from the first replication by index.
                if (r == 0 && spec.scenario == Scenario::bimodal_poisson) {
                    const std::size_t t_show = t0; // first post period
                    if (report.pmf_series.empty()) {
                        report.pmf_series.push_back("target");
                    }
                    EmpiricalMeasure synth = synthesis_object(panel, t_show, methods[m],
                                                              fit.aggregated, config.quantile_grid);
                    EmpiricalMeasure target = panel.treated_cell(t_show);
                    long long lo = std::llround(target.value(0));
                    long long hi = lo;
                    auto widen = [&](const EmpiricalMeasure& e) {
                        for (std::size_t i = 0; i < e.size(); ++i) {
                            lo = std::min(lo, std::llround(e.value(i)));
                            hi = std::max(hi, std::llround(e.value(i)));
                        }
                    };
                    widen(target);
                    widen(synth);
                    if (!report.pmf_values.empty()) {
                        lo = std::min(lo, std::llround(report.pmf_values.front()));
                        hi = std::max(hi, std::llround(report.pmf_values.back()));
                    }
                    std::vector<double> values;
                    for (long long v = lo; v <= hi; ++v) values.push_back(static_cast<double>(v));
                    // Re-bin existing rows if the support range grew.
                    if (values.size() != report.pmf_values.size()) {
                        const long long old_lo = report.pmf_values.empty()
                                                     ? lo
                                                     : std::llround(report.pmf_values.front());
                        for (auto& row : report.pmf_mass) {
                            std::vector<double> grown(values.size(), 0.0);
                            for (std::size_t i = 0; i < row.size(); ++i) {
                                grown[static_cast<std::size_t>(old_lo - lo) + i] = row[i];
                            }
                            row = std::move(grown);
                        }
                        report.pmf_values = values;
                    }
                    if (report.pmf_mass.empty()) {
                        report.pmf_mass.emplace_back(report.pmf_values.size(), 0.0);
                        accumulate_pmf(target, lo, report.pmf_mass[0]);
                    }
                    report.pmf_series.push_back(method_name(methods[m]));
                    report.pmf_mass.emplace_back(report.pmf_values.size(), 0.0);
                    accumulate_pmf(synth, lo, report.pmf_mass.back());
                }
                if (r == 0 && spec.scenario == Scenario::multivariate) {
                    const std::size_t t_show = t0;
                    if (report.scatter.empty()) {
                        report.scatter.push_back(
                            {"target", stride_subsample_xy(panel.treated_cell(t_show), 400)});
                        std::vector<double> donor_xy;
                        for (std::size_t j = 0; j < panel.n_donors(); ++j) {
                            auto xy = stride_subsample_xy(panel.donor_cells(t_show)[j],
                                                          400 / panel.n_donors());
                            donor_xy.insert(donor_xy.end(), xy.begin(), xy.end());
                        }
                        report.scatter.push_back({"donors", std::move(donor_xy)});
                    }
                    RandomStream scatter_rng(derive_seed(rep_seed, 777));
                    report.scatter.push_back(
                        {method_name(methods[m]),
                         sample_mixture(panel.donor_cells(t_show), fit.aggregated, 400, scatter_rng)});
                }
            }
            store.ok[r] = 1;
        } catch (const std::exception&) {
            report.failed_replications += 1;
            // Partial artifacts from a failed replication are discarded.
            for (std::size_t m = 0; m < n_methods; ++m) {
                store.agg[m][r].clear();
                store.per_period[m][r].clear();
                store.w1[m][r].clear();
                store.w2[m][r].clear();
            }
        }
    }

    const std::vector<double>* truth = has_truth ? &spec.lambda_true : nullptr;
    for (std::size_t m = 0; m < n_methods; ++m) {
        MethodReport& mr = report.methods[m];
        for (std::size_t r = 0; r < n_sim; ++r) {
            if (store.ok[r]) mr.aggregated_weights.push_back(store.agg[m][r]);
        }

        for (std::size_t t = 0; t <= t0; ++t) {
            std::vector<const std::vector<double>*> rows;
            std::vector<double> w1_col;
            std::vector<double> w2_col;
            for (std::size_t r = 0; r < n_sim; ++r) {
                if (!store.ok[r]) continue;
                rows.push_back(t < t0 ? &store.per_period[m][r][t] : &store.agg[m][r]);
                if (is_1d) {
                    w1_col.push_back(store.w1[m][r][t]);
                    w2_col.push_back(store.w2[m][r][t]);
                }
            }
            WeightStats stats = reduce_stats(rows, truth, is_1d && !w1_col.empty() ? &w1_col : nullptr,
                                             is_1d && !w2_col.empty() ? &w2_col : nullptr);
            if (t < t0) {
                mr.per_period.push_back(std::move(stats));
            } else {
                mr.aggregated = std::move(stats);
            }
        }
    }
    return report;
}

} // namespace dscw
