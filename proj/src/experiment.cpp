#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <thread>

#include "eblab/errors.hpp"
#include "eblab/lab.hpp"

namespace eblab {

namespace {

bool is_sequence_model(const ModelSpec& model) {
    return model.kind == ModelKind::WhiteNoise || model.kind == ModelKind::FixedDesignRegression;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

int worker_count(int threads) {
    if (threads > 0) return threads;
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

}  // namespace

void validate(const ExperimentConfig& config) {
    require(!config.n_list.empty(), "config: n_list must be nonempty");
    for (std::size_t i = 0; i < config.n_list.size(); ++i) {
        require(config.n_list[i] >= 3, "config: every n must be at least 3");
        if (i > 0) require(config.n_list[i] > config.n_list[i - 1], "config: n_list must be strictly increasing");
    }
    require(config.replicates >= 1, "config: replicates must be at least 1");
    require(config.level > 0.0 && config.level < 1.0, "config: level must lie in (0, 1)");
    require(config.posterior_draws >= 1, "config: posterior_draws must be positive");
    require(config.lower_bound_delta > 0.0, "config: lower_bound_delta must be positive");
    require(config.threads >= 0, "config: threads must be nonnegative");
    require(config.grid_points >= 2, "config: grid_points must be at least 2");
    const bool density = config.model.kind == ModelKind::IIDDensity;
    require(config.metric == Metric::L2 || density, "config: the Hellinger metric needs a density model");
    require(config.truth_source == TruthSource::Coefficients ||
                (density && config.model.density_param == DensityParam::Histogram),
            "config: the Lipschitz histogram truth needs histogram density data");
    if (config.prior.family == PriorFamily::DirichletHistogram)
        require(density && config.model.density_param == DensityParam::Histogram,
                "config: the Dirichlet prior needs histogram density data");
    ModelSpec probe = config.model;
    probe.n = config.n_list.front();
    validate(probe);
}

std::uint64_t replicate_seed(std::uint64_t base, int n, int replicate) {
    return derive_seed(base, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replicate));
}

CoefficientVector experiment_truth(const ExperimentConfig& config, int n) {
    if (config.truth_source == TruthSource::LipschitzHistogram) return lipschitz_histogram_truth(kSamplingCells);
    TruthSpec spec = config.truth;
    if (spec.dim <= 0) spec.dim = is_sequence_model(config.model) ? 2 * n : 20;
    return generate_truth(spec);
}

PriorSpec experiment_prior(const ExperimentConfig& config, int n) {
    PriorSpec prior = config.prior;
    if (is_sequence_model(config.model)) prior.trunc = n;
    return prior;
}

HyperGrid experiment_grid(const ExperimentConfig& config, int n) {
    const PriorSpec prior = experiment_prior(config, n);
    if (!config.grid_values.empty()) {
        HyperGrid grid{config.grid_values, prior.family};
        validate(grid);
        return grid;
    }
    ModelSpec model = config.model;
    model.n = n;
    return default_grid(prior, model, config.grid_points);
}

RateOptions experiment_rate_options(const ExperimentConfig& config, int n) {
    RateOptions opt = config.rates;
    opt.small_ball.seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(n), 0x72617465ULL);
    // Solving the Hellinger small-ball equation for every bin count is too slow
    // at experiment scale; the closed-form representative is used instead.
    if (opt.small_ball.method == SmallBallMethod::Auto && config.prior.family == PriorFamily::DirichletHistogram)
        opt.small_ball.method = SmallBallMethod::Analytic;
    return opt;
}

RecordTable run_experiment(const ExperimentConfig& config) {
    validate(config);
    RecordTable table;
    for (int n : config.n_list) {
        ModelSpec model = config.model;
        model.n = n;
        const CoefficientVector theta0 = experiment_truth(config, n);
        const PriorSpec prior = experiment_prior(config, n);
        const HyperGrid grid = experiment_grid(config, n);

        std::optional<RateCurve> rates;
        std::string rate_status;
        if (config.compute_rates) {
            try {
                rates = rate_curve(prior, grid, theta0, n, experiment_rate_options(config, n));
            } catch (const std::exception& e) {
                rate_status = one_line(std::string("rates failed: ") + e.what());
            }
        }

        auto run_replicate = [&](int rep) {
            const auto start = std::chrono::steady_clock::now();
            ExperimentRecord rec;
            rec.n = n;
            rec.replicate = rep;
            rec.seed = replicate_seed(config.base_seed, n, rep);
            std::vector<std::string> notes;
            if (!rate_status.empty()) notes.push_back(rate_status);
            try {
                const Dataset data = simulate(model, theta0, rec.seed);
                MarginalOptions mopt = config.marginal;
                mopt.seed = derive_seed(rec.seed, 1);
                const MarginalCurve curve = marginal_curve(data, prior, grid, mopt);
                const std::size_t idx = mmle_index(curve);
                rec.lambda_hat = grid.values[idx];
                if (std::any_of(curve.flagged.begin(), curve.flagged.end(), [](bool b) { return b; }))
                    notes.emplace_back("marginal MC degenerate");

                MCMCOptions mcmc = config.mcmc;
                mcmc.seed = derive_seed(rec.seed, 2);
                const PosteriorHandle post = eb_posterior(data, prior, rec.lambda_hat, mcmc);
                if (post.warning) notes.emplace_back("MCMC acceptance out of range");
                const std::uint64_t draw_seed = derive_seed(rec.seed, 3);
                rec.radius_eb = contraction_radius(post, theta0, config.level, config.posterior_draws, draw_seed, config.metric);
                const DistanceToTruth distance(post.kind, theta0, config.metric);
                rec.loss_mean_eb = distance(posterior_mean(post));

                if (config.hyperprior) {
                    const HBPosterior hb = hb_posterior(data, prior, curve, *config.hyperprior, mcmc);
                    rec.radius_hb = contraction_radius(hb, theta0, config.level, config.posterior_draws, draw_seed, config.metric);
                }
                if (rates) {
                    rec.eps_lambda_hat = rates->eps[static_cast<Eigen::Index>(idx)];
                    rec.eps0 = rates->eps0;
                    rec.in_lambda0 = rates->in_lambda0[idx];
                }
            } catch (const std::exception& e) {
                notes.push_back(one_line(std::string("error: ") + e.what()));
            }
            if (!notes.empty()) {
                rec.status.clear();
                for (std::size_t i = 0; i < notes.size(); ++i) rec.status += (i ? "; " : "") + notes[i];
            }
            if (config.timing)
                rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return rec;
        };

        // Replicates fill their own slots; rows are appended in replicate order.
        std::vector<ExperimentRecord> rows(static_cast<std::size_t>(config.replicates));
        const int workers = std::min(worker_count(config.threads), config.replicates);
        if (workers <= 1) {
            for (int rep = 0; rep < config.replicates; ++rep) rows[static_cast<std::size_t>(rep)] = run_replicate(rep);
        } else {
            std::atomic<int> next{0};
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (int rep = next++; rep < config.replicates; rep = next++)
                        rows[static_cast<std::size_t>(rep)] = run_replicate(rep);
                });
            for (auto& t : pool) t.join();
        }
        table.insert(table.end(), rows.begin(), rows.end());
    }
    return table;
}

RateFit fit_power_law(const std::vector<double>& n, const std::vector<double>& value) {
    require(n.size() == value.size(), "fit_power_law: length mismatch");
    const std::size_t m = n.size();
    require(m >= 3, "fit_power_law: need at least three distinct n values");
    std::vector<double> x(m);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        require(n[i] > 0.0, "fit_power_law: n must be positive");
        if (!(value[i] > 0.0)) throw NumericalError("fit_power_law: medians must be positive");
        x[i] = std::log(n[i]);
        y[i] = std::log(value[i]);
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0.0, "fit_power_law: need at least three distinct n values");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        ssr += r * r;
    }
    fit.stderr_slope = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
    return fit;
}

double record_column(const ExperimentRecord& r, const std::string& column) {
    if (column == "lambda_hat") return r.lambda_hat;
    if (column == "eps_lambda_hat") return r.eps_lambda_hat;
    if (column == "eps0") return r.eps0;
    if (column == "radius_eb") return r.radius_eb;
    if (column == "radius_hb") return r.radius_hb;
    if (column == "loss_mean_eb") return r.loss_mean_eb;
    if (column == "wall_time") return r.wall_time;
    if (column == "in_lambda0") return r.in_lambda0 ? 1.0 : 0.0;
    throw ParameterError("unknown record column: " + column);
}

std::vector<std::pair<int, double>> column_medians(const RecordTable& table, const std::string& column) {
    std::map<int, std::vector<double>> groups;
    for (const auto& r : table) {
        const double v = record_column(r, column);
        if (std::isfinite(v)) groups[r.n].push_back(v);
    }
    std::vector<std::pair<int, double>> out;
    for (auto& [n, values] : groups) out.emplace_back(n, median(values));
    return out;
}

RateFit fit_rate_exponent(const RecordTable& table, const std::string& column) {
    std::vector<double> n;
    std::vector<double> value;
    for (const auto& [size, med] : column_medians(table, column)) {
        n.push_back(size);
        value.push_back(med);
    }
    return fit_power_law(n, value);
}

std::vector<LocalizationSummary> mmle_localization_summary(const RecordTable& table) {
    require(!table.empty(), "mmle_localization_summary: empty table");
    std::map<int, std::pair<int, int>> counts;
    for (const auto& r : table) {
        auto& c = counts[r.n];
        ++c.first;
        c.second += r.in_lambda0;
    }
    constexpr double z = 1.959963984540054;
    std::vector<LocalizationSummary> out;
    for (const auto& [n, c] : counts) {
        const double m = c.first;
        const double p = c.second / m;
        const double denom = 1.0 + z * z / m;
        const double centre = (p + z * z / (2.0 * m)) / denom;
        const double half = z * std::sqrt(p * (1.0 - p) / m + z * z / (4.0 * m * m)) / denom;
        out.push_back({n, c.first, p, std::max(0.0, centre - half), std::min(1.0, centre + half)});
    }
    return out;
}

std::vector<LowerBoundSummary> lower_bound_summary(const RecordTable& table, double delta) {
    require(delta > 0.0, "lower_bound_summary: delta must be positive");
    std::map<int, std::pair<int, int>> counts;
    for (const auto& r : table) {
        if (!std::isfinite(r.eps0) || !std::isfinite(r.radius_eb)) continue;
        auto& c = counts[r.n];
        ++c.first;
        c.second += r.radius_eb < delta * r.eps0;
    }
    std::vector<LowerBoundSummary> out;
    for (const auto& [n, c] : counts) out.push_back({n, c.first, static_cast<double>(c.second) / c.first});
    return out;
}

std::vector<RatioSummary> eb_hb_comparison(const RecordTable& table) {
    std::map<int, std::vector<double>> ratios;
    for (const auto& r : table)
        if (std::isfinite(r.radius_hb) && std::isfinite(r.radius_eb) && r.radius_eb > 0.0)
            ratios[r.n].push_back(r.radius_hb / r.radius_eb);
    require(!ratios.empty(), "eb_hb_comparison: table has no hierarchical Bayes radii");
    std::vector<RatioSummary> out;
    for (const auto& [n, v] : ratios)
        out.push_back({n, median(v), nearest_rank_quantile(v, 0.25), nearest_rank_quantile(v, 0.75)});
    return out;
}

}  // namespace eblab
