#include "eblab/inference.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "eblab/errors.hpp"

namespace eblab {

namespace {

bool is_sequence_model(const ModelSpec& model) {
    return model.kind == ModelKind::WhiteNoise || model.kind == ModelKind::FixedDesignRegression;
}

// phi(a) / Phi(a), stable for very negative a.
double inverse_mills(double a) { return std::exp(log_normal_pdf(a, 0.0, 1.0) - log_normal_cdf(a)); }

struct LaplacePieces {
    double w_plus;
    double m_plus;
    double m_minus;
};

LaplacePieces laplace_pieces(double u, double v) {
    const double s = std::sqrt(v);
    const double log_plus = -u + 0.5 * v + log_normal_cdf((u - v) / s);
    const double log_minus = u + 0.5 * v + log_normal_cdf(-(u + v) / s);
    return {1.0 / (1.0 + std::exp(log_minus - log_plus)), u - v, u + v};
}

double loglinear_log_prior(const PriorSpec& prior, const Eigen::VectorXd& theta, const Eigen::VectorXd& sd) {
    double out = 0.0;
    if (prior.family == PriorFamily::Sieve) {
        for (double t : theta) out += sieve_log_density(prior.g, t);
    } else {
        for (Eigen::Index j = 0; j < theta.size(); ++j) out += log_normal_pdf(theta[j], 0.0, sd[j] * sd[j]);
    }
    return out;
}

PosteriorHandle loglinear_mcmc(const Dataset& data, const PriorSpec& prior, const MCMCOptions& opt) {
    require(opt.burn_in >= 0 && opt.kept >= 1 && opt.thin >= 1, "MCMC: invalid chain settings");
    const int k = loglinear_dimension(prior);
    const double n = static_cast<double>(data.obs.size());
    const Eigen::VectorXd stats = loglinear_statistics(data.obs, k);
    const Eigen::MatrixXd basis = loglinear_basis_table(k, opt.quad_points);
    const Eigen::ArrayXd weights = simpson_weights(opt.quad_points).array();
    const Eigen::VectorXd sd = prior.family == PriorFamily::Sieve ? Eigen::VectorXd()
                                                                   : gaussian_prior_sd(prior.alpha, prior.tau, k);
    auto log_target = [&](const Eigen::VectorXd& theta) {
        const Eigen::ArrayXd g = (basis * theta).array();
        const double top = g.maxCoeff();
        const double c = top + std::log((weights * (g - top).exp()).sum());
        return loglinear_log_prior(prior, theta, sd) + theta.dot(stats) - n * c;
    };

    const double step = opt.step > 0.0 ? opt.step : 0.3 / std::sqrt(static_cast<double>(k));
    Rng rng(opt.seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;

    PosteriorHandle post;
    post.kind = PosteriorKind::LogLinearMCMC;
    post.lambda = hyper_value(prior);
    post.dim = k;
    post.chain.resize(k, opt.kept);

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
    double current = log_target(theta);
    long accepted = 0;
    const long total = static_cast<long>(opt.burn_in) + static_cast<long>(opt.kept) * opt.thin;
    Eigen::VectorXd proposal(k);
    for (long it = 0; it < total; ++it) {
        for (int j = 0; j < k; ++j) proposal[j] = theta[j] + step * normal(rng);
        const double cand = log_target(proposal);
        if (std::log(unif(rng)) < cand - current) {
            theta = proposal;
            current = cand;
            ++accepted;
        }
        const long after = it - opt.burn_in;
        if (after >= 0 && (after + 1) % opt.thin == 0) post.chain.col(after / opt.thin) = theta;
    }
    post.acceptance = static_cast<double>(accepted) / static_cast<double>(total);
    post.warning = post.acceptance < 0.1 || post.acceptance > 0.6;
    return post;
}

}  // namespace

std::size_t mmle_index(const MarginalCurve& curve) {
    require(curve.logm.size() >= 1 && curve.logm.size() == static_cast<Eigen::Index>(curve.grid.size()),
            "mmle: curve must be nonempty and match its grid");
    std::size_t best = 0;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        const double value = curve.logm[static_cast<Eigen::Index>(i)];
        if (std::isnan(value)) {
            std::ostringstream os;
            os << "mmle: log marginal is NaN at lambda = " << curve.grid.values[i];
            throw NumericalError(os.str());
        }
        if (value > curve.logm[static_cast<Eigen::Index>(best)]) best = i;
    }
    return best;
}

double mmle(const MarginalCurve& curve) { return curve.grid.values[mmle_index(curve)]; }

double laplace_sieve_posterior_mean(double u, double v) {
    const LaplacePieces p = laplace_pieces(u, v);
    const double s = std::sqrt(v);
    const double mean_plus = p.m_plus + s * inverse_mills(p.m_plus / s);
    const double mean_minus = p.m_minus - s * inverse_mills(-p.m_minus / s);
    return p.w_plus * mean_plus + (1.0 - p.w_plus) * mean_minus;
}

PosteriorHandle eb_posterior(const Dataset& data, const PriorSpec& base, double lambda, const MCMCOptions& mcmc) {
    const PriorSpec prior = with_hyper(base, lambda);
    PosteriorHandle post;
    post.lambda = lambda;

    if (is_sequence_model(data.model)) {
        const SequenceForm seq = sequence_form(data);
        const int n = static_cast<int>(seq.u.size());
        post.dim = n;
        switch (prior.family) {
            case PriorFamily::ScaledGaussian:
            case PriorFamily::RegularityGaussian: {
                post.kind = PosteriorKind::ConjugateGaussianSeq;
                const Eigen::ArrayXd t2 = gaussian_prior_sd(prior.alpha, prior.tau, n).array().square();
                const Eigen::ArrayXd v = seq.v.array();
                post.mean = (seq.u.array() * t2 / (t2 + v)).matrix();
                post.var = (t2 * v / (t2 + v)).matrix();
                return post;
            }
            case PriorFamily::Sieve: {
                post.kind = PosteriorKind::SieveCoord;
                post.g = prior.g;
                require(prior.k <= n, "eb_posterior: sieve dimension exceeds n");
                const Eigen::ArrayXd u = seq.u.head(prior.k).array();
                const Eigen::ArrayXd v = seq.v.head(prior.k).array();
                if (prior.g == SieveDensity::StdGaussian) {
                    post.mean = (u / (1.0 + v)).matrix();
                    post.var = (v / (1.0 + v)).matrix();
                } else {
                    post.u = u.matrix();
                    post.v = v.matrix();
                    post.positive_weight.resize(prior.k);
                    post.mean.resize(prior.k);
                    for (int j = 0; j < prior.k; ++j) {
                        post.positive_weight[j] = laplace_pieces(u[j], v[j]).w_plus;
                        post.mean[j] = laplace_sieve_posterior_mean(u[j], v[j]);
                    }
                }
                return post;
            }
            case PriorFamily::DirichletHistogram:
                break;
        }
        throw ParameterError("eb_posterior: Dirichlet histogram prior needs density data");
    }

    if (data.model.density_param == DensityParam::Histogram) {
        require(prior.family == PriorFamily::DirichletHistogram, "eb_posterior: histogram data needs the Dirichlet prior");
        post.kind = PosteriorKind::DirichletHist;
        post.dim = prior.k;
        post.dirichlet = bin_counts(data.obs, prior.k).cast<double>().array() + prior.alpha;
        return post;
    }
    return loglinear_mcmc(data, prior, mcmc);
}

Eigen::VectorXd sample_posterior(const PosteriorHandle& post, Rng& rng) {
    std::normal_distribution<double> normal;
    switch (post.kind) {
        case PosteriorKind::ConjugateGaussianSeq:
            return post.mean + post.var.cwiseSqrt().cwiseProduct(
                                   Eigen::VectorXd::NullaryExpr(post.mean.size(), [&]() { return normal(rng); }));
        case PosteriorKind::SieveCoord: {
            if (post.g == SieveDensity::StdGaussian)
                return post.mean + post.var.cwiseSqrt().cwiseProduct(
                                       Eigen::VectorXd::NullaryExpr(post.mean.size(), [&]() { return normal(rng); }));
            std::uniform_real_distribution<double> unif;
            Eigen::VectorXd theta(post.u.size());
            for (Eigen::Index j = 0; j < theta.size(); ++j) {
                const double s = std::sqrt(post.v[j]);
                if (unif(rng) < post.positive_weight[j]) {
                    const double m = post.u[j] - post.v[j];
                    theta[j] = m + s * sample_normal_tail(-m / s, rng);
                } else {
                    const double m = post.u[j] + post.v[j];
                    theta[j] = m - s * sample_normal_tail(m / s, rng);
                }
            }
            return theta;
        }
        case PosteriorKind::DirichletHist:
            return sample_dirichlet(post.dirichlet, rng);
        case PosteriorKind::LogLinearMCMC: {
            std::uniform_int_distribution<Eigen::Index> pick(0, post.chain.cols() - 1);
            return post.chain.col(pick(rng));
        }
    }
    throw ParameterError("sample_posterior: unknown posterior kind");
}

Eigen::VectorXd posterior_mean(const PosteriorHandle& post) {
    switch (post.kind) {
        case PosteriorKind::ConjugateGaussianSeq:
        case PosteriorKind::SieveCoord:
            return post.mean;
        case PosteriorKind::DirichletHist:
            return post.dirichlet / post.dirichlet.sum();
        case PosteriorKind::LogLinearMCMC:
            return post.chain.rowwise().mean();
    }
    throw ParameterError("posterior_mean: unknown posterior kind");
}

DistanceToTruth::DistanceToTruth(PosteriorKind kind, const Eigen::VectorXd& theta0, Metric metric, int quad_points)
    : kind_(kind), theta0_(theta0), metric_(metric), quad_points_(quad_points) {
    if (metric_ == Metric::L2) return;
    if (kind_ == PosteriorKind::LogLinearMCMC) {
        f0_ = loglinear_density(theta0_, quad_points_);
    } else {
        require(kind_ == PosteriorKind::DirichletHist, "distance: Hellinger metric needs a density posterior");
    }
}

double DistanceToTruth::operator()(const Eigen::VectorXd& theta) const {
    if (metric_ == Metric::L2) return padded_distance(theta, theta0_);
    if (kind_ == PosteriorKind::DirichletHist) return histogram_hellinger(theta0_, theta);
    return hellinger(f0_, loglinear_density(theta, quad_points_));
}

std::vector<double> posterior_distances(const PosteriorHandle& post, const Eigen::VectorXd& theta0, int draws,
                                        std::uint64_t seed, Metric metric) {
    require(draws >= 1, "posterior_distances: need at least one draw");
    const DistanceToTruth distance(post.kind, theta0, metric);
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(draws));
    for (auto& d : out) d = distance(sample_posterior(post, rng));
    return out;
}

BallMass posterior_ball_mass(const PosteriorHandle& post, const Eigen::VectorXd& theta0, double r, int draws,
                             std::uint64_t seed, Metric metric) {
    require(r >= 0.0, "posterior_ball_mass: radius must be nonnegative");
    if (std::isinf(r)) return {1.0, 0.0};
    // Every built-in posterior is continuous, so a zero-radius ball has mass 0.
    if (r == 0.0) return {0.0, 0.0};
    const std::vector<double> d = posterior_distances(post, theta0, draws, seed, metric);
    const double hits = static_cast<double>(std::count_if(d.begin(), d.end(), [r](double x) { return x <= r; }));
    const double p = hits / draws;
    return {p, std::sqrt(p * (1.0 - p) / draws)};
}

double contraction_radius(const PosteriorHandle& post, const Eigen::VectorXd& theta0, double level, int draws,
                          std::uint64_t seed, Metric metric) {
    require(level > 0.0 && level < 1.0, "contraction_radius: level must lie in (0, 1)");
    return nearest_rank_quantile(posterior_distances(post, theta0, draws, seed, metric), level);
}

Eigen::VectorXd grid_cell_widths(const HyperGrid& grid) {
    const auto m = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
    if (is_discrete(grid.family) || m == 1) return w;
    const auto& x = grid.values;
    w[0] = 0.5 * (x[1] - x[0]);
    w[m - 1] = 0.5 * (x[m - 1] - x[m - 2]);
    for (Eigen::Index i = 1; i + 1 < m; ++i) w[i] = 0.5 * (x[i + 1] - x[i - 1]);
    return w;
}

Eigen::VectorXd hb_weights(const MarginalCurve& curve, const Hyperprior& hyperprior) {
    const auto m = static_cast<Eigen::Index>(curve.grid.size());
    require(curve.logm.size() == m && m >= 1, "hb_weights: curve must match its grid");
    const Eigen::VectorXd widths = grid_cell_widths(curve.grid);
    Eigen::VectorXd logw(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double lp = hyperprior_logdensity(hyperprior, curve.grid.values[static_cast<std::size_t>(i)]);
        require(std::isfinite(lp), "hb_posterior: hyperprior must be positive on the grid");
        logw[i] = curve.logm[i] + lp + std::log(widths[i]);
    }
    const double norm = log_sum_exp(logw);
    if (!std::isfinite(norm)) throw NumericalError("hb_posterior: all weights underflow");
    Eigen::VectorXd w = (logw.array() - norm).exp().matrix();
    return w / w.sum();
}

HBPosterior hb_posterior(const Dataset& data, const PriorSpec& base, const MarginalCurve& curve,
                         const Hyperprior& hyperprior, const MCMCOptions& mcmc) {
    HBPosterior hb{curve.grid, hb_weights(curve, hyperprior), {}, {}};
    const double top = hb.weights.maxCoeff();
    const bool expensive = data.model.kind == ModelKind::IIDDensity && data.model.density_param == DensityParam::LogLinear;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        const bool build = !expensive || hb.weights[static_cast<Eigen::Index>(i)] >= 1e-10 * top;
        MCMCOptions opt = mcmc;
        opt.seed = derive_seed(mcmc.seed, i);
        hb.components.push_back(build ? eb_posterior(data, base, curve.grid.values[i], opt) : PosteriorHandle{});
        hb.built.push_back(build);
    }
    return hb;
}

HBPosterior hb_posterior(const Dataset& data, const PriorSpec& base, const HyperGrid& grid,
                         const Hyperprior& hyperprior, const MarginalOptions& marginal, const MCMCOptions& mcmc) {
    return hb_posterior(data, base, marginal_curve(data, base, grid, marginal), hyperprior, mcmc);
}

namespace {

std::vector<double> built_weights(const HBPosterior& hb) {
    std::vector<double> w(hb.components.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = hb.built[i] ? hb.weights[static_cast<Eigen::Index>(i)] : 0.0;
    return w;
}

Eigen::VectorXd padded(const Eigen::VectorXd& v, Eigen::Index size) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size);
    out.head(v.size()) = v;
    return out;
}

}  // namespace

Eigen::VectorXd sample_posterior(const HBPosterior& hb, Rng& rng) {
    const std::vector<double> w = built_weights(hb);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    return sample_posterior(hb.components[pick(rng)], rng);
}

Eigen::VectorXd posterior_mean(const HBPosterior& hb) {
    const std::vector<double> w = built_weights(hb);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    Eigen::Index size = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (hb.built[i]) size = std::max(size, posterior_mean(hb.components[i]).size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(size);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) mean += (w[i] / total) * padded(posterior_mean(hb.components[i]), size);
    return mean;
}

std::vector<double> posterior_distances(const HBPosterior& hb, const Eigen::VectorXd& theta0, int draws,
                                        std::uint64_t seed, Metric metric) {
    require(draws >= 1, "posterior_distances: need at least one draw");
    require(!hb.components.empty(), "posterior_distances: empty hierarchical posterior");
    std::size_t first = 0;
    while (!hb.built[first]) ++first;
    const DistanceToTruth distance(hb.components[first].kind, theta0, metric);
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(draws));
    for (auto& d : out) d = distance(sample_posterior(hb, rng));
    return out;
}

double contraction_radius(const HBPosterior& hb, const Eigen::VectorXd& theta0, double level, int draws,
                          std::uint64_t seed, Metric metric) {
    require(level > 0.0 && level < 1.0, "contraction_radius: level must lie in (0, 1)");
    return nearest_rank_quantile(posterior_distances(hb, theta0, draws, seed, metric), level);
}

}  // namespace eblab
