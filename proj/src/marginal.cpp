#include "eblab/marginal.hpp"

#include <algorithm>
#include <sstream>

#include "eblab/errors.hpp"

namespace eblab {

namespace {

bool is_sequence_model(const ModelSpec& model) {
    return model.kind == ModelKind::WhiteNoise || model.kind == ModelKind::FixedDesignRegression;
}

std::string describe(double lambda) {
    std::ostringstream os;
    os.precision(10);
    os << lambda;
    return os.str();
}

}  // namespace

double log_marginal_gaussian_seq(const SequenceForm& seq, double alpha, double tau) {
    const int n = static_cast<int>(seq.u.size());
    require(n >= 1 && seq.v.size() == n, "log_marginal_gaussian_seq: malformed sequence form");
    const Eigen::VectorXd sd = gaussian_prior_sd(alpha, tau, n);
    double out = seq.log_jacobian;
    for (int j = 0; j < n; ++j) out += log_normal_pdf(seq.u[j], 0.0, sd[j] * sd[j] + seq.v[j]);
    return out;
}

double log_marginal_gaussian_seq(const Dataset& data, double alpha, double tau) {
    require(is_sequence_model(data.model), "log_marginal_gaussian_seq: needs a white noise or regression dataset");
    return log_marginal_gaussian_seq(sequence_form(data), alpha, tau);
}

double sieve_coordinate_log_marginal(SieveDensity g, double u, double v) {
    require(v > 0.0, "sieve marginal: noise variance must be positive");
    if (g == SieveDensity::StdGaussian) return log_normal_pdf(u, 0.0, 1.0 + v);
    const double s = std::sqrt(v);
    const double plus = -u + 0.5 * v + log_normal_cdf((u - v) / s);
    const double minus = u + 0.5 * v + log_normal_cdf(-(u + v) / s);
    const double top = std::max(plus, minus);
    return top + std::log(std::exp(plus - top) + std::exp(minus - top)) - std::log(2.0);
}

double log_marginal_sieve(const SequenceForm& seq, int k, SieveDensity g) {
    const int n = static_cast<int>(seq.u.size());
    require(k >= 1 && k <= n, "log_marginal_sieve: k must lie in [1, n]");
    double out = seq.log_jacobian;
    for (int j = 0; j < n; ++j)
        out += j < k ? sieve_coordinate_log_marginal(g, seq.u[j], seq.v[j]) : log_normal_pdf(seq.u[j], 0.0, seq.v[j]);
    return out;
}

double log_marginal_sieve(const Dataset& data, int k, SieveDensity g) {
    require(is_sequence_model(data.model), "log_marginal_sieve: needs a white noise or regression dataset");
    return log_marginal_sieve(sequence_form(data), k, g);
}

Eigen::VectorXi bin_counts(const Eigen::VectorXd& samples, int k) {
    require(k >= 1, "bin_counts: k must be positive");
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (double x : samples) {
        require(x >= 0.0 && x <= 1.0, "bin_counts: density samples must lie in [0, 1]");
        ++counts[histogram_cell(x, k)];
    }
    return counts;
}

double log_marginal_histogram(const Eigen::VectorXi& counts, double alpha) {
    require(alpha > 0.0, "log_marginal_histogram: alpha must be positive");
    const double k = static_cast<double>(counts.size());
    const double n = counts.sum();
    double out = n * std::log(k) + std::lgamma(k * alpha) - std::lgamma(k * alpha + n);
    for (int c : counts) out += std::lgamma(alpha + c) - std::lgamma(alpha);
    return out;
}

double log_marginal_histogram(const Dataset& data, int k, double alpha) {
    require(data.model.kind == ModelKind::IIDDensity, "log_marginal_histogram: needs a density dataset");
    return log_marginal_histogram(bin_counts(data.obs, k), alpha);
}

Eigen::VectorXd loglinear_statistics(const Eigen::VectorXd& samples, int k) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
    for (double x : samples)
        for (int j = 1; j <= k; ++j) s[j - 1] += loglinear_basis(j, x);
    return s;
}

int loglinear_dimension(const PriorSpec& prior) {
    switch (prior.family) {
        case PriorFamily::Sieve:
            return prior.k;
        case PriorFamily::ScaledGaussian:
        case PriorFamily::RegularityGaussian:
            return prior.trunc;
        case PriorFamily::DirichletHistogram:
            break;
    }
    throw ParameterError("log-linear model: Dirichlet priors do not apply");
}

MCEstimate log_marginal_loglinear(const Dataset& data, const PriorSpec& prior, int mc_draws,
                                  std::uint64_t seed, int quad_points) {
    require(data.model.kind == ModelKind::IIDDensity && data.model.density_param == DensityParam::LogLinear,
            "log_marginal_loglinear: needs a log-linear density dataset");
    require(mc_draws >= 1000, "log_marginal_loglinear: need at least 1000 draws");
    validate(prior);
    const int k = loglinear_dimension(prior);
    const double n = static_cast<double>(data.obs.size());
    const Eigen::VectorXd stats = loglinear_statistics(data.obs, k);
    const Eigen::MatrixXd basis = loglinear_basis_table(k, quad_points);
    const Eigen::ArrayXd weights = simpson_weights(quad_points).array();

    Rng rng(seed);
    Eigen::VectorXd loglik(mc_draws);
    constexpr int kChunk = 256;
    Eigen::MatrixXd theta(k, kChunk);
    for (int start = 0; start < mc_draws; start += kChunk) {
        const int m = std::min(kChunk, mc_draws - start);
        for (int s = 0; s < m; ++s) theta.col(s) = sample_prior(prior, rng).head(k);
        const Eigen::MatrixXd g = basis * theta.leftCols(m);
        for (int s = 0; s < m; ++s) {
            const double top = g.col(s).maxCoeff();
            const double c = top + std::log((weights * (g.col(s).array() - top).exp()).sum());
            loglik[start + s] = theta.col(s).dot(stats) - n * c;
        }
    }

    const double top = loglik.maxCoeff();
    const Eigen::ArrayXd w = (loglik.array() - top).exp();
    const double total = w.sum();
    MCEstimate out;
    out.value = top + std::log(total) - std::log(static_cast<double>(mc_draws));
    out.ess = total * total / w.square().sum();

    // Jackknife over single draws; the dominant draw's complement is summed directly.
    Eigen::Index best = 0;
    loglik.maxCoeff(&best);
    double rest_exact = 0.0;
    for (int t = 0; t < mc_draws; ++t)
        if (t != best) rest_exact += w[t];
    const double log_nm1 = std::log(static_cast<double>(mc_draws - 1));
    Eigen::ArrayXd loo(mc_draws);
    for (int s = 0; s < mc_draws; ++s) {
        const double rest = s == best ? rest_exact : total - w[s];
        loo[s] = rest > 0.0 ? top + std::log(rest) - log_nm1 : -kInf;
    }
    if (loo.isFinite().all()) {
        const double mean = loo.mean();
        out.se = std::sqrt((mc_draws - 1.0) / mc_draws * (loo - mean).square().sum());
    } else {
        out.se = kInf;
    }
    if (out.ess < 2.0) {
        out.flagged = true;
        out.diagnostic = "importance weights degenerate (effective sample size below 2)";
    }
    return out;
}

MarginalCurve marginal_curve(const Dataset& data, const PriorSpec& base, const HyperGrid& grid,
                             const MarginalOptions& options) {
    validate(grid);
    require(grid.family == base.family, "marginal_curve: grid and prior family differ");
    const auto size = static_cast<Eigen::Index>(grid.size());
    MarginalCurve curve{grid, Eigen::VectorXd(size), MarginalMethod::Exact, {}, std::vector<bool>(grid.size(), false)};

    auto at = [&](std::size_t i, auto&& eval) {
        try {
            curve.logm[static_cast<Eigen::Index>(i)] = eval(grid.values[i]);
        } catch (const ParameterError& e) {
            throw ParameterError(std::string(e.what()) + " (lambda = " + describe(grid.values[i]) + ")");
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " (lambda = " + describe(grid.values[i]) + ")");
        }
    };

    if (is_sequence_model(data.model)) {
        const SequenceForm seq = sequence_form(data);
        const int n = static_cast<int>(seq.u.size());
        switch (base.family) {
            case PriorFamily::Sieve: {
                // Prefix sums of (prior - null) coordinate terms give every k in O(n).
                Eigen::VectorXd gain(n);
                double null_total = seq.log_jacobian;
                for (int j = 0; j < n; ++j) {
                    const double l0 = log_normal_pdf(seq.u[j], 0.0, seq.v[j]);
                    gain[j] = sieve_coordinate_log_marginal(base.g, seq.u[j], seq.v[j]) - l0;
                    null_total += l0;
                }
                for (std::size_t i = 0; i < grid.size(); ++i)
                    at(i, [&](double k) {
                        require(k <= n, "marginal_curve: sieve dimension exceeds n");
                        return null_total + gain.head(static_cast<Eigen::Index>(k)).sum();
                    });
                return curve;
            }
            case PriorFamily::ScaledGaussian:
                for (std::size_t i = 0; i < grid.size(); ++i)
                    at(i, [&](double tau) { return log_marginal_gaussian_seq(seq, base.alpha, tau); });
                return curve;
            case PriorFamily::RegularityGaussian:
                for (std::size_t i = 0; i < grid.size(); ++i)
                    at(i, [&](double alpha) { return log_marginal_gaussian_seq(seq, alpha, base.tau); });
                return curve;
            case PriorFamily::DirichletHistogram:
                throw ParameterError("marginal_curve: Dirichlet histogram prior needs density data");
        }
    }

    if (data.model.density_param == DensityParam::Histogram) {
        require(base.family == PriorFamily::DirichletHistogram, "marginal_curve: histogram data needs the Dirichlet prior");
        for (std::size_t i = 0; i < grid.size(); ++i)
            at(i, [&](double k) { return log_marginal_histogram(data, static_cast<int>(k), base.alpha); });
        return curve;
    }

    curve.method = MarginalMethod::MonteCarlo;
    curve.mc_se.resize(size);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        at(i, [&](double lambda) {
            const MCEstimate est = log_marginal_loglinear(data, with_hyper(base, lambda), options.mc_draws,
                                                          derive_seed(options.seed, i), options.quad_points);
            curve.mc_se[static_cast<Eigen::Index>(i)] = est.se;
            curve.flagged[i] = est.flagged;
            return est.value;
        });
    }
    return curve;
}

}  // namespace eblab
