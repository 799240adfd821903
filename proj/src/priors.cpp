#include "eblab/priors.hpp"

#include <algorithm>

#include "eblab/errors.hpp"

namespace eblab {

bool is_discrete(PriorFamily family) {
    return family == PriorFamily::Sieve || family == PriorFamily::DirichletHistogram;
}

void validate(const PriorSpec& spec) {
    switch (spec.family) {
        case PriorFamily::Sieve:
            require(spec.k >= 2, "prior: sieve truncation k must be at least 2");
            return;
        case PriorFamily::ScaledGaussian:
        case PriorFamily::RegularityGaussian:
            require(std::isfinite(spec.alpha) && spec.alpha > 0.0, "prior: alpha must be positive");
            require(std::isfinite(spec.tau) && spec.tau > 0.0, "prior: tau must be positive");
            require(spec.trunc >= 1, "prior: truncation level must be positive");
            return;
        case PriorFamily::DirichletHistogram:
            require(spec.k >= 1, "prior: histogram needs at least one bin");
            require(spec.alpha > 0.0 && spec.alpha <= spec.alpha_cap,
                    "prior: Dirichlet concentration must lie in (0, alpha_cap]");
            return;
    }
}

double hyper_value(const PriorSpec& spec) {
    switch (spec.family) {
        case PriorFamily::Sieve:
        case PriorFamily::DirichletHistogram:
            return spec.k;
        case PriorFamily::ScaledGaussian:
            return spec.tau;
        case PriorFamily::RegularityGaussian:
            return spec.alpha;
    }
    return kNaN;
}

PriorSpec with_hyper(PriorSpec spec, double lambda) {
    require(std::isfinite(lambda), "prior: hyper-parameter must be finite");
    switch (spec.family) {
        case PriorFamily::Sieve:
        case PriorFamily::DirichletHistogram:
            require(lambda == std::round(lambda), "prior: dimension hyper-parameter must be an integer");
            spec.k = static_cast<int>(lambda);
            break;
        case PriorFamily::ScaledGaussian:
            spec.tau = lambda;
            break;
        case PriorFamily::RegularityGaussian:
            spec.alpha = lambda;
            break;
    }
    validate(spec);
    return spec;
}

void validate(const HyperGrid& grid) {
    require(!grid.values.empty(), "grid: must be nonempty");
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        require(std::isfinite(grid.values[i]), "grid: values must be finite");
        if (i > 0) require(grid.values[i] > grid.values[i - 1], "grid: values must be strictly increasing");
    }
    const double lo = grid.values.front();
    switch (grid.family) {
        case PriorFamily::Sieve:
            require(lo >= 2, "grid: sieve dimensions start at 2");
            break;
        case PriorFamily::DirichletHistogram:
            require(lo >= 1, "grid: histogram bin counts start at 1");
            break;
        default:
            require(lo > 0.0, "grid: scale and regularity values must be positive");
    }
    if (is_discrete(grid.family))
        for (double v : grid.values) require(v == std::round(v), "grid: dimension values must be integers");
}

HyperGrid log_grid(PriorFamily family, double lo, double hi, int points) {
    require(lo > 0.0 && hi > lo && points >= 2, "log_grid: need 0 < lo < hi and at least two points");
    HyperGrid grid{{}, family};
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < points; ++i) grid.values.push_back(std::exp(a + (b - a) * i / (points - 1)));
    grid.values.front() = lo;
    grid.values.back() = hi;
    return grid;
}

namespace {

HyperGrid integer_grid(PriorFamily family, int lo, int hi) {
    HyperGrid grid{{}, family};
    for (int k = lo; k <= std::max(lo, hi); ++k) grid.values.push_back(k);
    return grid;
}

HyperGrid regularity_grid(double lo, double hi, int points) {
    // (lo, hi] in `points` equal steps
    HyperGrid grid{{}, PriorFamily::RegularityGaussian};
    for (int i = 1; i <= points; ++i) grid.values.push_back(lo + (hi - lo) * i / points);
    return grid;
}

}  // namespace

HyperGrid default_grid(const PriorSpec& base, const ModelSpec& model, int points) {
    validate(model);
    require(points >= 2, "default_grid: need at least two points");
    const double n = model.n;
    const double logn = std::log(n);
    const bool density = model.kind == ModelKind::IIDDensity;
    switch (base.family) {
        case PriorFamily::Sieve: {
            int kmax = static_cast<int>(std::floor(0.1 * n / logn));
            if (density) kmax = std::min(kmax, 20);
            return integer_grid(PriorFamily::Sieve, 2, kmax);
        }
        case PriorFamily::DirichletHistogram:
            return integer_grid(PriorFamily::DirichletHistogram, 1, static_cast<int>(std::floor(n / logn)));
        case PriorFamily::ScaledGaussian: {
            const double a = base.alpha;
            require(a > 0.0, "default_grid: alpha must be positive");
            if (!density) return log_grid(PriorFamily::ScaledGaussian, std::pow(n, -1.0 / (4.0 * a)), std::pow(n, a / 2.0), points);
            const double lo = std::pow(n, -0.25 + 1.0 / (8.0 * a));
            const double hi = std::pow(n, a / 2.0 - 0.25);
            require(hi > lo, "default_grid: density scale window is empty (needs alpha > 1/2)");
            return log_grid(PriorFamily::ScaledGaussian, lo, hi, points);
        }
        case PriorFamily::RegularityGaussian: {
            if (!density) return regularity_grid(0.05, logn, points);
            const double lo = 0.5 + std::pow(n, -0.25);
            double hi = logn / (16.0 * std::log(logn));
            // The density window is empty at desk-scale n; widen to the sequence upper end.
            if (hi <= lo) hi = std::max(logn, lo + 1.0);
            HyperGrid grid{{}, PriorFamily::RegularityGaussian};
            for (int i = 0; i < points; ++i) grid.values.push_back(lo + (hi - lo) * i / (points - 1));
            return grid;
        }
    }
    throw ParameterError("default_grid: unknown family");
}

Eigen::VectorXd gaussian_prior_sd(double alpha, double tau, int trunc) {
    require(alpha > 0.0 && tau > 0.0 && trunc >= 1, "gaussian_prior_sd: invalid parameters");
    Eigen::VectorXd sd(trunc);
    for (int j = 1; j <= trunc; ++j) sd[j - 1] = tau * std::pow(static_cast<double>(j), -alpha - 0.5);
    return sd;
}

double sieve_log_density(SieveDensity g, double x) {
    if (g == SieveDensity::StdGaussian) return log_normal_pdf(x, 0.0, 1.0);
    return std::log(0.5) - std::abs(x);
}

Eigen::VectorXd sample_prior(const PriorSpec& spec, Rng& rng, int dim) {
    validate(spec);
    std::normal_distribution<double> normal;
    switch (spec.family) {
        case PriorFamily::Sieve: {
            Eigen::VectorXd theta = Eigen::VectorXd::Zero(std::max(dim, spec.k));
            if (spec.g == SieveDensity::StdGaussian) {
                for (int j = 0; j < spec.k; ++j) theta[j] = normal(rng);
            } else {
                std::exponential_distribution<double> expo(1.0);
                std::bernoulli_distribution sign(0.5);
                for (int j = 0; j < spec.k; ++j) theta[j] = sign(rng) ? expo(rng) : -expo(rng);
            }
            return theta;
        }
        case PriorFamily::ScaledGaussian:
        case PriorFamily::RegularityGaussian: {
            const Eigen::VectorXd sd = gaussian_prior_sd(spec.alpha, spec.tau, spec.trunc);
            Eigen::VectorXd theta = Eigen::VectorXd::Zero(std::max(dim, spec.trunc));
            for (int j = 0; j < spec.trunc; ++j) theta[j] = sd[j] * normal(rng);
            return theta;
        }
        case PriorFamily::DirichletHistogram:
            return sample_dirichlet(Eigen::VectorXd::Constant(spec.k, spec.alpha), rng);
    }
    throw ParameterError("sample_prior: unknown family");
}

Eigen::VectorXd sample_prior(const PriorSpec& spec, double lambda, std::uint64_t seed, int dim) {
    Rng rng(seed);
    return sample_prior(with_hyper(spec, lambda), rng, dim);
}

CoefficientVector rescale_tau(const CoefficientVector& theta, double tau, double tau_new) {
    require(tau > 0.0 && tau_new > 0.0, "rescale_tau: scales must be positive");
    if (tau == tau_new) return theta;
    return (tau_new / tau) * theta;
}

CoefficientVector rescale_alpha(const CoefficientVector& theta, double alpha, double alpha_new) {
    require(alpha > 0.0 && alpha_new > 0.0, "rescale_alpha: exponents must be positive");
    if (alpha == alpha_new) return theta;
    CoefficientVector out(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        out[i] = std::pow(static_cast<double>(i + 1), alpha - alpha_new) * theta[i];
    return out;
}

double rkhs_norm(const CoefficientVector& theta, double alpha, double tau, int trunc) {
    require(alpha > 0.0 && tau > 0.0, "rkhs_norm: alpha and tau must be positive");
    const Eigen::Index limit = trunc < 0 ? theta.size() : std::min<Eigen::Index>(trunc, theta.size());
    for (Eigen::Index i = limit; i < theta.size(); ++i)
        if (theta[i] != 0.0) return kInf;
    double s = 0.0;
    for (Eigen::Index i = 0; i < limit; ++i)
        s += std::pow(static_cast<double>(i + 1), 2.0 * alpha + 1.0) * theta[i] * theta[i];
    return s / (tau * tau);
}

double hyperprior_logdensity(const Hyperprior& prior, double lambda, const HyperGrid* support) {
    switch (prior.kind) {
        case Hyperprior::Kind::Poisson: {
            require(prior.a > 0.0, "hyperprior: Poisson mean must be positive");
            if (lambda < 0.0 || lambda != std::round(lambda)) return -kInf;
            auto log_pmf = [&](double k) { return -prior.a + k * std::log(prior.a) - std::lgamma(k + 1.0); };
            double out = log_pmf(lambda);
            if (support != nullptr) {
                std::vector<double> terms;
                for (double k : support->values) terms.push_back(log_pmf(k));
                out -= log_sum_exp(std::span<const double>(terms));
            }
            return out;
        }
        case Hyperprior::Kind::InverseGamma:
            require(prior.a > 0.0 && prior.b > 0.0, "hyperprior: inverse-gamma parameters must be positive");
            if (lambda <= 0.0) return -kInf;
            return prior.a * std::log(prior.b) - std::lgamma(prior.a) - (prior.a + 1.0) * std::log(lambda) - prior.b / lambda;
        case Hyperprior::Kind::Exponential:
            require(prior.a > 0.0, "hyperprior: exponential rate must be positive");
            if (lambda < 0.0) return -kInf;
            return std::log(prior.a) - prior.a * lambda;
        case Hyperprior::Kind::Uniform:
            return 0.0;
    }
    return -kInf;
}

}  // namespace eblab
