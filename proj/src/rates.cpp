#include "eblab/rates.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

#include "eblab/errors.hpp"

namespace eblab {

namespace {

double squared_tail(const CoefficientVector& theta0, Eigen::Index from) {
    if (theta0.size() <= from) return 0.0;
    return theta0.tail(theta0.size() - from).squaredNorm();
}

Eigen::VectorXd head_of(const CoefficientVector& theta0, Eigen::Index size) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(size);
    const Eigen::Index m = std::min(size, theta0.size());
    h.head(m) = theta0.head(m);
    return h;
}

// log of a Monte Carlo mean of exp(terms), with a delta-method standard error.
struct LogMean {
    double value;
    double se;
};

LogMean log_mean_exp(const std::vector<double>& terms) {
    const double top = *std::max_element(terms.begin(), terms.end());
    const auto m = static_cast<double>(terms.size());
    if (!std::isfinite(top)) return {-kInf, kInf};
    double s1 = 0.0;
    double s2 = 0.0;
    for (double t : terms) {
        const double w = std::exp(t - top);
        s1 += w;
        s2 += w * w;
    }
    const double mean = s1 / m;
    const double var = std::max(0.0, s2 / m - mean * mean);
    return {top + std::log(mean), std::sqrt(var / m) / mean};
}

double hits_to_log_prob(long hits, int draws, SmallBall& out) {
    out.se = hits > 0 ? std::sqrt((1.0 - static_cast<double>(hits) / draws) / static_cast<double>(hits)) : kInf;
    if (hits < 10) out.flagged = true;
    return hits > 0 ? std::log(static_cast<double>(hits) / draws) : std::log(0.5 / draws);
}

// Minimizer of sum a_i h_i^2 over ||h - t0|| <= eps, with a_i > 0.
double rkhs_projection_weighted(const Eigen::VectorXd& t0, const Eigen::VectorXd& a, double eps) {
    const double eps2 = eps * eps;
    if (t0.squaredNorm() <= eps2) return 0.0;
    // h_i(mu) = t0_i mu / (mu + a_i); the distance to t0 decreases in mu.
    auto dist2 = [&](double mu) { return (t0.array() * a.array() / (a.array() + mu)).square().sum(); };
    double lo = 1.0;
    double hi = 1.0;
    while (dist2(hi) > eps2) hi *= 4.0;
    while (dist2(lo) <= eps2 && lo > 1e-300) lo /= 4.0;
    for (int it = 0; it < 200 && hi > lo * (1.0 + 1e-14); ++it) {
        const double mid = std::sqrt(lo * hi);
        (dist2(mid) > eps2 ? lo : hi) = mid;
    }
    const Eigen::ArrayXd h = t0.array() * hi / (a.array() + hi);
    return (a.array() * h.square()).sum();
}

class CenteredSampler {
public:
    CenteredSampler(const Eigen::VectorXd& s, const SmallBallOptions& opt)
        : s_(s), head_(std::min<Eigen::Index>(s.size(), std::max(1, opt.centered_head))) {
        const int draws = std::max(2, opt.centered_draws);
        Rng rng(derive_seed(opt.seed, 0x63656e74ULL));
        std::normal_distribution<double> normal;
        z2_.resize(draws, head_);
        zeta_.resize(draws);
        for (int d = 0; d < draws; ++d) {
            for (Eigen::Index j = 0; j < head_; ++j) {
                const double z = normal(rng);
                z2_(d, j) = z * z;
            }
            zeta_[d] = normal(rng);
        }
        total_ = s_.sum();
    }

    // -log P(sum s_j Z_j^2 <= u2).
    CenteredSmallBall operator()(double u2) const {
        CenteredSmallBall out;
        if (u2 <= 0.0) return {kInf, 0.0, false};
        double t = 0.0;
        if (u2 < total_) t = tilt(u2);
        const Eigen::ArrayXd c = s_.array() / (1.0 + 2.0 * t * s_.array());
        const Eigen::Index tail = s_.size() - head_;
        const double mu_b = tail > 0 ? c.tail(tail).sum() : 0.0;
        const double sd_b = tail > 0 ? std::sqrt(2.0 * c.tail(tail).square().sum()) : 0.0;
        const Eigen::VectorXd w_a = z2_ * c.head(head_).matrix();
        std::vector<double> terms(static_cast<std::size_t>(w_a.size()));
        long hits = 0;
        for (Eigen::Index d = 0; d < w_a.size(); ++d) {
            const double w = w_a[d] + mu_b + sd_b * zeta_[d];
            const bool in = w <= u2;
            hits += in;
            terms[static_cast<std::size_t>(d)] = in ? t * (w - u2) : -kInf;
        }
        const double log_mgf = -0.5 * (2.0 * t * s_.array()).log1p().sum();
        if (hits == 0) {
            out.value = -(log_mgf + std::log(0.5 / static_cast<double>(terms.size())));
            out.se = kInf;
            out.flagged = true;
            return out;
        }
        const LogMean lm = log_mean_exp(terms);
        out.value = -(log_mgf + t * u2 + lm.value);
        out.se = lm.se;
        out.flagged = hits < 10;
        return out;
    }

private:
    double tilt(double u2) const {
        // Solve sum s_j / (1 + 2 t s_j) = u2 for t > 0 (left side decreasing in t).
        auto g = [&](double t) { return (s_.array() / (1.0 + 2.0 * t * s_.array())).sum() - u2; };
        double lo = 0.0;
        double hi = 1.0 / u2;
        while (g(hi) > 0.0) {
            lo = hi;
            hi *= 4.0;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    Eigen::VectorXd s_;
    Eigen::Index head_;
    Eigen::MatrixXd z2_;
    Eigen::VectorXd zeta_;
    double total_ = 0.0;
};

SmallBallMethod resolve(const PriorSpec& prior, SmallBallMethod m) {
    if (m != SmallBallMethod::Auto) return m;
    switch (prior.family) {
        case PriorFamily::Sieve:
            return prior.g == SieveDensity::StdGaussian ? SmallBallMethod::Exact : SmallBallMethod::Importance;
        case PriorFamily::ScaledGaussian:
        case PriorFamily::RegularityGaussian:
            return SmallBallMethod::GaussianAnalytic;
        case PriorFamily::DirichletHistogram:
            return SmallBallMethod::Importance;
    }
    return m;
}

// Small-ball evaluator for a fixed (prior, theta0): precomputes everything that
// does not depend on the radius and fixes the random numbers.
class SmallBallEvaluator {
public:
    SmallBallEvaluator(const PriorSpec& prior, const CoefficientVector& theta0, double K, const SmallBallOptions& opt)
        : prior_(prior), theta0_(theta0), K_(K), opt_(opt), method_(resolve(prior, opt.method)) {
        validate(prior_);
        require(K > 0.0, "small ball: K must be positive");
        require(opt_.draws >= 1, "small ball: need at least one draw");
        require(theta0.allFinite(), "small ball: theta0 must be finite");
        switch (prior_.family) {
            case PriorFamily::Sieve:
                require(method_ == SmallBallMethod::Exact || method_ == SmallBallMethod::MC ||
                            method_ == SmallBallMethod::Importance,
                        "small ball: unsupported method for the sieve prior");
                require(method_ != SmallBallMethod::Exact || prior_.g == SieveDensity::StdGaussian,
                        "small ball: the exact method needs a Gaussian sieve density");
                head_ = head_of(theta0_, prior_.k);
                tail2_ = squared_tail(theta0_, prior_.k);
                break;
            case PriorFamily::ScaledGaussian:
            case PriorFamily::RegularityGaussian: {
                require(method_ == SmallBallMethod::GaussianAnalytic || method_ == SmallBallMethod::MC,
                        "small ball: unsupported method for the Gaussian prior");
                head_ = head_of(theta0_, prior_.trunc);
                tail2_ = squared_tail(theta0_, prior_.trunc);
                sd_ = gaussian_prior_sd(prior_.alpha, prior_.tau, prior_.trunc);
                if (method_ == SmallBallMethod::GaussianAnalytic) {
                    s_ = sd_.array().square();
                    a_ = s_.cwiseInverse();
                    centered_ = std::make_unique<CenteredSampler>(s_, opt_);
                }
                break;
            }
            case PriorFamily::DirichletHistogram: {
                require(method_ == SmallBallMethod::MC || method_ == SmallBallMethod::Importance,
                        "small ball: unsupported method for the Dirichlet prior");
                require((theta0.array() >= 0.0).all() && std::abs(theta0.sum() - 1.0) < 1e-9,
                        "small ball: Dirichlet theta0 must be fine-cell histogram weights");
                eta_ = sqrt_bin_integrals(theta0_, prior_.k);
                break;
            }
        }
    }

    SmallBallMethod method() const { return method_; }

    SmallBall operator()(double eps) const {
        require(eps > 0.0, "small ball: eps must be positive");
        SmallBall out;
        out.method = method_;
        const double r = K_ * eps;
        switch (prior_.family) {
            case PriorFamily::Sieve:
                out.log_prob = sieve(r, out);
                break;
            case PriorFamily::ScaledGaussian:
            case PriorFamily::RegularityGaussian:
                out.log_prob = method_ == SmallBallMethod::MC ? gaussian_mc(r, out) : gaussian_analytic(r, out);
                break;
            case PriorFamily::DirichletHistogram:
                out.log_prob = dirichlet(r, out);
                break;
        }
        out.log_prob = std::min(out.log_prob, 0.0);
        if (method_ != SmallBallMethod::GaussianAnalytic) out.lower = out.upper = out.log_prob;
        return out;
    }

    // -phi_theta0(r): RKHS projection plus centered small-ball term.
    double neg_phi(double r, double& se, bool& flagged) const {
        const double r2 = r * r - tail2_;
        if (r2 <= 0.0) return -kInf;
        const CenteredSmallBall c = (*centered_)(r2);
        se = c.se;
        flagged = flagged || c.flagged;
        return -(rkhs_projection_weighted(head_, a_, std::sqrt(r2)) + c.value);
    }

private:
    double sieve(double r, SmallBall& out) const {
        const int k = prior_.k;
        const double d2 = r * r - tail2_;
        if (d2 <= 0.0) return -kInf;
        if (method_ == SmallBallMethod::Exact) return log_noncentral_chi2_cdf(d2, k, head_.squaredNorm());
        Rng rng(opt_.seed);
        std::normal_distribution<double> normal;
        if (method_ == SmallBallMethod::MC) {
            long hits = 0;
            for (int d = 0; d < opt_.draws; ++d) {
                const Eigen::VectorXd draw = sample_prior(prior_, rng);
                hits += (draw - head_).squaredNorm() <= d2;
            }
            return hits_to_log_prob(hits, opt_.draws, out);
        }
        // Uniform sampling in the ball: P = vol_k(delta) * E_U[prod g(U_j)].
        const double delta = std::sqrt(d2);
        std::uniform_real_distribution<double> unif;
        std::vector<double> terms(static_cast<std::size_t>(opt_.draws));
        Eigen::VectorXd dir(k);
        for (auto& t : terms) {
            for (int j = 0; j < k; ++j) dir[j] = normal(rng);
            const double radius = delta * std::pow(unif(rng), 1.0 / k) / dir.norm();
            t = 0.0;
            for (int j = 0; j < k; ++j) t += sieve_log_density(prior_.g, head_[j] + radius * dir[j]);
        }
        const double log_volume = 0.5 * k * std::log(std::numbers::pi) - std::lgamma(0.5 * k + 1.0) + k * std::log(delta);
        const LogMean lm = log_mean_exp(terms);
        out.se = lm.se;
        return log_volume + lm.value;
    }

    double gaussian_mc(double r, SmallBall& out) const {
        const double d2 = r * r - tail2_;
        if (d2 <= 0.0) return -kInf;
        Rng rng(opt_.seed);
        std::normal_distribution<double> normal;
        long hits = 0;
        for (int d = 0; d < opt_.draws; ++d) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < sd_.size(); ++j) {
                const double diff = sd_[j] * normal(rng) - head_[j];
                s += diff * diff;
            }
            hits += s <= d2;
        }
        return hits_to_log_prob(hits, opt_.draws, out);
    }

    double gaussian_analytic(double r, SmallBall& out) const {
        double se_hi = 0.0;
        double se_lo = 0.0;
        out.upper = neg_phi(r, se_hi, out.flagged);
        out.lower = neg_phi(0.5 * r, se_lo, out.flagged);
        out.se = 0.5 * (se_hi + se_lo);
        return 0.5 * (out.lower + out.upper);
    }

    double dirichlet(double r, SmallBall& out) const {
        const int k = prior_.k;
        const double sk = std::sqrt(static_cast<double>(k));
        auto h2 = [&](const Eigen::VectorXd& theta) {
            return 2.0 - 2.0 * sk * (theta.array().sqrt() * eta_.array()).sum();
        };
        const double r2 = r * r;
        const double h2_min = std::max(0.0, 2.0 - 2.0 * sk * eta_.norm());
        if (k == 1) return h2(Eigen::VectorXd::Ones(1)) <= r2 ? 0.0 : -kInf;
        if (r2 <= h2_min) return -kInf;
        Rng rng(opt_.seed);
        const Eigen::VectorXd prior_alpha = Eigen::VectorXd::Constant(k, prior_.alpha);
        constexpr double kRho = 0.7;
        const double conc = (k - 1.0) / (4.0 * kRho * (r2 - h2_min)) - 1.0;
        if (method_ == SmallBallMethod::MC || conc < k * prior_.alpha) {
            long hits = 0;
            for (int d = 0; d < opt_.draws; ++d) hits += h2(sample_dirichlet(prior_alpha, rng)) <= r2;
            return hits_to_log_prob(hits, opt_.draws, out);
        }
        const Eigen::VectorXd proposal = conc * eta_.array().square() / eta_.squaredNorm();
        std::vector<double> terms(static_cast<std::size_t>(opt_.draws));
        for (auto& t : terms) {
            const Eigen::VectorXd theta = sample_dirichlet(proposal, rng);
            t = -kInf;
            if (h2(theta) > r2) continue;
            const double lw = log_dirichlet_density(theta, prior_alpha) - log_dirichlet_density(theta, proposal);
            if (std::isfinite(lw)) t = lw;
        }
        const LogMean lm = log_mean_exp(terms);
        out.se = lm.se;
        if (!std::isfinite(lm.value)) {
            out.flagged = true;
            return std::log(0.5 / opt_.draws);
        }
        return lm.value;
    }

    PriorSpec prior_;
    CoefficientVector theta0_;
    double K_;
    SmallBallOptions opt_;
    SmallBallMethod method_;
    Eigen::VectorXd head_;
    double tail2_ = 0.0;
    Eigen::VectorXd sd_;
    Eigen::VectorXd s_;
    Eigen::VectorXd a_;
    Eigen::VectorXd eta_;
    std::unique_ptr<CenteredSampler> centered_;
};

}  // namespace

SmallBall small_ball_log_prob(const PriorSpec& prior, const CoefficientVector& theta0, double eps, double K,
                              const SmallBallOptions& options) {
    return SmallBallEvaluator(prior, theta0, K, options)(eps);
}

double rkhs_projection(const CoefficientVector& theta0, double alpha, double tau, double eps) {
    require(eps > 0.0 && alpha > 0.0 && tau > 0.0, "rkhs_projection: eps, alpha and tau must be positive");
    if (theta0.size() == 0) return 0.0;
    Eigen::VectorXd a(theta0.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = std::pow(static_cast<double>(i + 1), 2.0 * alpha + 1.0) / (tau * tau);
    return rkhs_projection_weighted(theta0, a, eps);
}

CenteredSmallBall centered_small_ball(double alpha, double tau, int trunc, double u, const SmallBallOptions& options) {
    require(u > 0.0, "centered_small_ball: radius must be positive");
    const Eigen::VectorXd s = gaussian_prior_sd(alpha, tau, trunc).array().square();
    return CenteredSampler(s, options)(u * u);
}

double centered_small_ball_order(double alpha, double tau, double K_eps) {
    require(alpha > 0.0 && tau > 0.0 && K_eps > 0.0, "centered_small_ball_order: arguments must be positive");
    return std::pow(K_eps / tau, -1.0 / alpha);
}

RateSolution solve_rate(const std::function<double(double)>& S, double n, const RateSolverOptions& opt) {
    require(n > 0.0, "solve_rate: n must be positive");
    require(opt.rtol > 0.0 && opt.eps_min > 0.0 && opt.eps_max > opt.eps_min, "solve_rate: invalid options");
    RateSolution sol;
    auto F = [&](double e) {
        const double s = S(e);
        if (std::isnan(s)) {
            std::ostringstream os;
            os << "solve_rate: small-ball function is NaN at eps = " << e;
            throw NumericalError(os.str());
        }
        ++sol.iterations;
        return s + n * e * e;
    };
    auto fail = [&](double lo, double hi) {
        std::ostringstream os;
        os << "solve_rate: no sign change of S(eps) + n eps^2 on [" << lo << ", " << hi << "]";
        throw NumericalError(os.str());
    };
    double e = std::clamp(1.0 / std::sqrt(n), opt.eps_min, opt.eps_max);
    double lo;
    double hi;
    if (F(e) < 0.0) {
        lo = e;
        hi = std::min(2.0 * e, opt.eps_max);
        while (F(hi) < 0.0) {
            if (hi >= opt.eps_max) fail(opt.eps_min, opt.eps_max);
            lo = hi;
            hi = std::min(2.0 * hi, opt.eps_max);
        }
    } else {
        hi = e;
        lo = std::max(0.5 * e, opt.eps_min);
        while (F(lo) >= 0.0) {
            if (lo <= opt.eps_min) fail(opt.eps_min, opt.eps_max);
            hi = lo;
            lo = std::max(0.5 * lo, opt.eps_min);
        }
    }
    while (hi - lo > opt.rtol * lo) {
        const double mid = std::sqrt(lo * hi);
        (F(mid) < 0.0 ? lo : hi) = mid;
    }
    sol.lo = lo;
    sol.hi = hi;
    sol.eps = 0.5 * (lo + hi);
    const double s = S(sol.eps);
    const double ne2 = n * sol.eps * sol.eps;
    sol.c0 = s < 0.0 ? std::max(-s / ne2, ne2 / -s) : kInf;
    return sol;
}

RateSolution epsilon_n(const PriorSpec& prior, const CoefficientVector& theta0, int n, double K,
                       const SmallBallOptions& small_ball, const RateSolverOptions& solver) {
    require(n >= 1, "epsilon_n: n must be positive");
    const SmallBallEvaluator eval(prior, theta0, K, small_ball);
    return solve_rate([&](double e) { return eval(e).log_prob; }, n, solver);
}

double analytic_rate_T1(int k, const CoefficientVector& theta0, int n) {
    require(k >= 2 && n >= 2, "analytic_rate_T1: need k >= 2 and n >= 2");
    return std::sqrt(squared_tail(theta0, k) + k * std::log(static_cast<double>(n)) / n);
}

RateBracket analytic_rate_gaussian(double alpha, double tau, double beta, double L, int n, SmoothnessClass cls,
                                   double theta0_norm) {
    require(alpha > 0.0 && tau > 0.0 && beta > 0.0 && L > 0.0 && n >= 1, "analytic_rate_gaussian: invalid parameters");
    const double nd = n;
    const double nt2 = nd * tau * tau;
    const double variance = std::pow(nd, -alpha / (2.0 * alpha + 1.0)) * std::pow(tau, 1.0 / (2.0 * alpha + 1.0));
    RateBracket out;
    out.lower = (nt2 > 1.0 ? theta0_norm / std::sqrt(nt2) : 0.0) + variance;
    const double aL = std::pow(L, (alpha + 0.5) / beta);
    const bool boundary = std::abs(beta - alpha - 0.5) < 1e-12;
    if (boundary) {
        const double top = cls == SmoothnessClass::HyperRect ? std::log(nt2) : aL;
        out.upper = variance + (nt2 > 1.0 ? std::sqrt(top / nt2) : 0.0);
    } else {
        const double a = cls == SmoothnessClass::HyperRect ? aL / std::abs(2.0 * alpha - 2.0 * beta + 1.0) : aL;
        out.upper = variance + std::pow(a / nt2, std::min(beta / (2.0 * alpha + 1.0), 0.5));
    }
    return out;
}

Exponent theoretical_exponent(PriorFamily family, double alpha, double beta) {
    require(alpha > 0.0 && beta > 0.0, "theoretical_exponent: alpha and beta must be positive");
    const double minimax = beta / (2.0 * beta + 1.0);
    switch (family) {
        case PriorFamily::Sieve:
            return {minimax, true};
        case PriorFamily::ScaledGaussian:
            if (std::abs(beta - alpha - 0.5) < 1e-12) return {minimax, true};
            if (beta < alpha + 0.5) return {minimax, false};
            return {(2.0 * alpha + 1.0) / (4.0 * alpha + 4.0), false};
        case PriorFamily::RegularityGaussian:
        case PriorFamily::DirichletHistogram:
            return {minimax, false};
    }
    return {kNaN, false};
}

OracleRate oracle_rate(const Eigen::VectorXd& eps, int n, double Mn, double mn) {
    require(eps.size() >= 1, "oracle_rate: grid must be nonempty");
    require(n >= 3, "oracle_rate: n must be at least 3");
    const double loglog = std::log(std::log(static_cast<double>(n)));
    if (std::isnan(Mn)) Mn = loglog;
    if (std::isnan(mn)) mn = loglog;
    const double floor2 = mn * std::log(static_cast<double>(n)) / n;
    OracleRate out;
    double best = kInf;
    for (double e : eps)
        if (e * e >= floor2) best = std::min(best, e * e);
    out.floor_fallback = !std::isfinite(best);
    out.eps0 = std::sqrt(std::max(out.floor_fallback ? floor2 : best, floor2));
    for (double e : eps) out.in_lambda0.push_back(e <= Mn * out.eps0);
    return out;
}

RateCurve rate_curve(const PriorSpec& base, const HyperGrid& grid, const CoefficientVector& theta0, int n,
                     const RateOptions& options) {
    validate(grid);
    require(grid.family == base.family, "rate_curve: grid and prior family differ");
    RateCurve curve;
    curve.grid = grid;
    curve.K = options.K;
    curve.n = n;
    curve.eps.resize(static_cast<Eigen::Index>(grid.size()));
    const bool analytic = options.small_ball.method == SmallBallMethod::Analytic;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const PriorSpec prior = with_hyper(base, grid.values[i]);
        double e;
        if (analytic) {
            if (prior.family == PriorFamily::Sieve) {
                e = analytic_rate_T1(prior.k, theta0, n);
            } else if (prior.family == PriorFamily::DirichletHistogram) {
                e = analytic_rate_histogram(histogram_bias(theta0, prior.k), prior.k, n).upper;
            } else {
                throw ParameterError("rate_curve: no closed-form rate for Gaussian priors; use GaussianAnalytic");
            }
        } else {
            SmallBallOptions sb = options.small_ball;
            sb.seed = derive_seed(options.small_ball.seed, i);
            e = epsilon_n(prior, theta0, n, options.K, sb, options.solver).eps;
        }
        curve.eps[static_cast<Eigen::Index>(i)] = e;
    }
    const OracleRate oracle = oracle_rate(curve.eps, n, options.Mn, options.mn);
    const double loglog = std::log(std::log(static_cast<double>(n)));
    curve.Mn = std::isnan(options.Mn) ? loglog : options.Mn;
    curve.mn = std::isnan(options.mn) ? loglog : options.mn;
    curve.eps0 = oracle.eps0;
    curve.in_lambda0 = oracle.in_lambda0;
    curve.floor_fallback = oracle.floor_fallback;
    return curve;
}

double histogram_bias(const std::function<double(double)>& f0, int k) {
    require(k >= 1, "histogram_bias: k must be positive");
    auto root = [&](double x) {
        const double v = f0(x);
        require(v > 0.0, "histogram_bias: f0 must be positive");
        return std::sqrt(v);
    };
    double b2 = 0.0;
    for (int j = 0; j < k; ++j) {
        const double a = static_cast<double>(j) / k;
        const double b = static_cast<double>(j + 1) / k;
        // k * eta_j is the mean of sqrt f0 over the bin.
        const double level = adaptive_mean(root, a, b);
        b2 += adaptive_mean([&](double x) { const double d = root(x) - level; return d * d; }, a, b) / k;
    }
    return std::sqrt(b2);
}

double histogram_bias(const Eigen::VectorXd& fine_weights, int k) {
    require(k >= 1, "histogram_bias: k must be positive");
    const int fine = static_cast<int>(fine_weights.size());
    require(fine >= 1 && (fine_weights.array() > 0.0).all(), "histogram_bias: f0 must be positive");
    const std::vector<CellOverlap> pieces = cell_overlaps(fine, k);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd length = Eigen::VectorXd::Zero(k);
    for (const auto& o : pieces) {
        mass[o.b] += o.length * std::sqrt(fine * fine_weights[o.a]);
        length[o.b] += o.length;
    }
    const Eigen::VectorXd level = mass.cwiseQuotient(length);
    double b2 = 0.0;
    for (const auto& o : pieces) {
        const double d = std::sqrt(fine * fine_weights[o.a]) - level[o.b];
        b2 += o.length * d * d;
    }
    return std::sqrt(b2);
}

RateBracket analytic_rate_histogram(double bias, int k, int n) {
    require(bias >= 0.0 && k >= 1 && n >= 2, "analytic_rate_histogram: invalid arguments");
    const double nd = n;
    const double b2 = bias * bias;
    return {std::sqrt(b2 + k * std::log(std::max(nd / k, 1.0)) / nd), std::sqrt(b2 + k * std::log(nd) / nd)};
}

}  // namespace eblab
