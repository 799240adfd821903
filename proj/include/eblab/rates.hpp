#pragma once

// The rate functional eps_n(lambda), solving Pi(||theta - theta0|| <= K eps | lambda) = exp(-n eps^2),
// oracle rates, the set Lambda_0, and closed-form rate representatives.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "eblab/models.hpp"
#include "eblab/priors.hpp"

namespace eblab {

// Exact: noncentral chi-square CDF (Gaussian sieve only).
// Importance: uniform-ball sampling (sieve) or a concentrated Dirichlet proposal.
// GaussianAnalytic: concentration-function sandwich (Gaussian priors only).
// Analytic: closed-form representative instead of a small-ball solve (rate curves only).
enum class SmallBallMethod { Auto, MC, Importance, GaussianAnalytic, Exact, Analytic };

struct SmallBallOptions {
    SmallBallMethod method = SmallBallMethod::Auto;
    int draws = 4096;
    std::uint64_t seed = 0;
    int centered_draws = 256;  // GaussianAnalytic: importance draws for the centered term
    int centered_head = 256;   // coordinates sampled exactly; the rest use a normal approximation
};

struct SmallBall {
    double log_prob = 0.0;
    double lower = -kInf;  // GaussianAnalytic bracket
    double upper = 0.0;
    double se = 0.0;       // standard error of log_prob (Monte Carlo methods)
    bool flagged = false;  // smoothed or otherwise low-accuracy value
    SmallBallMethod method = SmallBallMethod::Auto;
};

// Prior mass of the ball of radius K eps around theta0. The prior carries its
// hyper-parameter. Sequence priors use l2 on coefficients (theta0 may be longer
// than the prior support; the excess is a fixed tail). The Dirichlet prior uses
// the Hellinger distance with theta0 given as fine-cell histogram weights.
SmallBall small_ball_log_prob(const PriorSpec& prior, const CoefficientVector& theta0, double eps, double K,
                              const SmallBallOptions& options = {});

// min tau^{-2} sum i^{2 alpha + 1} h_i^2 subject to ||h - theta0||_2 <= eps.
double rkhs_projection(const CoefficientVector& theta0, double alpha, double tau, double eps);

// -log Pi(||theta||_2 <= u) for the centered Gaussian prior, by tilted importance sampling.
struct CenteredSmallBall {
    double value = 0.0;
    double se = 0.0;
    bool flagged = false;
};
CenteredSmallBall centered_small_ball(double alpha, double tau, int trunc, double u, const SmallBallOptions& options = {});

// Diagnostic only: (K eps / tau)^{-1/alpha}, the centered small-ball order without its constant.
double centered_small_ball_order(double alpha, double tau, double K_eps);

struct RateSolverOptions {
    double rtol = 1e-3;
    double eps_min = 1e-12;
    double eps_max = 1e6;
};

struct RateSolution {
    double eps = 0.0;
    double lo = 0.0;  // final bracket with F(lo) < 0 <= F(hi)
    double hi = 0.0;
    double c0 = 1.0;  // achieved two-sided factor max(-S/(n eps^2), n eps^2/(-S)) at eps
    int iterations = 0;
};

// Root of S(eps) + n eps^2 for a nondecreasing S.
RateSolution solve_rate(const std::function<double(double)>& S, double n, const RateSolverOptions& options = {});

RateSolution epsilon_n(const PriorSpec& prior, const CoefficientVector& theta0, int n, double K = 2.0,
                       const SmallBallOptions& small_ball = {}, const RateSolverOptions& solver = {});

// eps^2 = sum_{i > k} theta0_i^2 + k log n / n.
double analytic_rate_T1(int k, const CoefficientVector& theta0, int n);

enum class SmoothnessClass { HyperRect, Sobolev };

struct RateBracket {
    double lower = 0.0;
    double upper = 0.0;
};

RateBracket analytic_rate_gaussian(double alpha, double tau, double beta, double L, int n, SmoothnessClass cls,
                                   double theta0_norm);

struct Exponent {
    double value = 0.0;
    bool log_factor = false;
};

Exponent theoretical_exponent(PriorFamily family, double alpha, double beta);

struct OracleRate {
    double eps0 = 0.0;
    std::vector<bool> in_lambda0;
    bool floor_fallback = false;  // no grid point above the floor
};

// Defaults m_n = M_n = log log n when passed as NaN.
OracleRate oracle_rate(const Eigen::VectorXd& eps, int n, double Mn = kNaN, double mn = kNaN);

struct RateCurve {
    HyperGrid grid;
    Eigen::VectorXd eps;
    double eps0 = 0.0;
    std::vector<bool> in_lambda0;
    double K = 2.0;
    double Mn = 0.0;
    double mn = 0.0;
    int n = 0;
    bool floor_fallback = false;
};

struct RateOptions {
    double K = 2.0;
    SmallBallOptions small_ball;
    RateSolverOptions solver;
    double Mn = kNaN;
    double mn = kNaN;
};

// eps_n(lambda) over the grid; point i uses small-ball seed derive_seed(seed, i).
RateCurve rate_curve(const PriorSpec& base, const HyperGrid& grid, const CoefficientVector& theta0, int n,
                     const RateOptions& options = {});

// b(k)^2 = sum_j int_{I_j} (sqrt f0 - k eta_j)^2 with eta_j = int_{I_j} sqrt f0; returns b(k).
double histogram_bias(const std::function<double(double)>& f0, int k);
// Same for a piecewise-constant f0 given by fine-cell weights (exact).
double histogram_bias(const Eigen::VectorXd& fine_weights, int k);

RateBracket analytic_rate_histogram(double bias, int k, int n);

}  // namespace eblab
