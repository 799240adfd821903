#pragma once

// Prior families indexed by a scalar hyper-parameter lambda:
//   Sieve               theta_j ~ g i.i.d. for j <= k, zero after       (lambda = k)
//   ScaledGaussian      theta_j ~ N(0, tau^2 j^{-2 alpha - 1}), j <= trunc (lambda = tau)
//   RegularityGaussian  same Gaussian prior                             (lambda = alpha)
//   DirichletHistogram  histogram weights ~ Dirichlet(alpha, ..., alpha) (lambda = k)

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "eblab/models.hpp"

namespace eblab {

enum class PriorFamily { Sieve, ScaledGaussian, RegularityGaussian, DirichletHistogram };
enum class SieveDensity { StdGaussian, Laplace };

struct PriorSpec {
    PriorFamily family = PriorFamily::Sieve;
    int k = 2;
    SieveDensity g = SieveDensity::StdGaussian;
    double alpha = 1.0;  // Gaussian decay exponent, or Dirichlet concentration
    double tau = 1.0;
    int trunc = 1;       // Gaussian truncation level (= n for sequence models)
    double alpha_cap = 10.0;  // upper bound on the Dirichlet concentration
};

void validate(const PriorSpec& spec);

bool is_discrete(PriorFamily family);

// Current value of the hyper-parameter slot, and a copy with the slot replaced.
double hyper_value(const PriorSpec& spec);
PriorSpec with_hyper(PriorSpec spec, double lambda);

struct HyperGrid {
    std::vector<double> values;
    PriorFamily family = PriorFamily::Sieve;

    std::size_t size() const { return values.size(); }
};

void validate(const HyperGrid& grid);

// Default Lambda_n for a family under a model (see README for the windows).
HyperGrid default_grid(const PriorSpec& base, const ModelSpec& model, int points = 60);

HyperGrid log_grid(PriorFamily family, double lo, double hi, int points);

// tau_j = tau j^{-alpha-1/2} for j <= trunc.
Eigen::VectorXd gaussian_prior_sd(double alpha, double tau, int trunc);

double sieve_log_density(SieveDensity g, double x);

// Draws one parameter. Sequence families return a vector of length
// max(dim, natural length) with exact zeros beyond k (Sieve) or trunc (Gaussian);
// DirichletHistogram returns a simplex vector of length k.
Eigen::VectorXd sample_prior(const PriorSpec& spec, Rng& rng, int dim = 0);
Eigen::VectorXd sample_prior(const PriorSpec& spec, double lambda, std::uint64_t seed, int dim = 0);

// Change-of-measure maps pushing Pi(.|tau, alpha) to Pi(.|tau', alpha) and
// Pi(.|tau, alpha) to Pi(.|tau, alpha').
CoefficientVector rescale_tau(const CoefficientVector& theta, double tau, double tau_new);
CoefficientVector rescale_alpha(const CoefficientVector& theta, double alpha, double alpha_new);

// Squared RKHS norm tau^{-2} sum_i i^{2 alpha + 1} theta_i^2; +inf when theta
// has nonzero entries beyond trunc (trunc < 0 means theta.size()).
double rkhs_norm(const CoefficientVector& theta, double alpha, double tau, int trunc = -1);

struct Hyperprior {
    enum class Kind { Poisson, InverseGamma, Exponential, Uniform };
    Kind kind = Kind::Exponential;
    double a = 1.0;  // Poisson mean | inverse-gamma shape | exponential rate
    double b = 1.0;  // inverse-gamma scale
};

// Log density (log pmf for Poisson). Outside the support returns -inf. When
// `support` is given the Poisson pmf is renormalized over its points.
double hyperprior_logdensity(const Hyperprior& prior, double lambda, const HyperGrid* support = nullptr);

}  // namespace eblab
