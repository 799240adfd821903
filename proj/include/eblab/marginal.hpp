#pragma once

// Log marginal likelihoods log m(x | lambda) for each (model, prior family) pair.
// Values are full log densities of the data; no log p_theta0 normalization.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eblab/models.hpp"
#include "eblab/priors.hpp"

namespace eblab {

enum class MarginalMethod { Exact, MonteCarlo };

struct MCEstimate {
    double value = 0.0;
    double se = 0.0;       // jackknife standard error on the log scale
    double ess = 0.0;      // effective sample size of the importance weights
    bool flagged = false;  // set when ess < 2
    std::string diagnostic;
};

struct MarginalCurve {
    HyperGrid grid;
    Eigen::VectorXd logm;
    MarginalMethod method = MarginalMethod::Exact;
    Eigen::VectorXd mc_se;  // empty for Exact
    std::vector<bool> flagged;
};

struct MarginalOptions {
    int mc_draws = 4000;
    std::uint64_t seed = 0;
    int quad_points = kQuadraturePoints;
};

// Gaussian prior N(0, tau^2 j^{-2 alpha - 1}) on all n coordinates.
double log_marginal_gaussian_seq(const Dataset& data, double alpha, double tau);
double log_marginal_gaussian_seq(const SequenceForm& seq, double alpha, double tau);

// log int N(u; theta, v) g(theta) dtheta. Closed form for both built-in densities.
double sieve_coordinate_log_marginal(SieveDensity g, double u, double v);

double log_marginal_sieve(const Dataset& data, int k, SieveDensity g);
double log_marginal_sieve(const SequenceForm& seq, int k, SieveDensity g);

Eigen::VectorXi bin_counts(const Eigen::VectorXd& samples, int k);

// Dirichlet-multinomial marginal of a k-bin histogram density.
double log_marginal_histogram(const Dataset& data, int k, double alpha);
double log_marginal_histogram(const Eigen::VectorXi& counts, double alpha);

// phi_j sufficient statistics S_j = sum_i phi_j(x_i), j = 1..k.
Eigen::VectorXd loglinear_statistics(const Eigen::VectorXd& samples, int k);

// Number of free log-linear coordinates used by a prior (k, or trunc for Gaussians).
int loglinear_dimension(const PriorSpec& prior);

// Prior-sampling Monte Carlo estimate; `prior` carries the hyper-parameter.
MCEstimate log_marginal_loglinear(const Dataset& data, const PriorSpec& prior, int mc_draws,
                                  std::uint64_t seed, int quad_points = kQuadraturePoints);

// Evaluates the family's log marginal over the grid. MC sub-seeds are derived
// from (options.seed, grid index).
MarginalCurve marginal_curve(const Dataset& data, const PriorSpec& base, const HyperGrid& grid,
                             const MarginalOptions& options = {});

}  // namespace eblab
