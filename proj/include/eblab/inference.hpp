#pragma once

// MMLE, empirical Bayes and hierarchical Bayes posteriors, and posterior
// summaries (ball masses, contraction radii, means).

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "eblab/marginal.hpp"
#include "eblab/models.hpp"
#include "eblab/priors.hpp"

namespace eblab {

enum class PosteriorKind { ConjugateGaussianSeq, SieveCoord, DirichletHist, LogLinearMCMC };
enum class Metric { L2, Hellinger };

struct MCMCOptions {
    double step = 0.0;  // 0 selects 0.3 / sqrt(k)
    int burn_in = 5000;
    int kept = 20000;
    int thin = 2;
    int quad_points = kQuadraturePoints;
    std::uint64_t seed = 0;
};

struct PosteriorHandle {
    PosteriorKind kind = PosteriorKind::ConjugateGaussianSeq;
    double lambda = 0.0;
    int dim = 0;  // ambient dimension of the parameter

    // ConjugateGaussianSeq, and SieveCoord with a Gaussian g: coordinatewise
    // normal posteriors on the first mean.size() coordinates, point mass at 0 after.
    Eigen::VectorXd mean;
    Eigen::VectorXd var;

    // SieveCoord with Laplace g: posterior is a two-piece truncated normal per
    // coordinate, built from the observed (u, v) and the weight of theta > 0.
    SieveDensity g = SieveDensity::StdGaussian;
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    Eigen::VectorXd positive_weight;

    Eigen::VectorXd dirichlet;  // DirichletHist parameters alpha + N

    Eigen::MatrixXd chain;  // LogLinearMCMC kept draws, one column each
    double acceptance = 0.0;
    bool warning = false;   // MCMC acceptance rate outside [0.1, 0.6]
};

struct HBPosterior {
    HyperGrid grid;
    Eigen::VectorXd weights;
    std::vector<PosteriorHandle> components;
    std::vector<bool> built;  // negligible-weight MCMC components are skipped
};

// Index of the grid point maximizing logm; ties go to the smallest lambda.
std::size_t mmle_index(const MarginalCurve& curve);
double mmle(const MarginalCurve& curve);

PosteriorHandle eb_posterior(const Dataset& data, const PriorSpec& base, double lambda,
                             const MCMCOptions& mcmc = {});

// Closed-form moments of the Laplace-sieve coordinate posterior.
double laplace_sieve_posterior_mean(double u, double v);

Eigen::VectorXd sample_posterior(const PosteriorHandle& post, Rng& rng);
Eigen::VectorXd posterior_mean(const PosteriorHandle& post);

// d(theta, theta0) for posterior draws. Hellinger needs density data: theta0 is
// fine-cell histogram weights (DirichletHist) or log-linear coefficients.
class DistanceToTruth {
public:
    DistanceToTruth(PosteriorKind kind, const Eigen::VectorXd& theta0, Metric metric, int quad_points = kQuadraturePoints);
    double operator()(const Eigen::VectorXd& theta) const;

private:
    PosteriorKind kind_;
    Eigen::VectorXd theta0_;
    Metric metric_;
    int quad_points_;
    DensityTable f0_;
};

std::vector<double> posterior_distances(const PosteriorHandle& post, const Eigen::VectorXd& theta0, int draws,
                                        std::uint64_t seed, Metric metric);

struct BallMass {
    double p = 0.0;
    double se = 0.0;
};

BallMass posterior_ball_mass(const PosteriorHandle& post, const Eigen::VectorXd& theta0, double r, int draws,
                             std::uint64_t seed, Metric metric);

double contraction_radius(const PosteriorHandle& post, const Eigen::VectorXd& theta0, double level, int draws,
                          std::uint64_t seed, Metric metric);

// Trapezoidal cell widths for continuous grids, 1 for discrete ones.
Eigen::VectorXd grid_cell_widths(const HyperGrid& grid);

// Normalized weights exp(logm) * hyperprior * width.
Eigen::VectorXd hb_weights(const MarginalCurve& curve, const Hyperprior& hyperprior);

HBPosterior hb_posterior(const Dataset& data, const PriorSpec& base, const MarginalCurve& curve,
                         const Hyperprior& hyperprior, const MCMCOptions& mcmc = {});
HBPosterior hb_posterior(const Dataset& data, const PriorSpec& base, const HyperGrid& grid,
                         const Hyperprior& hyperprior, const MarginalOptions& marginal = {},
                         const MCMCOptions& mcmc = {});

Eigen::VectorXd sample_posterior(const HBPosterior& hb, Rng& rng);
Eigen::VectorXd posterior_mean(const HBPosterior& hb);

std::vector<double> posterior_distances(const HBPosterior& hb, const Eigen::VectorXd& theta0, int draws,
                                        std::uint64_t seed, Metric metric);
double contraction_radius(const HBPosterior& hb, const Eigen::VectorXd& theta0, double level, int draws,
                          std::uint64_t seed, Metric metric);

}  // namespace eblab
