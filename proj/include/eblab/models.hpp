#pragma once

// Observation models: white noise sequence model, fixed-design Fourier
// regression and i.i.d. density estimation on [0, 1].

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "eblab/numerics.hpp"

namespace eblab {

// Basis coefficients theta_1, theta_2, ...; entries beyond size() are zero.
using CoefficientVector = Eigen::VectorXd;

enum class TruthKind { HyperRectBoundary, SobolevRandom, Custom };

struct TruthSpec {
    TruthKind kind = TruthKind::HyperRectBoundary;
    double beta = 1.0;
    double L = 1.0;
    int dim = 1;
    std::uint64_t seed = 0;
    CoefficientVector custom;  // Custom only
};

enum class ModelKind { WhiteNoise, FixedDesignRegression, IIDDensity };
enum class DensityParam { LogLinear, Histogram };

struct ModelSpec {
    ModelKind kind = ModelKind::WhiteNoise;
    int n = 2;
    double sigma = 1.0;
    DensityParam density_param = DensityParam::LogLinear;
};

void validate(const ModelSpec& model);

// For IIDDensity/Histogram the truth holds simplex weights of a piecewise
// constant density on truth.size() equal cells; for every other model it holds
// basis coefficients.
struct Dataset {
    ModelSpec model;
    Eigen::VectorXd obs;
    CoefficientVector truth;
    std::uint64_t seed = 0;
};

CoefficientVector generate_truth(const TruthSpec& spec);

// Triangle-wave density 0.2 + 1.6 * tri(4x) (Lipschitz, bounded in [0.2, 1.8])
// discretized into `cells` equal cells with exact cell masses.
CoefficientVector lipschitz_histogram_truth(int cells = 4096);

Dataset simulate(const ModelSpec& model, const CoefficientVector& theta0, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Real Fourier basis on [0, 1]: e_1 = 1, e_2m = sqrt2 cos(2 pi m t),
// e_2m+1 = sqrt2 sin(2 pi m t). Indices are 1-based.

double fourier_basis(int j, double t);

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fourier_design(int n, int J);

// f(t_i) = sum_j theta_j e_j(t_i) at t_i = i/n, for any number of coefficients.
Eigen::VectorXd synthesize_fourier(const CoefficientVector& theta, int n);

struct EmpiricalFourier {
    Eigen::VectorXd y;      // (1/n) sum_i x_i e_j(t_i)
    Eigen::VectorXd gram;   // (1/n) sum_i e_j(t_i)^2; 2 at the even-n Nyquist cosine, else 1
};

EmpiricalFourier empirical_fourier(const Eigen::VectorXd& x, int J);

// Per-coordinate Gaussian sequence representation u_j ~ N(theta_j, v_j) of a
// white noise or regression dataset; log p(x) = sum_j log N(u_j; theta_j, v_j) + log_jacobian.
struct SequenceForm {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    double log_jacobian = 0.0;
};

SequenceForm sequence_form(const Dataset& data);

// ---------------------------------------------------------------------------
// Densities on [0, 1]

inline constexpr int kQuadraturePoints = 4097;
inline constexpr int kSamplingCells = 4096;

struct DensityTable {
    enum class Layout { Grid, Cells };
    // Grid: values at equispaced nodes 0, 1/(m-1), ..., 1 (m odd, Simpson).
    // Cells: constant values on m equal cells ((j-1)/m, j/m].
    Layout layout = Layout::Grid;
    Eigen::VectorXd values;

    double integral() const;
};

// phi_0 = 1, phi_j(x) = sqrt2 cos(pi j x); j >= 1 are the free coordinates.
double loglinear_basis(int j, double x);

// Matrix of phi_1..phi_k at the quadrature nodes (points x k).
Eigen::MatrixXd loglinear_basis_table(int k, int points = kQuadraturePoints);

double loglinear_normalizer(const CoefficientVector& theta, int points = kQuadraturePoints);

DensityTable loglinear_density(const CoefficientVector& theta, int points = kQuadraturePoints);

DensityTable histogram_density(const Eigen::VectorXd& weights, int k);

double hellinger(const DensityTable& f, const DensityTable& g);

// 0-based index of the cell ((j-1)/cells, j/cells] containing x.
int histogram_cell(double x, int cells);

struct CellOverlap {
    int a;
    int b;
    double length;
};

// Intersections of the cells of two uniform partitions of (0, 1].
std::vector<CellOverlap> cell_overlaps(int cells_a, int cells_b);

// eta_j = int_{I_j} sqrt(f0) for f0 a piecewise constant density on fine cells.
Eigen::VectorXd sqrt_bin_integrals(const Eigen::VectorXd& fine_weights, int k);

// Exact Hellinger distance between histograms on arbitrary uniform partitions.
double histogram_hellinger(const Eigen::VectorXd& weights_a, const Eigen::VectorXd& weights_b);

struct Divergences {
    double kl = 0.0;  // K(theta0, theta)
    double v2 = 0.0;  // centered second moment of the log-likelihood ratio
};

Divergences divergences(const ModelSpec& model, const CoefficientVector& theta0,
                        const CoefficientVector& theta);

}  // namespace eblab
