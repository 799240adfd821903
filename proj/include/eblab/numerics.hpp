#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace eblab {

using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// splitmix64 finalizer; used to derive independent sub-streams from a base seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <typename... Ts>
constexpr std::uint64_t derive_seed(std::uint64_t base, Ts... parts) {
    std::uint64_t h = mix_seed(base);
    ((h = mix_seed(h ^ static_cast<std::uint64_t>(parts))), ...);
    return h;
}

// ---------------------------------------------------------------------------
// Reductions

double log_sum_exp(std::span<const double> values);

template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& values) {
    const Eigen::ArrayXd a = values.derived().template cast<double>();
    return log_sum_exp(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
}

template <typename Derived>
double norm1(const Eigen::MatrixBase<Derived>& v) {
    return v.template lpNorm<1>();
}

template <typename Derived>
double norm2(const Eigen::MatrixBase<Derived>& v) {
    return v.norm();
}

// ||a - b||_2 with the shorter vector zero-padded.
double padded_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// ---------------------------------------------------------------------------
// Normal distribution and friends

inline double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double normal_cdf(double x);
double log_normal_cdf(double x);
double normal_quantile(double p);
double log_erfc(double x);

// Regularized lower incomplete gamma P(a, x), on the log scale.
double log_gamma_p(double a, double x);

// log P(X <= x) for X ~ noncentral chi-square(dof, noncentrality).
double log_noncentral_chi2_cdf(double x, double dof, double noncentrality);

// Standard normal truncated to (lower, inf).
double sample_normal_tail(double lower, Rng& rng);

// Dirichlet(alpha) draw; alpha entries must be positive.
Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, Rng& rng);

double log_dirichlet_density(const Eigen::VectorXd& theta, const Eigen::VectorXd& alpha);

// ---------------------------------------------------------------------------
// Quadrature

// Composite Simpson weights for `points` (odd, >= 3) equispaced nodes on [a, b].
Eigen::VectorXd simpson_weights(int points, double a = 0.0, double b = 1.0);

// Adaptive Simpson returning the mean value of f over [a, b] (integral / (b - a)).
double adaptive_mean(const std::function<double(double)>& f, double a, double b,
                     double tol = 1e-13, int max_depth = 40);

// Nearest-rank quantile: the ceil(level * N)-th smallest value.
double nearest_rank_quantile(std::vector<double> values, double level);

double median(std::vector<double> values);

}  // namespace eblab
