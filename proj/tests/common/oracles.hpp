#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls the library routine it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

// log mean exp(l_s) with a delta-method standard error on the log scale.
inline Estimate log_mean_exp(const std::vector<double>& l) {
    double top = -INFINITY;
    for (double v : l) top = std::max(top, v);
    double s1 = 0.0;
    double s2 = 0.0;
    for (double v : l) {
        const double w = std::exp(v - top);
        s1 += w;
        s2 += w * w;
    }
    const double m = static_cast<double>(l.size());
    const double mean = s1 / m;
    const double var = std::max(0.0, s2 / m - mean * mean);
    return {top + std::log(mean), std::sqrt(var / m) / mean};
}

inline double log_normal(double x, double mean, double var) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

// log N(x; 0, cov) by Cholesky.
inline double log_mvn(const Eigen::VectorXd& x, const Eigen::MatrixXd& cov) {
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const Eigen::VectorXd z = llt.matrixL().solve(x);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (x.size() * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

// Gauss-Legendre nodes and weights on [0, 1].
inline void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
    x.assign(m, 0.0);
    w.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = z;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (z * p1 - p0) / (z * z - 1.0);
            const double step = p1 / dp;
            z -= step;
            if (std::abs(step) < 1e-15) break;
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

// int_0^1 f by m-point Gauss-Legendre.
inline double integrate01(const std::function<double(double)>& f, int m = 200) {
    std::vector<double> x, w;
    gauss_legendre(m, x, w);
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += w[i] * f(x[i]);
    return s;
}

inline double log_dirichlet(const std::vector<double>& theta, double alpha) {
    const double k = static_cast<double>(theta.size());
    double out = std::lgamma(k * alpha) - k * std::lgamma(alpha);
    for (double t : theta) out += (alpha - 1.0) * std::log(t);
    return out;
}

// Histogram marginal int prod_j (k theta_j)^{N_j} Dir(theta | alpha) by
// tensor Gauss-Legendre on the simplex (k = 2 or 3).
inline double histogram_marginal_quadrature(const std::vector<int>& counts, double alpha, int m = 80) {
    const int k = static_cast<int>(counts.size());
    auto integrand = [&](const std::vector<double>& theta) {
        double log_v = log_dirichlet(theta, alpha);
        for (int j = 0; j < k; ++j) log_v += counts[j] * std::log(k * theta[j]);
        return std::exp(log_v);
    };
    if (k == 2) return integrate01([&](double s) { return integrand({s, 1.0 - s}); }, m);
    return integrate01(
        [&](double s) {
            return (1.0 - s) * integrate01([&](double t) { return integrand({s, (1.0 - s) * t, (1.0 - s) * (1.0 - t)}); }, m);
        },
        m);
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

// 1% critical value of the two-sample statistic for equal sizes m.
inline double ks_critical_1pct(std::size_t m) { return 1.628 * std::sqrt(2.0 / m); }

}  // namespace oracle
