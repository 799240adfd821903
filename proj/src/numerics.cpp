#include "eblab/numerics.hpp"

#include <algorithm>

#include "eblab/errors.hpp"

namespace eblab {

double log_sum_exp(std::span<const double> values) {
    if (values.empty()) return -kInf;
    const double top = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(top)) return top;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - top);
    return top + std::log(acc);
}

double padded_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index common = std::min(a.size(), b.size());
    double s = (a.head(common) - b.head(common)).squaredNorm();
    if (a.size() > common) s += a.tail(a.size() - common).squaredNorm();
    if (b.size() > common) s += b.tail(b.size() - common).squaredNorm();
    return std::sqrt(s);
}

double log_erfc(double x) {
    if (x < 20.0) return std::log(std::erfc(x));
    // Asymptotic expansion; relative error below 1e-13 for x >= 20.
    const double r = 1.0 / (2.0 * x * x);
    const double series = 1.0 - r + 3.0 * r * r - 15.0 * r * r * r + 105.0 * r * r * r * r;
    return -x * x - std::log(x * std::sqrt(std::numbers::pi)) + std::log(series);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_normal_cdf(double x) { return std::log(0.5) + log_erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
    // Acklam's rational approximation followed by one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

double log_gamma_p(double a, double x) {
    require(a > 0.0, "log_gamma_p: shape must be positive");
    if (x <= 0.0) return -kInf;
    const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < 100000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return log_prefactor + std::log(sum);
    }
    // Continued fraction for Q(a, x) (modified Lentz).
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    const double q = std::exp(log_prefactor) * h;
    return std::log1p(-q);
}

double log_noncentral_chi2_cdf(double x, double dof, double noncentrality) {
    require(dof > 0.0 && noncentrality >= 0.0, "noncentral chi-square: invalid parameters");
    if (x <= 0.0) return -kInf;
    if (noncentrality == 0.0) return log_gamma_p(0.5 * dof, 0.5 * x);
    // Poisson mixture of central chi-square distributions.
    const double half = 0.5 * noncentrality;
    const double log_half = std::log(half);
    std::vector<double> terms;
    double best = -kInf;
    for (int i = 0; i < 1000000; ++i) {
        const double t = -half + i * log_half - std::lgamma(i + 1.0) +
                         log_gamma_p(0.5 * dof + i, 0.5 * x);
        terms.push_back(t);
        best = std::max(best, t);
        if (i > half && t < best - 40.0) break;
    }
    return log_sum_exp(std::span<const double>(terms));
}

double sample_normal_tail(double lower, Rng& rng) {
    std::normal_distribution<double> normal;
    if (lower < 0.5) {
        for (;;) {
            const double z = normal(rng);
            if (z > lower) return z;
        }
    }
    // Robert (1995) translated-exponential rejection sampler.
    const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
    std::exponential_distribution<double> expo(rate);
    std::uniform_real_distribution<double> unif;
    for (;;) {
        const double z = lower + expo(rng);
        const double dz = z - rate;
        if (unif(rng) <= std::exp(-0.5 * dz * dz)) return z;
    }
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, Rng& rng) {
    Eigen::VectorXd out(alpha.size());
    for (int attempt = 0; attempt < 100; ++attempt) {
        for (Eigen::Index j = 0; j < alpha.size(); ++j) {
            std::gamma_distribution<double> gamma(alpha[j], 1.0);
            out[j] = gamma(rng);
        }
        const double total = out.sum();
        if (total > 0.0) return out / total;
    }
    throw NumericalError("sample_dirichlet: all gamma draws underflowed");
}

double log_dirichlet_density(const Eigen::VectorXd& theta, const Eigen::VectorXd& alpha) {
    double out = std::lgamma(alpha.sum());
    for (Eigen::Index j = 0; j < alpha.size(); ++j)
        out += (alpha[j] == 1.0 ? 0.0 : (alpha[j] - 1.0) * std::log(theta[j])) - std::lgamma(alpha[j]);
    return out;
}

Eigen::VectorXd simpson_weights(int points, double a, double b) {
    require(points >= 3 && points % 2 == 1, "simpson_weights: need an odd number of nodes >= 3");
    const double h = (b - a) / (points - 1);
    Eigen::VectorXd w(points);
    for (int i = 0; i < points; ++i) w[i] = (i % 2 == 1) ? 4.0 : 2.0;
    w[0] = w[points - 1] = 1.0;
    return w * (h / 3.0);
}

namespace {

double adaptive_step(const std::function<double(double)>& f, double a, double b, double fa,
                     double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (fa + 4.0 * flm + fm) / 6.0;
    const double right = (fm + 4.0 * frm + fb) / 6.0;
    const double both = 0.5 * (left + right);
    if (depth <= 0 || std::abs(both - whole) <= 15.0 * tol) return both + (both - whole) / 15.0;
    return 0.5 * (adaptive_step(f, a, m, fa, flm, fm, left, tol, depth - 1) +
                  adaptive_step(f, m, b, fm, frm, fb, right, tol, depth - 1));
}

}  // namespace

double adaptive_mean(const std::function<double(double)>& f, double a, double b, double tol,
                     int max_depth) {
    require(b > a, "adaptive_mean: empty interval");
    const double fa = f(a);
    const double fm = f(0.5 * (a + b));
    const double fb = f(b);
    const double whole = (fa + 4.0 * fm + fb) / 6.0;
    return adaptive_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double nearest_rank_quantile(std::vector<double> values, double level) {
    require(!values.empty(), "nearest_rank_quantile: no values");
    require(level > 0.0 && level <= 1.0, "nearest_rank_quantile: level must lie in (0, 1]");
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    std::nth_element(values.begin(), values.begin() + static_cast<long>(rank - 1), values.end());
    return values[rank - 1];
}

double median(std::vector<double> values) {
    require(!values.empty(), "median: no values");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace eblab
