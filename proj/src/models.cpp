#include "eblab/models.hpp"

#include <algorithm>
#include <complex>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "eblab/errors.hpp"

namespace eblab {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void validate_simplex(const Eigen::VectorXd& w, const char* who) {
    require(w.size() >= 1, std::string(who) + ": empty weight vector");
    require((w.array() >= 0.0).all() && all_finite(w), std::string(who) + ": weights must be finite and nonnegative");
    require(std::abs(w.sum() - 1.0) < 1e-9, std::string(who) + ": weights must sum to one");
}

}  // namespace

int histogram_cell(double x, int cells) {
    const int j = static_cast<int>(std::ceil(x * cells)) - 1;
    return std::clamp(j, 0, cells - 1);
}

void validate(const ModelSpec& model) {
    require(model.n >= 2, "model: n must be at least 2");
    require(std::isfinite(model.sigma) && model.sigma > 0.0, "model: sigma must be finite and positive");
}

CoefficientVector generate_truth(const TruthSpec& spec) {
    if (spec.kind == TruthKind::Custom) {
        require(spec.custom.size() >= 1 && all_finite(spec.custom), "truth: custom coefficients must be finite and nonempty");
        return spec.custom;
    }
    require(spec.beta > 0.0 && std::isfinite(spec.beta), "truth: beta must be positive");
    require(spec.L > 0.0 && std::isfinite(spec.L), "truth: L must be positive");
    require(spec.dim >= 1, "truth: dim must be at least 1");

    CoefficientVector theta(spec.dim);
    if (spec.kind == TruthKind::HyperRectBoundary) {
        for (int i = 1; i <= spec.dim; ++i)
            theta[i - 1] = std::sqrt(spec.L) * std::pow(1.0 + i, -spec.beta - 0.5);
        return theta;
    }

    Rng rng(derive_seed(spec.seed, 0x50B0ULL));
    std::normal_distribution<double> normal;
    for (int i = 1; i <= spec.dim; ++i) theta[i - 1] = normal(rng) * std::pow(i, -spec.beta - 0.5);
    auto sobolev = [&](const CoefficientVector& t) {
        double s = 0.0;
        for (int i = 1; i <= spec.dim; ++i) s += std::pow(i, 2.0 * spec.beta) * t[i - 1] * t[i - 1];
        return s;
    };
    const double s = sobolev(theta);
    if (s > 0.0) theta *= std::sqrt(spec.L * (1.0 - 1e-9) / s);
    while (sobolev(theta) > spec.L) theta *= 1.0 - 1e-12;
    return theta;
}

CoefficientVector lipschitz_histogram_truth(int cells) {
    require(cells >= 8 && cells % 8 == 0, "lipschitz_histogram_truth: cells must be a positive multiple of 8");
    // Breakpoints of the triangle wave sit at multiples of 1/8, so each cell is
    // linear and its mass is length * value at the midpoint.
    CoefficientVector w(cells);
    for (int i = 0; i < cells; ++i) {
        const double mid = (i + 0.5) / cells;
        const double phase = std::fmod(4.0 * mid, 1.0);
        w[i] = (0.2 + 1.6 * (1.0 - std::abs(2.0 * phase - 1.0))) / cells;
    }
    return w / w.sum();
}

double fourier_basis(int j, double t) {
    require(j >= 1, "fourier_basis: index must be >= 1");
    if (j == 1) return 1.0;
    const int m = j / 2;
    return (j % 2 == 0) ? kSqrt2 * std::cos(2.0 * kPi * m * t) : kSqrt2 * std::sin(2.0 * kPi * m * t);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fourier_design(int n, int J) {
    require(n >= 1 && J >= 1, "fourier_design: sizes must be positive");
    require(J <= n, "fourier_design: J must not exceed n");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> E(n, J);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= J; ++j)
            E(i - 1, j - 1) = static_cast<Scalar>(fourier_basis(j, static_cast<double>(i) / n));
    return E;
}

template Eigen::MatrixXd fourier_design<double>(int, int);
template Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> fourier_design<long double>(int, int);

Eigen::VectorXd synthesize_fourier(const CoefficientVector& theta, int n) {
    require(n >= 1, "synthesize_fourier: n must be positive");
    // Fold every frequency onto its alias modulo n, then one inverse DFT.
    std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(n), {0.0, 0.0});
    for (Eigen::Index idx = 0; idx < theta.size(); ++idx) {
        const int j = static_cast<int>(idx) + 1;
        if (j == 1) {
            spectrum[0] += theta[idx];
            continue;
        }
        const int m = j / 2;
        const std::size_t r = static_cast<std::size_t>(m % n);
        if (j % 2 == 0)
            spectrum[r] += std::complex<double>(kSqrt2 * theta[idx], 0.0);
        else
            spectrum[r] += std::complex<double>(0.0, -kSqrt2 * theta[idx]);
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> time;
    fft.inv(time, spectrum);
    // time[i] = (1/n) sum_r S_r exp(2 pi i r i / n); position 0 is t_n = 1.
    Eigen::VectorXd f(n);
    for (int i = 1; i <= n; ++i) f[i - 1] = time[static_cast<std::size_t>(i % n)].real() * n;
    return f;
}

EmpiricalFourier empirical_fourier(const Eigen::VectorXd& x, int J) {
    const int n = static_cast<int>(x.size());
    require(n >= 1 && J >= 1 && J <= n, "empirical_fourier: need 1 <= J <= n");
    std::vector<std::complex<double>> time(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) time[static_cast<std::size_t>(i % n)] = x[i - 1];
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> freq;
    fft.fwd(freq, time);

    EmpiricalFourier out{Eigen::VectorXd(J), Eigen::VectorXd::Ones(J)};
    for (int j = 1; j <= J; ++j) {
        if (j == 1) {
            out.y[0] = freq[0].real() / n;
            continue;
        }
        const int m = j / 2;
        const auto& X = freq[static_cast<std::size_t>(m)];
        // sum x_i cos = Re X_m, sum x_i sin = -Im X_m
        out.y[j - 1] = (j % 2 == 0 ? X.real() : -X.imag()) * kSqrt2 / n;
        if (j % 2 == 0 && 2 * m == n) out.gram[j - 1] = 2.0;
    }
    return out;
}

SequenceForm sequence_form(const Dataset& data) {
    validate(data.model);
    const int n = data.model.n;
    require(data.obs.size() == n, "sequence_form: observation length must equal n");
    switch (data.model.kind) {
        case ModelKind::WhiteNoise:
            return {data.obs, Eigen::VectorXd::Constant(n, 1.0 / n), 0.0};
        case ModelKind::FixedDesignRegression: {
            const EmpiricalFourier ef = empirical_fourier(data.obs, n);
            const double s2 = data.model.sigma * data.model.sigma;
            SequenceForm out;
            out.u = ef.y.cwiseQuotient(ef.gram);
            out.v = (s2 / n) * ef.gram.cwiseInverse();
            out.log_jacobian = -0.5 * (ef.gram.array() * n).log().sum();
            return out;
        }
        case ModelKind::IIDDensity:
            break;
    }
    throw ParameterError("sequence_form: density data has no Gaussian sequence form");
}

Dataset simulate(const ModelSpec& model, const CoefficientVector& theta0, std::uint64_t seed) {
    validate(model);
    require(theta0.size() >= 1 && all_finite(theta0), "simulate: truth must be finite and nonempty");
    const int n = model.n;
    Rng rng(derive_seed(seed, static_cast<int>(model.kind)));
    std::normal_distribution<double> normal;
    Dataset data{model, Eigen::VectorXd(n), theta0, seed};

    switch (model.kind) {
        case ModelKind::WhiteNoise: {
            const double scale = 1.0 / std::sqrt(static_cast<double>(n));
            for (int j = 0; j < n; ++j) {
                const double mean = j < theta0.size() ? theta0[j] : 0.0;
                data.obs[j] = mean + scale * normal(rng);
            }
            break;
        }
        case ModelKind::FixedDesignRegression: {
            const Eigen::VectorXd f = synthesize_fourier(theta0, n);
            for (int i = 0; i < n; ++i) data.obs[i] = f[i] + model.sigma * normal(rng);
            break;
        }
        case ModelKind::IIDDensity: {
            std::uniform_real_distribution<double> unif;
            if (model.density_param == DensityParam::Histogram) {
                validate_simplex(theta0, "simulate");
                std::vector<double> cdf(static_cast<std::size_t>(theta0.size()));
                std::partial_sum(theta0.data(), theta0.data() + theta0.size(), cdf.begin());
                const double cells = static_cast<double>(theta0.size());
                for (int i = 0; i < n; ++i) {
                    const double u = unif(rng) * cdf.back();
                    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                    if (it == cdf.end()) --it;
                    const auto cell = static_cast<double>(it - cdf.begin());
                    data.obs[i] = (cell + unif(rng)) / cells;
                }
            } else {
                require(std::isfinite(norm1(theta0)), "simulate: log-linear truth needs finite l1 norm");
                const DensityTable table = loglinear_density(theta0, kSamplingCells + 1);
                const double h = 1.0 / kSamplingCells;
                std::vector<double> cdf(kSamplingCells + 1, 0.0);
                for (int c = 0; c < kSamplingCells; ++c)
                    cdf[c + 1] = cdf[c] + 0.5 * h * (table.values[c] + table.values[c + 1]);
                for (int i = 0; i < n; ++i) {
                    const double u = unif(rng) * cdf.back();
                    auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
                    if (it == cdf.end()) --it;
                    const auto c = static_cast<std::size_t>(it - cdf.begin() - 1);
                    const double frac = (u - cdf[c]) / (cdf[c + 1] - cdf[c]);
                    data.obs[i] = std::clamp((static_cast<double>(c) + frac) * h, 0.0, 1.0);
                }
            }
            break;
        }
    }
    return data;
}

// ---------------------------------------------------------------------------

double DensityTable::integral() const {
    if (layout == Layout::Cells) return values.mean();
    return simpson_weights(static_cast<int>(values.size())).dot(values);
}

double loglinear_basis(int j, double x) {
    require(j >= 0, "loglinear_basis: index must be >= 0");
    return j == 0 ? 1.0 : kSqrt2 * std::cos(kPi * j * x);
}

Eigen::MatrixXd loglinear_basis_table(int k, int points) {
    require(points >= 3 && points % 2 == 1, "loglinear_basis_table: need an odd number of nodes");
    Eigen::MatrixXd B(points, k);
    for (int i = 0; i < points; ++i) {
        const double x = static_cast<double>(i) / (points - 1);
        for (int j = 1; j <= k; ++j) B(i, j - 1) = loglinear_basis(j, x);
    }
    return B;
}

namespace {

Eigen::VectorXd loglinear_log_kernel(const CoefficientVector& theta, int points) {
    require(all_finite(theta), "loglinear density: coefficients must be finite");
    if (theta.size() == 0) return Eigen::VectorXd::Zero(points);
    return loglinear_basis_table(static_cast<int>(theta.size()), points) * theta;
}

}  // namespace

double loglinear_normalizer(const CoefficientVector& theta, int points) {
    const Eigen::VectorXd g = loglinear_log_kernel(theta, points);
    const double top = g.maxCoeff();
    const Eigen::VectorXd w = simpson_weights(points);
    return top + std::log(w.dot((g.array() - top).exp().matrix()));
}

DensityTable loglinear_density(const CoefficientVector& theta, int points) {
    const Eigen::VectorXd g = loglinear_log_kernel(theta, points);
    const double top = g.maxCoeff();
    const Eigen::VectorXd w = simpson_weights(points);
    const double c = top + std::log(w.dot((g.array() - top).exp().matrix()));
    return {DensityTable::Layout::Grid, (g.array() - c).exp().matrix()};
}

DensityTable histogram_density(const Eigen::VectorXd& weights, int k) {
    require(k >= 1 && weights.size() == k, "histogram_density: weight vector length must equal k");
    validate_simplex(weights, "histogram_density");
    return {DensityTable::Layout::Cells, weights * static_cast<double>(k)};
}

double hellinger(const DensityTable& f, const DensityTable& g) {
    require(f.layout == g.layout && f.values.size() == g.values.size(), "hellinger: density tables must share a grid");
    require((f.values.array() >= 0.0).all() && (g.values.array() >= 0.0).all(), "hellinger: densities must be nonnegative");
    const Eigen::ArrayXd d = f.values.array().sqrt() - g.values.array().sqrt();
    double h2;
    if (f.layout == DensityTable::Layout::Cells)
        h2 = d.square().mean();
    else
        h2 = simpson_weights(static_cast<int>(f.values.size())).dot(d.square().matrix());
    return std::sqrt(std::clamp(h2, 0.0, 2.0));
}

std::vector<CellOverlap> cell_overlaps(int cells_a, int cells_b) {
    require(cells_a >= 1 && cells_b >= 1, "cell_overlaps: cell counts must be positive");
    // Work on the integer scale cells_a * cells_b so breakpoints are exact.
    const long long total = static_cast<long long>(cells_a) * cells_b;
    std::vector<CellOverlap> out;
    out.reserve(static_cast<std::size_t>(cells_a + cells_b));
    int a = 0;
    int b = 0;
    long long pos = 0;
    while (a < cells_a && b < cells_b) {
        const long long end_a = static_cast<long long>(a + 1) * cells_b;
        const long long end_b = static_cast<long long>(b + 1) * cells_a;
        const long long end = std::min(end_a, end_b);
        out.push_back({a, b, static_cast<double>(end - pos) / static_cast<double>(total)});
        pos = end;
        if (end == end_a) ++a;
        if (end == end_b) ++b;
    }
    return out;
}

Eigen::VectorXd sqrt_bin_integrals(const Eigen::VectorXd& fine_weights, int k) {
    const int fine = static_cast<int>(fine_weights.size());
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(k);
    for (const auto& o : cell_overlaps(fine, k)) eta[o.b] += o.length * std::sqrt(fine * fine_weights[o.a]);
    return eta;
}

double histogram_hellinger(const Eigen::VectorXd& weights_a, const Eigen::VectorXd& weights_b) {
    const int ka = static_cast<int>(weights_a.size());
    const int kb = static_cast<int>(weights_b.size());
    double h2 = 0.0;
    for (const auto& o : cell_overlaps(ka, kb)) {
        const double d = std::sqrt(ka * weights_a[o.a]) - std::sqrt(kb * weights_b[o.b]);
        h2 += o.length * d * d;
    }
    return std::sqrt(std::clamp(h2, 0.0, 2.0));
}

Divergences divergences(const ModelSpec& model, const CoefficientVector& theta0, const CoefficientVector& theta) {
    validate(model);
    require(all_finite(theta0) && all_finite(theta), "divergences: coefficient vectors must be finite");
    const double n = model.n;
    switch (model.kind) {
        case ModelKind::WhiteNoise: {
            const double d2 = std::pow(padded_distance(theta, theta0), 2);
            return {0.5 * n * d2, n * d2};
        }
        case ModelKind::FixedDesignRegression: {
            const double d2 = std::pow(padded_distance(theta, theta0), 2) / (model.sigma * model.sigma);
            return {0.5 * n * d2, n * d2};
        }
        case ModelKind::IIDDensity:
            break;
    }
    if (model.density_param == DensityParam::Histogram) {
        validate_simplex(theta0, "divergences");
        validate_simplex(theta, "divergences");
        const int k0 = static_cast<int>(theta0.size());
        const int k = static_cast<int>(theta.size());
        double m1 = 0.0;
        double m2 = 0.0;
        for (const auto& o : cell_overlaps(k0, k)) {
            const double f0 = k0 * theta0[o.a];
            if (f0 == 0.0) continue;
            const double f = k * theta[o.b];
            if (f == 0.0) return {kInf, kInf};
            const double l = std::log(f0 / f);
            m1 += o.length * f0 * l;
            m2 += o.length * f0 * l * l;
        }
        return {n * m1, n * std::max(0.0, m2 - m1 * m1)};
    }
    const int k = static_cast<int>(std::max(theta0.size(), theta.size()));
    CoefficientVector a = CoefficientVector::Zero(k);
    CoefficientVector b = CoefficientVector::Zero(k);
    a.head(theta0.size()) = theta0;
    b.head(theta.size()) = theta;
    const Eigen::MatrixXd B = loglinear_basis_table(k);
    const Eigen::VectorXd w = simpson_weights(kQuadraturePoints);
    const Eigen::ArrayXd log_ratio = (B * (a - b)).array() - (loglinear_normalizer(a) - loglinear_normalizer(b));
    const Eigen::ArrayXd f0 = loglinear_density(a).values.array();
    const double m1 = w.dot((f0 * log_ratio).matrix());
    const double m2 = w.dot((f0 * log_ratio.square()).matrix());
    return {n * m1, n * std::max(0.0, m2 - m1 * m1)};
}

}  // namespace eblab
