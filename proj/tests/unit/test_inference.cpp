#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "eblab/errors.hpp"
#include "eblab/inference.hpp"
#include "oracles.hpp"

using namespace eblab;

namespace {

PriorSpec gaussian(PriorFamily family, double alpha, double tau, int trunc) {
    PriorSpec p;
    p.family = family;
    p.alpha = alpha;
    p.tau = tau;
    p.trunc = trunc;
    return p;
}

MarginalCurve synthetic_curve(std::vector<double> grid, std::vector<double> logm,
                              PriorFamily family = PriorFamily::ScaledGaussian) {
    MarginalCurve c;
    c.grid = HyperGrid{std::move(grid), family};
    c.logm = Eigen::Map<Eigen::VectorXd>(logm.data(), static_cast<Eigen::Index>(logm.size()));
    c.flagged.assign(logm.size(), false);
    return c;
}

PosteriorHandle one_normal(double mean, double var) {
    PosteriorHandle p;
    p.kind = PosteriorKind::ConjugateGaussianSeq;
    p.dim = 1;
    p.mean = Eigen::VectorXd::Constant(1, mean);
    p.var = Eigen::VectorXd::Constant(1, var);
    return p;
}

// Posterior mean of theta for u ~ N(theta, v), theta with log prior density lp,
// by Gauss-Legendre over [lo, hi] split at the given breakpoint.
double quadrature_posterior_mean(double u, double v, const std::function<double(double)>& lp, double lo, double hi,
                                 double kink) {
    double num = 0.0;
    double den = 0.0;
    auto piece = [&](double a, double b) {
        if (b <= a) return;
        std::vector<double> x, w;
        oracle::gauss_legendre(2000, x, w);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double t = a + (b - a) * x[i];
            const double dens = std::exp(oracle::log_normal(u, t, v) + lp(t)) * (b - a) * w[i];
            num += t * dens;
            den += dens;
        }
    };
    piece(lo, std::min(hi, kink));
    piece(std::max(lo, kink), hi);
    return num / den;
}

}  // namespace

TEST_CASE("mmle on synthetic curves") {
    CHECK(mmle(synthetic_curve({0.7}, {-3.0})) == 0.7);
    CHECK(mmle(synthetic_curve({1.0, 2.0, 3.0}, {0.0, 1.0, 0.0})) == 2.0);
    // Ties go to the smallest lambda.
    CHECK(mmle(synthetic_curve({1.0, 2.0, 3.0}, {0.0, 1.0, 1.0})) == 2.0);
    try {
        mmle(synthetic_curve({1.0, 2.5}, {0.0, kNaN}));
        FAIL("expected an error");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("2.5") != std::string::npos);
    }
    // Invariant under a constant shift.
    auto c = synthetic_curve({1.0, 2.0, 3.0, 4.0}, {0.3, -1.0, 0.9, 0.2});
    const double before = mmle(c);
    c.logm.array() += 123.456;
    CHECK(mmle(c) == before);
}

TEST_CASE("mmle equals an exhaustive scan") {
    TruthSpec truth;
    truth.dim = 32;
    const Dataset data = simulate(ModelSpec{ModelKind::WhiteNoise, 16}, generate_truth(truth), 2);
    const auto t2 = gaussian(PriorFamily::ScaledGaussian, 1.0, 1.0, 16);
    const HyperGrid grid = log_grid(PriorFamily::ScaledGaussian, 0.05, 20.0, 40);
    const MarginalCurve curve = marginal_curve(data, t2, grid);
    const double hat = mmle(curve);
    double best = -kInf;
    double best_tau = 0.0;
    for (double tau : grid.values) {
        const double v = log_marginal_gaussian_seq(data, 1.0, tau);
        CHECK(log_marginal_gaussian_seq(data, 1.0, hat) >= v);
        if (v > best) {
            best = v;
            best_tau = tau;
        }
    }
    CHECK(hat == best_tau);
}

TEST_CASE("conjugate gaussian posterior") {
    // Regression with n = 2 and sigma^2 = 2 gives first-coordinate noise variance 1.
    ModelSpec model{ModelKind::FixedDesignRegression, 2};
    model.sigma = std::sqrt(2.0);
    Dataset data{model, Eigen::Vector2d(0.8, 0.8), CoefficientVector::Zero(1), 0};
    const auto post = eb_posterior(data, gaussian(PriorFamily::ScaledGaussian, 1.0, 1.0, 2), 1.0);
    CHECK(post.kind == PosteriorKind::ConjugateGaussianSeq);
    CHECK(post.mean[0] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(post.var[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(posterior_mean(post)[0] == doctest::Approx(0.4).epsilon(1e-14));

    TruthSpec truth;
    truth.dim = 64;
    const Dataset wn = simulate(ModelSpec{ModelKind::WhiteNoise, 64}, generate_truth(truth), 8);
    const auto p = eb_posterior(wn, gaussian(PriorFamily::RegularityGaussian, 1.0, 1.0, 64), 1.7);
    const auto sd = gaussian_prior_sd(1.7, 1.0, 64);
    for (int j = 0; j < 64; ++j) {
        CHECK(p.var[j] > 0.0);
        CHECK(p.var[j] <= sd[j] * sd[j]);
    }
}

TEST_CASE("conjugate posterior moments match quadrature") {
    Rng rng(99);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double u = 4.0 * unif(rng) - 2.0;
        const double v = std::exp(-6.0 * unif(rng));
        const double t2 = std::exp(4.0 * unif(rng) - 3.0);
        const double s = std::sqrt(v * t2 / (v + t2));
        const double centre = u * t2 / (t2 + v);
        auto lp = [&](double t) { return oracle::log_normal(t, 0.0, t2); };
        const double m = quadrature_posterior_mean(u, v, lp, centre - 14 * s, centre + 14 * s, centre);
        CHECK(std::abs(m - centre) < 1e-8);
    }
}

TEST_CASE("dirichlet posterior") {
    ModelSpec model{ModelKind::IIDDensity, 4};
    model.density_param = DensityParam::Histogram;
    Dataset data{model, Eigen::Vector4d(0.1, 0.2, 0.3, 0.8), Eigen::VectorXd::Constant(2, 0.5), 0};
    PriorSpec dir;
    dir.family = PriorFamily::DirichletHistogram;
    dir.alpha = 1.0;
    const auto post = eb_posterior(data, dir, 2.0);
    CHECK(post.kind == PosteriorKind::DirichletHist);
    CHECK(post.dirichlet[0] == 4.0);
    CHECK(post.dirichlet[1] == 2.0);
    const auto m = posterior_mean(post);
    CHECK(m[0] == doctest::Approx(2.0 / 3.0));
    CHECK(m[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("laplace sieve posterior mean") {
    for (auto [u, v] : {std::pair{0.0, 1.0}, std::pair{0.7, 0.2}, std::pair{-1.5, 0.01}, std::pair{3.0, 2.0},
                        std::pair{-0.05, 1e-3}}) {
        const double s = std::sqrt(v);
        auto lp = [](double t) { return std::log(0.5) - std::abs(t); };
        const double q = quadrature_posterior_mean(u, v, lp, u - 14 * s - 2 * v, u + 14 * s + 2 * v, 0.0);
        CHECK(std::abs(laplace_sieve_posterior_mean(u, v) - q) < 1e-6);
    }
    // Sampler mean agrees with the closed form.
    TruthSpec truth;
    truth.dim = 8;
    const Dataset data = simulate(ModelSpec{ModelKind::WhiteNoise, 8}, generate_truth(truth), 1);
    PriorSpec sieve;
    sieve.g = SieveDensity::Laplace;
    const auto post = eb_posterior(data, sieve, 3.0);
    Rng rng(4);
    const int m = 200000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < m; ++i) {
        const auto t = sample_posterior(post, rng);
        sum += t;
        sq += t.cwiseProduct(t);
    }
    for (int j = 0; j < 3; ++j) {
        const double mean = sum[j] / m;
        const double sd = std::sqrt(sq[j] / m - mean * mean);
        CHECK(std::abs(mean - post.mean[j]) < 4 * sd / std::sqrt(double(m)));
    }
}

TEST_CASE("ball mass and radius for one gaussian coordinate") {
    const auto post = one_normal(0.3, 0.04);
    const double theta0 = 0.1;
    Eigen::VectorXd t0 = Eigen::VectorXd::Constant(1, theta0);
    for (double r : {0.05, 0.2, 0.5}) {
        const double exact = normal_cdf((theta0 + r - 0.3) / 0.2) - normal_cdf((theta0 - r - 0.3) / 0.2);
        const BallMass b = posterior_ball_mass(post, t0, r, 20000, 5, Metric::L2);
        CHECK(std::abs(b.p - exact) < 3 * std::max(b.se, 1e-4));
    }
    CHECK(posterior_ball_mass(post, t0, 0.0, 100, 1, Metric::L2).p == 0.0);
    CHECK(posterior_ball_mass(post, t0, kInf, 100, 1, Metric::L2).p == 1.0);

    // Folded-normal quantile by bisection.
    auto mass = [&](double r) { return normal_cdf((theta0 + r - 0.3) / 0.2) - normal_cdf((theta0 - r - 0.3) / 0.2); };
    double lo = 0.0, hi = 5.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) < 0.95 ? lo : hi) = mid;
    }
    const double radius = contraction_radius(post, t0, 0.95, 20000, 6, Metric::L2);
    CHECK(radius == doctest::Approx(hi).epsilon(0.03));
}

TEST_CASE("ball mass is monotone in the radius under common draws") {
    TruthSpec truth;
    truth.dim = 32;
    const auto theta0 = generate_truth(truth);
    const Dataset data = simulate(ModelSpec{ModelKind::WhiteNoise, 32}, theta0, 3);
    const auto post = eb_posterior(data, gaussian(PriorFamily::ScaledGaussian, 1.0, 1.0, 32), 1.0);
    double prev = 0.0;
    for (double r = 0.05; r < 1.5; r += 0.05) {
        const double p = posterior_ball_mass(post, theta0, r, 2000, 17, Metric::L2).p;
        CHECK(p >= prev);
        prev = p;
    }
    CHECK(prev == 1.0);
}

TEST_CASE("contraction radius conventions") {
    std::vector<double> d;
    for (int i = 1; i <= 10; ++i) d.push_back(0.1 * i);
    CHECK(nearest_rank_quantile(d, 0.95) == doctest::Approx(1.0));
    const auto point = one_normal(0.5, 1e-300);
    CHECK(contraction_radius(point, Eigen::VectorXd::Constant(1, 0.5), 0.95, 50, 1, Metric::L2) < 1e-100);
    CHECK_THROWS_AS(contraction_radius(point, Eigen::VectorXd::Constant(1, 0.5), 1.0, 50, 1, Metric::L2), ParameterError);
}

TEST_CASE("contraction radius is insensitive to the level in exponent terms") {
    // The 0.8 and 0.95 radii of the same posterior track each other across n.
    TruthSpec truth;
    truth.beta = 1.0;
    std::vector<double> ratio;
    for (int n : {256, 1024, 4096}) {
        truth.dim = 2 * n;
        const auto theta0 = generate_truth(truth);
        const Dataset data = simulate(ModelSpec{ModelKind::WhiteNoise, n}, theta0, 5);
        const auto prior = gaussian(PriorFamily::RegularityGaussian, 1.0, 1.0, n);
        const auto post = eb_posterior(data, prior, mmle(marginal_curve(data, prior, default_grid(prior, data.model))));
        ratio.push_back(contraction_radius(post, theta0, 0.95, 400, 2, Metric::L2) /
                        contraction_radius(post, theta0, 0.8, 400, 2, Metric::L2));
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    CHECK(*hi / *lo < 1.15);
}

TEST_CASE("hierarchical weights") {
    const Hyperprior flat{Hyperprior::Kind::Uniform, 1.0, 1.0};
    const auto w = hb_weights(synthetic_curve({1.0, 2.0}, {0.0, 0.0}), flat);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-15));
    const auto peaked = hb_weights(synthetic_curve({1.0, 2.0}, {20.0, 0.0}), flat);
    CHECK(peaked[1] < 1e-8);
    CHECK(peaked.sum() == doctest::Approx(1.0).epsilon(1e-12));

    const Hyperprior expo;
    auto c = synthetic_curve({0.5, 1.0, 2.0, 3.5}, {-10.0, -9.0, -9.5, -12.0});
    const auto a = hb_weights(c, expo);
    c.logm.array() += 8.0;
    const auto b = hb_weights(c, expo);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(a.sum() - 1.0) < 1e-12);
    CHECK((a.array() >= 0.0).all());

    const auto widths = grid_cell_widths(c.grid);
    CHECK(widths[0] == doctest::Approx(0.25));
    CHECK(widths[1] == doctest::Approx(0.75));
    CHECK(widths[3] == doctest::Approx(0.75));
    CHECK(grid_cell_widths(HyperGrid{{2, 3, 5}, PriorFamily::Sieve}) == Eigen::Vector3d::Ones());

    CHECK_THROWS_AS(hb_weights(synthetic_curve({-1.0, 1.0}, {0.0, 0.0}), expo), ParameterError);
    CHECK_THROWS_AS(hb_weights(synthetic_curve({1.0, 2.0}, {-kInf, -kInf}), flat), NumericalError);
}

TEST_CASE("hierarchical posterior summaries") {
    const int n = 4096;
    TruthSpec truth;
    truth.dim = 2 * n;
    const auto theta0 = generate_truth(truth);
    const Dataset data = simulate(ModelSpec{ModelKind::WhiteNoise, n}, theta0, 21);
    const auto prior = gaussian(PriorFamily::RegularityGaussian, 1.0, 1.0, n);
    const HyperGrid grid = default_grid(prior, data.model);
    const MarginalCurve curve = marginal_curve(data, prior, grid);
    const HBPosterior hb = hb_posterior(data, prior, curve, Hyperprior{});
    CHECK(hb.components.size() == grid.size());
    CHECK(std::abs(hb.weights.sum() - 1.0) < 1e-12);

    const auto eb = eb_posterior(data, prior, mmle(curve));
    const double radius = contraction_radius(eb, theta0, 0.95, 500, 3, Metric::L2);
    CHECK(padded_distance(posterior_mean(hb), posterior_mean(eb)) < 0.1 * radius);

    SUBCASE("degenerate weights select one component") {
        HBPosterior one = hb;
        one.weights.setZero();
        one.weights[0] = 1.0;
        CHECK((posterior_mean(one) - posterior_mean(one.components[0])).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("log-linear MCMC posterior mean matches quadrature") {
    const int n = 40;
    CoefficientVector theta0(1);
    theta0 << 0.6;
    const Dataset data = simulate(ModelSpec{ModelKind::IIDDensity, n}, theta0, 2);
    const auto prior = gaussian(PriorFamily::ScaledGaussian, 1.0, 1.0, 1);
    MCMCOptions opt;
    opt.seed = 9;
    opt.quad_points = 513;
    const auto post = eb_posterior(data, prior, 1.0, opt);
    CHECK(post.kind == PosteriorKind::LogLinearMCMC);
    CHECK(!post.warning);
    CHECK(post.chain.cols() == opt.kept);

    const double S = loglinear_statistics(data.obs, 1)[0];
    auto lp = [&](double t) {
        CoefficientVector c(1);
        c << t;
        return S * t - n * loglinear_normalizer(c, 513) + oracle::log_normal(t, 0.0, 1.0);
    };
    double num = 0.0, den = 0.0;
    std::vector<double> x, w;
    oracle::gauss_legendre(400, x, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = -4.0 + 8.0 * x[i];
        const double f = std::exp(lp(t) - lp(0.6)) * w[i];
        num += t * f;
        den += f;
    }
    const double exact = num / den;

    // Batch-means standard error of the chain average.
    const int batches = 50;
    const int size = opt.kept / batches;
    std::vector<double> means(batches);
    for (int b = 0; b < batches; ++b) means[b] = post.chain.row(0).segment(b * size, size).mean();
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= batches;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    const double se = std::sqrt(var / (batches - 1) / batches);
    CHECK(std::abs(posterior_mean(post)[0] - exact) < 3 * se);
}

TEST_CASE("hellinger distances for histogram posteriors") {
    ModelSpec model{ModelKind::IIDDensity, 200};
    model.density_param = DensityParam::Histogram;
    const auto f0 = lipschitz_histogram_truth(64);
    const Dataset data = simulate(model, f0, 4);
    PriorSpec dir;
    dir.family = PriorFamily::DirichletHistogram;
    const auto post = eb_posterior(data, dir, 8.0);
    const auto d = posterior_distances(post, f0, 100, 5, Metric::Hellinger);
    for (double h : d) {
        CHECK(h >= 0.0);
        CHECK(h <= std::sqrt(2.0));
    }
    CHECK_THROWS_AS(DistanceToTruth(PosteriorKind::ConjugateGaussianSeq, f0, Metric::Hellinger), ParameterError);
}
