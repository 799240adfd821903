#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eblab/errors.hpp"
#include "eblab/lab.hpp"

using namespace eblab;

namespace {

ExperimentConfig small_sieve(std::vector<int> n_list, int replicates) {
    ExperimentConfig c;
    c.model.kind = ModelKind::WhiteNoise;
    c.prior.family = PriorFamily::Sieve;
    c.truth.kind = TruthKind::HyperRectBoundary;
    c.truth.beta = 1.0;
    c.truth.dim = 0;
    c.n_list = std::move(n_list);
    c.replicates = replicates;
    c.grid_values = {2, 3, 4, 6};
    c.posterior_draws = 200;
    c.base_seed = 42;
    return c;
}

std::string csv_of(const RecordTable& t) {
    std::ostringstream out;
    write_records(t, out);
    return out.str();
}

ExperimentRecord row(int n, double radius_eb, double radius_hb = kNaN, bool in = true) {
    ExperimentRecord r;
    r.n = n;
    r.radius_eb = radius_eb;
    r.radius_hb = radius_hb;
    r.in_lambda0 = in;
    return r;
}

std::filesystem::path temp_prefix(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "eblab_test_lab";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("run_experiment: single replicate row") {
    ExperimentConfig c = small_sieve({16}, 1);
    c.hyperprior = Hyperprior{Hyperprior::Kind::Poisson, 3.0, 1.0};
    const RecordTable t = run_experiment(c);
    REQUIRE(t.size() == 1);
    const ExperimentRecord& r = t[0];
    CHECK(r.n == 16);
    CHECK(r.replicate == 0);
    CHECK(r.seed == replicate_seed(42, 16, 0));
    CHECK(std::find(c.grid_values.begin(), c.grid_values.end(), r.lambda_hat) != c.grid_values.end());
    CHECK(std::isfinite(r.eps_lambda_hat));
    CHECK(std::isfinite(r.eps0));
    CHECK(r.radius_eb > 0.0);
    CHECK(r.radius_hb > 0.0);
    CHECK(r.loss_mean_eb >= 0.0);
    CHECK(r.wall_time == 0.0);
    CHECK(r.status == "ok");
}

TEST_CASE("run_experiment: byte-identical reruns") {
    const ExperimentConfig c = small_sieve({16, 32}, 3);
    CHECK(csv_of(run_experiment(c)) == csv_of(run_experiment(c)));
}

TEST_CASE("run_experiment: rows do not depend on the other entries of n_list") {
    const RecordTable both = run_experiment(small_sieve({16, 32}, 2));
    const RecordTable alone = run_experiment(small_sieve({32}, 2));
    RecordTable tail(both.begin() + 2, both.end());
    CHECK(csv_of(tail) == csv_of(alone));
}

TEST_CASE("run_experiment: the shared rate curve matches a direct computation") {
    const ExperimentConfig c = small_sieve({64}, 3);
    const RecordTable t = run_experiment(c);
    const RateCurve curve = rate_curve(experiment_prior(c, 64), experiment_grid(c, 64), experiment_truth(c, 64), 64,
                                       experiment_rate_options(c, 64));
    for (const auto& r : t) {
        CHECK(r.eps0 == curve.eps0);
        const auto it = std::find(c.grid_values.begin(), c.grid_values.end(), r.lambda_hat);
        const auto idx = static_cast<Eigen::Index>(it - c.grid_values.begin());
        CHECK(r.eps_lambda_hat == curve.eps[idx]);
        CHECK(r.in_lambda0 == curve.in_lambda0[static_cast<std::size_t>(idx)]);
    }
}

TEST_CASE("run_experiment: worker threads do not change the table") {
    ExperimentConfig c = small_sieve({16, 32}, 5);
    c.hyperprior = Hyperprior{};
    const std::string serial = csv_of(run_experiment(c));
    c.threads = 3;
    CHECK(csv_of(run_experiment(c)) == serial);
    c.threads = 0;
    CHECK(csv_of(run_experiment(c)) == serial);
}

TEST_CASE("run_experiment: invalid configurations raise") {
    ExperimentConfig bad = small_sieve({16}, 1);
    bad.level = 1.5;
    CHECK_THROWS_AS(run_experiment(bad), ParameterError);
    bad = small_sieve({16}, 1);
    bad.metric = Metric::Hellinger;
    CHECK_THROWS_AS(run_experiment(bad), ParameterError);
    bad = small_sieve({2}, 1);
    CHECK_THROWS_AS(run_experiment(bad), ParameterError);
}

TEST_CASE("fit_power_law") {
    std::vector<double> n{256, 512, 1024, 2048};
    std::vector<double> v;
    for (double x : n) v.push_back(3.0 * std::pow(x, -0.4));
    const RateFit f = fit_power_law(n, v);
    CHECK(f.slope == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(f.stderr_slope < 1e-12);
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
    const RateFit flat = fit_power_law(n, {2.0, 2.0, 2.0, 2.0});
    CHECK(flat.slope == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(fit_power_law(n, {1.0, 0.0, 1.0, 1.0}), NumericalError);
    CHECK_THROWS_AS(fit_power_law({1.0, 2.0}, {1.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(fit_power_law({4.0, 4.0, 4.0}, {1.0, 2.0, 3.0}), ParameterError);
}

TEST_CASE("fit_rate_exponent uses per-n medians") {
    RecordTable t;
    for (int n : {100, 1000, 10000}) {
        const double base = std::pow(n, -0.5);
        t.push_back(row(n, base));
        t.push_back(row(n, base));
        t.push_back(row(n, 50.0 * base));  // outlier that the median ignores
        t.push_back(row(n, kNaN));
    }
    CHECK(fit_rate_exponent(t, "radius_eb").slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK_THROWS_AS(record_column(t[0], "nope"), ParameterError);
}

TEST_CASE("mmle_localization_summary") {
    RecordTable all;
    for (int i = 0; i < 10; ++i) all.push_back(row(64, 1.0, kNaN, true));
    const auto s = mmle_localization_summary(all);
    REQUIRE(s.size() == 1);
    CHECK(s[0].fraction == 1.0);
    CHECK(s[0].ci_high == doctest::Approx(1.0));
    CHECK(s[0].ci_low < 1.0);
    RecordTable half;
    for (int i = 0; i < 20; ++i) half.push_back(row(64, 1.0, kNaN, i % 2 == 0));
    const auto h = mmle_localization_summary(half);
    CHECK(h[0].fraction == 0.5);
    CHECK(h[0].count == 20);
    // Wilson interval for 10 / 20.
    CHECK(h[0].ci_low == doctest::Approx(0.299298).epsilon(1e-5));
    CHECK(h[0].ci_high == doctest::Approx(0.700702).epsilon(1e-5));
    CHECK_THROWS_AS(mmle_localization_summary({}), ParameterError);
}

TEST_CASE("lower_bound_summary") {
    RecordTable t;
    for (int i = 0; i < 4; ++i) {
        ExperimentRecord r = row(64, i < 1 ? 0.01 : 0.5);
        r.eps0 = 0.2;
        t.push_back(r);
    }
    t.push_back(row(64, 0.01));  // no eps0: skipped
    const auto s = lower_bound_summary(t, 0.1);
    REQUIRE(s.size() == 1);
    CHECK(s[0].count == 4);
    CHECK(s[0].fraction == 0.25);
    CHECK(lower_bound_summary(t, 10.0)[0].fraction == 1.0);
    CHECK_THROWS_AS(lower_bound_summary(t, 0.0), ParameterError);
}

TEST_CASE("eb_hb_comparison") {
    RecordTable same;
    RecordTable twice;
    for (int i = 1; i <= 5; ++i) {
        same.push_back(row(128, 0.1 * i, 0.1 * i));
        twice.push_back(row(128, 0.1 * i, 0.2 * i));
    }
    CHECK(eb_hb_comparison(same)[0].median == doctest::Approx(1.0));
    const auto d = eb_hb_comparison(twice);
    CHECK(d[0].median == doctest::Approx(2.0));
    CHECK(d[0].q1 == doctest::Approx(2.0));
    CHECK(d[0].q3 == doctest::Approx(2.0));
    RecordTable eb_only{row(128, 0.3)};
    CHECK_THROWS_AS(eb_hb_comparison(eb_only), ParameterError);
}

TEST_CASE("records: CSV round trip") {
    RecordTable t;
    ExperimentRecord r = row(256, 0.123456789012345678, kNaN, true);
    r.replicate = 4;
    r.seed = 18446744073709551615ULL;
    r.lambda_hat = 1.0 / 3.0;
    r.eps_lambda_hat = kInf;
    r.eps0 = 1e-300;
    r.loss_mean_eb = 0.5;
    r.status = "error: something; marginal MC degenerate";
    t.push_back(r);
    t.push_back(row(512, 2.0, 1.0, false));
    std::istringstream in(csv_of(t));
    const RecordTable back = read_records(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].seed == r.seed);
    CHECK(back[0].radius_eb == r.radius_eb);
    CHECK(back[0].lambda_hat == r.lambda_hat);
    CHECK(std::isnan(back[0].radius_hb));
    CHECK(back[0].eps_lambda_hat == kInf);
    CHECK(back[0].eps0 == 1e-300);
    CHECK(back[0].status == r.status);
    CHECK(back[1].in_lambda0 == false);
    CHECK(csv_of(back) == csv_of(t));
    std::istringstream bad("n,seed\n1,2\n");
    CHECK_THROWS_AS(read_records(bad), ParameterError);
}

TEST_CASE("emit_outputs: files, manifest and plot") {
    const ExperimentConfig c = small_sieve({16, 32, 64}, 2);
    const RecordTable t = run_experiment(c);
    const OutputFiles f = emit_outputs(t, c, temp_prefix("run").string());
    std::ifstream csv(f.csv);
    CHECK(read_records(csv).size() == 6);

    std::ifstream mf(f.manifest);
    const nlohmann::json m = nlohmann::json::parse(mf);
    const RateFit fit = fit_rate_exponent(t, "radius_eb");
    CHECK(std::abs(m["summaries"]["fits"]["radius_eb"]["slope"].get<double>() - fit.slope) < 1e-12);
    CHECK(m["summaries"]["localization"].size() == 3);
    CHECK(m["summaries"]["lower_bound"]["delta"] == 0.1);
    CHECK(m["summaries"]["lower_bound"]["by_n"].size() == 3);
    CHECK_FALSE(m["summaries"].contains("hb_over_eb"));
    CHECK(m["version"]["library"] == library_version());
    CHECK(m["config"]["n_list"] == nlohmann::json({16, 32, 64}));
    CHECK(parse_config(m["config"].dump()).replicates == 2);

    std::ifstream plot(f.plot);
    std::string header;
    std::getline(plot, header);
    CHECK(header == "column,n,median,fitted");

    CHECK_THROWS_AS(emit_outputs(t, c, "/nonexistent_dir/x/run"), ParameterError);
}

TEST_CASE("emit_outputs: one-row table") {
    const ExperimentConfig c = small_sieve({16}, 1);
    const RecordTable t = run_experiment(c);
    const OutputFiles f = emit_outputs(t, c, temp_prefix("one").string());
    std::ifstream csv(f.csv);
    CHECK(read_records(csv).size() == 1);
    std::ifstream mf(f.manifest);
    const nlohmann::json m = nlohmann::json::parse(mf);
    CHECK(m["summaries"]["fits"]["radius_eb"].contains("error"));
}

TEST_CASE("config: parse and round trip") {
    const std::string text = R"({
        "model": {"kind": "density", "density_param": "histogram"},
        "prior": {"family": "dirichlet", "alpha": 1.0},
        "truth": {"kind": "lipschitz_histogram"},
        "n_list": [256, 512, 1024],
        "replicates": 5,
        "seed": 9,
        "metric": "hellinger",
        "hyperprior": {"kind": "poisson", "a": 8},
        "rates": {"K": 3, "method": "analytic", "Mn": 2.5, "mn": null},
        "lower_bound_delta": 0.25,
        "threads": 2
    })";
    const ExperimentConfig c = parse_config(text);
    CHECK(c.model.kind == ModelKind::IIDDensity);
    CHECK(c.prior.family == PriorFamily::DirichletHistogram);
    CHECK(c.truth_source == TruthSource::LipschitzHistogram);
    CHECK(c.metric == Metric::Hellinger);
    CHECK(c.hyperprior->kind == Hyperprior::Kind::Poisson);
    CHECK(c.hyperprior->a == 8.0);
    CHECK(c.rates.K == 3.0);
    CHECK(c.rates.Mn == 2.5);
    CHECK(std::isnan(c.rates.mn));
    CHECK(c.base_seed == 9);
    CHECK(c.lower_bound_delta == 0.25);
    CHECK(c.threads == 2);
    const std::string dumped = config_to_json(c);
    CHECK(config_to_json(parse_config(dumped)) == dumped);
}

TEST_CASE("config: errors") {
    CHECK_THROWS_AS(parse_config(R"({"replicate": 3})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"prior": {"family": "spline"}})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"replicates": "many"})"), ParameterError);
    CHECK_THROWS_AS(parse_config("{"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"n_list": [64, 32]})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"metric": "hellinger"})"), ParameterError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ParameterError);
}
