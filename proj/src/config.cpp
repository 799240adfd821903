#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eblab/errors.hpp"
#include "eblab/lab.hpp"

namespace eblab {

namespace {

using nlohmann::json;

template <typename Enum>
struct Names {
    std::vector<std::pair<Enum, const char*>> items;

    Enum parse(const json& j, const char* what) const {
        require(j.is_string(), std::string("config: ") + what + " must be a string");
        const std::string s = j.get<std::string>();
        for (const auto& [value, name] : items)
            if (s == name) return value;
        throw ParameterError(std::string("config: unknown ") + what + " '" + s + "'");
    }

    const char* name(Enum value) const {
        for (const auto& [v, n] : items)
            if (v == value) return n;
        return "?";
    }
};

const Names<ModelKind> kModelKinds{{{ModelKind::WhiteNoise, "white_noise"},
                                    {ModelKind::FixedDesignRegression, "regression"},
                                    {ModelKind::IIDDensity, "density"}}};
const Names<DensityParam> kDensityParams{{{DensityParam::LogLinear, "loglinear"}, {DensityParam::Histogram, "histogram"}}};
const Names<PriorFamily> kFamilies{{{PriorFamily::Sieve, "sieve"},
                                    {PriorFamily::ScaledGaussian, "scaled_gaussian"},
                                    {PriorFamily::RegularityGaussian, "regularity_gaussian"},
                                    {PriorFamily::DirichletHistogram, "dirichlet"}}};
const Names<SieveDensity> kSieveDensities{{{SieveDensity::StdGaussian, "gaussian"}, {SieveDensity::Laplace, "laplace"}}};
const Names<TruthKind> kTruthKinds{{{TruthKind::HyperRectBoundary, "hyperrect"},
                                    {TruthKind::SobolevRandom, "sobolev"},
                                    {TruthKind::Custom, "custom"}}};
const Names<Metric> kMetrics{{{Metric::L2, "l2"}, {Metric::Hellinger, "hellinger"}}};
const Names<Hyperprior::Kind> kHyperpriors{{{Hyperprior::Kind::Poisson, "poisson"},
                                            {Hyperprior::Kind::InverseGamma, "inverse_gamma"},
                                            {Hyperprior::Kind::Exponential, "exponential"},
                                            {Hyperprior::Kind::Uniform, "uniform"}}};
const Names<SmallBallMethod> kMethods{{{SmallBallMethod::Auto, "auto"},
                                       {SmallBallMethod::MC, "mc"},
                                       {SmallBallMethod::Importance, "importance"},
                                       {SmallBallMethod::GaussianAnalytic, "gaussian_analytic"},
                                       {SmallBallMethod::Exact, "exact"},
                                       {SmallBallMethod::Analytic, "analytic"}}};

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
    require(j.is_object(), std::string("config: ") + section + " must be an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : j.items())
        require(keys.count(item.key()) == 1, std::string("config: unknown key '") + item.key() + "' in " + section);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParameterError(std::string("config: key '") + key + "' has the wrong type");
    }
}

double optional_number(const json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    require(j.at(key).is_number(), std::string("config: key '") + key + "' must be a number");
    return j.at(key).get<double>();
}

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParameterError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(root, "config", {"model", "prior", "truth", "n_list", "replicates", "seed", "grid", "metric", "level",
                                "posterior_draws", "hyperprior", "rates", "marginal", "mcmc", "lower_bound_delta",
                                "threads", "timing", "output"});
    ExperimentConfig c;
    c.prior.trunc = 20;
    if (root.contains("model")) {
        const json& m = root["model"];
        check_keys(m, "model", {"kind", "sigma", "density_param"});
        if (m.contains("kind")) c.model.kind = kModelKinds.parse(m["kind"], "model kind");
        read(m, "sigma", c.model.sigma);
        if (m.contains("density_param")) c.model.density_param = kDensityParams.parse(m["density_param"], "density_param");
    }
    if (root.contains("prior")) {
        const json& p = root["prior"];
        check_keys(p, "prior", {"family", "k", "g", "alpha", "tau", "trunc", "alpha_cap"});
        if (p.contains("family")) c.prior.family = kFamilies.parse(p["family"], "prior family");
        if (p.contains("g")) c.prior.g = kSieveDensities.parse(p["g"], "sieve density");
        read(p, "k", c.prior.k);
        read(p, "alpha", c.prior.alpha);
        read(p, "tau", c.prior.tau);
        read(p, "trunc", c.prior.trunc);
        read(p, "alpha_cap", c.prior.alpha_cap);
    }
    if (root.contains("truth")) {
        const json& t = root["truth"];
        check_keys(t, "truth", {"kind", "beta", "L", "dim", "seed", "coefficients"});
        if (t.contains("kind") && t["kind"] == "lipschitz_histogram") {
            c.truth_source = TruthSource::LipschitzHistogram;
        } else if (t.contains("kind")) {
            c.truth.kind = kTruthKinds.parse(t["kind"], "truth kind");
        }
        read(t, "beta", c.truth.beta);
        read(t, "L", c.truth.L);
        read(t, "dim", c.truth.dim);
        read(t, "seed", c.truth.seed);
        if (t.contains("coefficients")) {
            std::vector<double> coef;
            read(t, "coefficients", coef);
            c.truth.custom = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
        }
    }
    if (!root.contains("truth") || !root["truth"].contains("dim")) c.truth.dim = 0;
    read(root, "n_list", c.n_list);
    read(root, "replicates", c.replicates);
    read(root, "seed", c.base_seed);
    if (root.contains("grid")) {
        const json& g = root["grid"];
        check_keys(g, "grid", {"points", "values"});
        read(g, "points", c.grid_points);
        read(g, "values", c.grid_values);
    }
    if (root.contains("metric")) c.metric = kMetrics.parse(root["metric"], "metric");
    read(root, "level", c.level);
    read(root, "posterior_draws", c.posterior_draws);
    if (root.contains("hyperprior") && !root["hyperprior"].is_null()) {
        const json& h = root["hyperprior"];
        check_keys(h, "hyperprior", {"kind", "a", "b"});
        Hyperprior hp;
        if (h.contains("kind")) hp.kind = kHyperpriors.parse(h["kind"], "hyperprior kind");
        read(h, "a", hp.a);
        read(h, "b", hp.b);
        c.hyperprior = hp;
    }
    if (root.contains("rates")) {
        const json& r = root["rates"];
        check_keys(r, "rates", {"enabled", "K", "method", "draws", "centered_draws", "centered_head", "rtol", "Mn", "mn"});
        read(r, "enabled", c.compute_rates);
        read(r, "K", c.rates.K);
        if (r.contains("method")) c.rates.small_ball.method = kMethods.parse(r["method"], "small-ball method");
        read(r, "draws", c.rates.small_ball.draws);
        read(r, "centered_draws", c.rates.small_ball.centered_draws);
        read(r, "centered_head", c.rates.small_ball.centered_head);
        read(r, "rtol", c.rates.solver.rtol);
        c.rates.Mn = optional_number(r, "Mn", kNaN);
        c.rates.mn = optional_number(r, "mn", kNaN);
    }
    if (root.contains("marginal")) {
        const json& m = root["marginal"];
        check_keys(m, "marginal", {"mc_draws", "quad_points"});
        read(m, "mc_draws", c.marginal.mc_draws);
        read(m, "quad_points", c.marginal.quad_points);
    }
    if (root.contains("mcmc")) {
        const json& m = root["mcmc"];
        check_keys(m, "mcmc", {"step", "burn_in", "kept", "thin", "quad_points"});
        read(m, "step", c.mcmc.step);
        read(m, "burn_in", c.mcmc.burn_in);
        read(m, "kept", c.mcmc.kept);
        read(m, "thin", c.mcmc.thin);
        read(m, "quad_points", c.mcmc.quad_points);
    }
    read(root, "lower_bound_delta", c.lower_bound_delta);
    read(root, "threads", c.threads);
    read(root, "timing", c.timing);
    read(root, "output", c.output);
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("config: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json root;
    root["model"] = {{"kind", kModelKinds.name(c.model.kind)},
                     {"sigma", c.model.sigma},
                     {"density_param", kDensityParams.name(c.model.density_param)}};
    root["prior"] = {{"family", kFamilies.name(c.prior.family)}, {"k", c.prior.k},
                     {"g", kSieveDensities.name(c.prior.g)},      {"alpha", c.prior.alpha},
                     {"tau", c.prior.tau},                         {"trunc", c.prior.trunc},
                     {"alpha_cap", c.prior.alpha_cap}};
    json truth = {{"beta", c.truth.beta}, {"L", c.truth.L}, {"dim", c.truth.dim}, {"seed", c.truth.seed}};
    if (c.truth_source == TruthSource::LipschitzHistogram) {
        truth["kind"] = "lipschitz_histogram";
    } else {
        truth["kind"] = kTruthKinds.name(c.truth.kind);
        if (c.truth.kind == TruthKind::Custom)
            truth["coefficients"] = std::vector<double>(c.truth.custom.data(), c.truth.custom.data() + c.truth.custom.size());
    }
    root["truth"] = truth;
    root["n_list"] = c.n_list;
    root["replicates"] = c.replicates;
    root["seed"] = c.base_seed;
    root["grid"] = {{"points", c.grid_points}, {"values", c.grid_values}};
    root["metric"] = kMetrics.name(c.metric);
    root["level"] = c.level;
    root["posterior_draws"] = c.posterior_draws;
    if (c.hyperprior)
        root["hyperprior"] = {{"kind", kHyperpriors.name(c.hyperprior->kind)}, {"a", c.hyperprior->a}, {"b", c.hyperprior->b}};
    else
        root["hyperprior"] = nullptr;
    root["rates"] = {{"enabled", c.compute_rates},
                     {"K", c.rates.K},
                     {"method", kMethods.name(c.rates.small_ball.method)},
                     {"draws", c.rates.small_ball.draws},
                     {"centered_draws", c.rates.small_ball.centered_draws},
                     {"centered_head", c.rates.small_ball.centered_head},
                     {"rtol", c.rates.solver.rtol},
                     {"Mn", number_or_null(c.rates.Mn)},
                     {"mn", number_or_null(c.rates.mn)}};
    root["marginal"] = {{"mc_draws", c.marginal.mc_draws}, {"quad_points", c.marginal.quad_points}};
    root["mcmc"] = {{"step", c.mcmc.step},
                    {"burn_in", c.mcmc.burn_in},
                    {"kept", c.mcmc.kept},
                    {"thin", c.mcmc.thin},
                    {"quad_points", c.mcmc.quad_points}};
    root["lower_bound_delta"] = c.lower_bound_delta;
    root["threads"] = c.threads;
    root["timing"] = c.timing;
    root["output"] = c.output;
    return root.dump(2);
}

}  // namespace eblab
