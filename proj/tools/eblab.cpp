#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "eblab/errors.hpp"
#include "eblab/lab.hpp"

namespace {

using namespace eblab;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> n;
    std::optional<int> threads;
};

ExperimentConfig load(const Common& c) {
    ExperimentConfig config = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
    if (c.config_path.empty()) config.prior.trunc = 20;
    if (c.seed) config.base_seed = *c.seed;
    if (c.threads) config.threads = *c.threads;
    if (c.n) {
        config.n_list = {*c.n};
        validate(config);
    }
    return config;
}

// Writes to --out when given, else stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_.open(path);
        if (!file_) throw ParameterError("cannot write " + path);
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Dataset simulate_for(const ExperimentConfig& config, int n) {
    ModelSpec model = config.model;
    model.n = n;
    return simulate(model, experiment_truth(config, n), replicate_seed(config.base_seed, n, 0));
}

MarginalOptions marginal_options(const ExperimentConfig& config, const Dataset& data) {
    MarginalOptions opt = config.marginal;
    opt.seed = derive_seed(data.seed, 1);
    return opt;
}

void cmd_simulate(const Common& c) {
    const ExperimentConfig config = load(c);
    const int n = config.n_list.front();
    const Dataset data = simulate_for(config, n);
    nlohmann::json out;
    out["n"] = n;
    out["seed"] = data.seed;
    out["truth"] = std::vector<double>(data.truth.data(), data.truth.data() + data.truth.size());
    out["obs"] = std::vector<double>(data.obs.data(), data.obs.data() + data.obs.size());
    Sink sink(c.out);
    sink.stream() << out.dump() << '\n';
}

void cmd_mmle(const Common& c) {
    const ExperimentConfig config = load(c);
    Sink sink(c.out);
    auto& out = sink.stream();
    out << "n,lambda,log_marginal,mc_se,flagged,is_mmle\n";
    for (int n : config.n_list) {
        const Dataset data = simulate_for(config, n);
        const HyperGrid grid = experiment_grid(config, n);
        const MarginalCurve curve = marginal_curve(data, experiment_prior(config, n), grid, marginal_options(config, data));
        const std::size_t best = mmle_index(curve);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double se = curve.mc_se.size() ? curve.mc_se[ii] : 0.0;
            const bool flagged = !curve.flagged.empty() && curve.flagged[i];
            out << n << ',' << num(grid.values[i]) << ',' << num(curve.logm[ii]) << ',' << num(se) << ','
                << flagged << ',' << (i == best) << '\n';
        }
    }
}

void cmd_rates(const Common& c) {
    const ExperimentConfig config = load(c);
    Sink sink(c.out);
    auto& out = sink.stream();
    out << "n,lambda,eps,eps0,in_lambda0\n";
    for (int n : config.n_list) {
        const RateCurve curve = rate_curve(experiment_prior(config, n), experiment_grid(config, n),
                                           experiment_truth(config, n), n, experiment_rate_options(config, n));
        for (std::size_t i = 0; i < curve.grid.size(); ++i)
            out << n << ',' << num(curve.grid.values[i]) << ',' << num(curve.eps[static_cast<Eigen::Index>(i)]) << ','
                << num(curve.eps0) << ',' << curve.in_lambda0[i] << '\n';
    }
}

void cmd_experiment(const Common& c) {
    const ExperimentConfig config = load(c);
    const RecordTable table = run_experiment(config);
    const std::string prefix = c.out.empty() ? config.output : c.out;
    const OutputFiles files = emit_outputs(table, config, prefix);
    std::cout << files.csv << '\n' << files.manifest << '\n' << files.plot << '\n';
}

void cmd_hb(const Common& c) {
    ExperimentConfig config = load(c);
    if (!config.hyperprior) config.hyperprior = Hyperprior{};
    Sink sink(c.out);
    auto& out = sink.stream();
    out << "n,lambda,log_marginal,hb_weight\n";
    for (int n : config.n_list) {
        const Dataset data = simulate_for(config, n);
        const PriorSpec prior = experiment_prior(config, n);
        const HyperGrid grid = experiment_grid(config, n);
        const MarginalCurve curve = marginal_curve(data, prior, grid, marginal_options(config, data));
        const Eigen::VectorXd w = hb_weights(curve, *config.hyperprior);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            out << n << ',' << num(grid.values[i]) << ',' << num(curve.logm[ii]) << ',' << num(w[ii]) << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Empirical and hierarchical Bayes rate laboratory"};
    app.set_version_flag("--version", eblab::library_version() + " (" + eblab::library_git_hash() + ")");
    app.require_subcommand(1);

    Common common;
    struct Command {
        const char* name;
        const char* help;
        void (*run)(const Common&);
    };
    const Command commands[] = {
        {"simulate", "Simulate one dataset (JSON with truth and observations)", cmd_simulate},
        {"mmle", "Marginal likelihood curve and MMLE per n (CSV)", cmd_mmle},
        {"rates", "Rate functional over the hyper-grid with the oracle set per n (CSV)", cmd_rates},
        {"experiment", "Monte Carlo experiment; writes <out>.csv, <out>_manifest.json, <out>_plot.csv", cmd_experiment},
        {"hb", "Hierarchical Bayes hyper-posterior weights per n (CSV)", cmd_hb},
    };
    void (*selected)(const Common&) = nullptr;
    for (const auto& cmd : commands) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", common.config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "Base seed (overrides the config)");
        sub->add_option("--out", common.out, "Output path (prefix for experiment)");
        sub->add_option("--n", common.n, "Single sample size (overrides n_list)");
        sub->add_option("--threads", common.threads, "Replicate workers (0 = all hardware threads)");
        auto run = cmd.run;
        sub->callback([&selected, run] { selected = run; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        selected(common);
    } catch (const eblab::ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
