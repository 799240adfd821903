#pragma once

// Monte Carlo experiment harness: contraction experiments, MMLE localization,
// EB versus HB comparisons, rate-exponent fits and result files.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eblab/inference.hpp"
#include "eblab/marginal.hpp"
#include "eblab/models.hpp"
#include "eblab/priors.hpp"
#include "eblab/rates.hpp"

namespace eblab {

enum class TruthSource { Coefficients, LipschitzHistogram };

struct ExperimentConfig {
    ModelSpec model;  // n is taken from n_list
    PriorSpec prior;  // sequence models override trunc with n
    TruthSpec truth;  // dim 0 means 2n for sequence models
    TruthSource truth_source = TruthSource::Coefficients;
    std::vector<int> n_list{256, 512, 1024, 2048, 4096, 8192};
    int replicates = 50;
    std::uint64_t base_seed = 1;
    int grid_points = 60;
    std::vector<double> grid_values;  // overrides the default grid when nonempty
    Metric metric = Metric::L2;
    double level = 0.95;
    int posterior_draws = 500;
    std::optional<Hyperprior> hyperprior;
    bool compute_rates = true;
    double lower_bound_delta = 0.1;  // threshold factor for lower_bound_summary
    RateOptions rates;
    MarginalOptions marginal;
    MCMCOptions mcmc;
    int threads = 1;      // replicate workers per n; 0 uses every hardware thread
    bool timing = false;  // wall_time stays 0 unless enabled, keeping output deterministic
    std::string output = "experiment";
};

void validate(const ExperimentConfig& config);

struct ExperimentRecord {
    int n = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    double lambda_hat = kNaN;
    double eps_lambda_hat = kNaN;
    double eps0 = kNaN;
    bool in_lambda0 = false;
    double radius_eb = kNaN;
    double radius_hb = kNaN;
    double loss_mean_eb = kNaN;
    double wall_time = 0.0;
    std::string status = "ok";
};

using RecordTable = std::vector<ExperimentRecord>;

// Per-n inputs shared by all replicates.
CoefficientVector experiment_truth(const ExperimentConfig& config, int n);
PriorSpec experiment_prior(const ExperimentConfig& config, int n);
HyperGrid experiment_grid(const ExperimentConfig& config, int n);
RateOptions experiment_rate_options(const ExperimentConfig& config, int n);
std::uint64_t replicate_seed(std::uint64_t base, int n, int replicate);

RecordTable run_experiment(const ExperimentConfig& config);

struct RateFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double intercept = 0.0;
};

// OLS of log(value) on log(n).
RateFit fit_power_law(const std::vector<double>& n, const std::vector<double>& value);

double record_column(const ExperimentRecord& record, const std::string& column);

// Per-n medians of a column over rows with a finite value.
std::vector<std::pair<int, double>> column_medians(const RecordTable& table, const std::string& column);

RateFit fit_rate_exponent(const RecordTable& table, const std::string& column);

struct LocalizationSummary {
    int n = 0;
    int count = 0;
    double fraction = 0.0;
    double ci_low = 0.0;   // 95% Wilson interval
    double ci_high = 0.0;
};

std::vector<LocalizationSummary> mmle_localization_summary(const RecordTable& table);

struct LowerBoundSummary {
    int n = 0;
    int count = 0;
    double fraction = 0.0;
};

// Per n, the share of rows whose radius_eb lies below delta * eps0, that is whose
// posterior puts at least the radius level of its mass within delta times the oracle
// rate. Should vanish with n for fixed delta < 1. Rows without a finite eps0 are skipped.
std::vector<LowerBoundSummary> lower_bound_summary(const RecordTable& table, double delta);

struct RatioSummary {
    int n = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

std::vector<RatioSummary> eb_hb_comparison(const RecordTable& table);

// CSV with the record fields as columns, 17 significant digits.
void write_records(const RecordTable& table, std::ostream& out);
RecordTable read_records(std::istream& in);

struct OutputFiles {
    std::string csv;
    std::string manifest;
    std::string plot;
};

// Writes <prefix>.csv, <prefix>_manifest.json and <prefix>_plot.csv.
OutputFiles emit_outputs(const RecordTable& table, const ExperimentConfig& config, const std::string& prefix);

std::string library_version();
std::string library_git_hash();

// JSON configuration (schema in README.md).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

}  // namespace eblab
