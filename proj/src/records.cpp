#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "eblab/errors.hpp"
#include "eblab/lab.hpp"

#ifndef EBLAB_VERSION
#define EBLAB_VERSION "unknown"
#endif
#ifndef EBLAB_GIT_HASH
#define EBLAB_GIT_HASH "unknown"
#endif

namespace eblab {

namespace {

constexpr const char* kHeader =
    "n,replicate,seed,lambda_hat,eps_lambda_hat,eps0,in_lambda0,radius_eb,radius_hb,loss_mean_eb,wall_time,status";

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "nan") return kNaN;
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParameterError("read_records: bad number '" + s + "'");
    }
    require(pos == s.size(), "read_records: bad number '" + s + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

nlohmann::json fit_json(const RecordTable& table, const std::string& column) {
    try {
        const RateFit fit = fit_rate_exponent(table, column);
        return {{"slope", fit.slope}, {"stderr", fit.stderr_slope}, {"intercept", fit.intercept}};
    } catch (const std::exception& e) {
        return {{"error", e.what()}};
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParameterError("cannot write " + path);
    return out;
}

}  // namespace

void write_records(const RecordTable& table, std::ostream& out) {
    out << kHeader << '\n';
    for (const auto& r : table) {
        out << r.n << ',' << r.replicate << ',' << r.seed << ',' << format_double(r.lambda_hat) << ','
            << format_double(r.eps_lambda_hat) << ',' << format_double(r.eps0) << ',' << (r.in_lambda0 ? 1 : 0) << ','
            << format_double(r.radius_eb) << ',' << format_double(r.radius_hb) << ','
            << format_double(r.loss_mean_eb) << ',' << format_double(r.wall_time) << ',' << r.status << '\n';
    }
}

RecordTable read_records(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "read_records: empty input");
    require(line == kHeader, "read_records: unexpected header");
    RecordTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        require(f.size() == 12, "read_records: expected 12 fields");
        ExperimentRecord r;
        r.n = std::stoi(f[0]);
        r.replicate = std::stoi(f[1]);
        r.seed = std::stoull(f[2]);
        r.lambda_hat = parse_double(f[3]);
        r.eps_lambda_hat = parse_double(f[4]);
        r.eps0 = parse_double(f[5]);
        r.in_lambda0 = f[6] == "1";
        r.radius_eb = parse_double(f[7]);
        r.radius_hb = parse_double(f[8]);
        r.loss_mean_eb = parse_double(f[9]);
        r.wall_time = parse_double(f[10]);
        r.status = f[11];
        table.push_back(r);
    }
    return table;
}

OutputFiles emit_outputs(const RecordTable& table, const ExperimentConfig& config, const std::string& prefix) {
    OutputFiles files{prefix + ".csv", prefix + "_manifest.json", prefix + "_plot.csv"};

    {
        auto out = open_output(files.csv);
        write_records(table, out);
    }

    nlohmann::json summaries;
    const char* columns[] = {"radius_eb", "radius_hb", "loss_mean_eb", "eps_lambda_hat", "eps0"};
    for (const char* column : columns)
        if (!column_medians(table, column).empty()) summaries["fits"][column] = fit_json(table, column);
    if (config.compute_rates && !table.empty()) {
        nlohmann::json loc = nlohmann::json::array();
        for (const auto& s : mmle_localization_summary(table))
            loc.push_back({{"n", s.n}, {"count", s.count}, {"fraction", s.fraction}, {"ci_low", s.ci_low},
                           {"ci_high", s.ci_high}});
        summaries["localization"] = loc;
        nlohmann::json lower = nlohmann::json::array();
        for (const auto& s : lower_bound_summary(table, config.lower_bound_delta))
            lower.push_back({{"n", s.n}, {"count", s.count}, {"fraction", s.fraction}});
        summaries["lower_bound"] = {{"delta", config.lower_bound_delta}, {"by_n", lower}};
    }
    if (config.hyperprior && !column_medians(table, "radius_hb").empty()) {
        nlohmann::json cmp = nlohmann::json::array();
        for (const auto& s : eb_hb_comparison(table))
            cmp.push_back({{"n", s.n}, {"median", s.median}, {"q1", s.q1}, {"q3", s.q3}});
        summaries["hb_over_eb"] = cmp;
    }
    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(config_to_json(config));
    manifest["summaries"] = summaries;
    manifest["version"] = {{"library", library_version()}, {"git", library_git_hash()}};
    manifest["timestamp"] = utc_timestamp();
    {
        auto out = open_output(files.manifest);
        out << manifest.dump(2) << '\n';
    }

    {
        auto out = open_output(files.plot);
        out << "column,n,median,fitted\n";
        for (const char* column : columns) {
            const auto medians = column_medians(table, column);
            if (medians.empty()) continue;
            std::optional<RateFit> fit;
            try {
                fit = fit_rate_exponent(table, column);
            } catch (const std::exception&) {
            }
            for (const auto& [n, med] : medians) {
                const double fitted = fit ? std::exp(fit->intercept + fit->slope * std::log(n)) : kNaN;
                out << column << ',' << n << ',' << format_double(med) << ',' << format_double(fitted) << '\n';
            }
        }
    }
    return files;
}

std::string library_version() { return EBLAB_VERSION; }
std::string library_git_hash() { return EBLAB_GIT_HASH; }

}  // namespace eblab
