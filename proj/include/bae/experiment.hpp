#pragma once

// Experiment runner behind the `bae` command line tool: multi-run BAE with
// depth selection, the single-autoencoder baseline, synthetic data emission
// and report aggregation. Reports are JSON (schema_version 1); scores are CSV.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bae/autoencoder.hpp"
#include "bae/data.hpp"
#include "bae/ensemble.hpp"
#include "bae/errors.hpp"
#include "bae/metrics.hpp"
#include "bae/parallel.hpp"
#include "bae/random.hpp"
#include "bae/text.hpp"

namespace bae {

using json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

struct RunConfig {
    std::string data_path;
    std::string dataset_name;  // defaults to the data file stem
    std::optional<std::string> label_column;
    std::optional<std::string> outlier_label;
    bool has_header = true;
    char delimiter = ',';

    std::size_t ensemble_size = 20;
    std::vector<int> depths{3, 5, 7, 9};
    int baseline_depth = 9;
    double alpha = 0.5;
    int epochs = 50;
    double convergence_tol = 1e-4;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    std::size_t batch_size = 32;
    std::size_t runs = 1;
    std::uint64_t seed = 0;
    std::string out_dir = "bae_out";

    void validate() const {
        if (ensemble_size < 2) {
            throw ConfigError("--ensemble-size must be >= 2 (the consensus excludes the first component)");
        }
        if (depths.empty()) throw ConfigError("--depths must name at least one depth");
        for (int d : depths) {
            if (d < 3 || d % 2 == 0) throw ConfigError("--depths: " + std::to_string(d) + " is not an odd integer >= 3");
        }
        if (baseline_depth < 3 || baseline_depth % 2 == 0) throw ConfigError("--depth must be an odd integer >= 3");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
        if (epochs < 1) throw ConfigError("--epochs must be >= 1");
        if (!(convergence_tol > 0.0)) throw ConfigError("--tol must be > 0");
        if (!(learning_rate > 0.0)) throw ConfigError("--lr must be > 0");
        if (weight_decay < 0.0) throw ConfigError("--weight-decay must be >= 0");
        if (batch_size < 1) throw ConfigError("--batch-size must be >= 1");
        if (runs < 1) throw ConfigError("--runs must be >= 1");
    }

    BaeConfig bae_config(std::uint64_t run_seed) const {
        BaeConfig c;
        c.ensemble_size = ensemble_size;
        c.alpha = alpha;
        c.depth = depths.front();
        c.train.max_epochs = epochs;
        c.train.convergence_tol = convergence_tol;
        c.train.batch_size = batch_size;
        c.train.adam.learning_rate = learning_rate;
        c.train.adam.weight_decay = weight_decay;
        c.seed = run_seed;
        return c;
    }

    /// Seed of run k; adding runs never changes earlier ones.
    std::uint64_t run_seed(std::size_t k) const { return derive_seed(seed, k); }

    json to_json() const {
        json j;
        j["data_path"] = data_path;
        j["dataset_name"] = dataset_name;
        j["label_column"] = label_column ? json(*label_column) : json(nullptr);
        j["outlier_label"] = outlier_label ? json(*outlier_label) : json(nullptr);
        j["has_header"] = has_header;
        j["delimiter"] = std::string(1, delimiter);
        j["ensemble_size"] = ensemble_size;
        j["depths"] = depths;
        j["baseline_depth"] = baseline_depth;
        j["alpha"] = alpha;
        j["epochs"] = epochs;
        j["convergence_tol"] = convergence_tol;
        j["learning_rate"] = learning_rate;
        j["weight_decay"] = weight_decay;
        j["batch_size"] = batch_size;
        j["runs"] = runs;
        j["seed"] = seed;
        j["out_dir"] = out_dir;
        return j;
    }

    static RunConfig from_json(const json& j) {
        RunConfig c;
        try {
            c.data_path = j.at("data_path").get<std::string>();
            c.dataset_name = j.value("dataset_name", std::string{});
            if (!j.at("label_column").is_null()) c.label_column = j.at("label_column").get<std::string>();
            if (!j.at("outlier_label").is_null()) c.outlier_label = j.at("outlier_label").get<std::string>();
            c.has_header = j.at("has_header").get<bool>();
            const auto delim = j.at("delimiter").get<std::string>();
            if (delim.size() != 1) throw ConfigError("config: delimiter must be one character");
            c.delimiter = delim.front();
            c.ensemble_size = j.at("ensemble_size").get<std::size_t>();
            c.depths = j.at("depths").get<std::vector<int>>();
            c.baseline_depth = j.at("baseline_depth").get<int>();
            c.alpha = j.at("alpha").get<double>();
            c.epochs = j.at("epochs").get<int>();
            c.convergence_tol = j.at("convergence_tol").get<double>();
            c.learning_rate = j.at("learning_rate").get<double>();
            c.weight_decay = j.at("weight_decay").get<double>();
            c.batch_size = j.at("batch_size").get<std::size_t>();
            c.runs = j.at("runs").get<std::size_t>();
            c.seed = j.at("seed").get<std::uint64_t>();
            c.out_dir = j.at("out_dir").get<std::string>();
        } catch (const json::exception& e) {
            throw SchemaError(std::string("config block: ") + e.what());
        }
        return c;
    }
};

/// Per-instance scores of one or more runs, in X0 row order.
struct ScoreTable {
    std::vector<std::vector<double>> runs;
    std::optional<Labels> labels;
};

struct ExperimentResult {
    json report;
    ScoreTable scores;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

inline double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline json summary_json(const FiveNumberSummary& s) {
    return {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

inline json report_header(const std::string& method, const Dataset& ds, const RunConfig& cfg) {
    json r;
    r["schema_version"] = kReportSchemaVersion;
    r["tool"] = "bae";
    r["tool_version"] = kToolVersion;
    r["method"] = method;
    std::string name = cfg.dataset_name;
    if (name.empty()) {
        name = cfg.data_path.empty() ? "dataset" : std::filesystem::path(cfg.data_path).stem().string();
    }
    json dsj;
    dsj["name"] = name;
    dsj["source"] = ds.provenance.source;
    dsj["rows"] = ds.rows();
    dsj["cols"] = ds.cols();
    dsj["outliers"] = ds.labelled() ? json(ds.outlier_count()) : json(nullptr);
    dsj["normalization"] = "min-max";
    r["dataset"] = dsj;
    r["config"] = cfg.to_json();
    const AdamConfig adam;
    r["metadata"] = {{"weight_decay_form", "coupled_l2"},
                     {"adam", {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"epsilon", adam.epsilon}}},
                     {"weight_init", "glorot_uniform"},
                     {"batch_size_rule", "min(batch_size, sample rows)"},
                     {"sample_size", "n draws with replacement"},
                     {"error_floor", kErrorFloor},
                     {"depth_tie_break", "smallest"},
                     {"ap_convention", "uninterpolated, ties by ascending index"},
                     {"run_seed", "derive_seed(seed, run) via splitmix64"}};
    return r;
}

inline Dataset prepare_dataset(const Dataset& raw) {
    if (raw.rows() == 0) throw InputError("dataset is empty");
    return normalize_min_max(raw);
}

}  // namespace detail

/// Runs BAE (depth selection + consensus) `cfg.runs` times on `data`.
inline ExperimentResult run_experiment(const Dataset& data, const RunConfig& cfg) {
    cfg.validate();
    const Dataset ds = detail::prepare_dataset(data);
    ExperimentResult result;
    const bool with_metrics = ds.labelled() && ds.outlier_count() > 0 && ds.outlier_count() < ds.rows();
    if (!with_metrics) {
        result.warnings.push_back(ds.labelled() ? "labels contain a single class; label metrics omitted"
                                                : "dataset has no labels; label metrics omitted");
    }

    std::vector<DepthSelection> selections(cfg.runs);
    parallel_for(cfg.runs, workers_from_env(), [&](std::size_t k) {
        selections[k] = select_depth(ds.matrix, cfg.bae_config(cfg.run_seed(k)), cfg.depths);
    });

    json report = detail::report_header("BAE", ds, cfg);
    json runs = json::array();
    std::vector<double> aps, diversities;
    std::vector<std::vector<double>> ratios;
    std::vector<int> chosen;
    for (std::size_t k = 0; k < cfg.runs; ++k) {
        const auto& sel = selections[k];
        const BaeResult& bae = sel.chosen();
        json rj;
        rj["run"] = k;
        rj["seed"] = cfg.run_seed(k);
        rj["chosen_depth"] = sel.chosen_depth;
        json de = json::object();
        for (const auto& [d, e] : sel.depth_errors) de[std::to_string(d)] = e;
        rj["depth_errors"] = de;
        rj["layer_sizes"] = bae.state.components.front().model.sizes();
        rj["average_sample_error"] = bae.average_sample_error;
        rj["weights"] = bae.state.weights;
        std::vector<std::size_t> epochs;
        std::vector<double> sums;
        for (const auto& c : bae.state.components) {
            epochs.push_back(c.training.epochs());
            sums.push_back(c.sample_error_sum);
        }
        rj["component_epochs"] = epochs;
        rj["sample_error_sums"] = sums;
        const double diversity = ensemble_diversity(bae.state);
        rj["diversity"] = diversity;
        diversities.push_back(diversity);
        if (with_metrics) {
            const double ap = average_precision(bae.scores, *ds.labels);
            const auto comp = per_component_ap(bae.state, *ds.labels);
            const auto ratio = outlier_ratios(bae.state, *ds.labels);
            rj["aucpr"] = ap;
            rj["component_aucpr"] = comp;
            rj["component_aucpr_summary"] = detail::summary_json(five_number_summary(comp));
            rj["outlier_ratios"] = ratio;
            aps.push_back(ap);
            ratios.push_back(ratio);
        }
        chosen.push_back(sel.chosen_depth);
        runs.push_back(rj);
        result.scores.runs.push_back(bae.scores);
    }
    report["runs"] = runs;

    json agg;
    agg["chosen_depths"] = chosen;
    agg["diversity_mean"] = mean(diversities);
    if (with_metrics) {
        agg["aucpr_mean"] = mean(aps);
        agg["aucpr_std"] = detail::stddev(aps);
        std::vector<double> ratio_mean(cfg.ensemble_size, 0.0);
        for (const auto& r : ratios) {
            for (std::size_t i = 0; i < r.size(); ++i) ratio_mean[i] += r[i] / static_cast<double>(ratios.size());
        }
        agg["outlier_ratio_mean"] = ratio_mean;
    }
    report["aggregate"] = agg;
    report["warnings"] = result.warnings;
    report["generated_at"] = detail::utc_timestamp();
    if (with_metrics) result.scores.labels = ds.labels;
    result.report = std::move(report);
    return result;
}

/// Single autoencoder of depth cfg.baseline_depth trained on all of X0, per run.
/// Run k uses the same initialization and shuffle streams as component 0 of
/// the BAE run with the same seed.
inline ExperimentResult run_baseline_sae(const Dataset& data, const RunConfig& cfg) {
    cfg.validate();
    const Dataset ds = detail::prepare_dataset(data);
    require_normalized(ds.matrix);
    ExperimentResult result;
    const bool with_metrics = ds.labelled() && ds.outlier_count() > 0 && ds.outlier_count() < ds.rows();
    if (!with_metrics) {
        result.warnings.push_back(ds.labelled() ? "labels contain a single class; label metrics omitted"
                                                : "dataset has no labels; label metrics omitted");
    }

    std::vector<Component> models(cfg.runs);
    parallel_for(cfg.runs, workers_from_env(), [&](std::size_t k) {
        BaeConfig bc = cfg.bae_config(cfg.run_seed(k));
        bc.depth = cfg.baseline_depth;
        std::vector<std::size_t> rows(ds.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        models[k] = train_component(ds.matrix, std::move(rows), bc, 0);
    });

    json report = detail::report_header("SAE" + std::to_string(cfg.baseline_depth), ds, cfg);
    json runs = json::array();
    std::vector<double> aps;
    for (std::size_t k = 0; k < cfg.runs; ++k) {
        const auto& c = models[k];
        json rj;
        rj["run"] = k;
        rj["seed"] = cfg.run_seed(k);
        rj["depth"] = cfg.baseline_depth;
        rj["layer_sizes"] = c.model.sizes();
        rj["epochs"] = c.training.epochs();
        rj["average_error"] = mean(c.errors);
        if (with_metrics) {
            const double ap = average_precision(c.errors, *ds.labels);
            rj["aucpr"] = ap;
            aps.push_back(ap);
        }
        runs.push_back(rj);
        result.scores.runs.push_back(c.errors);
    }
    report["runs"] = runs;
    json agg = json::object();
    if (with_metrics) {
        agg["aucpr_mean"] = mean(aps);
        agg["aucpr_std"] = detail::stddev(aps);
    }
    report["aggregate"] = agg;
    report["warnings"] = result.warnings;
    report["generated_at"] = detail::utc_timestamp();
    if (with_metrics) result.scores.labels = ds.labels;
    result.report = std::move(report);
    return result;
}

/// Long-format scores CSV: id,run,score[,label].
inline void write_scores_csv(const ScoreTable& scores, std::ostream& out) {
    out << "id,run,score" << (scores.labels ? ",label" : "") << '\n';
    for (std::size_t r = 0; r < scores.runs.size(); ++r) {
        for (std::size_t i = 0; i < scores.runs[r].size(); ++i) {
            out << i << ',' << r << ',' << to_text(scores.runs[r][i]);
            if (scores.labels) out << ',' << (*scores.labels)[i];
            out << '\n';
        }
    }
}

struct WrittenFiles {
    std::filesystem::path scores;
    std::filesystem::path report;
};

inline WrittenFiles write_outputs(const ExperimentResult& result, const std::string& out_dir,
                                  const std::string& prefix = "") {
    std::filesystem::create_directories(out_dir);
    WrittenFiles files{std::filesystem::path(out_dir) / (prefix + "scores.csv"),
                       std::filesystem::path(out_dir) / (prefix + "metrics.json")};
    {
        std::ofstream out(files.scores, std::ios::binary);
        if (!out) throw IngestError("cannot write '" + files.scores.string() + "'");
        write_scores_csv(result.scores, out);
    }
    {
        std::ofstream out(files.report, std::ios::binary);
        if (!out) throw IngestError("cannot write '" + files.report.string() + "'");
        out << result.report.dump(2) << '\n';
    }
    return files;
}

inline Dataset load_run_dataset(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw ConfigError("--data is required");
    CsvOptions opts;
    opts.has_header = cfg.has_header;
    opts.delimiter = cfg.delimiter;
    opts.label_column = cfg.label_column;
    opts.outlier_label = cfg.outlier_label;
    return load_csv(cfg.data_path, opts);
}

inline ExperimentResult cmd_run(const RunConfig& cfg) {
    cfg.validate();
    auto result = run_experiment(load_run_dataset(cfg), cfg);
    write_outputs(result, cfg.out_dir);
    return result;
}

inline ExperimentResult cmd_baseline_sae(const RunConfig& cfg) {
    cfg.validate();
    auto result = run_baseline_sae(load_run_dataset(cfg), cfg);
    write_outputs(result, cfg.out_dir, "sae_");
    return result;
}

struct SynthParams {
    std::size_t inliers = 1000;
    std::size_t outliers = 20;
    std::size_t dim = 2;
    std::uint64_t seed = 0;
    std::string out_path = "synthetic.csv";
};

inline Dataset cmd_synth(const SynthParams& p) {
    if (p.inliers < 1) throw ConfigError("--inliers must be >= 1");
    if (p.outliers < 1) throw ConfigError("--outliers must be >= 1 (label metrics need at least one outlier)");
    if (p.dim < 1) throw ConfigError("--dim must be >= 1");
    Dataset ds = make_synthetic(p.inliers, p.outliers, p.dim, p.seed);
    const auto parent = std::filesystem::path(p.out_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_csv(ds, p.out_path);
    return ds;
}

/// Percentage with one decimal, e.g. 0.9671 -> "96.7".
inline std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
    return buf;
}

/// Dataset-by-method table of pre-rendered cells.
struct Table {
    std::string corner;
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::map<std::pair<std::string, std::string>, std::string> cells;

    void set(const std::string& row, const std::string& col, std::string value) {
        if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
        if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
        cells[{row, col}] = std::move(value);
    }

    std::string cell(const std::string& row, const std::string& col) const {
        const auto it = cells.find({row, col});
        return it == cells.end() ? "-" : it->second;
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << corner;
        for (const auto& c : columns) out << ',' << c;
        out << '\n';
        for (const auto& r : rows) {
            out << r;
            for (const auto& c : columns) out << ',' << cell(r, c);
            out << '\n';
        }
        return out.str();
    }

    std::string to_text() const {
        std::size_t first = corner.size();
        for (const auto& r : rows) first = std::max(first, r.size());
        std::vector<std::size_t> widths;
        for (const auto& c : columns) {
            std::size_t w = c.size();
            for (const auto& r : rows) w = std::max(w, cell(r, c).size());
            widths.push_back(w);
        }
        std::ostringstream out;
        out << std::left << std::setw(static_cast<int>(first)) << corner;
        for (std::size_t k = 0; k < columns.size(); ++k) {
            out << "  " << std::right << std::setw(static_cast<int>(widths[k])) << columns[k];
        }
        out << '\n';
        for (const auto& r : rows) {
            out << std::left << std::setw(static_cast<int>(first)) << r;
            for (std::size_t k = 0; k < columns.size(); ++k) {
                out << "  " << std::right << std::setw(static_cast<int>(widths[k])) << cell(r, columns[k]);
            }
            out << '\n';
        }
        return out.str();
    }
};

struct ReportSummary {
    Table aucpr;      // percentages, one decimal
    Table diversity;  // mean D, three decimals
    std::string outlier_ratio_csv;  // dataset,method,iteration,ratio
};

inline json read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open report '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IngestError("report '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.contains("schema_version") || j["schema_version"] != kReportSchemaVersion) {
        throw SchemaError("report '" + path + "' has schema_version " +
                          (j.contains("schema_version") ? j["schema_version"].dump() : std::string("<missing>")) +
                          ", expected " + std::to_string(kReportSchemaVersion));
    }
    return j;
}

inline ReportSummary summarize_reports(const std::vector<json>& reports) {
    if (reports.empty()) throw ConfigError("report: at least one report is required");
    ReportSummary s;
    s.aucpr.corner = "dataset";
    s.diversity.corner = "dataset";
    std::ostringstream series;
    series << "dataset,method,iteration,outlier_ratio\n";
    for (const auto& r : reports) {
        if (r.value("schema_version", -1) != kReportSchemaVersion) {
            throw SchemaError("report schema_version mismatch, expected " + std::to_string(kReportSchemaVersion));
        }
        const std::string name = r.at("dataset").at("name").get<std::string>();
        const std::string method = r.at("method").get<std::string>();
        const auto& agg = r.at("aggregate");
        s.aucpr.set(name, method, agg.contains("aucpr_mean") ? format_percent(agg["aucpr_mean"].get<double>()) : "-");
        if (agg.contains("diversity_mean")) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", agg["diversity_mean"].get<double>());
            s.diversity.set(name, method, buf);
        }
        if (agg.contains("outlier_ratio_mean")) {
            const auto ratios = agg["outlier_ratio_mean"].get<std::vector<double>>();
            for (std::size_t i = 0; i < ratios.size(); ++i) {
                series << name << ',' << method << ',' << i << ',' << to_text(ratios[i]) << '\n';
            }
        }
    }
    s.outlier_ratio_csv = series.str();
    return s;
}

inline ReportSummary cmd_report(const std::vector<std::string>& paths, const std::optional<std::string>& out_dir) {
    std::vector<json> reports;
    for (const auto& p : paths) reports.push_back(read_report(p));
    ReportSummary s = summarize_reports(reports);
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        auto write = [&](const char* file, const std::string& text) {
            std::ofstream out(std::filesystem::path(*out_dir) / file, std::ios::binary);
            if (!out) throw IngestError(std::string("cannot write '") + file + "'");
            out << text;
        };
        write("aucpr_table.csv", s.aucpr.to_csv());
        write("aucpr_table.txt", s.aucpr.to_text());
        write("diversity_table.csv", s.diversity.to_csv());
        write("diversity_table.txt", s.diversity.to_text());
        write("outlier_ratios.csv", s.outlier_ratio_csv);
    }
    return s;
}

}  // namespace bae
