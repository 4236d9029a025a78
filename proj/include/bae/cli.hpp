#pragma once

// Command line surface of the `bae` tool: run, baseline-sae, synth, report.
// Exit codes: 0 success, 1 runtime failure, 2 usage or contract violation.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bae/errors.hpp"
#include "bae/experiment.hpp"

namespace bae::cli {

inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct Options {
    RunConfig run;
    SynthParams synth;
    std::vector<std::string> report_paths;
    std::optional<std::string> report_out;
    std::optional<std::string> from_report;
    std::string delimiter = ",";
    std::string label_col;
    std::string outlier_label;
    bool no_header = false;
};

inline void add_run_flags(CLI::App& cmd, Options& o) {
    auto& r = o.run;
    cmd.add_option("--data", r.data_path, "Input CSV file");
    cmd.add_option("--label-col", o.label_col, "Label column name or zero-based index (evaluation only)");
    cmd.add_option("--outlier-label", o.outlier_label, "Label value marking outliers (default: 0/1 or minority classes)");
    cmd.add_flag("--no-header", o.no_header, "CSV has no header row");
    cmd.add_option("--delimiter", o.delimiter, "CSV field delimiter")->capture_default_str();
    cmd.add_option("--name", r.dataset_name, "Dataset name used in reports (default: file stem)");
    cmd.add_option("--ensemble-size", r.ensemble_size, "Number of boosting iterations m")->capture_default_str();
    cmd.add_option("--depths", r.depths, "Candidate autoencoder depths")->delimiter(',')->capture_default_str();
    cmd.add_option("--alpha", r.alpha, "Layer shrinking factor")->capture_default_str();
    cmd.add_option("--epochs", r.epochs, "Maximum training epochs per autoencoder")->capture_default_str();
    cmd.add_option("--tol", r.convergence_tol, "Early-stop threshold on epoch loss change")->capture_default_str();
    cmd.add_option("--lr", r.learning_rate, "Adam learning rate")->capture_default_str();
    cmd.add_option("--weight-decay", r.weight_decay, "Adam (coupled L2) weight decay")->capture_default_str();
    cmd.add_option("--batch-size", r.batch_size, "Mini-batch size")->capture_default_str();
    cmd.add_option("--runs", r.runs, "Independent runs with derived seeds")->capture_default_str();
    cmd.add_option("--seed", r.seed, "Master seed")->capture_default_str();
    cmd.add_option("--out", r.out_dir, "Output directory")->capture_default_str();
    cmd.add_option("--from-report", o.from_report, "Re-run with the config embedded in a metrics.json");
}

/// Builds the full command tree, binding every option into `o`.
inline void configure(CLI::App& app, Options& o) {
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Boosted autoencoder ensemble with depth selection");
    add_run_flags(*run, o);

    auto* sae = app.add_subcommand("baseline-sae", "Single autoencoder baseline");
    add_run_flags(*sae, o);
    sae->add_option("--depth", o.run.baseline_depth, "Autoencoder depth")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "Write the synthetic Gaussian-plus-uniform benchmark");
    synth->add_option("--inliers", o.synth.inliers)->capture_default_str();
    synth->add_option("--outliers", o.synth.outliers)->capture_default_str();
    synth->add_option("--dim", o.synth.dim)->capture_default_str();
    synth->add_option("--seed", o.synth.seed)->capture_default_str();
    synth->add_option("--out", o.synth.out_path, "Output CSV path")->capture_default_str();

    auto* report = app.add_subcommand("report", "Aggregate metrics.json files into tables");
    report->add_option("reports", o.report_paths, "metrics.json files")->required();
    report->add_option("--out", o.report_out, "Directory for CSV/text tables");
}

/// Resolves string-typed flags into the RunConfig.
inline RunConfig resolve_run_config(const CLI::App& cmd, const Options& o) {
    RunConfig cfg = o.run;
    if (o.from_report) {
        const json report = read_report(*o.from_report);
        cfg = RunConfig::from_json(report.at("config"));
        if (cmd.count("--out") > 0) cfg.out_dir = o.run.out_dir;
        return cfg;
    }
    if (o.delimiter.size() != 1) throw ConfigError("--delimiter must be a single character");
    cfg.delimiter = o.delimiter.front();
    cfg.has_header = !o.no_header;
    if (!o.label_col.empty()) cfg.label_column = o.label_col;
    if (!o.outlier_label.empty()) cfg.outlier_label = o.outlier_label;
    return cfg;
}

inline void print_warnings(const ExperimentResult& r) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

inline void print_summary(const ExperimentResult& r, std::ostream& out) {
    const auto& agg = r.report.at("aggregate");
    out << r.report.at("method").get<std::string>() << " on " << r.report.at("dataset").at("name").get<std::string>();
    if (agg.contains("aucpr_mean")) out << ": AUCPR " << format_percent(agg["aucpr_mean"].get<double>()) << "%";
    if (agg.contains("diversity_mean")) out << ", diversity " << agg["diversity_mean"].get<double>();
    out << '\n';
}

inline int main(int argc, char** argv) {
    CLI::App app{"Boosting-based autoencoder ensembles for outlier detection"};
    Options o;
    configure(app, o);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (auto* cmd = app.get_subcommand("run"); cmd->parsed()) {
            const auto result = cmd_run(resolve_run_config(*cmd, o));
            print_warnings(result);
            print_summary(result, std::cout);
        } else if (auto* sae = app.get_subcommand("baseline-sae"); sae->parsed()) {
            const auto result = cmd_baseline_sae(resolve_run_config(*sae, o));
            print_warnings(result);
            print_summary(result, std::cout);
        } else if (app.get_subcommand("synth")->parsed()) {
            const auto ds = cmd_synth(o.synth);
            std::cout << "wrote " << ds.rows() << " rows to " << o.synth.out_path << '\n';
        } else if (app.get_subcommand("report")->parsed()) {
            const auto s = cmd_report(o.report_paths, o.report_out);
            std::cout << "AUCPR (%)\n" << s.aucpr.to_text();
            if (!s.diversity.rows.empty()) std::cout << "\nDiversity D\n" << s.diversity.to_text();
        }
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}

}  // namespace bae::cli
