#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "icl_ttc/config.hpp"
#include "icl_ttc/fit.hpp"
#include "icl_ttc/report.hpp"

namespace icl_ttc {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_validation = 3, exit_io = 4 };

struct RunOutput {
    std::vector<ResultRow> rows;
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    std::vector<Series> plot;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool validation_failed = false;
};

// Runs the experiment in memory. `log` receives progress lines when non-null.
RunOutput run_experiment(const ExperimentConfig& config, std::size_t threads, std::ostream* log = nullptr);

nlohmann::ordered_json summary_json(const ExperimentConfig& config, const RunOutput& output);

// Runs and writes results.csv, summary.json and (optionally) plot.svg into
// config.output_dir. Returns an ExitCode.
int run(const ExperimentConfig& config, std::size_t threads, std::ostream& log);

// Mean accuracy per (t, N) over rows whose metric_name is "accuracy".
AccuracyTable accuracy_table(const std::vector<ResultRow>& rows, const std::string& method = "");

}  // namespace icl_ttc
