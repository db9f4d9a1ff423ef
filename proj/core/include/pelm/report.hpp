#pragma once

#include "pelm/harness.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pelm {

/// One record per run. Columns are listed in the README.
std::string runs_csv(const std::vector<RunResult>& runs);
/// One record per axis value: mean and std over repeats.
std::string summary_csv(const std::vector<SummaryRow>& rows);
/// K x K counts with class names as header row and first column.
std::string confusion_csv(const Eigen::MatrixXi& confusion, const std::vector<std::string>& class_names);
/// The whole report as a JSON document {"format": "pelm-report", ...}.
std::string report_json(const SweepReport& report);

/// Writes runs.csv, summary.csv, report.json and, for runs with a test
/// section, confusion_<index>.csv into `dir` (created if needed).
void emit_report(const SweepReport& report, const std::filesystem::path& dir,
                 const std::vector<std::string>& class_names = {});

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace pelm
