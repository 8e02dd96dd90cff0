#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadrant/analysis.hpp"
#include "quadrant/dimensions.hpp"
#include "quadrant/manifest.hpp"

namespace quadrant::cli {

using ordered_json = nlohmann::ordered_json;

/// Everything one run produced. Sections are present only for dimensions
/// that were selected; a selected dimension that failed leaves its section
/// empty and contributes a line to `errors` ("Code: detail").
struct RunOutput {
    RunSpec run;
    std::optional<dimensions::EffectivenessReport> effectiveness;
    std::optional<dimensions::FairnessReport> fairness;
    std::optional<dimensions::TruthfulnessReport> truthfulness;
    std::optional<dimensions::PersuasionReport> persuasion;
    std::vector<dimensions::PersuasionArgument> arguments;
    std::vector<std::string> errors;
    std::vector<std::string> notes;
};

/// Raw metric values this run produced, keyed by catalog id (plus "mmlu").
std::map<std::string, double> metric_values(const RunOutput& out);

/// Metrics mapped to the 0-100 reporting scale. A value outside its metric's
/// domain maps to null and appends an explanatory note.
ordered_json normalized_profile(const std::map<std::string, double>& metrics,
                                std::vector<std::string>& notes);

ordered_json persuasion_json(const dimensions::PersuasionReport& p);
ordered_json run_report_json(const AuditManifest& manifest, const std::string& catalog_version,
                             const RunOutput& out);
ordered_json audit_report_json(const AuditManifest& manifest, const std::string& catalog_version,
                               const std::vector<RunOutput>& outs);
ordered_json correlation_json(const analysis::CorrelationMatrix& matrix);

/// Fixed-width text table, one row/column per metric, "r stars" cells
/// ("1.00 ***", "-0.42", "n/a").
std::string correlation_table(const analysis::CorrelationMatrix& matrix);

/// Metric ids |.|-transformed before correlating (direction-independent
/// strength for the two fairness completion metrics).
const std::vector<std::string>& abs_transform_ids();

/// Cross-run metric vectors in catalog order; metrics absent everywhere are
/// dropped. `runs` maps run id -> (metric id -> value).
std::vector<analysis::MetricVector> metric_vectors(
    const std::map<std::string, std::map<std::string, double>>& runs);

void write_json_atomic(const std::filesystem::path& path, const ordered_json& doc);

/// Write report_<run>.json per run, audit.json, plots/, persuasion_args.jsonl.
/// Returns the paths written, in write order.
std::vector<std::filesystem::path> write_outputs(const AuditManifest& manifest,
                                                 const std::string& catalog_version,
                                                 const std::vector<RunOutput>& outs);

}  // namespace quadrant::cli
