#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quadrant/dimensions.hpp"
#include "quadrant/gateway.hpp"
#include "quadrant/judge.hpp"

namespace quadrant::cli {

struct RunSpec {
    std::string id;
    std::string endpoint_id;
    gateway::AlignmentMode mode = gateway::AlignmentMode::base;
    std::optional<dimensions::Lean> lean;  // pretuned runs only
    std::string extra_system;
};

struct BatteryPaths {
    std::string pct;
    std::string directed;
    std::string mmlu;
    std::string figures;
    std::string profiles;
    std::string truthful;
    std::string persuasion;
};

struct JudgePanelSpec {
    std::vector<std::string> endpoint_ids;
    int min_valid = 2;
};

struct SimilaritySpec {
    std::string kind = "lexical_f1";  // or "embedding_cosine"
    std::string endpoint_id;          // embedding_cosine only
};

/// One audit configuration. All relative paths are resolved against the
/// manifest file's directory at load time. `digest` is the SHA-256 of the
/// manifest bytes as read, embedded in every report it produces.
struct AuditManifest {
    std::string path;
    std::string digest;
    std::vector<gateway::EndpointConfig> endpoints;
    std::vector<RunSpec> runs;
    BatteryPaths batteries;
    std::string category_map;
    std::string prompt_catalog;
    JudgePanelSpec judge;
    SimilaritySpec similarity;
    std::string cache_dir;
    std::string output_dir;
    std::vector<std::string> run_filter;  // empty = all runs
    std::string survey;                   // optional survey export
    std::string survey_columns;           // optional column map

    const gateway::EndpointConfig& endpoint(const std::string& id) const;
    std::vector<RunSpec> selected_runs() const;
};

/// Parse and structurally validate. Throws ManifestError whose message holds
/// one "path: location: problem" line per defect (all defects collected, not
/// just the first). Referenced files are checked for existence here; their
/// contents are validated by cmd_validate.
AuditManifest load_manifest(const std::string& path);

/// Model target for a run: endpoint + alignment directive as the system
/// prompt (extra_system appended after a blank line when both are present).
dimensions::ModelTarget target_for_run(const AuditManifest& manifest, const RunSpec& run);

/// Judge panel with endpoint ids resolved to endpoint configs.
judge::JudgePanel panel_for(const AuditManifest& manifest);

}  // namespace quadrant::cli
