#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace quadrant::cli {

/// Exit codes shared by every verb (stable CI contract).
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitTransport = 3;

struct RunFlags {
    std::vector<std::string> dimensions;  // empty = all four
    bool cache_only = false;
    bool resume = false;   // take over a stale output-directory lock
    bool rescore = false;  // model responses from cache only; judges run fresh
    std::size_t workers = 0;
};

int cmd_validate(const std::string& manifest_path, std::ostream& out, std::ostream& err);

int cmd_run(const std::string& manifest_path, const RunFlags& flags, std::ostream& out,
            std::ostream& err);

/// Reports may be run reports or audit reports; every contained run
/// contributes one observation per metric. `run_filter` (ids) optionally
/// restricts which runs enter the matrix; `json_out` optionally receives the
/// matrix as JSON.
int cmd_correlate(const std::vector<std::string>& report_paths,
                  const std::vector<std::string>& run_filter, const std::string& json_out,
                  std::ostream& out, std::ostream& err);

/// Attach survey-derived persuasion metrics to an existing audit report.
int cmd_survey(const std::string& survey_path, const std::string& report_path,
               const std::string& columns_path, std::ostream& out, std::ostream& err);

}  // namespace quadrant::cli
