#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quadrant/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"quadrant: batch audit harness for politically aligned language models"};
    app.require_subcommand(1);

    std::string manifest_path;
    quadrant::cli::RunFlags flags;
    std::vector<std::string> dimension_args;

    auto* validate = app.add_subcommand("validate", "Check a manifest and every file it names");
    validate->add_option("manifest", manifest_path, "Audit manifest path")->required();

    auto* run = app.add_subcommand("run", "Execute the audit described by a manifest");
    run->add_option("manifest", manifest_path, "Audit manifest path")->required();
    run->add_option("--dimensions", dimension_args,
                    "Dimensions to execute (effectiveness, fairness, truthfulness, "
                    "persuasiveness); default all")
        ->delimiter(',');
    run->add_flag("--cache-only", flags.cache_only,
                  "Serve every request from the transcript cache; fail on any miss");
    run->add_flag("--resume", flags.resume, "Take over a stale output-directory lock");
    run->add_option("--workers", flags.workers,
                    "Parallel items per evaluation (default: endpoint max_concurrent)");

    auto* score = app.add_subcommand(
        "score", "Re-score cached model responses with the manifest's judge panel");
    score->add_option("manifest", manifest_path, "Audit manifest path")->required();
    score->add_option("--dimensions", dimension_args, "Dimensions to re-score; default all")
        ->delimiter(',');
    score->add_flag("--resume", flags.resume, "Take over a stale output-directory lock");
    score->add_option("--workers", flags.workers, "Parallel items per evaluation");

    std::vector<std::string> report_paths;
    std::vector<std::string> run_filter;
    std::string json_out;
    auto* correlate =
        app.add_subcommand("correlate", "Cross-metric correlation matrix over run reports");
    correlate->add_option("reports", report_paths, "Run report or audit report paths")
        ->required()
        ->expected(-1);
    correlate->add_option("--run-filter", run_filter, "Run ids to include (default all)")
        ->delimiter(',');
    correlate->add_option("--json", json_out, "Also write the matrix as JSON to this path");

    std::string survey_path;
    std::string report_path;
    std::string columns_path;
    auto* survey = app.add_subcommand(
        "survey", "Attach survey-derived persuasion metrics to an audit report");
    survey->add_option("survey", survey_path, "Survey export (delimited text)")->required();
    survey->add_option("report", report_path, "audit.json produced by 'run'")->required();
    survey->add_option("--columns", columns_path, "Column-map JSON for the survey export")
        ->required();

    CLI11_PARSE(app, argc, argv);
    flags.dimensions = dimension_args;

    if (validate->parsed())
        return quadrant::cli::cmd_validate(manifest_path, std::cout, std::cerr);
    if (run->parsed())
        return quadrant::cli::cmd_run(manifest_path, flags, std::cout, std::cerr);
    if (score->parsed()) {
        flags.rescore = true;
        return quadrant::cli::cmd_run(manifest_path, flags, std::cout, std::cerr);
    }
    if (correlate->parsed())
        return quadrant::cli::cmd_correlate(report_paths, run_filter, json_out, std::cout,
                                            std::cerr);
    if (survey->parsed())
        return quadrant::cli::cmd_survey(survey_path, report_path, columns_path, std::cout,
                                         std::cerr);
    return 1;
}
