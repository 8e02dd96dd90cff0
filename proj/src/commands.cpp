#include "quadrant/commands.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <map>
#include <memory>
#include <set>

#include "quadrant/errors.hpp"
#include "quadrant/manifest.hpp"
#include "quadrant/report.hpp"
#include "quadrant/util.hpp"

namespace quadrant::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kDimensions = {"effectiveness", "fairness", "truthfulness",
                                              "persuasiveness"};

/// One audit process per output directory. The lock file carries the holder
/// pid; a lock whose process is gone is stale and can be taken over with
/// --resume.
class DirLock {
public:
    DirLock(const fs::path& dir, bool resume) : path_(dir / ".audit.lock") {
        fs::create_directories(dir);
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            if (errno != EEXIST)
                throw LockError("cannot create " + path_.string() + ": " + std::strerror(errno));
            std::string holder = "unknown";
            long pid = -1;
            try {
                holder = util::trim(util::read_file(path_));
                pid = std::stol(holder);
            } catch (...) {
            }
            const bool alive = pid > 0 && (::kill(static_cast<pid_t>(pid), 0) == 0 ||
                                           errno == EPERM);
            if (alive)
                throw LockError("output directory is locked by running process " + holder +
                                " (" + path_.string() + ")");
            if (!resume)
                throw LockError("stale lock at " + path_.string() + " (process " + holder +
                                " is gone); pass --resume to take it over");
            fd = ::open(path_.c_str(), O_WRONLY | O_TRUNC, 0644);
            if (fd < 0)
                throw LockError("cannot take over " + path_.string() + ": " +
                                std::strerror(errno));
        }
        const std::string pid_line = std::to_string(::getpid()) + "\n";
        ssize_t rc = ::write(fd, pid_line.data(), pid_line.size());
        ::close(fd);
        if (rc != static_cast<ssize_t>(pid_line.size()))
            throw LockError("cannot write pid to " + path_.string());
        held_ = true;
    }

    ~DirLock() {
        if (held_) {
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }

    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    bool held_ = false;
};

struct LoadedInputs {
    judge::PromptCatalog catalog;
    corpus::CategoryMap categories;
    corpus::Battery pct;
    corpus::Battery directed;
    corpus::Battery mmlu;
    corpus::Battery figures;
    corpus::Battery profiles;
    corpus::Battery truthful;
    corpus::Battery persuasion;
};

LoadedInputs load_inputs(const AuditManifest& m) {
    LoadedInputs in{judge::PromptCatalog::load(m.prompt_catalog),
                    corpus::CategoryMap::load(m.category_map)};
    in.pct = corpus::load_battery(m.batteries.pct, corpus::BatteryKind::pct);
    in.directed = corpus::load_battery(m.batteries.directed, corpus::BatteryKind::directed);
    in.mmlu = corpus::load_battery(m.batteries.mmlu, corpus::BatteryKind::mmlu);
    in.figures = corpus::load_battery(m.batteries.figures, corpus::BatteryKind::figure);
    in.profiles = corpus::load_battery(m.batteries.profiles, corpus::BatteryKind::profile);
    in.truthful =
        corpus::load_battery(m.batteries.truthful, corpus::BatteryKind::truthful, &in.categories);
    in.persuasion =
        corpus::load_battery(m.batteries.persuasion, corpus::BatteryKind::persuasion);
    return in;
}

std::set<std::string> selected_dimensions(const RunFlags& flags) {
    if (flags.dimensions.empty()) return {kDimensions.begin(), kDimensions.end()};
    std::set<std::string> sel;
    for (const auto& name : flags.dimensions) {
        if (std::find(kDimensions.begin(), kDimensions.end(), name) == kDimensions.end())
            throw ManifestError("unknown dimension '" + name +
                                "' (expected effectiveness, fairness, truthfulness, or "
                                "persuasiveness)");
        sel.insert(name);
    }
    return sel;
}

int severity_of(const Error& e) {
    const std::string& code = e.code();
    if (code == "AuthError" || code == "TransportError" || code == "CacheMiss")
        return kExitTransport;
    return kExitPartial;
}

}  // namespace

int cmd_validate(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    AuditManifest m;
    try {
        m = load_manifest(manifest_path);
    } catch (const Error& e) {
        err << e.code() << ": " << e.what() << "\n";
        return kExitValidation;
    }

    std::vector<std::string> problems;
    std::unique_ptr<LoadedInputs> in;
    try {
        in = std::make_unique<LoadedInputs>(load_inputs(m));
    } catch (const Error& e) {
        problems.push_back(std::string(e.code()) + ": " + e.what());
    }
    if (!m.survey.empty()) {
        try {
            dimensions::load_survey(m.survey, m.survey_columns);
        } catch (const Error& e) {
            problems.push_back(std::string(e.code()) + ": " + e.what());
        }
    }
    if (!problems.empty()) {
        for (const auto& p : problems) err << p << "\n";
        return kExitValidation;
    }

    out << "manifest " << m.path << " OK\n";
    out << "  digest " << m.digest << "\n";
    out << "  endpoints " << m.endpoints.size() << ", runs " << m.runs.size();
    if (!m.run_filter.empty()) out << " (" << m.selected_runs().size() << " selected)";
    out << "\n";
    out << "  prompt catalog " << in->catalog.version() << "\n";
    out << "  batteries: pct " << in->pct.size() << ", directed " << in->directed.size()
        << ", mmlu " << in->mmlu.size() << ", figures " << in->figures.size() << ", profiles "
        << in->profiles.size() << ", truthful " << in->truthful.size() << ", persuasion "
        << in->persuasion.size() << "\n";
    out << "  judge panel " << m.judge.endpoint_ids.size() << " (min_valid " << m.judge.min_valid
        << "), similarity " << m.similarity.kind << "\n";
    return kExitOk;
}

int cmd_run(const std::string& manifest_path, const RunFlags& flags, std::ostream& out,
            std::ostream& err) {
    AuditManifest m;
    std::unique_ptr<LoadedInputs> in;
    std::set<std::string> dims;
    try {
        m = load_manifest(manifest_path);
        dims = selected_dimensions(flags);
        in = std::make_unique<LoadedInputs>(load_inputs(m));
    } catch (const Error& e) {
        err << e.code() << ": " << e.what() << "\n";
        return kExitValidation;
    }

    std::unique_ptr<DirLock> lock;
    try {
        lock = std::make_unique<DirLock>(m.output_dir, flags.resume);
    } catch (const LockError& e) {
        err << e.code() << ": " << e.what() << "\n";
        return kExitValidation;
    }

    gateway::GatewayOptions model_opts;
    model_opts.cache_only = flags.cache_only || flags.rescore;
    gateway::GatewayOptions aux_opts;
    aux_opts.cache_only = flags.cache_only && !flags.rescore;
    gateway::Gateway model_gw(m.cache_dir, model_opts);
    gateway::Gateway aux_gw(m.cache_dir, aux_opts);
    judge::Judge panel_judge(aux_gw, in->catalog, panel_for(m));

    std::unique_ptr<judge::SimilarityScorer> scorer;
    if (m.similarity.kind == "embedding_cosine") {
        scorer = std::make_unique<judge::EmbeddingEndpointScorer>(
            aux_gw, m.endpoint(m.similarity.endpoint_id));
    } else {
        scorer = std::make_unique<judge::LexicalOverlapScorer>();
    }

    int worst = kExitOk;
    std::vector<RunOutput> outs;
    for (const auto& run : m.selected_runs()) {
        RunOutput ro;
        ro.run = run;
        const dimensions::ModelTarget target = target_for_run(m, run);

        auto guard = [&](const std::string& dim, auto&& fn) {
            try {
                fn();
            } catch (const Error& e) {
                ro.errors.push_back(dim + ": " + e.code() + ": " + e.what());
                worst = std::max(worst, severity_of(e));
            }
        };

        if (dims.count("effectiveness"))
            guard("effectiveness", [&] {
                dimensions::EffectivenessReport e;
                e.pct = dimensions::run_pct(model_gw, target, in->pct, in->catalog,
                                            flags.workers);
                e.llm = dimensions::run_llm_alignment(model_gw, target, in->directed,
                                                      panel_judge, flags.workers);
                e.mmlu = dimensions::grade_mmlu(model_gw, target, in->mmlu, in->catalog,
                                                flags.workers);
                e.llm_leaning_mean = e.llm.mean;
                e.pct_economic = e.pct.scores.economic;
                e.pct_social = e.pct.scores.social;
                e.mmlu_accuracy_pct = e.mmlu.accuracy_pct;
                ro.effectiveness = std::move(e);
            });

        if (dims.count("fairness"))
            guard("fairness", [&] {
                dimensions::FairnessReport f;
                f.figures = dimensions::fairness_figures(model_gw, target, in->figures,
                                                         panel_judge, flags.workers);
                f.profiles = dimensions::fairness_profiles(model_gw, target, in->profiles,
                                                           panel_judge, flags.workers);
                ro.fairness = std::move(f);
            });

        if (dims.count("truthfulness"))
            guard("truthfulness", [&] {
                ro.truthfulness = dimensions::run_truthfulness(
                    model_gw, target, in->truthful, *scorer, in->catalog, flags.workers);
            });

        if (dims.count("persuasiveness")) {
            if (dimensions::model_lean(target).has_value()) {
                guard("persuasiveness", [&] {
                    ro.arguments = dimensions::generate_persuasion_arguments(
                        model_gw, target, in->persuasion.persuasion, in->catalog,
                        flags.workers);
                });
            } else {
                ro.notes.push_back(
                    "persuasion arguments skipped: base-mode run has no stance");
            }
            if (!m.survey.empty()) {
                guard("persuasiveness", [&] {
                    try {
                        ro.persuasion =
                            dimensions::ingest_survey(m.survey, m.survey_columns, run.id);
                    } catch (const UnknownModelId&) {
                        ro.notes.push_back("survey has no records for run '" + run.id + "'");
                    }
                });
            }
        }

        out << "run " << run.id << ": "
            << (ro.errors.empty() ? "ok" : std::to_string(ro.errors.size()) + " error(s)")
            << "\n";
        for (const auto& e : ro.errors) out << "  " << e << "\n";
        outs.push_back(std::move(ro));
    }

    const auto written = write_outputs(m, in->catalog.version(), outs);
    for (const auto& path : written) out << "wrote " << path.string() << "\n";
    out << "exit " << worst << "\n";
    return worst;
}

namespace {

using nlohmann::ordered_json;

/// run id -> metric map from a run report or every run of an audit report.
void collect_report_metrics(const std::string& path,
                            std::map<std::string, std::map<std::string, double>>& runs) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(util::read_file(path));
    } catch (const std::exception& e) {
        throw ValidationError(path + ": cannot parse report: " + e.what());
    }
    const std::string kind = doc.value("kind", "");
    auto take = [&](const ordered_json& run_id_holder, const ordered_json& metrics) {
        const std::string id = run_id_holder.value("id", "");
        if (id.empty()) throw ValidationError(path + ": report entry lacks a run id");
        if (runs.count(id))
            throw ValidationError(path + ": duplicate run id '" + id + "' across inputs");
        auto& slot = runs[id];
        for (const auto& [key, value] : metrics.items()) {
            if (value.is_number()) slot[key] = value.get<double>();
        }
    };
    if (kind == "run_report") {
        take(doc.at("run"), doc.at("metrics"));
    } else if (kind == "audit_report") {
        for (const auto& entry : doc.at("runs")) take(entry.at("run"), entry.at("metrics"));
    } else {
        throw ValidationError(path + ": not a run report or audit report (kind '" + kind +
                              "')");
    }
}

}  // namespace

int cmd_correlate(const std::vector<std::string>& report_paths,
                  const std::vector<std::string>& run_filter, const std::string& json_out,
                  std::ostream& out, std::ostream& err) {
    std::map<std::string, std::map<std::string, double>> runs;
    try {
        for (const auto& path : report_paths) collect_report_metrics(path, runs);
    } catch (const Error& e) {
        err << e.code() << ": " << e.what() << "\n";
        return kExitValidation;
    }

    std::string filter_desc = "all";
    if (!run_filter.empty()) {
        std::map<std::string, std::map<std::string, double>> kept;
        filter_desc.clear();
        for (const auto& id : run_filter) {
            auto it = runs.find(id);
            if (it != runs.end()) kept.insert(*it);
            if (!filter_desc.empty()) filter_desc += ",";
            filter_desc += id;
        }
        runs = std::move(kept);
    }

    if (runs.size() < 3) {
        err << "TooFewPoints: correlation needs at least 3 runs, have " << runs.size()
            << "\n";
        return kExitValidation;
    }

    const auto matrix =
        analysis::correlation_matrix(metric_vectors(runs), abs_transform_ids(), filter_desc);
    out << "runs:";
    for (const auto& [id, metrics] : runs) out << " " << id;
    out << "\n" << correlation_table(matrix);
    if (!json_out.empty()) {
        write_json_atomic(json_out, correlation_json(matrix));
        out << "wrote " << json_out << "\n";
    }
    return kExitOk;
}

int cmd_survey(const std::string& survey_path, const std::string& report_path,
               const std::string& columns_path, std::ostream& out, std::ostream& err) {
    std::vector<dimensions::SurveyRecord> records;
    ordered_json audit;
    try {
        records = dimensions::load_survey(survey_path, columns_path);
        try {
            audit = ordered_json::parse(util::read_file(report_path));
        } catch (const std::exception& e) {
            throw ValidationError(report_path + ": cannot parse report: " + e.what());
        }
        if (audit.value("kind", "") != "audit_report")
            throw ValidationError(report_path + ": not an audit report");
    } catch (const Error& e) {
        err << e.code() << ": " << e.what() << "\n";
        return kExitValidation;
    }

    std::set<std::string> run_ids;
    for (const auto& entry : audit.at("runs")) run_ids.insert(entry.at("run").value("id", ""));
    for (const auto& rec : records) {
        if (!run_ids.count(rec.model_id)) {
            err << "UnknownModelId: survey names model '" << rec.model_id
                << "' which is not a run in " << report_path << "\n";
            return kExitValidation;
        }
    }

    std::set<std::string> surveyed;
    for (const auto& rec : records) surveyed.insert(rec.model_id);

    int worst = kExitOk;
    std::map<std::string, std::map<std::string, double>> run_metrics;
    for (auto& entry : audit.at("runs")) {
        const std::string id = entry.at("run").value("id", "");
        std::vector<std::string> notes;
        for (const auto& n : entry.value("notes", ordered_json::array()))
            if (n.is_string()) notes.push_back(n.get<std::string>());

        if (surveyed.count(id)) {
            try {
                const auto rep = dimensions::ingest_survey(records, id);
                entry["persuasion"] = persuasion_json(rep);
                entry["metrics"]["p_delta"] = rep.opinion_shift_mean;
                entry["metrics"]["p_perc"] = rep.perceived_mean;
                out << "run " << id << ": P delta " << util::format_double(rep.opinion_shift_mean)
                    << ", P perceived " << util::format_double(rep.perceived_mean) << " (n="
                    << rep.n_records << ", excluded " << rep.n_excluded << ")\n";
            } catch (const Error& e) {
                err << "run " << id << ": " << e.code() << ": " << e.what() << "\n";
                worst = std::max(worst, kExitPartial);
            }
        } else {
            notes.push_back("survey has no records for run '" + id + "'");
        }

        std::map<std::string, double> metrics;
        for (const auto& [key, value] : entry.at("metrics").items())
            if (value.is_number()) metrics[key] = value.get<double>();
        run_metrics[id] = metrics;
        entry["metrics"] = metrics;
        entry["normalized"] = normalized_profile(metrics, notes);
        entry["notes"] = notes;
    }

    if (run_metrics.size() >= 3) {
        const auto matrix = analysis::correlation_matrix(metric_vectors(run_metrics),
                                                         abs_transform_ids(), "all");
        audit["correlation"] = correlation_json(matrix);
    }

    write_json_atomic(report_path, audit);
    out << "updated " << report_path << "\n";
    return worst;
}

}  // namespace quadrant::cli
