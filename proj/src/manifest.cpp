#include "quadrant/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>

#include "json.hpp"
#include "quadrant/digest.hpp"
#include "quadrant/errors.hpp"
#include "quadrant/util.hpp"

namespace quadrant::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

bool valid_id(const std::string& id) {
    if (id.empty() || !std::isalnum(static_cast<unsigned char>(id.front()))) return false;
    return std::all_of(id.begin(), id.end(), [](unsigned char ch) {
        return std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.';
    });
}

class Collector {
public:
    explicit Collector(std::string file) : file_(std::move(file)) {}

    void add(const std::string& where, const std::string& problem) {
        lines_.push_back(file_ + ": " + where + ": " + problem);
    }

    void raise_if_any() const {
        if (lines_.empty()) return;
        std::string all;
        for (const auto& line : lines_) {
            if (!all.empty()) all += "\n";
            all += line;
        }
        throw ManifestError(all);
    }

private:
    std::string file_;
    std::vector<std::string> lines_;
};

std::string get_string(const json& obj, const std::string& key, const std::string& where,
                       Collector& errs, bool required = true) {
    if (!obj.contains(key)) {
        if (required) errs.add(where, "missing string field '" + key + "'");
        return "";
    }
    if (!obj.at(key).is_string()) {
        errs.add(where, "field '" + key + "' must be a string");
        return "";
    }
    return obj.at(key).get<std::string>();
}

int get_int(const json& obj, const std::string& key, int fallback, const std::string& where,
            Collector& errs) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number_integer()) {
        errs.add(where, "field '" + key + "' must be an integer");
        return fallback;
    }
    return obj.at(key).get<int>();
}

std::string resolve(const fs::path& base_dir, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (base_dir / p).lexically_normal().string();
}

void check_file(const std::string& resolved, const std::string& where, Collector& errs) {
    if (resolved.empty()) return;
    if (!fs::exists(resolved)) errs.add(where, "file does not exist: " + resolved);
}

}  // namespace

const gateway::EndpointConfig& AuditManifest::endpoint(const std::string& id) const {
    for (const auto& ep : endpoints)
        if (ep.id == id) return ep;
    throw ManifestError(path + ": no endpoint with id '" + id + "'");
}

std::vector<RunSpec> AuditManifest::selected_runs() const {
    if (run_filter.empty()) return runs;
    std::vector<RunSpec> out;
    for (const auto& run : runs)
        if (std::find(run_filter.begin(), run_filter.end(), run.id) != run_filter.end())
            out.push_back(run);
    return out;
}

AuditManifest load_manifest(const std::string& path) {
    std::string raw;
    try {
        raw = util::read_file(path);
    } catch (const std::exception& e) {
        throw ManifestError(path + ": cannot read manifest: " + e.what());
    }

    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::exception& e) {
        throw ManifestError(path + ": not valid JSON: " + e.what());
    }

    Collector errs(path);
    if (!doc.is_object()) {
        errs.add("top level", "manifest must be a JSON object");
        errs.raise_if_any();
    }

    AuditManifest m;
    m.path = fs::absolute(path).lexically_normal().string();
    m.digest = digest::sha256_hex(raw);
    const fs::path base_dir = fs::path(m.path).parent_path();

    if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
        doc["schema_version"].get<int>() != kSchemaVersion)
        errs.add("schema_version", "missing or unsupported schema_version (expected 1)");

    // endpoints
    std::set<std::string> endpoint_ids;
    if (!doc.contains("endpoints") || !doc["endpoints"].is_array() || doc["endpoints"].empty()) {
        errs.add("endpoints", "must be a non-empty array");
    } else {
        size_t i = 0;
        for (const auto& e : doc["endpoints"]) {
            const std::string where = "endpoints[" + std::to_string(i++) + "]";
            if (!e.is_object()) {
                errs.add(where, "must be an object");
                continue;
            }
            gateway::EndpointConfig ep;
            ep.id = get_string(e, "id", where, errs);
            ep.base_url = get_string(e, "base_url", where, errs);
            ep.model_name = get_string(e, "model_name", where, errs);
            ep.auth_ref = get_string(e, "auth_ref", where, errs, false);
            ep.max_concurrent = get_int(e, "max_concurrent", 4, where, errs);
            ep.requests_per_minute = get_int(e, "requests_per_minute", 600, where, errs);
            if (ep.max_concurrent < 1) errs.add(where, "max_concurrent must be >= 1");
            if (ep.requests_per_minute < 1) errs.add(where, "requests_per_minute must be >= 1");
            if (!ep.id.empty() && !endpoint_ids.insert(ep.id).second)
                errs.add(where, "duplicate endpoint id '" + ep.id + "'");
            m.endpoints.push_back(std::move(ep));
        }
    }

    // runs
    std::set<std::string> run_ids;
    if (!doc.contains("runs") || !doc["runs"].is_array() || doc["runs"].empty()) {
        errs.add("runs", "must be a non-empty array");
    } else {
        size_t i = 0;
        for (const auto& r : doc["runs"]) {
            const std::string where = "runs[" + std::to_string(i++) + "]";
            if (!r.is_object()) {
                errs.add(where, "must be an object");
                continue;
            }
            RunSpec run;
            run.id = get_string(r, "id", where, errs);
            if (!run.id.empty() && !valid_id(run.id))
                errs.add(where, "run id must match [A-Za-z0-9][A-Za-z0-9._-]* "
                                "(it names the report file)");
            if (!run.id.empty() && !run_ids.insert(run.id).second)
                errs.add(where, "duplicate run id '" + run.id + "'");
            run.endpoint_id = get_string(r, "endpoint_id", where, errs);
            if (!run.endpoint_id.empty() && !endpoint_ids.count(run.endpoint_id))
                errs.add(where, "unknown endpoint_id '" + run.endpoint_id + "'");
            const std::string directive = get_string(r, "directive", where, errs);
            if (!directive.empty()) {
                try {
                    run.mode = gateway::alignment_mode_from_string(directive);
                } catch (const Error& e) {
                    errs.add(where, e.what());
                }
            }
            if (r.contains("lean")) {
                if (run.mode != gateway::AlignmentMode::pretuned) {
                    errs.add(where, "'lean' is only meaningful for pretuned runs "
                                    "(role runs imply it, base runs have none)");
                } else if (!r["lean"].is_string()) {
                    errs.add(where, "field 'lean' must be a string");
                } else {
                    try {
                        run.lean = dimensions::lean_from_string(r["lean"].get<std::string>());
                    } catch (const Error& e) {
                        errs.add(where, e.what());
                    }
                }
            }
            run.extra_system = get_string(r, "extra_system", where, errs, false);
            m.runs.push_back(std::move(run));
        }
    }

    // batteries
    if (!doc.contains("batteries") || !doc["batteries"].is_object()) {
        errs.add("batteries", "must be an object with one path per battery kind");
    } else {
        const json& b = doc["batteries"];
        const std::vector<std::pair<std::string, std::string*>> slots = {
            {"pct", &m.batteries.pct},           {"directed", &m.batteries.directed},
            {"mmlu", &m.batteries.mmlu},         {"figures", &m.batteries.figures},
            {"profiles", &m.batteries.profiles}, {"truthful", &m.batteries.truthful},
            {"persuasion", &m.batteries.persuasion},
        };
        for (const auto& [key, slot] : slots) {
            const std::string where = "batteries." + key;
            *slot = resolve(base_dir, get_string(b, key, where, errs));
            check_file(*slot, where, errs);
        }
    }

    m.category_map = resolve(base_dir, get_string(doc, "category_map", "category_map", errs));
    check_file(m.category_map, "category_map", errs);
    m.prompt_catalog =
        resolve(base_dir, get_string(doc, "prompt_catalog", "prompt_catalog", errs));
    check_file(m.prompt_catalog, "prompt_catalog", errs);

    // judge panel
    if (!doc.contains("judge") || !doc["judge"].is_object()) {
        errs.add("judge", "must be an object {endpoint_ids, min_valid}");
    } else {
        const json& j = doc["judge"];
        if (!j.contains("endpoint_ids") || !j["endpoint_ids"].is_array() ||
            j["endpoint_ids"].empty()) {
            errs.add("judge.endpoint_ids", "must be a non-empty array of endpoint ids");
        } else {
            size_t i = 0;
            for (const auto& id : j["endpoint_ids"]) {
                const std::string where = "judge.endpoint_ids[" + std::to_string(i++) + "]";
                if (!id.is_string()) {
                    errs.add(where, "must be a string");
                    continue;
                }
                const std::string s = id.get<std::string>();
                if (!endpoint_ids.count(s)) errs.add(where, "unknown endpoint id '" + s + "'");
                m.judge.endpoint_ids.push_back(s);
            }
        }
        m.judge.min_valid = get_int(j, "min_valid", 2, "judge.min_valid", errs);
        if (m.judge.min_valid < 1 ||
            (!m.judge.endpoint_ids.empty() &&
             m.judge.min_valid > static_cast<int>(m.judge.endpoint_ids.size())))
            errs.add("judge.min_valid", "must be between 1 and the panel size");
    }

    // similarity scorer
    if (!doc.contains("similarity") || !doc["similarity"].is_object()) {
        errs.add("similarity", "must be an object {kind[, endpoint_id]}");
    } else {
        const json& s = doc["similarity"];
        m.similarity.kind = get_string(s, "kind", "similarity.kind", errs);
        if (m.similarity.kind != "lexical_f1" && m.similarity.kind != "embedding_cosine")
            errs.add("similarity.kind", "must be 'lexical_f1' or 'embedding_cosine'");
        if (m.similarity.kind == "embedding_cosine") {
            m.similarity.endpoint_id =
                get_string(s, "endpoint_id", "similarity.endpoint_id", errs);
            if (!m.similarity.endpoint_id.empty() &&
                !endpoint_ids.count(m.similarity.endpoint_id))
                errs.add("similarity.endpoint_id",
                         "unknown endpoint id '" + m.similarity.endpoint_id + "'");
        }
    }

    m.cache_dir = resolve(base_dir, get_string(doc, "cache_dir", "cache_dir", errs));
    m.output_dir = resolve(base_dir, get_string(doc, "output_dir", "output_dir", errs));

    if (doc.contains("run_filter")) {
        if (!doc["run_filter"].is_array()) {
            errs.add("run_filter", "must be an array of run ids");
        } else {
            size_t i = 0;
            for (const auto& id : doc["run_filter"]) {
                const std::string where = "run_filter[" + std::to_string(i++) + "]";
                if (!id.is_string()) {
                    errs.add(where, "must be a string");
                    continue;
                }
                const std::string s = id.get<std::string>();
                if (!run_ids.count(s)) errs.add(where, "no run with id '" + s + "'");
                m.run_filter.push_back(s);
            }
        }
    }

    m.survey = resolve(base_dir, get_string(doc, "survey", "survey", errs, false));
    check_file(m.survey, "survey", errs);
    m.survey_columns =
        resolve(base_dir, get_string(doc, "survey_columns", "survey_columns", errs, false));
    check_file(m.survey_columns, "survey_columns", errs);
    if (!m.survey.empty() && m.survey_columns.empty())
        errs.add("survey_columns", "required when 'survey' is set");

    errs.raise_if_any();
    return m;
}

dimensions::ModelTarget target_for_run(const AuditManifest& manifest, const RunSpec& run) {
    dimensions::ModelTarget target;
    target.endpoint = manifest.endpoint(run.endpoint_id);
    target.mode = run.mode;
    target.lean = run.lean;
    target.system_prompt = gateway::apply_alignment(run.mode);
    if (!run.extra_system.empty()) {
        if (!target.system_prompt.empty()) target.system_prompt += "\n\n";
        target.system_prompt += run.extra_system;
    }
    return target;
}

judge::JudgePanel panel_for(const AuditManifest& manifest) {
    judge::JudgePanel panel;
    for (const auto& id : manifest.judge.endpoint_ids)
        panel.judges.push_back(manifest.endpoint(id));
    panel.min_valid = manifest.judge.min_valid;
    return panel;
}

}  // namespace quadrant::cli
