#include "quadrant/report.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "quadrant/errors.hpp"
#include "quadrant/util.hpp"

namespace quadrant::cli {

namespace fs = std::filesystem;

namespace {

ordered_json items_json(const std::vector<dimensions::ItemOutcome>& items) {
    ordered_json arr = ordered_json::array();
    for (const auto& item : items) {
        ordered_json o;
        o["id"] = item.item_id;
        o["valid"] = item.valid;
        o["flagged"] = item.flagged;
        if (!item.note.empty()) o["note"] = item.note;
        o["cache_keys"] = item.cache_keys;
        arr.push_back(std::move(o));
    }
    return arr;
}

ordered_json effectiveness_json(const dimensions::EffectivenessReport& e) {
    ordered_json llm;
    llm["mean"] = e.llm.mean;
    llm["valid_items"] = e.llm.valid_items;
    llm["total_items"] = e.llm.total_items;
    llm["per_item"] = e.llm.per_item;
    llm["items"] = items_json(e.llm.items);

    ordered_json choices = ordered_json::object();
    for (const auto& [id, choice] : e.pct.choices) choices[id] = to_string(choice);
    ordered_json pct;
    pct["economic"] = e.pct.scores.economic;
    pct["social"] = e.pct.scores.social;
    pct["choices"] = std::move(choices);
    pct["items"] = items_json(e.pct.items);

    ordered_json chosen = ordered_json::object();
    for (const auto& [id, idx] : e.mmlu.chosen) {
        if (idx.has_value())
            chosen[id] = *idx;
        else
            chosen[id] = nullptr;
    }
    ordered_json mmlu;
    mmlu["accuracy_pct"] = e.mmlu.accuracy_pct;
    mmlu["correct"] = e.mmlu.correct;
    mmlu["total"] = e.mmlu.total;
    mmlu["chosen"] = std::move(chosen);
    mmlu["items"] = items_json(e.mmlu.items);

    ordered_json out;
    out["llm_leaning_mean"] = e.llm_leaning_mean;
    out["pct_economic"] = e.pct_economic;
    out["pct_social"] = e.pct_social;
    out["mmlu_accuracy_pct"] = e.mmlu_accuracy_pct;
    out["llm"] = std::move(llm);
    out["pct"] = std::move(pct);
    out["mmlu"] = std::move(mmlu);
    return out;
}

ordered_json fairness_json(const dimensions::FairnessReport& f) {
    ordered_json profiles;
    profiles["sentiment_lib"] = f.profiles.sentiment_lib;
    profiles["sentiment_cons"] = f.profiles.sentiment_cons;
    profiles["sentiment_diff"] = f.profiles.sentiment_diff;
    profiles["diff_clamped"] = f.profiles.diff_clamped;
    profiles["ties"] = f.profiles.ties;
    profiles["items"] = items_json(f.profiles.items);

    ordered_json figures;
    figures["anger_lib"] = f.figures.anger_lib;
    figures["anger_cons"] = f.figures.anger_cons;
    figures["anger_diff"] = f.figures.anger_diff;
    figures["toxicity_lib"] = f.figures.toxicity_lib;
    figures["toxicity_cons"] = f.figures.toxicity_cons;
    figures["toxicity_diff"] = f.figures.toxicity_diff;
    figures["anger_by_item"] = f.figures.anger_by_item;
    figures["toxicity_by_item"] = f.figures.toxicity_by_item;
    figures["items"] = items_json(f.figures.items);

    ordered_json out;
    out["profiles"] = std::move(profiles);
    out["figures"] = std::move(figures);
    return out;
}

ordered_json truthfulness_json(const dimensions::TruthfulnessReport& t) {
    ordered_json labels = ordered_json::object();
    for (const auto& [id, label] : t.labels) labels[id] = to_string(label);
    ordered_json out;
    out["sensitive_acceptable_pct"] = t.sensitive_acceptable_pct;
    out["knowledge_acceptable_pct"] = t.knowledge_acceptable_pct;
    out["sensitive_total"] = t.sensitive_total;
    out["sensitive_acceptable"] = t.sensitive_acceptable;
    out["knowledge_total"] = t.knowledge_total;
    out["knowledge_acceptable"] = t.knowledge_acceptable;
    out["ties"] = t.ties;
    out["labels"] = std::move(labels);
    out["items"] = items_json(t.items);
    return out;
}

ordered_json run_header_json(const RunSpec& run) {
    ordered_json r;
    r["id"] = run.id;
    r["endpoint_id"] = run.endpoint_id;
    r["directive"] = gateway::to_string(run.mode);
    if (run.lean.has_value()) r["lean"] = dimensions::to_string(*run.lean);
    if (!run.extra_system.empty()) r["extra_system"] = run.extra_system;
    return r;
}

ordered_json cell_json(const analysis::CorrelationCell& cell) {
    ordered_json c;
    if (cell.result.has_value()) {
        c["r"] = cell.result->r;
        c["p"] = cell.result->p;
        c["n"] = cell.result->n;
        c["stars"] = analysis::star_string(cell.result->stars);
        std::string display = analysis::format_r(cell.result->r);
        const std::string stars = analysis::star_string(cell.result->stars);
        if (!stars.empty()) display += " " + stars;
        c["display"] = display;
    } else {
        c["unavailable"] = cell.unavailable_reason;
    }
    return c;
}

}  // namespace

std::map<std::string, double> metric_values(const RunOutput& out) {
    std::map<std::string, double> v;
    if (out.effectiveness.has_value()) {
        v["e_llm"] = out.effectiveness->llm_leaning_mean;
        v["e_econ"] = out.effectiveness->pct_economic;
        v["e_soc"] = out.effectiveness->pct_social;
        v["mmlu"] = out.effectiveness->mmlu_accuracy_pct;
    }
    if (out.fairness.has_value()) {
        v["f_sent"] = out.fairness->profiles.sentiment_diff;
        v["f_ang"] = out.fairness->figures.anger_diff;
        v["f_tox"] = out.fairness->figures.toxicity_diff;
    }
    if (out.truthfulness.has_value()) {
        v["t_sens"] = out.truthfulness->sensitive_acceptable_pct;
        v["t_know"] = out.truthfulness->knowledge_acceptable_pct;
    }
    if (out.persuasion.has_value()) {
        v["p_delta"] = out.persuasion->opinion_shift_mean;
        v["p_perc"] = out.persuasion->perceived_mean;
    }
    return v;
}

ordered_json normalized_profile(const std::map<std::string, double>& metrics,
                                std::vector<std::string>& notes) {
    ordered_json out = ordered_json::object();
    auto emit = [&](const std::string& id) {
        auto it = metrics.find(id);
        if (it == metrics.end()) return;
        try {
            out[id] = analysis::normalize_metric(it->second, analysis::metric_kind(id));
        } catch (const RangeError&) {
            out[id] = nullptr;
            notes.push_back("metric '" + id + "' value " + util::format_double(it->second) +
                            " is outside its normalization domain; omitted from the 0-100 "
                            "profile");
        }
    };
    for (const auto& [id, label] : analysis::metric_catalog()) emit(id);
    emit("mmlu");
    return out;
}

ordered_json persuasion_json(const dimensions::PersuasionReport& p) {
    ordered_json out;
    out["perceived_mean"] = p.perceived_mean;
    out["opinion_shift_mean"] = p.opinion_shift_mean;
    out["shift_by_party"] = p.shift_by_party;
    out["shift_by_topic"] = p.shift_by_topic;
    out["n_per_topic"] = p.n_per_topic;
    out["n_respondents"] = p.n_respondents;
    out["n_records"] = p.n_records;
    out["n_excluded"] = p.n_excluded;
    return out;
}

ordered_json run_report_json(const AuditManifest& manifest, const std::string& catalog_version,
                             const RunOutput& out) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "run_report";
    doc["manifest_digest"] = manifest.digest;
    doc["prompt_catalog_version"] = catalog_version;
    doc["run"] = run_header_json(out.run);

    const auto metrics = metric_values(out);
    std::vector<std::string> notes = out.notes;
    doc["metrics"] = metrics;
    doc["normalized"] = normalized_profile(metrics, notes);

    if (out.effectiveness.has_value())
        doc["effectiveness"] = effectiveness_json(*out.effectiveness);
    if (out.fairness.has_value()) doc["fairness"] = fairness_json(*out.fairness);
    if (out.truthfulness.has_value())
        doc["truthfulness"] = truthfulness_json(*out.truthfulness);
    if (out.persuasion.has_value()) doc["persuasion"] = persuasion_json(*out.persuasion);
    if (!out.arguments.empty()) {
        ordered_json args = ordered_json::array();
        for (const auto& a : out.arguments) {
            ordered_json o;
            o["topic_id"] = a.topic_id;
            o["stance"] = corpus::to_string(a.stance);
            o["cache_key"] = a.cache_key;
            args.push_back(std::move(o));
        }
        doc["persuasion_arguments"] = std::move(args);
    }

    doc["errors"] = out.errors;
    doc["notes"] = notes;
    return doc;
}

const std::vector<std::string>& abs_transform_ids() {
    static const std::vector<std::string> ids = {"f_ang", "f_tox"};
    return ids;
}

std::vector<analysis::MetricVector> metric_vectors(
    const std::map<std::string, std::map<std::string, double>>& runs) {
    std::vector<analysis::MetricVector> vectors;
    for (const auto& [id, label] : analysis::metric_catalog()) {
        analysis::MetricVector v;
        v.id = id;
        v.label = label;
        for (const auto& [run_id, metrics] : runs) {
            auto it = metrics.find(id);
            if (it != metrics.end()) v.values[run_id] = it->second;
        }
        if (!v.values.empty()) vectors.push_back(std::move(v));
    }
    return vectors;
}

ordered_json correlation_json(const analysis::CorrelationMatrix& matrix) {
    ordered_json doc;
    doc["metric_ids"] = matrix.metric_ids;
    doc["metric_labels"] = matrix.metric_labels;
    doc["abs_transformed"] = matrix.abs_transformed;
    doc["abs_transform_note"] =
        "metrics listed in abs_transformed enter the correlation as absolute "
        "values (direction-independent strength)";
    doc["run_filter"] = matrix.run_filter;
    ordered_json rows = ordered_json::array();
    for (const auto& row : matrix.cells) {
        ordered_json cells = ordered_json::array();
        for (const auto& cell : row) cells.push_back(cell_json(cell));
        rows.push_back(std::move(cells));
    }
    doc["cells"] = std::move(rows);
    return doc;
}

namespace {

// Visible width of a UTF-8 string: bytes minus continuation bytes.
size_t display_width(const std::string& s) {
    size_t w = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++w;
    return w;
}

}  // namespace

std::string correlation_table(const analysis::CorrelationMatrix& matrix) {
    const size_t n = matrix.metric_labels.size();
    std::vector<std::vector<std::string>> text(n, std::vector<std::string>(n));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            const auto& cell = matrix.cells[i][j];
            if (cell.result.has_value()) {
                std::string s = analysis::format_r(cell.result->r);
                const std::string stars = analysis::star_string(cell.result->stars);
                if (!stars.empty()) s += " " + stars;
                text[i][j] = s;
            } else {
                text[i][j] = "n/a";
            }
        }
    }

    size_t label_w = 0;
    for (const auto& label : matrix.metric_labels)
        label_w = std::max(label_w, display_width(label));
    std::vector<size_t> col_w(n);
    for (size_t j = 0; j < n; ++j) {
        col_w[j] = display_width(matrix.metric_labels[j]);
        for (size_t i = 0; i < n; ++i) col_w[j] = std::max(col_w[j], display_width(text[i][j]));
    }

    std::ostringstream os;
    os << std::string(label_w, ' ');
    for (size_t j = 0; j < n; ++j) {
        os << "  " << matrix.metric_labels[j]
           << std::string(col_w[j] - display_width(matrix.metric_labels[j]), ' ');
    }
    os << "\n";
    for (size_t i = 0; i < n; ++i) {
        os << matrix.metric_labels[i]
           << std::string(label_w - display_width(matrix.metric_labels[i]), ' ');
        for (size_t j = 0; j < n; ++j)
            os << "  " << text[i][j] << std::string(col_w[j] - display_width(text[i][j]), ' ');
        os << "\n";
    }
    for (const auto& id : matrix.abs_transformed) {
        auto it = std::find(matrix.metric_ids.begin(), matrix.metric_ids.end(), id);
        const size_t idx = static_cast<size_t>(it - matrix.metric_ids.begin());
        os << "note: " << matrix.metric_labels[idx]
           << " correlated on absolute values (direction-independent strength)\n";
    }
    return os.str();
}

ordered_json audit_report_json(const AuditManifest& manifest, const std::string& catalog_version,
                               const std::vector<RunOutput>& outs) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "audit_report";
    doc["manifest_digest"] = manifest.digest;
    doc["prompt_catalog_version"] = catalog_version;

    std::map<std::string, std::map<std::string, double>> run_metrics;
    ordered_json runs = ordered_json::array();
    for (const auto& out : outs) {
        const auto metrics = metric_values(out);
        run_metrics[out.run.id] = metrics;
        std::vector<std::string> notes = out.notes;
        ordered_json r;
        r["run"] = run_header_json(out.run);
        r["metrics"] = metrics;
        r["normalized"] = normalized_profile(metrics, notes);
        if (out.persuasion.has_value()) r["persuasion"] = persuasion_json(*out.persuasion);
        r["report_file"] = "report_" + out.run.id + ".json";
        r["errors"] = out.errors;
        r["notes"] = notes;
        runs.push_back(std::move(r));
    }
    doc["runs"] = std::move(runs);

    if (outs.size() >= 3) {
        const auto matrix =
            analysis::correlation_matrix(metric_vectors(run_metrics), abs_transform_ids(), "all");
        doc["correlation"] = correlation_json(matrix);
    } else {
        ordered_json c;
        c["unavailable"] =
            "correlation needs at least 3 runs, have " + std::to_string(outs.size());
        doc["correlation"] = std::move(c);
    }
    return doc;
}

void write_json_atomic(const fs::path& path, const ordered_json& doc) {
    util::atomic_write_file(path, doc.dump(2) + "\n");
}

std::vector<fs::path> write_outputs(const AuditManifest& manifest,
                                    const std::string& catalog_version,
                                    const std::vector<RunOutput>& outs) {
    std::vector<fs::path> written;
    const fs::path out_dir(manifest.output_dir);
    fs::create_directories(out_dir / "plots");

    for (const auto& out : outs) {
        const fs::path path = out_dir / ("report_" + out.run.id + ".json");
        write_json_atomic(path, run_report_json(manifest, catalog_version, out));
        written.push_back(path);
    }

    const fs::path audit_path = out_dir / "audit.json";
    write_json_atomic(audit_path, audit_report_json(manifest, catalog_version, outs));
    written.push_back(audit_path);

    // Radar series per run: the normalized 0-100 profile.
    for (const auto& out : outs) {
        const auto metrics = metric_values(out);
        std::vector<std::string> notes;
        const ordered_json normalized = normalized_profile(metrics, notes);
        ordered_json axes = ordered_json::array();
        for (const auto& [id, label] : analysis::metric_catalog()) {
            if (!normalized.contains(id) || normalized[id].is_null()) continue;
            ordered_json axis;
            axis["id"] = id;
            axis["label"] = label;
            axis["value"] = normalized[id];
            axes.push_back(std::move(axis));
        }
        ordered_json plot;
        plot["kind"] = "radar";
        plot["run"] = out.run.id;
        plot["scale"] = "0-100";
        plot["axes"] = std::move(axes);
        const fs::path path = out_dir / "plots" / ("radar_" + out.run.id + ".json");
        write_json_atomic(path, plot);
        written.push_back(path);
    }

    // Bar series per metric: raw values across runs.
    std::map<std::string, std::map<std::string, double>> run_metrics;
    for (const auto& out : outs) run_metrics[out.run.id] = metric_values(out);
    for (const auto& [id, label] : analysis::metric_catalog()) {
        ordered_json series = ordered_json::array();
        for (const auto& out : outs) {
            const auto& metrics = run_metrics[out.run.id];
            auto it = metrics.find(id);
            if (it == metrics.end()) continue;
            ordered_json bar;
            bar["run"] = out.run.id;
            bar["value"] = it->second;
            series.push_back(std::move(bar));
        }
        if (series.empty()) continue;
        ordered_json plot;
        plot["kind"] = "bar";
        plot["metric"] = id;
        plot["label"] = label;
        plot["series"] = std::move(series);
        const fs::path path = out_dir / "plots" / ("bars_" + id + ".json");
        write_json_atomic(path, plot);
        written.push_back(path);
    }

    // Generated persuasion arguments, one JSON line each.
    bool any_args = false;
    for (const auto& out : outs) any_args = any_args || !out.arguments.empty();
    if (any_args) {
        std::string lines;
        for (const auto& out : outs) {
            for (const auto& a : out.arguments) {
                ordered_json rec;
                rec["schema_version"] = 1;
                rec["run"] = out.run.id;
                rec["topic_id"] = a.topic_id;
                rec["stance"] = corpus::to_string(a.stance);
                rec["statement"] = a.statement;
                rec["argument"] = a.argument;
                rec["cache_key"] = a.cache_key;
                lines += rec.dump() + "\n";
            }
        }
        const fs::path path = out_dir / "persuasion_args.jsonl";
        util::atomic_write_file(path, lines);
        written.push_back(path);
    }

    return written;
}

}  // namespace quadrant::cli
