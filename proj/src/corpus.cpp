#include "quadrant/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "quadrant/errors.hpp"
#include "quadrant/util.hpp"

using nlohmann::json;

namespace quadrant::corpus {

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kPlaceholder = "{affiliation}";

[[noreturn]] void fail_validation(const std::string& path, size_t line, const std::string& what) {
    throw ValidationError(path + ":" + std::to_string(line) + ": " + what);
}

std::string require_string(const json& rec, const char* key, const std::string& path,
                           size_t line) {
    if (!rec.contains(key) || !rec[key].is_string() || rec[key].get<std::string>().empty())
        fail_validation(path, line, std::string("missing or empty field '") + key + "'");
    return rec[key].get<std::string>();
}

std::vector<std::string> require_string_list(const json& rec, const char* key,
                                             const std::string& path, size_t line) {
    if (!rec.contains(key) || !rec[key].is_array() || rec[key].empty())
        fail_validation(path, line, std::string("missing or empty list '") + key + "'");
    std::vector<std::string> out;
    for (const auto& v : rec[key]) {
        if (!v.is_string() || v.get<std::string>().empty())
            fail_validation(path, line, std::string("non-string entry in '") + key + "'");
        out.push_back(v.get<std::string>());
    }
    return out;
}

size_t placeholder_count(const std::string& text) {
    size_t count = 0;
    for (size_t pos = text.find(kPlaceholder); pos != std::string::npos;
         pos = text.find(kPlaceholder, pos + 1))
        ++count;
    return count;
}

}  // namespace

std::string to_string(BatteryKind kind) {
    switch (kind) {
        case BatteryKind::pct: return "pct";
        case BatteryKind::directed: return "directed";
        case BatteryKind::figure: return "figure";
        case BatteryKind::profile: return "profile";
        case BatteryKind::truthful: return "truthful";
        case BatteryKind::mmlu: return "mmlu";
        case BatteryKind::persuasion: return "persuasion";
    }
    return "?";
}

std::string to_string(Party party) {
    return party == Party::liberal ? "liberal" : "conservative";
}

std::string to_string(TruthClass cls) {
    return cls == TruthClass::sensitive ? "sensitive" : "knowledge";
}

std::string to_string(Stance stance) {
    return stance == Stance::for_statement ? "for" : "against";
}

BatteryKind battery_kind_from_string(const std::string& name) {
    if (name == "pct") return BatteryKind::pct;
    if (name == "directed") return BatteryKind::directed;
    if (name == "figure") return BatteryKind::figure;
    if (name == "profile") return BatteryKind::profile;
    if (name == "truthful") return BatteryKind::truthful;
    if (name == "mmlu") return BatteryKind::mmlu;
    if (name == "persuasion") return BatteryKind::persuasion;
    throw ValidationError("unknown battery kind: " + name);
}

Stance opposite(Stance stance) {
    return stance == Stance::for_statement ? Stance::against_statement : Stance::for_statement;
}

CategoryMap CategoryMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open category map: " + path);
    CategoryMap out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = util::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'category = class'");
        const std::string category = util::trim(stripped.substr(0, eq));
        const std::string cls = util::trim(stripped.substr(eq + 1));
        if (category.empty())
            throw ParseError(path + ":" + std::to_string(lineno) + ": empty category name");
        TruthClass value;
        if (cls == "sensitive") {
            value = TruthClass::sensitive;
        } else if (cls == "knowledge") {
            value = TruthClass::knowledge;
        } else {
            throw ParseError(path + ":" + std::to_string(lineno) + ": unknown class '" + cls + "'");
        }
        if (!out.entries_.emplace(category, value).second)
            throw ValidationError(path + ":" + std::to_string(lineno) + ": duplicate category '" +
                                  category + "'");
    }
    if (out.entries_.empty()) throw ValidationError("category map is empty: " + path);
    return out;
}

TruthClass CategoryMap::classify(const std::string& category) const {
    auto it = entries_.find(category);
    if (it == entries_.end()) throw UnknownCategory("unmapped category: '" + category + "'");
    return it->second;
}

TruthClass split_truthful_class(const std::string& category, const CategoryMap& map) {
    return map.classify(category);
}

size_t Battery::size() const {
    switch (kind) {
        case BatteryKind::pct: return pct.size();
        case BatteryKind::directed: return directed.size();
        case BatteryKind::figure: return figures.size();
        case BatteryKind::profile: return profiles.size();
        case BatteryKind::truthful: return truthful.size();
        case BatteryKind::mmlu: return mmlu.size();
        case BatteryKind::persuasion: return persuasion.size();
    }
    return 0;
}

Battery load_battery(const std::string& path, BatteryKind kind, const CategoryMap* categories) {
    if (kind == BatteryKind::truthful && categories == nullptr)
        throw ValidationError("truthful battery requires a category map: " + path);

    std::ifstream in(path);
    if (!in) throw ParseError("cannot open battery file: " + path);

    Battery battery;
    battery.id = std::filesystem::path(path).stem().string();
    battery.kind = kind;

    std::set<std::string> seen_ids;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!rec.is_object()) fail_validation(path, lineno, "record is not an object");
        if (!rec.contains("schema_version") || !rec["schema_version"].is_number_integer() ||
            rec["schema_version"].get<int>() != kSchemaVersion)
            fail_validation(path, lineno, "missing or unsupported schema_version");

        const std::string id = require_string(rec, "id", path, lineno);
        if (!seen_ids.insert(id).second)
            fail_validation(path, lineno, "duplicate item id '" + id + "'");

        switch (kind) {
            case BatteryKind::pct: {
                PctStatement s;
                s.id = id;
                s.text = require_string(rec, "text", path, lineno);
                const std::string axis = require_string(rec, "axis", path, lineno);
                if (axis == "economic") {
                    s.axis = Axis::economic;
                } else if (axis == "social") {
                    s.axis = Axis::social;
                } else {
                    fail_validation(path, lineno, "axis must be 'economic' or 'social'");
                }
                if (!rec.contains("weight") || !rec["weight"].is_number_integer())
                    fail_validation(path, lineno, "missing integer field 'weight'");
                s.weight = rec["weight"].get<int>();
                if (s.weight != 1 && s.weight != -1)
                    fail_validation(path, lineno, "weight must be +1 or -1");
                battery.pct.push_back(std::move(s));
                break;
            }
            case BatteryKind::directed: {
                battery.directed.push_back({id, require_string(rec, "text", path, lineno)});
                break;
            }
            case BatteryKind::figure: {
                FigurePrompt f;
                f.id = id;
                f.figure_name = require_string(rec, "figure_name", path, lineno);
                const std::string party = require_string(rec, "party", path, lineno);
                if (party == "liberal") {
                    f.party = Party::liberal;
                } else if (party == "conservative") {
                    f.party = Party::conservative;
                } else {
                    fail_validation(path, lineno, "party must be 'liberal' or 'conservative'");
                }
                f.sentence_stem = require_string(rec, "sentence_stem", path, lineno);
                battery.figures.push_back(std::move(f));
                break;
            }
            case BatteryKind::profile: {
                ProfilePair p;
                p.id = id;
                p.template_text = require_string(rec, "template", path, lineno);
                p.demographics = require_string(rec, "demographics", path, lineno);
                const size_t count = placeholder_count(p.template_text);
                if (count != 1)
                    fail_validation(path, lineno,
                                    "template must contain exactly one " +
                                        std::string(kPlaceholder) + " placeholder (found " +
                                        std::to_string(count) + ")");
                battery.profiles.push_back(std::move(p));
                break;
            }
            case BatteryKind::truthful: {
                TruthfulItem t;
                t.id = id;
                t.question = require_string(rec, "question", path, lineno);
                t.acceptable = require_string_list(rec, "acceptable", path, lineno);
                t.undesirable = require_string_list(rec, "undesirable", path, lineno);
                t.category = require_string(rec, "category", path, lineno);
                try {
                    t.cls = categories->classify(t.category);
                } catch (const UnknownCategory& e) {
                    fail_validation(path, lineno, e.what());
                }
                battery.truthful.push_back(std::move(t));
                break;
            }
            case BatteryKind::mmlu: {
                MmluItem m;
                m.id = id;
                m.question = require_string(rec, "question", path, lineno);
                const auto choices = require_string_list(rec, "choices", path, lineno);
                if (choices.size() != 4)
                    fail_validation(path, lineno, "mmlu item needs exactly 4 choices");
                std::copy(choices.begin(), choices.end(), m.choices.begin());
                if (!rec.contains("answer_index") || !rec["answer_index"].is_number_integer())
                    fail_validation(path, lineno, "missing integer field 'answer_index'");
                m.answer_index = rec["answer_index"].get<int>();
                if (m.answer_index < 0 || m.answer_index > 3)
                    fail_validation(path, lineno, "answer_index out of range 0..3");
                const std::string subject = require_string(rec, "subject", path, lineno);
                if (subject == "formal_logic") {
                    m.subject = MmluSubject::formal_logic;
                } else if (subject == "logical_fallacies") {
                    m.subject = MmluSubject::logical_fallacies;
                } else {
                    fail_validation(path, lineno,
                                    "subject must be 'formal_logic' or 'logical_fallacies'");
                }
                battery.mmlu.push_back(std::move(m));
                break;
            }
            case BatteryKind::persuasion: {
                PersuasionTopic topic;
                topic.id = id;
                topic.statement = require_string(rec, "statement", path, lineno);
                const std::string stance = require_string(rec, "left_stance", path, lineno);
                if (stance == "for") {
                    topic.left_stance = Stance::for_statement;
                } else if (stance == "against") {
                    topic.left_stance = Stance::against_statement;
                } else {
                    fail_validation(path, lineno, "left_stance must be 'for' or 'against'");
                }
                battery.persuasion.push_back(std::move(topic));
                break;
            }
        }
    }

    if (battery.size() == 0) throw ValidationError("battery file has no items: " + path);
    if (kind == BatteryKind::pct) {
        size_t econ = 0, soc = 0;
        for (const auto& s : battery.pct) (s.axis == Axis::economic ? econ : soc)++;
        if (econ == 0 || soc == 0)
            throw ValidationError("pct battery needs at least one statement per axis: " + path);
    }
    return battery;
}

std::string render_profile(const ProfilePair& pair, Party affiliation) {
    const size_t count = placeholder_count(pair.template_text);
    if (count == 0)
        throw TemplateError("profile '" + pair.id + "': placeholder " + kPlaceholder + " absent");
    if (count > 1)
        throw TemplateError("profile '" + pair.id + "': placeholder " + kPlaceholder +
                            " occurs " + std::to_string(count) + " times");
    std::string out = pair.template_text;
    out.replace(out.find(kPlaceholder), std::string(kPlaceholder).size(), to_string(affiliation));
    return out;
}

}  // namespace quadrant::corpus
