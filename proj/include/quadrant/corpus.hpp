#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace quadrant::corpus {

enum class BatteryKind { pct, directed, figure, profile, truthful, mmlu, persuasion };
enum class Axis { economic, social };
enum class Party { liberal, conservative };
enum class TruthClass { sensitive, knowledge };
enum class MmluSubject { formal_logic, logical_fallacies };
enum class Stance { for_statement, against_statement };

std::string to_string(BatteryKind kind);
std::string to_string(Party party);
std::string to_string(TruthClass cls);
std::string to_string(Stance stance);
BatteryKind battery_kind_from_string(const std::string& name);
Stance opposite(Stance stance);

/// Political Compass style statement. weight +1 means agreement moves the
/// axis score right/authoritarian, -1 means agreement moves it left/libertarian.
struct PctStatement {
    std::string id;
    std::string text;
    Axis axis = Axis::economic;
    int weight = 1;
};

struct DirectedQuestion {
    std::string id;
    std::string text;
};

struct FigurePrompt {
    std::string id;
    std::string figure_name;
    Party party = Party::liberal;
    std::string sentence_stem;
};

/// Profile template with exactly one "{affiliation}" placeholder.
struct ProfilePair {
    std::string id;
    std::string template_text;
    std::string demographics;
};

struct TruthfulItem {
    std::string id;
    std::string question;
    std::vector<std::string> acceptable;
    std::vector<std::string> undesirable;
    std::string category;
    TruthClass cls = TruthClass::knowledge;
};

struct MmluItem {
    std::string id;
    std::string question;
    std::array<std::string, 4> choices;
    int answer_index = 0;
    MmluSubject subject = MmluSubject::formal_logic;
};

/// Debate topic. left_stance names the side a left-aligned model argues;
/// right-aligned runs take the opposite side.
struct PersuasionTopic {
    std::string id;
    std::string statement;
    Stance left_stance = Stance::for_statement;
    std::map<Stance, std::string> stance_arguments;
};

/// Category -> sensitive/knowledge assignment, loaded from a key/value file
/// ("Category Name = sensitive|knowledge", '#' comments).
class CategoryMap {
public:
    static CategoryMap load(const std::string& path);

    /// Throws UnknownCategory for names absent from the map.
    TruthClass classify(const std::string& category) const;

    size_t size() const { return entries_.size(); }
    const std::map<std::string, TruthClass>& entries() const { return entries_; }

private:
    std::map<std::string, TruthClass> entries_;
};

/// One loaded battery; exactly the vector matching `kind` is populated.
struct Battery {
    std::string id;
    BatteryKind kind = BatteryKind::pct;
    std::vector<PctStatement> pct;
    std::vector<DirectedQuestion> directed;
    std::vector<FigurePrompt> figures;
    std::vector<ProfilePair> profiles;
    std::vector<TruthfulItem> truthful;
    std::vector<MmluItem> mmlu;
    std::vector<PersuasionTopic> persuasion;

    size_t size() const;
};

/// Load and validate a line-delimited battery file. Each line is one JSON
/// record carrying schema_version, id, and the kind-specific payload.
/// Truthful batteries need `categories` to assign each item's class.
/// Throws ParseError (malformed line, with line number) and ValidationError
/// (duplicate id, missing/invalid payload, empty battery).
Battery load_battery(const std::string& path, BatteryKind kind,
                     const CategoryMap* categories = nullptr);

/// Classify via the map; same contract as CategoryMap::classify.
TruthClass split_truthful_class(const std::string& category, const CategoryMap& map);

/// Substitute the affiliation token into the profile template.
/// Throws TemplateError when the placeholder is absent or duplicated.
std::string render_profile(const ProfilePair& pair, Party affiliation);

}  // namespace quadrant::corpus
