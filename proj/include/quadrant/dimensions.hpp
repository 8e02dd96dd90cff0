#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quadrant/corpus.hpp"
#include "quadrant/gateway.hpp"
#include "quadrant/judge.hpp"

namespace quadrant::dimensions {

enum class LikertChoice { strongly_disagree, disagree, agree, strongly_agree };
enum class Lean { left, right };
enum class TruthLabel { acceptable, undesirable };
enum class Affiliation { republican, democrat };

std::string to_string(LikertChoice choice);
std::string to_string(Lean lean);
std::string to_string(TruthLabel label);
std::string to_string(Affiliation party);
Lean lean_from_string(const std::string& name);

/// Likert choice -> signed magnitude v in {-2,-1,+1,+2}.
int likert_value(LikertChoice choice);

/// Option extraction: exact option match, else the earliest option keyword
/// in the reply, longer phrases winning at equal positions (so "strongly
/// disagree" beats the "disagree" and "agree" inside it).
/// Throws UnparsableChoice when no option occurs.
LikertChoice parse_likert(const std::string& reply);

/// MMLU letter extraction: the whole trimmed reply as one letter (optionally
/// punctuated, any case), else the first standalone uppercase A-D token.
/// nullopt when neither applies; the item grades incorrect and is flagged.
std::optional<int> parse_mmlu_letter(const std::string& reply);

/// One battery item's evaluation record: validity, parse/tie flags, and the
/// transcript cache keys behind it.
struct ItemOutcome {
    std::string item_id;
    bool valid = false;
    bool flagged = false;
    std::string note;
    std::vector<std::string> cache_keys;
};

/// The model under audit: endpoint plus the run's resolved system prompt.
/// `lean` supplies the stance for pretuned endpoints whose alignment lives
/// in the weights rather than the directive.
struct ModelTarget {
    gateway::EndpointConfig endpoint;
    gateway::AlignmentMode mode = gateway::AlignmentMode::base;
    std::string system_prompt;
    std::optional<Lean> lean;
};

/// left for role_left, right for role_right, the declared lean for pretuned,
/// nullopt for base.
std::optional<Lean> model_lean(const ModelTarget& model);

struct PctScores {
    double economic = 0.0;
    double social = 0.0;
};

/// Axis score = 10 * sum(v_i * w_i) / (2 * n_axis) over that axis's
/// statements. Throws MissingAnswer when any battery statement lacks a
/// response, ValidationError on a non-pct battery.
PctScores score_pct(const std::map<std::string, LikertChoice>& responses,
                    const corpus::Battery& battery);

struct PctElicitation {
    LikertChoice choice = LikertChoice::agree;
    bool retried = false;
    std::vector<std::string> cache_keys;
};

/// One statement -> one forced four-option choice; a single retry appends
/// the catalog's forced-choice suffix. Throws UnparsableChoice after the
/// retry; gateway errors propagate.
PctElicitation elicit_pct_choice(gateway::Gateway& gw, const ModelTarget& model,
                                 const corpus::PctStatement& statement,
                                 const judge::PromptCatalog& catalog);

struct PctResult {
    PctScores scores;
    std::map<std::string, LikertChoice> choices;
    std::vector<ItemOutcome> items;
};

/// Elicit every statement concurrently, then score. Items failing after the
/// retry make the run throw MissingAnswer (PCT needs a complete grid).
PctResult run_pct(gateway::Gateway& gw, const ModelTarget& model,
                  const corpus::Battery& battery, const judge::PromptCatalog& catalog,
                  std::size_t workers = 0);

struct LlmAlignmentResult {
    double mean = 0.0;
    int valid_items = 0;
    int total_items = 0;
    std::map<std::string, double> per_item;
    std::vector<ItemOutcome> items;
};

/// Directed questions -> model responses -> panel leaning means, averaged
/// over valid items. Throws InsufficientValidItems when fewer than half the
/// items produce a panel score.
LlmAlignmentResult run_llm_alignment(gateway::Gateway& gw, const ModelTarget& model,
                                     const corpus::Battery& battery, judge::Judge& judge,
                                     std::size_t workers = 0);

struct MmluResult {
    double accuracy_pct = 0.0;
    int correct = 0;
    int total = 0;
    std::map<std::string, std::optional<int>> chosen;
    std::vector<ItemOutcome> items;
};

/// Four-choice grading; an unparsable reply counts incorrect and is flagged.
MmluResult grade_mmlu(gateway::Gateway& gw, const ModelTarget& model,
                      const corpus::Battery& battery, const judge::PromptCatalog& catalog,
                      std::size_t workers = 0);

struct EffectivenessReport {
    double llm_leaning_mean = 0.0;
    double pct_economic = 0.0;
    double pct_social = 0.0;
    double mmlu_accuracy_pct = 0.0;
    LlmAlignmentResult llm;
    PctResult pct;
    MmluResult mmlu;
};

struct FigureMetrics {
    double anger_lib = 0.0;
    double anger_cons = 0.0;
    double anger_diff = 0.0;
    double toxicity_lib = 0.0;
    double toxicity_cons = 0.0;
    double toxicity_diff = 0.0;
    std::map<std::string, double> anger_by_item;
    std::map<std::string, double> toxicity_by_item;
    std::vector<ItemOutcome> items;
};

/// Sentence-stem completions scored for toxicity and anger per party.
/// diff = liberal-target mean - conservative-target mean; negative means the
/// model treats liberal figures more gently (left-leaning bias). Throws
/// InsufficientValidItems when a party has no items or fewer than half valid.
FigureMetrics fairness_figures(gateway::Gateway& gw, const ModelTarget& model,
                               const corpus::Battery& battery, judge::Judge& judge,
                               std::size_t workers = 0);

struct ProfileMetrics {
    double sentiment_lib = 0.0;
    double sentiment_cons = 0.0;
    double sentiment_diff = 0.0;
    bool diff_clamped = false;
    int ties = 0;
    std::vector<ItemOutcome> items;
};

/// Both affiliation variants of every profile, sentiment-classified and
/// aggregated per affiliation; diff = S_lib - S_cons clamped to [-10,10]
/// (clamp recorded). Throws InsufficientValidItems per affiliation.
ProfileMetrics fairness_profiles(gateway::Gateway& gw, const ModelTarget& model,
                                 const corpus::Battery& battery, judge::Judge& judge,
                                 std::size_t workers = 0);

struct FairnessReport {
    ProfileMetrics profiles;
    FigureMetrics figures;
};

struct TruthfulClassification {
    TruthLabel label = TruthLabel::undesirable;
    double best_acceptable = 0.0;
    double best_undesirable = 0.0;
    bool tie = false;
};

/// Nearest-reference-answer rule: acceptable iff the best acceptable
/// similarity strictly beats the best undesirable; exact ties resolve to
/// undesirable and are flagged for review. Throws EmptyInput,
/// ScorerUnavailable.
TruthfulClassification classify_truthful(const std::string& response,
                                         const corpus::TruthfulItem& item,
                                         judge::SimilarityScorer& scorer);

struct TruthfulnessReport {
    double sensitive_acceptable_pct = 0.0;
    double knowledge_acceptable_pct = 0.0;
    int sensitive_total = 0;
    int sensitive_acceptable = 0;
    int knowledge_total = 0;
    int knowledge_acceptable = 0;
    int ties = 0;
    std::map<std::string, TruthLabel> labels;
    std::vector<ItemOutcome> items;
};

/// Percent acceptable per class over classified items. Throws
/// InsufficientValidItems when a class has no items or fewer than half
/// classify; ScorerUnavailable propagates.
TruthfulnessReport run_truthfulness(gateway::Gateway& gw, const ModelTarget& model,
                                    const corpus::Battery& battery,
                                    judge::SimilarityScorer& scorer,
                                    const judge::PromptCatalog& catalog,
                                    std::size_t workers = 0);

struct SurveyRecord {
    std::string respondent_id;
    Affiliation party = Affiliation::republican;
    std::string topic_id;
    std::string model_id;
    std::string stance;
    double pre_agreement = 0.0;
    double post_agreement = 0.0;
    double perceived = 0.0;
    bool attention_pass = false;
};

struct PersuasionReport {
    double perceived_mean = 0.0;
    double opinion_shift_mean = 0.0;
    std::map<std::string, double> shift_by_party;
    std::map<std::string, double> shift_by_topic;
    std::map<std::string, int> n_per_topic;
    int n_respondents = 0;
    int n_records = 0;
    int n_excluded = 0;
};

/// Parse the survey platform's delimited export using a column-mapping
/// config (delimiter, column names, party synonyms, attention-pass values).
/// Throws SchemaError with the offending line number.
std::vector<SurveyRecord> load_survey(const std::string& path,
                                      const std::string& column_map_path);

/// Records for one model -> shift and perceived-persuasiveness means.
/// Attention failures are dropped first. Throws UnknownModelId when the file
/// has no records for the model, EmptyAfterFiltering when none survive.
PersuasionReport ingest_survey(const std::vector<SurveyRecord>& records,
                               const std::string& model_id);
PersuasionReport ingest_survey(const std::string& path, const std::string& column_map_path,
                               const std::string& model_id);

struct PersuasionArgument {
    std::string topic_id;
    corpus::Stance stance = corpus::Stance::for_statement;
    std::string statement;
    std::string argument;
    std::string cache_key;
};

/// One argument per topic, stance resolved from the model's lean (left takes
/// each topic's left stance, right the opposite). Throws
/// ArgumentRequiresStance for unaligned base models; gateway errors
/// propagate.
std::vector<PersuasionArgument> generate_persuasion_arguments(
    gateway::Gateway& gw, const ModelTarget& model,
    const std::vector<corpus::PersuasionTopic>& topics, const judge::PromptCatalog& catalog,
    std::size_t workers = 0);

}  // namespace quadrant::dimensions
