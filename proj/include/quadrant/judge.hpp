#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "quadrant/gateway.hpp"

namespace quadrant::judge {

enum class ScalarKind { leaning, toxicity, anger };
enum class Sentiment { positive, neutral, negative };

std::string to_string(ScalarKind kind);
std::string to_string(Sentiment label);

/// Versioned prompt catalog: judge prompt texts, the metric/definition
/// substitution table, the sentiment classification prompt, per-battery
/// elicitation templates, and max_tokens defaults.
class PromptCatalog {
public:
    static PromptCatalog load(const std::string& path);

    const std::string& version() const { return version_; }

    /// Fully substituted judge system prompt for the given scalar metric.
    std::string judge_system(ScalarKind kind) const;
    std::pair<int, int> judge_range(ScalarKind kind) const;

    std::string sentiment_system() const { return sentiment_system_; }
    const std::vector<std::string>& sentiment_labels() const { return sentiment_labels_; }

    /// Raw elicitation template for a battery kind key ("pct", "mmlu", ...).
    std::string elicitation(const std::string& kind_key) const;
    /// Template with every "{name}" placeholder replaced per the map.
    std::string render(const std::string& kind_key,
                       const std::map<std::string, std::string>& placeholders) const;

    std::string pct_retry_suffix() const { return pct_retry_suffix_; }
    const std::vector<std::string>& pct_options() const { return pct_options_; }

    int max_tokens(const std::string& key) const;

private:
    std::string version_;
    std::string leaning_system_;
    std::pair<int, int> leaning_range_;
    std::string metric_template_;
    std::pair<int, int> metric_range_;
    std::map<std::string, std::pair<std::string, std::string>> substitutions_;
    std::string sentiment_system_;
    std::vector<std::string> sentiment_labels_;
    std::map<std::string, std::string> elicitation_;
    std::string pct_retry_suffix_;
    std::vector<std::string> pct_options_;
    std::map<std::string, int> max_tokens_;
};

struct JudgePanel {
    std::vector<gateway::EndpointConfig> judges;
    int min_valid = 2;
};

struct ScalarScore {
    ScalarKind kind = ScalarKind::leaning;
    std::map<std::string, int> per_judge;                       // judge id -> score
    std::vector<std::pair<std::string, std::string>> failures;  // judge id -> reason
    double mean = 0.0;
    int valid_count = 0;
    std::vector<std::string> cache_keys;
};

struct SentimentResult {
    Sentiment label = Sentiment::neutral;
    std::map<std::string, Sentiment> per_judge;
    std::vector<std::pair<std::string, std::string>> failures;
    int valid_count = 0;
    bool tie_broken = false;
    std::vector<std::string> cache_keys;
};

/// Integer extraction per the judge reply convention: trimmed bare integer,
/// else the first signed-integer token in the text. Out-of-range values are
/// errors, never clamped. Throws ScoreParseError, ScoreRangeError.
int parse_integer_score(const std::string& raw, int lo, int hi);

/// Whole-word sentiment label extraction; exactly one distinct label word
/// must occur. Throws LabelParseError.
Sentiment parse_sentiment_label(const std::string& raw);

/// S = 10P - 10N over the label multiset. Throws EmptyInput.
double aggregate_sentiment(const std::vector<Sentiment>& labels);

/// Judge panel bound to a gateway and catalog. Every judge reply flows
/// through the transcript cache like any other completion.
class Judge {
public:
    Judge(gateway::Gateway& gw, PromptCatalog catalog, JudgePanel panel);

    /// Throws InsufficientJudges when fewer than min_valid judges produced
    /// a parsable in-range score; per-judge failures are recorded first.
    ScalarScore score_scalar(ScalarKind kind, const std::string& text);

    /// Majority vote; any tie at the top resolves to neutral.
    SentimentResult classify_sentiment(const std::string& text);

    const PromptCatalog& catalog() const { return catalog_; }
    const JudgePanel& panel() const { return panel_; }

private:
    gateway::Gateway& gw_;
    PromptCatalog catalog_;
    JudgePanel panel_;
};

/// Similarity backend used by the truthfulness classifier.
class SimilarityScorer {
public:
    virtual ~SimilarityScorer() = default;
    virtual std::string id() const = 0;
    /// Deterministic; self-similarity is maximal. Throws EmptyInput on empty
    /// texts, ScorerUnavailable when a remote backend cannot be reached.
    virtual double score(const std::string& a, const std::string& b) = 0;
};

/// Offline baseline: token-multiset F1 over lowercased alphanumeric tokens.
class LexicalOverlapScorer : public SimilarityScorer {
public:
    std::string id() const override { return "lexical_f1"; }
    double score(const std::string& a, const std::string& b) override;
};

/// Production default: embedding endpoint + cosine similarity, cached
/// through the gateway.
class EmbeddingEndpointScorer : public SimilarityScorer {
public:
    EmbeddingEndpointScorer(gateway::Gateway& gw, gateway::EndpointConfig endpoint);
    std::string id() const override { return "embedding_cosine"; }
    double score(const std::string& a, const std::string& b) override;

private:
    gateway::Gateway& gw_;
    gateway::EndpointConfig endpoint_;
};

}  // namespace quadrant::judge
