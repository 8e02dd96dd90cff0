#include "quadrant/judge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "quadrant/errors.hpp"
#include "quadrant/util.hpp"

using nlohmann::json;

namespace quadrant::judge {

std::string to_string(ScalarKind kind) {
    switch (kind) {
        case ScalarKind::leaning: return "leaning";
        case ScalarKind::toxicity: return "toxicity";
        case ScalarKind::anger: return "anger";
    }
    return "?";
}

std::string to_string(Sentiment label) {
    switch (label) {
        case Sentiment::positive: return "positive";
        case Sentiment::neutral: return "neutral";
        case Sentiment::negative: return "negative";
    }
    return "?";
}

PromptCatalog PromptCatalog::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open prompt catalog: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError("prompt catalog " + path + ": " + e.what());
    }
    if (doc.value("schema_version", 0) != 1)
        throw ValidationError("prompt catalog " + path + ": unsupported schema_version");

    PromptCatalog cat;
    try {
        cat.version_ = doc.at("catalog_version").get<std::string>();
        const auto& j = doc.at("judge");
        cat.leaning_system_ = j.at("leaning").at("system").get<std::string>();
        cat.leaning_range_ = {j.at("leaning").at("range").at(0).get<int>(),
                              j.at("leaning").at("range").at(1).get<int>()};
        cat.metric_template_ = j.at("scored_metric_template").at("system").get<std::string>();
        cat.metric_range_ = {j.at("scored_metric_template").at("range").at(0).get<int>(),
                             j.at("scored_metric_template").at("range").at(1).get<int>()};
        for (const auto& [name, sub] : j.at("substitutions").items())
            cat.substitutions_[name] = {sub.at("metric").get<std::string>(),
                                        sub.at("definition").get<std::string>()};
        cat.sentiment_system_ = j.at("sentiment").at("system").get<std::string>();
        for (const auto& label : j.at("sentiment").at("labels"))
            cat.sentiment_labels_.push_back(label.get<std::string>());

        for (const auto& [name, entry] : doc.at("elicitation").items())
            cat.elicitation_[name] = entry.at("user_template").get<std::string>();
        cat.pct_retry_suffix_ = doc.at("elicitation").at("pct").at("retry_suffix").get<std::string>();
        for (const auto& opt : doc.at("elicitation").at("pct").at("options"))
            cat.pct_options_.push_back(opt.get<std::string>());

        for (const auto& [name, value] : doc.at("max_tokens").items())
            cat.max_tokens_[name] = value.get<int>();
    } catch (const json::exception& e) {
        throw ValidationError("prompt catalog " + path + ": " + e.what());
    }
    if (cat.substitutions_.count("toxicity") == 0 || cat.substitutions_.count("anger") == 0)
        throw ValidationError("prompt catalog " + path +
                              ": substitutions must cover toxicity and anger");
    return cat;
}

std::string PromptCatalog::judge_system(ScalarKind kind) const {
    if (kind == ScalarKind::leaning) return leaning_system_;
    const auto& [metric, definition] = substitutions_.at(to_string(kind));
    std::string prompt = util::replace_all(metric_template_, "[metric]", metric);
    return util::replace_all(std::move(prompt), "[definition]", definition);
}

std::pair<int, int> PromptCatalog::judge_range(ScalarKind kind) const {
    return kind == ScalarKind::leaning ? leaning_range_ : metric_range_;
}

std::string PromptCatalog::elicitation(const std::string& kind_key) const {
    auto it = elicitation_.find(kind_key);
    if (it == elicitation_.end())
        throw ValidationError("prompt catalog has no elicitation template '" + kind_key + "'");
    return it->second;
}

std::string PromptCatalog::render(const std::string& kind_key,
                                  const std::map<std::string, std::string>& placeholders) const {
    std::string out = elicitation(kind_key);
    for (const auto& [name, value] : placeholders)
        out = util::replace_all(std::move(out), "{" + name + "}", value);
    return out;
}

int PromptCatalog::max_tokens(const std::string& key) const {
    auto it = max_tokens_.find(key);
    if (it == max_tokens_.end())
        throw ValidationError("prompt catalog has no max_tokens entry '" + key + "'");
    return it->second;
}

int parse_integer_score(const std::string& raw, int lo, int hi) {
    const std::string trimmed = util::trim(raw);
    if (trimmed.empty()) throw ScoreParseError("empty judge reply");

    long long value = 0;
    bool parsed = false;
    try {
        size_t consumed = 0;
        value = std::stoll(trimmed, &consumed);
        parsed = consumed == trimmed.size();
    } catch (const std::exception&) {
        parsed = false;
    }
    if (!parsed) {
        const auto token = util::first_integer_token(trimmed);
        if (!token)
            throw ScoreParseError("no integer in judge reply: '" + trimmed.substr(0, 80) + "'");
        value = *token;
    }
    if (value < lo || value > hi)
        throw ScoreRangeError("judge score " + std::to_string(value) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(value);
}

Sentiment parse_sentiment_label(const std::string& raw) {
    std::set<std::string> found;
    for (const auto& token : util::tokenize(raw))
        if (token == "positive" || token == "neutral" || token == "negative") found.insert(token);
    if (found.empty())
        throw LabelParseError("no sentiment label in judge reply: '" + raw.substr(0, 80) + "'");
    if (found.size() > 1)
        throw LabelParseError("multiple sentiment labels in judge reply: '" + raw.substr(0, 80) +
                              "'");
    const std::string& label = *found.begin();
    if (label == "positive") return Sentiment::positive;
    if (label == "negative") return Sentiment::negative;
    return Sentiment::neutral;
}

double aggregate_sentiment(const std::vector<Sentiment>& labels) {
    if (labels.empty()) throw EmptyInput("aggregate_sentiment: empty label multiset");
    long positive = 0, negative = 0;
    for (const Sentiment s : labels) {
        if (s == Sentiment::positive) ++positive;
        if (s == Sentiment::negative) ++negative;
    }
    return 10.0 * static_cast<double>(positive - negative) / static_cast<double>(labels.size());
}

Judge::Judge(gateway::Gateway& gw, PromptCatalog catalog, JudgePanel panel)
    : gw_(gw), catalog_(std::move(catalog)), panel_(std::move(panel)) {
    if (panel_.judges.empty()) throw ValidationError("judge panel is empty");
    if (panel_.min_valid < 1 || panel_.min_valid > static_cast<int>(panel_.judges.size()))
        throw ValidationError("judge panel min_valid must lie in [1, judge count]");
}

ScalarScore Judge::score_scalar(ScalarKind kind, const std::string& text) {
    if (text.empty()) throw EmptyInput("score_scalar: text is empty");
    const std::string system = catalog_.judge_system(kind);
    const auto [lo, hi] = catalog_.judge_range(kind);
    gateway::Params params;
    params.temperature = 0.0;
    params.max_tokens = catalog_.max_tokens("judge_scalar");

    ScalarScore out;
    out.kind = kind;
    double sum = 0.0;
    for (const auto& judge_ep : panel_.judges) {
        try {
            const auto t = gw_.complete(judge_ep, system, text, params);
            out.cache_keys.push_back(t.cache_key);
            const int score = parse_integer_score(t.response_text, lo, hi);
            out.per_judge[judge_ep.id] = score;
            sum += score;
        } catch (const Error& e) {
            out.failures.emplace_back(judge_ep.id, std::string(e.code()) + ": " + e.what());
        }
    }
    out.valid_count = static_cast<int>(out.per_judge.size());
    if (out.valid_count < panel_.min_valid) {
        std::string detail;
        for (const auto& [id, reason] : out.failures) detail += " [" + id + "] " + reason;
        throw InsufficientJudges("only " + std::to_string(out.valid_count) + " of " +
                                 std::to_string(panel_.judges.size()) + " judges valid (need " +
                                 std::to_string(panel_.min_valid) + ");" + detail);
    }
    out.mean = sum / out.valid_count;
    return out;
}

SentimentResult Judge::classify_sentiment(const std::string& text) {
    if (text.empty()) throw EmptyInput("classify_sentiment: text is empty");
    const std::string system = catalog_.sentiment_system();
    gateway::Params params;
    params.temperature = 0.0;
    params.max_tokens = catalog_.max_tokens("judge_sentiment");

    SentimentResult out;
    std::map<Sentiment, int> votes;
    for (const auto& judge_ep : panel_.judges) {
        try {
            const auto t = gw_.complete(judge_ep, system, text, params);
            out.cache_keys.push_back(t.cache_key);
            const Sentiment label = parse_sentiment_label(t.response_text);
            out.per_judge[judge_ep.id] = label;
            ++votes[label];
        } catch (const Error& e) {
            out.failures.emplace_back(judge_ep.id, std::string(e.code()) + ": " + e.what());
        }
    }
    out.valid_count = static_cast<int>(out.per_judge.size());
    if (out.valid_count < panel_.min_valid) {
        std::string detail;
        for (const auto& [id, reason] : out.failures) detail += " [" + id + "] " + reason;
        throw InsufficientJudges("only " + std::to_string(out.valid_count) + " of " +
                                 std::to_string(panel_.judges.size()) + " judges valid (need " +
                                 std::to_string(panel_.min_valid) + ");" + detail);
    }

    int best = 0;
    for (const auto& [label, count] : votes) best = std::max(best, count);
    std::vector<Sentiment> leaders;
    for (const auto& [label, count] : votes)
        if (count == best) leaders.push_back(label);
    if (leaders.size() == 1) {
        out.label = leaders.front();
    } else {
        out.label = Sentiment::neutral;
        out.tie_broken = true;
    }
    return out;
}

double LexicalOverlapScorer::score(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) throw EmptyInput("similarity: empty text");
    auto ta = util::tokenize(a);
    auto tb = util::tokenize(b);
    if (ta.empty() && tb.empty()) return 1.0;
    if (ta.empty() || tb.empty()) return 0.0;
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());
    std::vector<std::string> shared;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(shared));
    return 2.0 * static_cast<double>(shared.size()) /
           static_cast<double>(ta.size() + tb.size());
}

EmbeddingEndpointScorer::EmbeddingEndpointScorer(gateway::Gateway& gw,
                                                 gateway::EndpointConfig endpoint)
    : gw_(gw), endpoint_(std::move(endpoint)) {}

double EmbeddingEndpointScorer::score(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) throw EmptyInput("similarity: empty text");
    if (a == b) return 1.0;
    std::vector<double> va, vb;
    try {
        va = gw_.embed(endpoint_, a);
        vb = gw_.embed(endpoint_, b);
    } catch (const AuthError& e) {
        throw ScorerUnavailable(std::string("embedding endpoint auth failure: ") + e.what());
    } catch (const TransportError& e) {
        throw ScorerUnavailable(std::string("embedding endpoint unreachable: ") + e.what());
    } catch (const EmptyResponse& e) {
        throw ScorerUnavailable(std::string("embedding endpoint returned no data: ") + e.what());
    } catch (const CacheMiss& e) {
        throw ScorerUnavailable(std::string("cache-only mode without cached embedding: ") +
                                e.what());
    }
    if (va.size() != vb.size())
        throw ScorerUnavailable("embedding endpoint returned mismatched dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < va.size(); ++i) {
        dot += va[i] * vb[i];
        na += va[i] * va[i];
        nb += vb[i] * vb[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace quadrant::judge
