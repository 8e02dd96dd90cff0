#include "quadrant/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <fstream>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "quadrant/digest.hpp"
#include "quadrant/errors.hpp"
#include "quadrant/util.hpp"

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace quadrant::gateway {

namespace {

constexpr const char* kEmbedSentinel = "__embedding__";

int jittered_delay_ms(int base_ms, int attempt) {
    static thread_local std::mt19937 rng(std::random_device{}());
    const int ceiling = std::max(1, base_ms * (1 << std::min(attempt - 1, 16)));
    std::uniform_int_distribution<int> dist(1, ceiling);
    return dist(rng);
}

std::string resolve_bearer(const EndpointConfig& endpoint) {
    if (endpoint.auth_ref.empty()) return "";
    const char* value = std::getenv(endpoint.auth_ref.c_str());
    if (value == nullptr || *value == '\0')
        throw AuthError("environment variable '" + endpoint.auth_ref +
                        "' for endpoint '" + endpoint.id + "' is not set");
    return value;
}

}  // namespace

std::string canonical_params(const Params& params) {
    return "{\"max_tokens\":" + std::to_string(params.max_tokens) +
           ",\"temperature\":" + util::format_double(params.temperature) + "}";
}

AlignmentMode alignment_mode_from_string(const std::string& name) {
    if (name == "base") return AlignmentMode::base;
    if (name == "role_left") return AlignmentMode::role_left;
    if (name == "role_right") return AlignmentMode::role_right;
    if (name == "pretuned") return AlignmentMode::pretuned;
    throw ValidationError("unknown alignment mode: " + name);
}

std::string to_string(AlignmentMode mode) {
    switch (mode) {
        case AlignmentMode::base: return "base";
        case AlignmentMode::role_left: return "role_left";
        case AlignmentMode::role_right: return "role_right";
        case AlignmentMode::pretuned: return "pretuned";
    }
    return "?";
}

std::string apply_alignment(AlignmentMode mode) {
    switch (mode) {
        case AlignmentMode::role_left: return "You will act as a politically left-wing person.";
        case AlignmentMode::role_right: return "You will act as a politically right-wing person.";
        case AlignmentMode::base:
        case AlignmentMode::pretuned: return "";
    }
    return "";
}

std::string cache_key(const std::string& endpoint_id, const std::string& model_name,
                      const std::string& system_prompt, const std::string& user_prompt,
                      const Params& params) {
    return digest::sha256_fields_hex(
        {endpoint_id, model_name, system_prompt, user_prompt, canonical_params(params)});
}

TranscriptCache::TranscriptCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_ / "objects");
}

std::filesystem::path TranscriptCache::object_path(const std::string& key) const {
    return dir_ / "objects" / key.substr(0, 2) / (key + ".json");
}

std::optional<Transcript> TranscriptCache::lookup(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto path = object_path(key);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json rec;
    try {
        in >> rec;
    } catch (const json::parse_error& e) {
        throw ParseError("corrupt cache object " + path.string() + ": " + e.what());
    }
    Transcript t;
    t.cache_key = rec.at("cache_key").get<std::string>();
    t.endpoint_id = rec.at("endpoint_id").get<std::string>();
    t.model_name = rec.at("model_name").get<std::string>();
    t.system_prompt = rec.at("system_prompt").get<std::string>();
    t.user_prompt = rec.at("user_prompt").get<std::string>();
    t.params.temperature = rec.at("params").at("temperature").get<double>();
    t.params.max_tokens = rec.at("params").at("max_tokens").get<int>();
    t.response_text = rec.at("response_text").get<std::string>();
    t.created_at = rec.at("created_at").get<std::string>();
    t.attempt_count = rec.at("attempt_count").get<int>();
    t.from_cache = true;
    return t;
}

void TranscriptCache::store(const Transcript& transcript) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto path = object_path(transcript.cache_key);
    {
        std::ifstream existing(path);
        if (existing) {
            json rec;
            existing >> rec;
            if (rec.at("response_text").get<std::string>() != transcript.response_text)
                throw CacheConflict("cache key " + transcript.cache_key +
                                    " already stored with different response_text");
            return;
        }
    }
    ordered_json rec;
    rec["schema_version"] = 1;
    rec["cache_key"] = transcript.cache_key;
    rec["endpoint_id"] = transcript.endpoint_id;
    rec["model_name"] = transcript.model_name;
    rec["system_prompt"] = transcript.system_prompt;
    rec["user_prompt"] = transcript.user_prompt;
    rec["params"] = {{"temperature", transcript.params.temperature},
                     {"max_tokens", transcript.params.max_tokens}};
    rec["response_text"] = transcript.response_text;
    rec["created_at"] = transcript.created_at;
    rec["attempt_count"] = transcript.attempt_count;
    util::atomic_write_file(path, rec.dump(2) + "\n");

    ordered_json index_line;
    index_line["cache_key"] = transcript.cache_key;
    index_line["endpoint_id"] = transcript.endpoint_id;
    index_line["created_at"] = transcript.created_at;
    std::ofstream index(dir_ / "index.jsonl", std::ios::app);
    index << index_line.dump() << "\n";
}

struct Gateway::EndpointState {
    std::mutex mu;
    std::condition_variable cv;
    int in_flight = 0;
    int max_concurrent = 1;
    double tokens = 0.0;
    double capacity = 1.0;  // one second's worth of budget, so bursts stay bounded
    double per_minute = 1.0;
    std::chrono::steady_clock::time_point last_refill = std::chrono::steady_clock::now();

    void refill_locked() {
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_refill).count();
        last_refill = now;
        tokens = std::min(capacity, tokens + elapsed * per_minute / 60.0);
    }

    void acquire_token() {
        std::unique_lock<std::mutex> lock(mu);
        for (;;) {
            refill_locked();
            if (tokens >= 1.0) {
                tokens -= 1.0;
                return;
            }
            const double wait_s = (1.0 - tokens) * 60.0 / per_minute;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
            lock.lock();
        }
    }

    void acquire_slot() {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return in_flight < max_concurrent; });
        ++in_flight;
    }

    void release_slot() {
        {
            std::lock_guard<std::mutex> lock(mu);
            --in_flight;
        }
        cv.notify_one();
    }
};

Gateway::Gateway(std::filesystem::path cache_dir, Options options)
    : cache_(std::move(cache_dir)), options_(options) {}

Gateway::~Gateway() = default;

Gateway::EndpointState& Gateway::state_for(const EndpointConfig& endpoint) {
    std::lock_guard<std::mutex> lock(states_mu_);
    auto& slot = states_[endpoint.id];
    if (!slot) {
        slot = std::make_unique<EndpointState>();
        slot->max_concurrent = std::max(1, endpoint.max_concurrent);
        slot->per_minute = std::max(1, endpoint.requests_per_minute);
        slot->capacity = std::max(1.0, slot->per_minute / 60.0);
        slot->tokens = slot->capacity;
    }
    return *slot;
}

Gateway::WireResult Gateway::post_once(const EndpointConfig& endpoint, const std::string& path,
                                       const std::string& body, const std::string& bearer) {
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(options_.connect_timeout_s, 0);
    client.set_read_timeout(options_.read_timeout_s, 0);
    httplib::Headers headers;
    if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
}

std::string Gateway::request_with_policy(const EndpointConfig& endpoint, const std::string& path,
                                         const std::string& body, int& attempts_out) {
    const std::string bearer = resolve_bearer(endpoint);
    EndpointState& state = state_for(endpoint);
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        attempts_out = attempt;
        state.acquire_token();
        state.acquire_slot();
        WireResult wire;
        try {
            wire = post_once(endpoint, path, body, bearer);
        } catch (...) {
            state.release_slot();
            throw;
        }
        state.release_slot();

        if (wire.status == 200) return wire.body;
        if (wire.status == 401 || wire.status == 403)
            throw AuthError("endpoint '" + endpoint.id + "' rejected credentials (HTTP " +
                            std::to_string(wire.status) + ")");
        const bool retryable = wire.status == 0 || wire.status == 429 || wire.status >= 500;
        if (wire.status == 0) {
            last_error = "connection to " + endpoint.base_url + " failed: " + wire.conn_error;
        } else {
            last_error = "HTTP " + std::to_string(wire.status) +
                         (wire.body.empty() ? "" : ": " + wire.body.substr(0, 200));
        }
        if (!retryable)
            throw TransportError("endpoint '" + endpoint.id +
                                 "' non-retryable failure: " + last_error);
        if (attempt < options_.max_attempts)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(jittered_delay_ms(options_.backoff_base_ms, attempt)));
    }
    throw TransportError("endpoint '" + endpoint.id + "': " +
                         std::to_string(options_.max_attempts) +
                         " attempts exhausted; last error: " + last_error);
}

Transcript Gateway::perform(const EndpointConfig& endpoint, const std::string& system_prompt,
                            const std::string& user_prompt, const Params& params,
                            const std::string& key) {
    json body;
    body["model"] = endpoint.model_name;
    json messages = json::array();
    if (!system_prompt.empty())
        messages.push_back({{"role", "system"}, {"content", system_prompt}});
    messages.push_back({{"role", "user"}, {"content", user_prompt}});
    body["messages"] = messages;
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;

    int attempts = 0;
    const std::string raw =
        request_with_policy(endpoint, "/v1/chat/completions", body.dump(), attempts);

    std::string text;
    try {
        const json parsed = json::parse(raw);
        if (parsed.contains("choices") && !parsed["choices"].empty())
            text = parsed["choices"][0].at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError("endpoint '" + endpoint.id +
                             "' returned unparsable completion body: " + std::string(e.what()));
    }
    if (text.empty())
        throw EmptyResponse("endpoint '" + endpoint.id + "' returned no text for prompt: " +
                            user_prompt.substr(0, 80));

    Transcript t;
    t.cache_key = key;
    t.endpoint_id = endpoint.id;
    t.model_name = endpoint.model_name;
    t.system_prompt = system_prompt;
    t.user_prompt = user_prompt;
    t.params = params;
    t.response_text = text;
    t.created_at = util::iso8601_utc_now();
    t.attempt_count = attempts;
    cache_.store(t);
    return t;
}

Transcript Gateway::complete(const EndpointConfig& endpoint, const std::string& system_prompt,
                             const std::string& user_prompt, const Params& params) {
    if (user_prompt.empty()) throw EmptyInput("complete: user prompt is empty");
    const std::string key =
        cache_key(endpoint.id, endpoint.model_name, system_prompt, user_prompt, params);
    if (auto cached = cache_.lookup(key)) return *cached;
    if (options_.cache_only)
        throw CacheMiss("cache-only mode: no transcript for endpoint '" + endpoint.id +
                        "' prompt: " + user_prompt.substr(0, 80));
    return perform(endpoint, system_prompt, user_prompt, params, key);
}

std::vector<double> Gateway::embed(const EndpointConfig& endpoint, const std::string& text) {
    if (text.empty()) throw EmptyInput("embed: text is empty");
    const Params params{0.0, 0};
    const std::string key =
        cache_key(endpoint.id, endpoint.model_name, kEmbedSentinel, text, params);

    std::string vector_json;
    if (auto cached = cache_.lookup(key)) {
        vector_json = cached->response_text;
    } else {
        if (options_.cache_only)
            throw CacheMiss("cache-only mode: no embedding for text: " + text.substr(0, 80));
        json body;
        body["model"] = endpoint.model_name;
        body["input"] = json::array({text});
        int attempts = 0;
        const std::string raw =
            request_with_policy(endpoint, "/v1/embeddings", body.dump(), attempts);
        try {
            const json parsed = json::parse(raw);
            vector_json = parsed.at("data").at(0).at("embedding").dump();
        } catch (const json::exception& e) {
            throw TransportError("endpoint '" + endpoint.id +
                                 "' returned unparsable embedding body: " + std::string(e.what()));
        }
        if (vector_json.empty() || vector_json == "[]")
            throw EmptyResponse("endpoint '" + endpoint.id + "' returned an empty embedding");

        Transcript t;
        t.cache_key = key;
        t.endpoint_id = endpoint.id;
        t.model_name = endpoint.model_name;
        t.system_prompt = kEmbedSentinel;
        t.user_prompt = text;
        t.params = params;
        t.response_text = vector_json;
        t.created_at = util::iso8601_utc_now();
        t.attempt_count = attempts;
        cache_.store(t);
    }

    const json arr = json::parse(vector_json);
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) out.push_back(v.get<double>());
    return out;
}

}  // namespace quadrant::gateway
