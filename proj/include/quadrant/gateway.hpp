#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace quadrant::gateway {

/// Sampling parameters sent with every completion and folded into cache keys.
struct Params {
    double temperature = 0.0;
    int max_tokens = 256;
};

/// Canonical single-line rendering of Params: sorted keys, shortest-round-trip
/// numbers. Equal params always render identically.
std::string canonical_params(const Params& params);

enum class AlignmentMode { base, role_left, role_right, pretuned };

AlignmentMode alignment_mode_from_string(const std::string& name);
std::string to_string(AlignmentMode mode);

/// System prompt fragment for a run's alignment directive. Role-play modes
/// return the role sentence; base and pretuned return the empty fragment
/// (a pretuned endpoint carries its alignment in the weights).
std::string apply_alignment(AlignmentMode mode);

struct EndpointConfig {
    std::string id;
    std::string base_url;
    std::string model_name;
    std::string auth_ref;  // environment variable holding the bearer token; empty = no auth
    int max_concurrent = 4;
    int requests_per_minute = 600;
    Params default_params;
};

struct Transcript {
    std::string cache_key;
    std::string endpoint_id;
    std::string model_name;
    std::string system_prompt;
    std::string user_prompt;
    Params params;
    std::string response_text;
    std::string created_at;
    int attempt_count = 1;
    bool from_cache = false;
};

/// Content address of a completion request: SHA-256 over the length-prefixed
/// request fields. Any byte difference in any field changes the key.
std::string cache_key(const std::string& endpoint_id, const std::string& model_name,
                      const std::string& system_prompt, const std::string& user_prompt,
                      const Params& params);

/// Append-only transcript store: one JSON file per transcript under
/// objects/<2-hex-prefix>/<key>.json plus an index.jsonl of stored keys.
/// A key is never overwritten with different response_text (CacheConflict).
class TranscriptCache {
public:
    explicit TranscriptCache(std::filesystem::path dir);

    std::optional<Transcript> lookup(const std::string& key) const;
    void store(const Transcript& transcript);
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path object_path(const std::string& key) const;

    std::filesystem::path dir_;
    mutable std::mutex mu_;
};

struct GatewayOptions {
    int max_attempts = 5;
    int backoff_base_ms = 200;
    bool cache_only = false;
    int connect_timeout_s = 10;
    int read_timeout_s = 120;
};

/// HTTP chat-completion client with per-endpoint concurrency bounds, a
/// per-endpoint requests-per-minute token bucket, bounded retries with
/// exponential backoff and jitter, and the transcript cache in front.
class Gateway {
public:
    using Options = GatewayOptions;

    Gateway(std::filesystem::path cache_dir, Options options = Options());
    ~Gateway();

    /// Cached transcript if present, else a live completion. Throws AuthError
    /// (bad credentials or missing auth env var), TransportError (retries
    /// exhausted or non-retryable HTTP failure), EmptyResponse (status 200
    /// with no text), CacheMiss (cache_only mode and key absent).
    Transcript complete(const EndpointConfig& endpoint, const std::string& system_prompt,
                        const std::string& user_prompt, const Params& params);

    /// Embedding vector for one text via the endpoint's /v1/embeddings route,
    /// cached like a completion. Same error contract as complete().
    std::vector<double> embed(const EndpointConfig& endpoint, const std::string& text);

    TranscriptCache& cache() { return cache_; }
    const Options& options() const { return options_; }

private:
    struct EndpointState;
    struct WireResult {
        int status = 0;  // 0 = connection failure
        std::string body;
        std::string conn_error;
    };
    EndpointState& state_for(const EndpointConfig& endpoint);
    Transcript perform(const EndpointConfig& endpoint, const std::string& system_prompt,
                       const std::string& user_prompt, const Params& params,
                       const std::string& key);
    WireResult post_once(const EndpointConfig& endpoint, const std::string& path,
                         const std::string& body, const std::string& bearer);
    std::string request_with_policy(const EndpointConfig& endpoint, const std::string& path,
                                    const std::string& body, int& attempts_out);

    TranscriptCache cache_;
    Options options_;
    std::mutex states_mu_;
    std::map<std::string, std::unique_ptr<EndpointState>> states_;
};

}  // namespace quadrant::gateway
