#pragma once

#include <memory>
#include <string>

namespace quadrant::mock {

/// Scripted chat-completion server for offline tests. Serves
/// POST /v1/chat/completions and POST /v1/embeddings on 127.0.0.1.
///
/// Behavior is driven by a fixture: a list of rules matched first-to-last
/// against the request's model name, system prompt, and user prompt
/// (substring containment); the first match supplies the reply. A rule may
/// fail its first N matches with HTTP 500 (fail_times) or add latency.
/// Unmatched requests get the fixture's default_response.
///
/// Embeddings are deterministic hashed bag-of-words vectors, so similarity
/// scoring against this server is a pure function of the input text.
class MockServer {
public:
    MockServer();
    explicit MockServer(const std::string& fixture_path);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    /// Bind an ephemeral port on 127.0.0.1 and serve on a background thread.
    void start();
    void stop();

    int port() const;
    std::string base_url() const;

    /// Total completion/embedding requests served (admin reads excluded).
    long total_requests() const;
    /// Highest number of simultaneously in-flight requests observed.
    long max_in_flight() const;
    void reset_counters();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace quadrant::mock
