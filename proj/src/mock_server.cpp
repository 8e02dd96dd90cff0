#include "quadrant/mock_server.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "quadrant/errors.hpp"
#include "quadrant/util.hpp"

using nlohmann::json;

namespace quadrant::mock {

namespace {

struct Rule {
    std::string model_contains;
    std::string system_contains;
    std::string user_contains;
    std::string response;
    int latency_ms = -1;
    std::shared_ptr<std::atomic<int>> fails_left;
};

std::vector<double> bag_of_words_embedding(const std::string& text) {
    constexpr size_t dim = 64;
    std::vector<double> v(dim, 0.0);
    for (const auto& token : util::tokenize(text)) {
        uint64_t h = 1469598103934665603ULL;
        for (const unsigned char c : token) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        v[h % dim] += 1.0;
    }
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : v) x /= norm;
    return v;
}

}  // namespace

struct MockServer::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    int default_latency_ms = 0;
    std::string default_response = "OK";
    std::string require_bearer;
    std::vector<Rule> rules;

    std::atomic<long> total{0};
    std::atomic<long> in_flight{0};
    std::atomic<long> peak_in_flight{0};

    void load_fixture(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open mock fixture: " + path);
        json fixture;
        try {
            in >> fixture;
        } catch (const json::parse_error& e) {
            throw ParseError("mock fixture " + path + ": " + e.what());
        }
        if (fixture.value("schema_version", 0) != 1)
            throw ValidationError("mock fixture " + path + ": unsupported schema_version");
        default_latency_ms = fixture.value("latency_ms", 0);
        default_response = fixture.value("default_response", "OK");
        require_bearer = fixture.value("require_bearer", "");
        for (const auto& r : fixture.value("rules", json::array())) {
            Rule rule;
            rule.model_contains = r.value("model_contains", "");
            rule.system_contains = r.value("system_contains", "");
            rule.user_contains = r.value("user_contains", "");
            if (!r.contains("response") || !r["response"].is_string())
                throw ValidationError("mock fixture " + path + ": rule without response text");
            rule.response = r["response"].get<std::string>();
            rule.latency_ms = r.value("latency_ms", -1);
            rule.fails_left = std::make_shared<std::atomic<int>>(r.value("fail_times", 0));
            rules.push_back(std::move(rule));
        }
    }

    struct FlightGuard {
        Impl& impl;
        explicit FlightGuard(Impl& i) : impl(i) {
            impl.total.fetch_add(1);
            const long now = impl.in_flight.fetch_add(1) + 1;
            long peak = impl.peak_in_flight.load();
            while (now > peak && !impl.peak_in_flight.compare_exchange_weak(peak, now)) {
            }
        }
        ~FlightGuard() { impl.in_flight.fetch_sub(1); }
    };

    bool check_auth(const httplib::Request& req, httplib::Response& res) const {
        if (require_bearer.empty()) return true;
        const std::string header = req.get_header_value("Authorization");
        if (header == "Bearer " + require_bearer) return true;
        res.status = 401;
        res.set_content(R"({"error": "unauthorized"})", "application/json");
        return false;
    }

    void handle_chat(const httplib::Request& req, httplib::Response& res) {
        FlightGuard guard(*this);
        if (!check_auth(req, res)) return;

        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error&) {
            res.status = 400;
            res.set_content(R"({"error": "bad json"})", "application/json");
            return;
        }
        const std::string model = body.value("model", "");
        std::string system_text, user_text;
        for (const auto& m : body.value("messages", json::array())) {
            const std::string role = m.value("role", "");
            if (role == "system") system_text = m.value("content", "");
            if (role == "user") user_text = m.value("content", "");
        }

        std::string reply = default_response;
        int latency = default_latency_ms;
        for (auto& rule : rules) {
            if (!rule.model_contains.empty() && !util::contains(model, rule.model_contains))
                continue;
            if (!rule.system_contains.empty() &&
                !util::contains(system_text, rule.system_contains))
                continue;
            if (!rule.user_contains.empty() && !util::contains(user_text, rule.user_contains))
                continue;
            if (rule.fails_left->load() > 0) {
                rule.fails_left->fetch_sub(1);
                if (rule.latency_ms >= 0) latency = rule.latency_ms;
                if (latency > 0)
                    std::this_thread::sleep_for(std::chrono::milliseconds(latency));
                res.status = 500;
                res.set_content(R"({"error": "scripted failure"})", "application/json");
                return;
            }
            reply = rule.response;
            if (rule.latency_ms >= 0) latency = rule.latency_ms;
            break;
        }
        if (latency > 0) std::this_thread::sleep_for(std::chrono::milliseconds(latency));

        json out;
        out["object"] = "chat.completion";
        out["model"] = model;
        out["choices"] =
            json::array({{{"index", 0},
                          {"message", {{"role", "assistant"}, {"content", reply}}},
                          {"finish_reason", "stop"}}});
        res.set_content(out.dump(), "application/json");
    }

    void handle_embeddings(const httplib::Request& req, httplib::Response& res) {
        FlightGuard guard(*this);
        if (!check_auth(req, res)) return;

        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error&) {
            res.status = 400;
            res.set_content(R"({"error": "bad json"})", "application/json");
            return;
        }
        if (default_latency_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(default_latency_ms));
        json data = json::array();
        int index = 0;
        for (const auto& input : body.value("input", json::array())) {
            const auto vec = bag_of_words_embedding(input.get<std::string>());
            data.push_back({{"object", "embedding"}, {"index", index++}, {"embedding", vec}});
        }
        json out;
        out["object"] = "list";
        out["model"] = body.value("model", "");
        out["data"] = data;
        res.set_content(out.dump(), "application/json");
    }
};

MockServer::MockServer() : impl_(std::make_unique<Impl>()) {}

MockServer::MockServer(const std::string& fixture_path) : impl_(std::make_unique<Impl>()) {
    impl_->load_fixture(fixture_path);
}

MockServer::~MockServer() { stop(); }

void MockServer::start() {
    impl_->server.Post("/v1/chat/completions",
                       [this](const httplib::Request& req, httplib::Response& res) {
                           impl_->handle_chat(req, res);
                       });
    impl_->server.Post("/v1/embeddings",
                       [this](const httplib::Request& req, httplib::Response& res) {
                           impl_->handle_embeddings(req, res);
                       });
    impl_->server.Get("/__admin/counters",
                      [this](const httplib::Request&, httplib::Response& res) {
                          json out;
                          out["total_requests"] = impl_->total.load();
                          out["max_in_flight"] = impl_->peak_in_flight.load();
                          res.set_content(out.dump(), "application/json");
                      });

    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) throw TransportError("mock server failed to bind a port");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void MockServer::stop() {
    if (impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

int MockServer::port() const { return impl_->port; }

std::string MockServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port);
}

long MockServer::total_requests() const { return impl_->total.load(); }

long MockServer::max_in_flight() const { return impl_->peak_in_flight.load(); }

void MockServer::reset_counters() {
    impl_->total.store(0);
    impl_->in_flight.store(0);
    impl_->peak_in_flight.store(0);
}

}  // namespace quadrant::mock
