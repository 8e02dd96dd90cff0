#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadrant/commands.hpp"
#include "quadrant/digest.hpp"
#include "quadrant/errors.hpp"
#include "quadrant/mock_server.hpp"
#include "quadrant/util.hpp"

using namespace quadrant;
using namespace quadrant::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = QUADRANT_DATA_DIR;
const int kEnvReady = (::setenv("QUADRANT_MOCK_KEY", "mock-token", 1), 0);

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    auto path = fs::temp_directory_path() /
                ("quadrant_clitest_" + std::to_string(::getpid()) + "_" + tag + "_" +
                 std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
    return path;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

json endpoint_json(const std::string& id, const std::string& model, int port) {
    return {{"id", id},
            {"base_url", "http://127.0.0.1:" + std::to_string(port)},
            {"model_name", model},
            {"auth_ref", "QUADRANT_MOCK_KEY"},
            {"max_concurrent", 4},
            {"requests_per_minute", 100000}};
}

/// Manifest over the shipped batteries and mock fixture, with the given runs.
json base_manifest(int port, const fs::path& work, const json& runs) {
    json m;
    m["schema_version"] = 1;
    m["endpoints"] = json::array({endpoint_json("subject", "mock-subject", port),
                                  endpoint_json("judge-a", "mock-judge-a", port),
                                  endpoint_json("judge-b", "mock-judge-b", port),
                                  endpoint_json("judge-c", "mock-judge-c", port)});
    m["runs"] = runs;
    m["batteries"] = {{"pct", kData + "/batteries/pct.jsonl"},
                      {"directed", kData + "/batteries/directed.jsonl"},
                      {"mmlu", kData + "/batteries/mmlu.jsonl"},
                      {"figures", kData + "/batteries/figures.jsonl"},
                      {"profiles", kData + "/batteries/profiles.jsonl"},
                      {"truthful", kData + "/batteries/truthful.jsonl"},
                      {"persuasion", kData + "/batteries/persuasion.jsonl"}};
    m["category_map"] = kData + "/category_map.txt";
    m["prompt_catalog"] = kData + "/prompt_catalog.json";
    m["judge"] = {{"endpoint_ids", {"judge-a", "judge-b", "judge-c"}}, {"min_valid", 2}};
    m["similarity"] = {{"kind", "lexical_f1"}};
    m["cache_dir"] = (work / "cache").string();
    m["output_dir"] = (work / "out").string();
    return m;
}

fs::path write_manifest(const fs::path& work, const json& manifest) {
    auto path = work / "manifest.json";
    write_text(path, manifest.dump(2) + "\n");
    return path;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

/// A minimal run report carrying only a metrics map, as cmd_correlate inputs.
fs::path synthetic_run_report(const fs::path& dir, const std::string& run_id,
                              const std::map<std::string, double>& metrics) {
    json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "run_report";
    doc["manifest_digest"] = "0";
    doc["prompt_catalog_version"] = "1.0.0";
    doc["run"] = {{"id", run_id}, {"endpoint_id", "subject"}, {"directive", "base"}};
    doc["metrics"] = metrics;
    auto path = dir / ("report_" + run_id + ".json");
    write_text(path, doc.dump(2) + "\n");
    return path;
}

std::string file_bytes(const fs::path& path) { return util::read_file(path.string()); }

pid_t dead_pid() {
    pid_t child = ::fork();
    REQUIRE(child >= 0);
    if (child == 0) ::_exit(0);
    int status = 0;
    ::waitpid(child, &status, 0);
    return child;
}

struct Server {
    mock::MockServer srv;
    Server() : srv(kData + "/fixtures/mock_rules.json") { srv.start(); }
    ~Server() { srv.stop(); }
};

}  // namespace

TEST_CASE("validate collects every manifest defect with its location") {
    auto work = fresh_dir("validate_bad");
    json m = base_manifest(12345, work, json::array());
    m["runs"] = json::array(
        {json{{"id", "a"}, {"endpoint_id", "nope"}, {"directive", "base"}},
         json{{"id", "b"}, {"endpoint_id", "subject"}, {"directive", "sideways"}},
         json{{"id", "c"}, {"endpoint_id", "subject"}, {"directive", "base"}, {"lean", "left"}},
         json{{"id", "c"}, {"endpoint_id", "subject"}, {"directive", "base"}}});
    m["batteries"]["pct"] = (work / "missing.jsonl").string();
    m["judge"]["min_valid"] = 9;
    auto path = write_manifest(work, m);

    std::ostringstream out, err;
    CHECK(cmd_validate(path.string(), out, err) == kExitValidation);
    const std::string text = err.str();
    CHECK(text.find(path.string()) != std::string::npos);
    CHECK(text.find("nope") != std::string::npos);
    CHECK(text.find("sideways") != std::string::npos);
    CHECK(text.find("lean") != std::string::npos);
    CHECK(text.find("missing.jsonl") != std::string::npos);
    CHECK(text.find("min_valid") != std::string::npos);
    CHECK(text.find("'c'") != std::string::npos);
    int defects = 0;
    for (char ch : text)
        if (ch == '\n') ++defects;
    CHECK(defects >= 5);
}

TEST_CASE("validate accepts a complete manifest without touching the network") {
    auto work = fresh_dir("validate_ok");
    json runs = json::array({json{{"id", "base"}, {"endpoint_id", "subject"},
                                  {"directive", "base"}}});
    auto path = write_manifest(work, base_manifest(1, work, runs));

    std::ostringstream out, err;
    CHECK(cmd_validate(path.string(), out, err) == kExitOk);
    CHECK(err.str().empty());
    const std::string text = out.str();
    CHECK(text.find("OK") != std::string::npos);
    CHECK(text.find("digest") != std::string::npos);
    CHECK(text.find("truthful 259") != std::string::npos);
    CHECK(text.find(digest::sha256_hex(file_bytes(path))) != std::string::npos);
}

TEST_CASE("run restricted to one dimension emits only that section") {
    Server server;
    auto work = fresh_dir("run_dims");
    json runs = json::array({json{{"id", "base"}, {"endpoint_id", "subject"},
                                  {"directive", "base"}}});
    auto path = write_manifest(work, base_manifest(server.srv.port(), work, runs));

    RunFlags flags;
    flags.dimensions = {"truthfulness"};
    std::ostringstream out, err;
    CHECK(cmd_run(path.string(), flags, out, err) == kExitOk);

    json report = read_json(work / "out" / "report_base.json");
    CHECK(report.contains("truthfulness"));
    CHECK_FALSE(report.contains("effectiveness"));
    CHECK_FALSE(report.contains("fairness"));
    CHECK(report["metrics"].contains("t_sens"));
    CHECK_FALSE(report["metrics"].contains("e_econ"));
    CHECK(report["manifest_digest"] == digest::sha256_hex(file_bytes(path)));
    CHECK(report["prompt_catalog_version"] == "1.0.0");
    CHECK(report["normalized"]["t_sens"].get<double>() == 90.0);

    json audit = read_json(work / "out" / "audit.json");
    CHECK(audit["correlation"].contains("unavailable"));

    SUBCASE("unknown dimension name is a validation error") {
        RunFlags bad;
        bad.dimensions = {"veracity"};
        std::ostringstream o2, e2;
        CHECK(cmd_run(path.string(), bad, o2, e2) == kExitValidation);
        CHECK(e2.str().find("veracity") != std::string::npos);
    }
}

TEST_CASE("cache-only run without cached transcripts fails with transport exit") {
    Server server;
    auto work = fresh_dir("run_cacheonly");
    json runs = json::array({json{{"id", "base"}, {"endpoint_id", "subject"},
                                  {"directive", "base"}}});
    auto path = write_manifest(work, base_manifest(server.srv.port(), work, runs));

    RunFlags flags;
    flags.dimensions = {"truthfulness"};
    flags.cache_only = true;
    std::ostringstream out, err;
    CHECK(cmd_run(path.string(), flags, out, err) == kExitTransport);
    CHECK(out.str().find("CacheMiss") != std::string::npos);
    CHECK(server.srv.total_requests() == 0);

    json report = read_json(work / "out" / "report_base.json");
    REQUIRE(report["errors"].size() == 1);
    const std::string msg = report["errors"][0].get<std::string>();
    CHECK(msg.find("truthfulness") != std::string::npos);
    CHECK(msg.find("CacheMiss") != std::string::npos);
}

TEST_CASE("output directory lock excludes concurrent audits") {
    Server server;
    auto work = fresh_dir("run_lock");
    json runs = json::array({json{{"id", "base"}, {"endpoint_id", "subject"},
                                  {"directive", "base"}}});
    auto path = write_manifest(work, base_manifest(server.srv.port(), work, runs));
    fs::create_directories(work / "out");
    auto lock = work / "out" / ".audit.lock";

    RunFlags flags;
    flags.dimensions = {"truthfulness"};

    SUBCASE("live holder wins") {
        write_text(lock, std::to_string(::getpid()) + "\n");
        std::ostringstream out, err;
        CHECK(cmd_run(path.string(), flags, out, err) == kExitValidation);
        CHECK(err.str().find("locked by running process") != std::string::npos);
    }

    SUBCASE("stale lock needs --resume") {
        write_text(lock, std::to_string(dead_pid()) + "\n");
        std::ostringstream out, err;
        CHECK(cmd_run(path.string(), flags, out, err) == kExitValidation);
        CHECK(err.str().find("stale lock") != std::string::npos);
        CHECK(err.str().find("--resume") != std::string::npos);

        flags.resume = true;
        std::ostringstream out2, err2;
        CHECK(cmd_run(path.string(), flags, out2, err2) == kExitOk);
        CHECK_FALSE(fs::exists(lock));
    }
}

TEST_CASE("commands never mutate batteries or cached transcripts") {
    Server server;
    auto work = fresh_dir("run_nomutate");
    json runs = json::array({json{{"id", "base"}, {"endpoint_id", "subject"},
                                  {"directive", "base"}}});
    auto path = write_manifest(work, base_manifest(server.srv.port(), work, runs));

    RunFlags flags;
    flags.dimensions = {"truthfulness"};
    std::ostringstream out, err;
    REQUIRE(cmd_run(path.string(), flags, out, err) == kExitOk);

    auto snapshot = [&] {
        std::map<std::string, std::string> hashes;
        hashes["battery"] = digest::sha256_hex(file_bytes(kData + "/batteries/truthful.jsonl"));
        for (const auto& entry : fs::recursive_directory_iterator(work / "cache"))
            if (entry.is_regular_file())
                hashes[entry.path().string()] = digest::sha256_hex(file_bytes(entry.path()));
        return hashes;
    };
    const auto before = snapshot();
    REQUIRE(before.size() > 100);

    std::ostringstream o2, e2;
    REQUIRE(cmd_run(path.string(), flags, o2, e2) == kExitOk);
    std::ostringstream o3, e3;
    std::vector<std::string> reports = {(work / "out" / "report_base.json").string()};
    cmd_correlate(reports, {}, "", o3, e3);
    CHECK(snapshot() == before);
}

TEST_CASE("correlate needs at least three runs") {
    auto work = fresh_dir("corr_few");
    auto a = synthetic_run_report(work, "alpha", {{"e_llm", 1.0}});
    auto b = synthetic_run_report(work, "beta", {{"e_llm", 2.0}});

    std::ostringstream out, err;
    CHECK(cmd_correlate({a.string(), b.string()}, {}, "", out, err) == kExitValidation);
    CHECK(err.str().find("TooFewPoints") != std::string::npos);
    CHECK(err.str().find("have 2") != std::string::npos);
}

TEST_CASE("correlate flags perfectly proportional metrics") {
    auto work = fresh_dir("corr_prop");
    std::vector<std::string> paths;
    for (int k = 0; k < 4; ++k) {
        auto p = synthetic_run_report(work, "run" + std::to_string(k),
                                      {{"e_llm", 1.0 * k}, {"f_sent", 2.0 * k + 1.0}});
        paths.push_back(p.string());
    }

    auto json_out = work / "matrix.json";
    std::ostringstream out, err;
    CHECK(cmd_correlate(paths, {}, json_out.string(), out, err) == kExitOk);
    CHECK(out.str().find("1.00 ***") != std::string::npos);

    json matrix = read_json(json_out);
    REQUIRE(matrix["metric_ids"] == json::array({"e_llm", "f_sent"}));
    const auto& cell = matrix["cells"][0][1];
    CHECK(cell["display"] == "1.00 ***");
    CHECK(cell["r"].get<double>() == 1.0);
    CHECK(cell["p"].get<double>() == 0.0);
    CHECK(cell["n"] == 4);

    SUBCASE("run filter below three runs is rejected") {
        std::ostringstream o2, e2;
        CHECK(cmd_correlate(paths, {"run0", "run1"}, "", o2, e2) == kExitValidation);
        CHECK(e2.str().find("TooFewPoints") != std::string::npos);
    }

    SUBCASE("run filter is recorded in the matrix") {
        std::ostringstream o2, e2;
        CHECK(cmd_correlate(paths, {"run0", "run1", "run2"}, json_out.string(), o2, e2) ==
              kExitOk);
        json filtered = read_json(json_out);
        CHECK(filtered["run_filter"] == "run0,run1,run2");
        CHECK(filtered["cells"][0][1]["n"] == 3);
    }
}

TEST_CASE("correlate rejects duplicate run ids across inputs") {
    auto work = fresh_dir("corr_dup");
    auto a = synthetic_run_report(work, "alpha", {{"e_llm", 1.0}});

    std::ostringstream out, err;
    CHECK(cmd_correlate({a.string(), a.string()}, {}, "", out, err) == kExitValidation);
    CHECK(err.str().find("duplicate run id 'alpha'") != std::string::npos);
}

TEST_CASE("survey verb validates model ids and filtering") {
    Server server;
    auto work = fresh_dir("survey");
    json runs = json::array({json{{"id", "base"}, {"endpoint_id", "subject"},
                                  {"directive", "base"}}});
    auto path = write_manifest(work, base_manifest(server.srv.port(), work, runs));
    RunFlags flags;
    flags.dimensions = {"truthfulness"};
    std::ostringstream out, err;
    REQUIRE(cmd_run(path.string(), flags, out, err) == kExitOk);
    const auto audit = (work / "out" / "audit.json").string();
    const auto columns = kData + "/survey_columns.json";

    SUBCASE("unknown model id is reported by name") {
        std::ostringstream o2, e2;
        CHECK(cmd_survey(kData + "/fixtures/survey_sample.csv", audit, columns, o2, e2) ==
              kExitValidation);
        CHECK(e2.str().find("UnknownModelId") != std::string::npos);
        CHECK(e2.str().find("role-left") != std::string::npos);
    }

    SUBCASE("a run whose records all fail attention is surfaced") {
        auto csv = work / "all_failed.csv";
        write_text(csv,
                   "worker_id,political_party,topic,model,stance,pre_agreement,"
                   "post_agreement,perceived_persuasiveness,attention_check\n"
                   "w1,republican,top01,base,for,40,60,70,0\n"
                   "w2,democrat,top02,base,for,50,50,50,no\n");
        std::ostringstream o2, e2;
        CHECK(cmd_survey(csv.string(), audit, columns, o2, e2) == kExitPartial);
        CHECK(e2.str().find("EmptyAfterFiltering") != std::string::npos);
    }

    SUBCASE("broken column map is a schema error") {
        auto cols = work / "columns.json";
        write_text(cols, R"({"schema_version": 1, "columns": {"respondent_id": "worker_id"}})");
        std::ostringstream o2, e2;
        CHECK(cmd_survey(kData + "/fixtures/survey_sample.csv", audit, cols.string(), o2,
                         e2) == kExitValidation);
        CHECK(e2.str().find("SchemaError") != std::string::npos);
    }

    SUBCASE("matching records update metrics and reports") {
        auto csv = work / "base_only.csv";
        write_text(csv,
                   "worker_id,political_party,topic,model,stance,pre_agreement,"
                   "post_agreement,perceived_persuasiveness,attention_check\n"
                   "w1,republican,top01,base,for,40,60,70,pass\n"
                   "w2,democrat,top02,base,for,50,70,80,yes\n"
                   "w3,democrat,top01,base,for,30,20,10,1\n");
        std::ostringstream o2, e2;
        CHECK(cmd_survey(csv.string(), audit, columns, o2, e2) == kExitOk);
        json doc = read_json(audit);
        const auto& entry = doc["runs"][0];
        CHECK(entry["run"]["id"] == "base");
        CHECK(entry["metrics"]["p_delta"].get<double>() == 10.0);
        CHECK(entry["persuasion"]["n_respondents"] == 3);
        CHECK(entry["persuasion"]["shift_by_party"]["republican"].get<double>() == 20.0);
        CHECK(entry["persuasion"]["shift_by_party"]["democrat"].get<double>() == 5.0);
    }
}
