#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

#include "jitanon/cluster_stats.hpp"
#include "jitanon/errors.hpp"
#include "jitanon/model_client.hpp"
#include "jitanon/paramgen.hpp"

#include "support/helpers.hpp"

namespace {

// In-process chat-completions stand-in bound to an ephemeral port.
struct MockServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }

    ~MockServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

jitanon::ModelEndpointConfig endpoint_for(const MockServer& mock, int max_retries = 0) {
    jitanon::ModelEndpointConfig cfg;
    cfg.base_url = mock.url();
    cfg.model_name = "test-model";
    cfg.max_retries = max_retries;
    cfg.timeout = std::chrono::seconds(5);
    return cfg;
}

std::string chat_reply(const std::string& content) {
    nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
    return reply.dump();
}

jitanon::Prompt trivial_prompt() {
    return {"system text", "user text. Return the JSON parameter object for cluster ndev|2."};
}

jitanon::ClusterStats make_stats(const std::string& id, std::int64_t count) {
    jitanon::ClusterStats s;
    s.cluster_id = id;
    s.count = count;
    s.churn = {10, 20, 50, 100, 150, 250, 400};
    s.ratio = {0.0, 0.05, 0.2, 0.4, 0.6, 0.9, 1.0};
    s.la = {5, 10, 25, 50, 75, 120, 200};
    s.ld = {5, 10, 25, 50, 75, 130, 200};
    s.bin_left = 2.0;
    s.bin_right = 4.0;
    return s;
}

std::string params_text_for(const std::string& cluster_id) {
    nlohmann::json p = {
        {"cluster_id", cluster_id},
        {"churn_mixture",
         {{"components", {{{"weight", 0.6}, {"mean", 80.0}, {"std", 20.0}},
                          {{"weight", 0.4}, {"mean", 220.0}, {"std", 45.0}}}},
          {"min", 10},
          {"max", 400}}},
        {"ratio_beta", {{"alpha", 2.0}, {"beta", 3.0}}},
        {"constraints", {{"non_negative", true}, {"la_plus_ld_equals_churn", true}}},
    };
    return p.dump();
}

// Pulls the trailing "... for cluster <id>." out of the prompt user message.
std::string cluster_from_user_message(const std::string& user) {
    const std::string marker = "for cluster ";
    const auto pos = user.rfind(marker);
    REQUIRE(pos != std::string::npos);
    std::string id = user.substr(pos + marker.size());
    while (!id.empty() && (id.back() == '.' || id.back() == '\n' || id.back() == ' ')) id.pop_back();
    return id;
}

}  // namespace

TEST_CASE("request body pins the chat completion wire shape") {
    jitanon::ModelEndpointConfig cfg;
    cfg.base_url = "http://localhost:1/v1/chat/completions";
    cfg.model_name = "anon-model-7";
    cfg.temperature = 0.0;
    cfg.top_p = 0.0;
    jitanon::ModelClient client(cfg);

    const auto body = client.build_request_body({"sys", "usr"});
    CHECK(body["model"] == "anon-model-7");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["top_p"] == 0.0);
    REQUIRE(body["messages"].size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "sys");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "usr");
}

TEST_CASE("prose-wrapped reply yields just the JSON object") {
    MockServer mock;
    std::atomic<int> hits{0};
    std::string seen_auth, seen_model;
    mock.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        seen_auth = req.get_header_value("Authorization");
        seen_model = nlohmann::json::parse(req.body)["model"];
        res.set_content(chat_reply("Here are the parameters:\n" + params_text_for("ndev|2") +
                                   "\nLet me know if you need anything else."),
                        "application/json");
    });
    mock.start();

    setenv("JITANON_TEST_KEY", "sekrit", 1);
    auto cfg = endpoint_for(mock);
    cfg.api_key_env = "JITANON_TEST_KEY";
    jitanon::ModelClient client(cfg);

    const std::string raw = client.request_params(trivial_prompt(), "ndev|2");
    const auto parsed = nlohmann::json::parse(raw);
    CHECK(parsed["cluster_id"] == "ndev|2");
    CHECK(parsed["churn_mixture"]["components"].size() == 2);
    CHECK(hits == 1);
    CHECK(seen_auth == "Bearer sekrit");
    CHECK(seen_model == "test-model");
    unsetenv("JITANON_TEST_KEY");
}

TEST_CASE("legacy text completions are accepted") {
    MockServer mock;
    mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        nlohmann::json reply = {{"choices", {{{"text", params_text_for("nf|0")}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    mock.start();

    jitanon::ModelClient client(endpoint_for(mock));
    const auto parsed = nlohmann::json::parse(client.request_params(trivial_prompt(), "nf|0"));
    CHECK(parsed["cluster_id"] == "nf|0");
}

TEST_CASE("persistent server errors exhaust retries and throw MalformedResponse") {
    MockServer mock;
    std::atomic<int> hits{0};
    mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 500;
        res.set_content("overloaded", "text/plain");
    });
    mock.start();

    jitanon::ModelClient client(endpoint_for(mock, 2));
    CHECK_THROWS_AS(client.request_params(trivial_prompt(), "ndev|2"), jitanon::MalformedResponse);
    CHECK(hits == 3);  // max_retries + 1 attempts
}

TEST_CASE("reply without any JSON object throws MalformedResponse") {
    MockServer mock;
    mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(chat_reply("I cannot produce parameters for this cluster."), "application/json");
    });
    mock.start();

    jitanon::ModelClient client(endpoint_for(mock));
    CHECK_THROWS_AS(client.request_params(trivial_prompt(), "ndev|2"), jitanon::MalformedResponse);
}

TEST_CASE("non-JSON body throws MalformedResponse") {
    MockServer mock;
    mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("<html>gateway</html>", "text/html");
    });
    mock.start();

    jitanon::ModelClient client(endpoint_for(mock));
    CHECK_THROWS_AS(client.request_params(trivial_prompt(), "ndev|2"), jitanon::MalformedResponse);
}

TEST_CASE("unreachable endpoint throws EndpointUnreachable") {
    int free_port;
    {
        MockServer probe;
        probe.start();
        free_port = probe.port;
    }  // destructor closes the socket, so the port now refuses connections

    jitanon::ModelEndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(free_port) + "/v1/chat/completions";
    cfg.model_name = "test-model";
    cfg.max_retries = 1;
    cfg.timeout = std::chrono::seconds(2);
    jitanon::ModelClient client(cfg);
    CHECK_THROWS_AS(client.request_params(trivial_prompt(), "ndev|2"), jitanon::EndpointUnreachable);
}

TEST_CASE("transient failures recover on a later attempt") {
    MockServer mock;
    std::atomic<int> hits{0};
    mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (++hits < 3) {
            res.status = 503;
            res.set_content("warming up", "text/plain");
            return;
        }
        res.set_content(chat_reply(params_text_for("ndev|2")), "application/json");
    });
    mock.start();

    jitanon::ModelClient client(endpoint_for(mock, 3));
    const auto parsed = nlohmann::json::parse(client.request_params(trivial_prompt(), "ndev|2"));
    CHECK(parsed["cluster_id"] == "ndev|2");
    CHECK(hits == 3);
}

TEST_CASE("audit trail records one file per attempt") {
    MockServer mock;
    std::atomic<int> hits{0};
    mock.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (++hits == 1) {
            res.status = 500;
            res.set_content("boom", "text/plain");
            return;
        }
        res.set_content(chat_reply(params_text_for("ndev|2")), "application/json");
    });
    mock.start();

    const auto audit = testsupport::make_temp_dir("jitanon_audit");
    auto cfg = endpoint_for(mock, 1);
    cfg.audit_dir = audit;
    jitanon::ModelClient client(cfg);
    client.request_params(trivial_prompt(), "ndev|2");

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(audit)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    REQUIRE(files.size() == 2);

    std::ifstream first(files[0]);
    const auto rec1 = nlohmann::json::parse(first);
    CHECK(rec1["cluster_id"] == "ndev|2");
    CHECK(rec1["attempt"] == 1);
    CHECK(rec1["status"] == 500);
    CHECK(rec1["request"]["model"] == "test-model");

    std::ifstream second(files[1]);
    const auto rec2 = nlohmann::json::parse(second);
    CHECK(rec2["attempt"] == 2);
    CHECK(rec2["note"] == "ok");
    std::filesystem::remove_all(audit);
}

TEST_CASE("generate_all_params: model policy falls back per cluster when the endpoint is down") {
    jitanon::ModelEndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:9/v1/chat/completions";  // discard port: nothing listens
    cfg.model_name = "test-model";
    cfg.max_retries = 0;
    cfg.timeout = std::chrono::seconds(1);

    std::map<std::string, jitanon::ClusterStats> stats;
    stats["ndev|2"] = make_stats("ndev|2", 40);
    stats["nf|0"] = make_stats("nf|0", 25);

    const auto result =
        jitanon::generate_all_params(stats, cfg, jitanon::ParamPolicy::model_with_fallback, 5);
    CHECK(result.model_count == 0);
    CHECK(result.fallback_count == 2);
    REQUIRE(result.failures.size() == 2);
    for (const auto& [id, params] : result.params) {
        CHECK(params.provenance == jitanon::Provenance::fallback);
        CHECK(params.cluster_id == id);
    }
}

TEST_CASE("generate_all_params: model_required rethrows endpoint exhaustion") {
    jitanon::ModelEndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:9/v1/chat/completions";
    cfg.model_name = "test-model";
    cfg.max_retries = 0;
    cfg.timeout = std::chrono::seconds(1);

    std::map<std::string, jitanon::ClusterStats> stats;
    stats["ndev|2"] = make_stats("ndev|2", 40);

    CHECK_THROWS_AS(
        jitanon::generate_all_params(stats, cfg, jitanon::ParamPolicy::model_required, 5),
        jitanon::EndpointUnreachable);
}

TEST_CASE("generate_all_params: working endpoint yields model provenance, small clusters stay local") {
    MockServer mock;
    mock.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        const std::string id = cluster_from_user_message(body["messages"][1]["content"]);
        res.set_content(chat_reply(params_text_for(id)), "application/json");
    });
    mock.start();

    auto cfg = endpoint_for(mock, 1);
    std::map<std::string, jitanon::ClusterStats> stats;
    stats["ndev|2"] = make_stats("ndev|2", 40);
    stats["nf|0"] = make_stats("nf|0", 25);
    stats["ns|1"] = make_stats("ns|1", 3);  // below min_cluster_size_for_model

    const auto result =
        jitanon::generate_all_params(stats, cfg, jitanon::ParamPolicy::model_with_fallback, 5);
    CHECK(result.model_count == 2);
    CHECK(result.fallback_count == 1);
    CHECK(result.failures.empty());
    CHECK(result.params.at("ndev|2").provenance == jitanon::Provenance::model);
    CHECK(result.params.at("ndev|2").churn_mixture.components.size() == 2);
    CHECK(result.params.at("nf|0").provenance == jitanon::Provenance::model);
    CHECK(result.params.at("ns|1").provenance == jitanon::Provenance::fallback);

    // fallback-only never touches the network even with an endpoint configured
    const auto local =
        jitanon::generate_all_params(stats, cfg, jitanon::ParamPolicy::fallback_only, 5);
    CHECK(local.model_count == 0);
    CHECK(local.fallback_count == 3);
}
