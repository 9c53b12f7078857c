#include "jitanon/model_client.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "jitanon/errors.hpp"

namespace jitanon {
namespace {

// Failure classes, from most to least specific: the final one wins the throw.
enum class FailKind { unreachable, timeout, malformed };

FailKind classify_transport(httplib::Error err) {
    switch (err) {
        case httplib::Error::Connection:
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::ProxyConnection:
            return FailKind::unreachable;
        case httplib::Error::Read:
        case httplib::Error::Write:
            return FailKind::timeout;
        default:
            return FailKind::unreachable;
    }
}

std::string sanitize_for_filename(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        out.push_back(ok ? c : '_');
    }
    return out;
}

}  // namespace

ModelClient::ModelClient(ModelEndpointConfig config) : config_(std::move(config)) {
    const std::string& url = config_.base_url;
    const auto scheme_end = url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        scheme_host_port_ = url;
        path_ = "/v1/chat/completions";
    } else {
        scheme_host_port_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
}

nlohmann::json ModelClient::build_request_body(const Prompt& prompt) const {
    return nlohmann::json{
        {"model", config_.model_name},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", prompt.system_message}},
                                {{"role", "user"}, {"content", prompt.user_message}}})},
        {"temperature", config_.temperature},
        {"top_p", config_.top_p},
    };
}

void ModelClient::write_audit(const std::string& cluster_id, int attempt,
                              const nlohmann::json& request, int status, const std::string& body,
                              const std::string& note) const {
    if (!config_.audit_dir) return;
    std::error_code ec;
    std::filesystem::create_directories(*config_.audit_dir, ec);
    const auto file = std::filesystem::path(*config_.audit_dir) /
                      (sanitize_for_filename(cluster_id) + "_attempt" + std::to_string(attempt) +
                       ".json");
    const nlohmann::json record{
        {"cluster_id", cluster_id}, {"attempt", attempt},       {"request", request},
        {"status", status},         {"response_body", body},    {"note", note},
    };
    std::ofstream out(file);
    out << record.dump(2) << '\n';
}

std::string ModelClient::request_params(const Prompt& prompt, const std::string& cluster_id) const {
    const nlohmann::json request = build_request_body(prompt);
    const std::string body = request.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    FailKind last_fail = FailKind::unreachable;
    std::string last_detail = "no attempt made";
    const int attempts = config_.max_retries + 1;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            const auto backoff =
                std::min(std::chrono::milliseconds(200 << (attempt - 2)),
                         std::chrono::milliseconds(5000));
            std::this_thread::sleep_for(backoff);
        }
        httplib::Client cli(scheme_host_port_);
        cli.set_connection_timeout(config_.timeout);
        cli.set_read_timeout(config_.timeout);
        cli.set_write_timeout(config_.timeout);

        auto res = cli.Post(path_, headers, body, "application/json");
        if (!res) {
            last_fail = classify_transport(res.error());
            last_detail = httplib::to_string(res.error());
            write_audit(cluster_id, attempt, request, 0, "", "transport: " + last_detail);
            continue;
        }
        if (res->status != 200) {
            last_fail = FailKind::malformed;
            last_detail = "HTTP status " + std::to_string(res->status);
            write_audit(cluster_id, attempt, request, res->status, res->body, last_detail);
            continue;
        }
        try {
            const auto payload = nlohmann::json::parse(res->body);
            std::string content;
            if (payload.contains("choices") && payload["choices"].is_array() &&
                !payload["choices"].empty()) {
                const auto& first = payload["choices"][0];
                if (first.contains("message") && first["message"].contains("content") &&
                    first["message"]["content"].is_string()) {
                    content = first["message"]["content"].get<std::string>();
                } else if (first.contains("text") && first["text"].is_string()) {
                    content = first["text"].get<std::string>();
                }
            }
            if (content.empty()) throw MalformedResponse("no message content in reply");
            const std::string extracted = extract_json_object(content);
            write_audit(cluster_id, attempt, request, res->status, res->body, "ok");
            return extracted;
        } catch (const nlohmann::json::parse_error& e) {
            last_fail = FailKind::malformed;
            last_detail = std::string("reply is not JSON: ") + e.what();
            write_audit(cluster_id, attempt, request, res->status, res->body, last_detail);
        } catch (const MalformedResponse& e) {
            last_fail = FailKind::malformed;
            last_detail = e.what();
            write_audit(cluster_id, attempt, request, res->status, res->body, last_detail);
        }
    }

    switch (last_fail) {
        case FailKind::unreachable:
            throw EndpointUnreachable(config_.base_url + ": " + last_detail);
        case FailKind::timeout:
            throw Timeout(config_.base_url + ": " + last_detail);
        case FailKind::malformed:
        default:
            throw MalformedResponse(last_detail);
    }
}

}  // namespace jitanon
