#pragma once

#include <string>

#include "jitanon/paramgen.hpp"

namespace jitanon {

// Thin chat-completions client used by the model-backed parameter policies.
// One instance may serve concurrent request_params() calls; each call opens
// its own connection.
class ModelClient {
public:
    explicit ModelClient(ModelEndpointConfig config);

    // Sends the prompt and returns the first balanced JSON object found in
    // the reply text. Retries transient failures with exponential backoff,
    // then throws EndpointUnreachable, Timeout, or MalformedResponse.
    std::string request_params(const Prompt& prompt, const std::string& cluster_id) const;

    // Request body for one prompt; exposed so tests can pin the wire shape.
    nlohmann::json build_request_body(const Prompt& prompt) const;

private:
    void write_audit(const std::string& cluster_id, int attempt, const nlohmann::json& request,
                     int status, const std::string& body, const std::string& note) const;

    ModelEndpointConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

}  // namespace jitanon
