#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "smoa/chat.hpp"
#include "smoa/mock.hpp"

namespace smoa {

/// Backoff schedule: delay before attempt i (1-based, i >= 2) is
/// base_delay_ms * multiplier^(i-2). Retries fire only for connection
/// faults, HTTP 429, and HTTP 5xx.
struct RetryPolicy {
    int max_attempts = 3;
    int base_delay_ms = 100;
    double multiplier = 2.0;
};

struct GatewayOptions {
    RetryPolicy retry;
    int max_in_flight = 8;   // global cap on concurrent outbound requests
    int request_timeout_ms = 120000;
};

/// Uniform client over configured chat-completion endpoints. When a mock
/// script is attached every endpoint resolves to the scripted backend;
/// otherwise requests go out as OpenAI-style chat completions with a
/// Bearer token read from the endpoint's api_key_ref environment
/// variable. Safe for concurrent use.
class ModelGateway {
public:
    explicit ModelGateway(std::vector<ModelEndpoint> endpoints, GatewayOptions options = {});
    ~ModelGateway();

    ModelGateway(const ModelGateway&) = delete;
    ModelGateway& operator=(const ModelGateway&) = delete;

    void set_mock_script(std::shared_ptr<const MockScript> script);
    bool is_mock() const;

    const ModelEndpoint& endpoint(const std::string& id) const;
    bool has_endpoint(const std::string& id) const;
    const GatewayOptions& options() const;

    /// Completes the request with the gateway's configured retry policy.
    ChatResponse complete_chat(const ChatRequest& request) const;

    /// Same, with an explicit retry policy for this call.
    ChatResponse complete_chat(const ChatRequest& request, const RetryPolicy& policy) const;

private:
    class Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace smoa
