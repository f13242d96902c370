#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace smoa {

enum class Role { system, user, assistant };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

inline ChatMessage system_message(std::string content) {
    return {Role::system, std::move(content)};
}
inline ChatMessage user_message(std::string content) {
    return {Role::user, std::move(content)};
}

/// One OpenAI-compatible chat-completion endpoint. The secret itself is
/// never stored here, only the name of the environment variable holding
/// it; serialization therefore cannot leak it.
struct ModelEndpoint {
    std::string id;
    std::string base_url;
    std::string api_key_ref;
    std::string model_name;
    double default_temperature = 0.7;
    int default_max_tokens = 2048;
};

struct ChatRequest {
    std::string endpoint_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    int max_tokens = 2048;
};

struct ChatResponse {
    std::string content;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long latency_ms = 0;
    std::string finish_reason = "stop";
    int retries = 0; // attempts beyond the first

    bool operator==(const ChatResponse&) const = default;
};

/// Fixed estimator used for mock-backend accounting: ceil(bytes / 4).
long estimate_tokens(const std::string& text);

/// Sum of estimate_tokens over each message content in the request.
long estimate_prompt_tokens(const ChatRequest& request);

/// Deterministic digest over endpoint_id and the ordered (role, content)
/// pairs. Sampling parameters are excluded so mock scripts keyed on the
/// fingerprint survive temperature/max_tokens sweeps.
std::string fingerprint_request(const ChatRequest& request);

/// Throws ConfigError on violated ChatRequest invariants (empty message
/// list, misplaced or duplicated system message, empty request content).
void validate_request(const ChatRequest& request);

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);
void to_json(nlohmann::json& j, const ModelEndpoint& e);
void from_json(const nlohmann::json& j, ModelEndpoint& e);

} // namespace smoa
