#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json_fwd.hpp>

#include "smoa/chat.hpp"

namespace smoa {

/// Behavior for requests with no scripted entry.
struct MockPolicy {
    enum class Kind { echo_last_user_message, fixed_text, error };
    Kind kind = Kind::echo_last_user_message;
    std::string text; // payload for fixed_text
};

struct ScriptedResponse {
    std::string content;
    std::string finish_reason = "stop";
};

/// Deterministic scripted backend. Exact entries are keyed by
/// (endpoint_id, request fingerprint); anything else falls through to a
/// per-endpoint default policy, then the global one. Populate before
/// sharing with the gateway and treat as immutable afterwards: a fixed
/// script always maps the same request to the same response.
class MockScript {
public:
    void add_entry(const std::string& endpoint_id, const std::string& fingerprint,
                   ScriptedResponse response);
    void set_endpoint_default(const std::string& endpoint_id, MockPolicy policy);
    void set_default_policy(MockPolicy policy);

    std::optional<ScriptedResponse> lookup(const std::string& endpoint_id,
                                           const std::string& fingerprint) const;
    const MockPolicy& policy_for(const std::string& endpoint_id) const;

    std::size_t entry_count() const { return entries_.size(); }

    static MockScript from_json(const nlohmann::json& j);
    static MockScript from_file(const std::filesystem::path& path);

private:
    std::map<std::pair<std::string, std::string>, ScriptedResponse> entries_;
    std::map<std::string, MockPolicy> endpoint_defaults_;
    MockPolicy default_policy_;
};

} // namespace smoa
