#include "smoa/mock.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"

namespace smoa {

void MockScript::add_entry(const std::string& endpoint_id, const std::string& fingerprint,
                           ScriptedResponse response) {
    entries_[{endpoint_id, fingerprint}] = std::move(response);
}

void MockScript::set_endpoint_default(const std::string& endpoint_id, MockPolicy policy) {
    endpoint_defaults_[endpoint_id] = std::move(policy);
}

void MockScript::set_default_policy(MockPolicy policy) {
    default_policy_ = std::move(policy);
}

std::optional<ScriptedResponse> MockScript::lookup(const std::string& endpoint_id,
                                                   const std::string& fingerprint) const {
    auto it = entries_.find({endpoint_id, fingerprint});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

const MockPolicy& MockScript::policy_for(const std::string& endpoint_id) const {
    auto it = endpoint_defaults_.find(endpoint_id);
    if (it != endpoint_defaults_.end()) return it->second;
    return default_policy_;
}

namespace {

MockPolicy policy_from_json(const nlohmann::json& j) {
    MockPolicy p;
    const auto type = j.at("type").get<std::string>();
    if (type == "echo_last_user_message") {
        p.kind = MockPolicy::Kind::echo_last_user_message;
    } else if (type == "fixed_text") {
        p.kind = MockPolicy::Kind::fixed_text;
        p.text = j.at("text").get<std::string>();
    } else if (type == "error") {
        p.kind = MockPolicy::Kind::error;
    } else {
        throw ConfigError("unknown mock policy type: " + type);
    }
    return p;
}

} // namespace

MockScript MockScript::from_json(const nlohmann::json& j) {
    MockScript script;
    if (j.contains("default_policy")) {
        script.set_default_policy(policy_from_json(j.at("default_policy")));
    }
    if (j.contains("endpoint_defaults")) {
        for (const auto& [id, pj] : j.at("endpoint_defaults").items()) {
            script.set_endpoint_default(id, policy_from_json(pj));
        }
    }
    if (j.contains("entries")) {
        for (const auto& e : j.at("entries")) {
            ScriptedResponse r;
            const auto& rj = e.at("response");
            r.content = rj.at("content").get<std::string>();
            r.finish_reason = rj.value("finish_reason", std::string{"stop"});
            script.add_entry(e.at("endpoint_id").get<std::string>(),
                             e.at("fingerprint").get<std::string>(), std::move(r));
        }
    }
    return script;
}

MockScript MockScript::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open mock script: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("invalid mock script JSON in " + path.string() + ": " + ex.what());
    }
    return from_json(j);
}

} // namespace smoa
