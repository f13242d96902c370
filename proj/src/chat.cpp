#include "smoa/chat.hpp"

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"

namespace smoa {

std::string to_string(Role role) {
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw ConfigError("unknown chat role: " + s);
}

long estimate_tokens(const std::string& text) {
    return static_cast<long>((text.size() + 3) / 4);
}

long estimate_prompt_tokens(const ChatRequest& request) {
    long total = 0;
    for (const auto& m : request.messages) {
        total += estimate_tokens(m.content);
    }
    return total;
}

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    static const char hex[] = "0123456789abcdef";
    std::string out(len * 2, '0');
    for (unsigned int i = 0; i < len; ++i) {
        out[i * 2] = hex[digest[i] >> 4];
        out[i * 2 + 1] = hex[digest[i] & 0xf];
    }
    return out;
}

// Length-prefixed so field boundaries cannot be forged by message content.
void append_field(std::string& buf, const std::string& field) {
    buf += std::to_string(field.size());
    buf += ':';
    buf += field;
}

} // namespace

std::string fingerprint_request(const ChatRequest& request) {
    std::string buf = "v1;";
    append_field(buf, request.endpoint_id);
    for (const auto& m : request.messages) {
        append_field(buf, to_string(m.role));
        append_field(buf, m.content);
    }
    return sha256_hex(buf);
}

void validate_request(const ChatRequest& request) {
    if (request.messages.empty()) {
        throw ConfigError("chat request has no messages");
    }
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
        const auto& m = request.messages[i];
        if (m.role == Role::system && i != 0) {
            throw ConfigError("system message must be first and unique");
        }
        if (m.content.empty()) {
            throw ConfigError("empty message content in request");
        }
    }
}

void to_json(nlohmann::json& j, const ChatMessage& m) {
    j = nlohmann::json{{"role", to_string(m.role)}, {"content", m.content}};
}

void from_json(const nlohmann::json& j, ChatMessage& m) {
    m.role = role_from_string(j.at("role").get<std::string>());
    m.content = j.at("content").get<std::string>();
}

void to_json(nlohmann::json& j, const ModelEndpoint& e) {
    j = nlohmann::json{
        {"id", e.id},
        {"base_url", e.base_url},
        {"api_key_ref", e.api_key_ref},
        {"model_name", e.model_name},
        {"default_temperature", e.default_temperature},
        {"default_max_tokens", e.default_max_tokens},
    };
}

void from_json(const nlohmann::json& j, ModelEndpoint& e) {
    e.id = j.at("id").get<std::string>();
    e.base_url = j.value("base_url", std::string{});
    e.api_key_ref = j.value("api_key_ref", std::string{});
    e.model_name = j.value("model_name", std::string{});
    e.default_temperature = j.value("default_temperature", 0.7);
    e.default_max_tokens = j.value("default_max_tokens", 2048);
}

} // namespace smoa
