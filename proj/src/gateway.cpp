#include "smoa/gateway.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"

namespace smoa {

namespace {

using json = nlohmann::json;

// splits "https://host:port/prefix" into client target and path prefix
struct ParsedUrl {
    std::string origin;      // scheme://host[:port]
    std::string path_prefix; // "" or "/v1" style, no trailing slash
};

ParsedUrl parse_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint base_url missing scheme: " + base_url);
    }
    auto path_start = base_url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.origin = base_url;
    } else {
        out.origin = base_url.substr(0, path_start);
        out.path_prefix = base_url.substr(path_start);
    }
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
        out.path_prefix.pop_back();
    }
    return out;
}

bool is_retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

long now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

class ModelGateway::Impl {
public:
    Impl(std::vector<ModelEndpoint> endpoints, GatewayOptions options)
        : options_(options) {
        if (options_.max_in_flight < 1) {
            throw ConfigError("max_in_flight must be at least 1");
        }
        for (auto& ep : endpoints) {
            if (ep.id.empty()) {
                throw ConfigError("endpoint with empty id");
            }
            auto [it, inserted] = endpoints_.emplace(ep.id, std::move(ep));
            if (!inserted) {
                throw ConfigError("duplicate endpoint id: " + it->first);
            }
        }
    }

    const ModelEndpoint& endpoint(const std::string& id) const {
        auto it = endpoints_.find(id);
        if (it == endpoints_.end()) {
            throw UnknownEndpointError("unknown endpoint: " + id);
        }
        return it->second;
    }

    bool has_endpoint(const std::string& id) const {
        return endpoints_.count(id) != 0;
    }

    ChatResponse complete_chat(const ChatRequest& request, const RetryPolicy& policy) const {
        validate_request(request);
        const ModelEndpoint& ep = endpoint(request.endpoint_id);
        SlotGuard slot(*this);
        if (mock_script_) {
            return complete_mock(request, ep);
        }
        return complete_live(request, ep, policy);
    }

    void set_mock_script(std::shared_ptr<const MockScript> script) {
        mock_script_ = std::move(script);
    }

    bool is_mock() const { return mock_script_ != nullptr; }

    const GatewayOptions& options() const { return options_; }

private:
    // bounds concurrent requests across all threads using the gateway
    class SlotGuard {
    public:
        explicit SlotGuard(const Impl& impl) : impl_(impl) {
            std::unique_lock lock(impl_.slot_mutex_);
            impl_.slot_cv_.wait(lock, [&] { return impl_.in_flight_ < impl_.options_.max_in_flight; });
            ++impl_.in_flight_;
        }
        ~SlotGuard() {
            {
                std::lock_guard lock(impl_.slot_mutex_);
                --impl_.in_flight_;
            }
            impl_.slot_cv_.notify_one();
        }

    private:
        const Impl& impl_;
    };

    ChatResponse complete_mock(const ChatRequest& request, const ModelEndpoint& ep) const {
        std::string fp = fingerprint_request(request);
        ChatResponse resp;
        resp.latency_ms = 0;
        resp.retries = 0;
        resp.prompt_tokens = estimate_prompt_tokens(request);
        if (auto scripted = mock_script_->lookup(ep.id, fp)) {
            resp.content = scripted->content;
            resp.finish_reason = scripted->finish_reason;
        } else {
            MockPolicy policy = mock_script_->policy_for(ep.id);
            switch (policy.kind) {
            case MockPolicy::Kind::echo_last_user_message: {
                const ChatMessage* last_user = nullptr;
                for (const auto& m : request.messages) {
                    if (m.role == Role::user) {
                        last_user = &m;
                    }
                }
                if (last_user == nullptr) {
                    throw ProviderError("mock echo policy found no user message", 400, fp);
                }
                resp.content = last_user->content;
                break;
            }
            case MockPolicy::Kind::fixed_text:
                resp.content = policy.text;
                break;
            case MockPolicy::Kind::error:
                throw ProviderError(
                    policy.text.empty() ? "scripted provider failure" : policy.text, 500, fp);
            }
        }
        resp.completion_tokens = estimate_tokens(resp.content);
        return resp;
    }

    ChatResponse complete_live(const ChatRequest& request, const ModelEndpoint& ep,
                               const RetryPolicy& policy) const {
        if (policy.max_attempts < 1) {
            throw ConfigError("retry max_attempts must be at least 1");
        }
        ParsedUrl url = parse_base_url(ep.base_url);
        std::string api_key;
        if (!ep.api_key_ref.empty()) {
            const char* value = std::getenv(ep.api_key_ref.c_str());
            if (value == nullptr || *value == '\0') {
                throw AuthError("environment variable " + ep.api_key_ref +
                                " for endpoint " + ep.id + " is not set");
            }
            api_key = value;
        }

        json body;
        body["model"] = ep.model_name;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_tokens;
        body["messages"] = json::array();
        for (const auto& m : request.messages) {
            body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
        }
        const std::string payload = body.dump();
        const std::string path = url.path_prefix + "/chat/completions";

        long start = now_ms();
        std::string last_error;
        int last_status = 0;
        std::string last_body;
        for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
            if (attempt > 1) {
                double delay = policy.base_delay_ms * std::pow(policy.multiplier, attempt - 2);
                std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(delay)));
            }
            httplib::Client client(url.origin);
            client.set_connection_timeout(0, options_.request_timeout_ms * 1000LL);
            client.set_read_timeout(options_.request_timeout_ms / 1000,
                                    (options_.request_timeout_ms % 1000) * 1000);
            httplib::Headers headers;
            if (!api_key.empty()) {
                headers.emplace("Authorization", "Bearer " + api_key);
            }
            auto res = client.Post(path, headers, payload, "application/json");
            if (!res) {
                last_error = "connection failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw AuthError("endpoint " + ep.id + " rejected credentials (HTTP " +
                                std::to_string(res->status) + ")");
            }
            if (is_retryable_status(res->status)) {
                last_status = res->status;
                last_body = res->body;
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                throw ProviderError("endpoint " + ep.id + " returned HTTP " +
                                        std::to_string(res->status),
                                    res->status, res->body);
            }
            ChatResponse out = parse_completion(res->body, request, ep);
            out.latency_ms = now_ms() - start;
            out.retries = attempt - 1;
            return out;
        }
        if (last_status != 0) {
            throw ProviderError("endpoint " + ep.id + " failed after " +
                                    std::to_string(policy.max_attempts) + " attempts (HTTP " +
                                    std::to_string(last_status) + ")",
                                last_status, last_body);
        }
        throw TransportError("endpoint " + ep.id + " unreachable after " +
                                 std::to_string(policy.max_attempts) + " attempts: " + last_error,
                             policy.max_attempts);
    }

    static ChatResponse parse_completion(const std::string& body, const ChatRequest& request,
                                         const ModelEndpoint& ep) {
        json parsed;
        try {
            parsed = json::parse(body);
        } catch (const json::exception& e) {
            throw ProviderError("endpoint " + ep.id + " returned non-JSON body: " + e.what(), 200,
                                body);
        }
        if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
            parsed["choices"].empty()) {
            throw ProviderError("endpoint " + ep.id + " response has no choices", 200, body);
        }
        const json& choice = parsed["choices"][0];
        ChatResponse out;
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string()) {
            out.content = choice["message"]["content"].get<std::string>();
        } else {
            throw ProviderError("endpoint " + ep.id + " choice has no message content", 200, body);
        }
        out.finish_reason = choice.value("finish_reason", std::string("stop"));
        if (parsed.contains("usage") && parsed["usage"].is_object()) {
            const json& usage = parsed["usage"];
            out.prompt_tokens = usage.value("prompt_tokens", 0L);
            out.completion_tokens = usage.value("completion_tokens", 0L);
        }
        if (out.prompt_tokens <= 0) {
            out.prompt_tokens = estimate_prompt_tokens(request);
        }
        if (out.completion_tokens <= 0) {
            out.completion_tokens = estimate_tokens(out.content);
        }
        return out;
    }

    GatewayOptions options_;
    std::map<std::string, ModelEndpoint> endpoints_;
    std::shared_ptr<const MockScript> mock_script_;

    mutable std::mutex slot_mutex_;
    mutable std::condition_variable slot_cv_;
    mutable int in_flight_ = 0;
};

ModelGateway::ModelGateway(std::vector<ModelEndpoint> endpoints, GatewayOptions options)
    : impl_(std::make_unique<Impl>(std::move(endpoints), options)) {}

ModelGateway::~ModelGateway() = default;

void ModelGateway::set_mock_script(std::shared_ptr<const MockScript> script) {
    impl_->set_mock_script(std::move(script));
}

bool ModelGateway::is_mock() const { return impl_->is_mock(); }

const ModelEndpoint& ModelGateway::endpoint(const std::string& id) const {
    return impl_->endpoint(id);
}

bool ModelGateway::has_endpoint(const std::string& id) const { return impl_->has_endpoint(id); }

const GatewayOptions& ModelGateway::options() const { return impl_->options(); }

ChatResponse ModelGateway::complete_chat(const ChatRequest& request) const {
    return impl_->complete_chat(request, impl_->options().retry);
}

ChatResponse ModelGateway::complete_chat(const ChatRequest& request,
                                         const RetryPolicy& policy) const {
    return impl_->complete_chat(request, policy);
}

} // namespace smoa
