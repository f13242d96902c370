#include "call_util.hpp"

#include "smoa/errors.hpp"

namespace smoa::detail {

CallOutcome perform_call(const ModelGateway& gateway, CallRole call_role, int layer_index,
                         const std::string& endpoint_id, std::vector<ChatMessage> messages,
                         double temperature, int max_tokens, bool capture_content) {
    ChatRequest request;
    request.endpoint_id = endpoint_id;
    request.messages = std::move(messages);
    request.temperature = temperature;
    request.max_tokens = max_tokens;

    CallOutcome outcome;
    outcome.event.call_role = call_role;
    outcome.event.layer_index = layer_index;
    outcome.event.endpoint_id = endpoint_id;
    if (capture_content) {
        outcome.event.request_messages = request.messages;
    }
    try {
        outcome.response = gateway.complete_chat(request);
        outcome.ok = true;
        outcome.event.prompt_tokens = outcome.response.prompt_tokens;
        outcome.event.completion_tokens = outcome.response.completion_tokens;
        outcome.event.latency_ms = outcome.response.latency_ms;
        outcome.event.retries = outcome.response.retries;
        if (capture_content) {
            outcome.event.response_content = outcome.response.content;
        }
    } catch (const TransportError& e) {
        outcome.error = e.what();
        outcome.event.failed = true;
        outcome.event.prompt_tokens = estimate_prompt_tokens(request);
        outcome.event.retries = e.attempts() - 1;
    } catch (const Error& e) {
        outcome.error = e.what();
        outcome.event.failed = true;
        outcome.event.prompt_tokens = estimate_prompt_tokens(request);
    }
    return outcome;
}

} // namespace smoa::detail
