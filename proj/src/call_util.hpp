#pragma once

#include <string>
#include <vector>

#include "smoa/gateway.hpp"
#include "smoa/trace.hpp"

namespace smoa::detail {

struct CallOutcome {
    ChatResponse response;
    TraceEvent event;
    bool ok = false;
    std::string error;
};

/// Issues one gateway call and packages the result as a trace event.
/// Exceptions become a failed event (estimated prompt tokens, zero
/// completions) with the message preserved for run notes.
CallOutcome perform_call(const ModelGateway& gateway, CallRole call_role, int layer_index,
                         const std::string& endpoint_id, std::vector<ChatMessage> messages,
                         double temperature, int max_tokens, bool capture_content);

} // namespace smoa::detail
