#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "smoa/chat.hpp"
#include "smoa/prompts.hpp"

namespace smoa {

enum class CallRole {
    proposer,
    judge_moderator,
    aggregator,
    role_generator,
    debater,
    sc_sampler,
};

std::string to_string(CallRole role);
CallRole call_role_from_string(const std::string& value);

/// One model call inside a run. layer_index is 1-based for layered
/// strategies; role generation and SC samples use 0; the final
/// aggregator carries the layer it aggregated. request_messages and
/// response_content are only present when content capture is on.
struct TraceEvent {
    CallRole call_role = CallRole::proposer;
    int layer_index = 0;
    std::string endpoint_id;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long latency_ms = 0;
    int retries = 0;
    bool failed = false;
    std::optional<std::vector<ChatMessage>> request_messages;
    std::optional<std::string> response_content;
};

/// Full record of one query through a strategy. stop_layer is the last
/// layer that executed (equals the configured layer count when no early
/// stop fired; 1 for single-shot strategies).
struct RunTrace {
    int trace_version = 1;
    std::string query_id;
    std::string strategy;
    int stop_layer = 0;
    std::string final_answer;
    std::vector<RoleProfile> roles_used;
    std::vector<std::string> notes;
    bool failed = false;
    std::vector<TraceEvent> events;

    long total_prompt_tokens() const;
    long total_completion_tokens() const;
    int call_count() const;
};

void to_json(nlohmann::json& j, const TraceEvent& event);
void from_json(const nlohmann::json& j, TraceEvent& event);
void to_json(nlohmann::json& j, const RunTrace& trace);
void from_json(const nlohmann::json& j, RunTrace& trace);

/// One compact JSON object per line, keys sorted, newline terminated.
void write_trace_line(std::ostream& out, const RunTrace& trace);

std::string trace_to_line(const RunTrace& trace);

/// Reads a whole JSONL trace file; throws SchemaError carrying the
/// 1-based line number on malformed lines. Blank lines are skipped.
std::vector<RunTrace> read_traces(const std::string& path);

/// Copy with latency zeroed everywhere, for byte-stable comparisons.
RunTrace canonicalized(RunTrace trace);

} // namespace smoa
