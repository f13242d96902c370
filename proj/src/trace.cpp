#include "smoa/trace.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"

namespace smoa {

using json = nlohmann::json;

std::string to_string(CallRole role) {
    switch (role) {
    case CallRole::proposer: return "proposer";
    case CallRole::judge_moderator: return "judge_moderator";
    case CallRole::aggregator: return "aggregator";
    case CallRole::role_generator: return "role_generator";
    case CallRole::debater: return "debater";
    case CallRole::sc_sampler: return "sc_sampler";
    }
    throw std::logic_error("unhandled call role");
}

CallRole call_role_from_string(const std::string& value) {
    if (value == "proposer") return CallRole::proposer;
    if (value == "judge_moderator") return CallRole::judge_moderator;
    if (value == "aggregator") return CallRole::aggregator;
    if (value == "role_generator") return CallRole::role_generator;
    if (value == "debater") return CallRole::debater;
    if (value == "sc_sampler") return CallRole::sc_sampler;
    throw SchemaError("unknown call role: " + value, 0);
}

long RunTrace::total_prompt_tokens() const {
    long total = 0;
    for (const auto& e : events) {
        total += e.prompt_tokens;
    }
    return total;
}

long RunTrace::total_completion_tokens() const {
    long total = 0;
    for (const auto& e : events) {
        total += e.completion_tokens;
    }
    return total;
}

int RunTrace::call_count() const { return static_cast<int>(events.size()); }

void to_json(json& j, const TraceEvent& event) {
    j = json{{"call_role", to_string(event.call_role)},
             {"layer_index", event.layer_index},
             {"endpoint_id", event.endpoint_id},
             {"prompt_tokens", event.prompt_tokens},
             {"completion_tokens", event.completion_tokens},
             {"latency_ms", event.latency_ms},
             {"retries", event.retries},
             {"failed", event.failed}};
    if (event.request_messages) {
        j["request_messages"] = *event.request_messages;
    }
    if (event.response_content) {
        j["response_content"] = *event.response_content;
    }
}

void from_json(const json& j, TraceEvent& event) {
    event.call_role = call_role_from_string(j.at("call_role").get<std::string>());
    event.layer_index = j.at("layer_index").get<int>();
    event.endpoint_id = j.at("endpoint_id").get<std::string>();
    event.prompt_tokens = j.at("prompt_tokens").get<long>();
    event.completion_tokens = j.at("completion_tokens").get<long>();
    event.latency_ms = j.at("latency_ms").get<long>();
    event.retries = j.at("retries").get<int>();
    event.failed = j.at("failed").get<bool>();
    if (j.contains("request_messages")) {
        event.request_messages = j.at("request_messages").get<std::vector<ChatMessage>>();
    }
    if (j.contains("response_content")) {
        event.response_content = j.at("response_content").get<std::string>();
    }
}

void to_json(json& j, const RunTrace& trace) {
    json roles = json::array();
    for (const auto& r : trace.roles_used) {
        roles.push_back({{"index", r.index}, {"description", r.description}});
    }
    j = json{{"trace_version", trace.trace_version},
             {"query_id", trace.query_id},
             {"strategy", trace.strategy},
             {"stop_layer", trace.stop_layer},
             {"final_answer", trace.final_answer},
             {"roles_used", roles},
             {"notes", trace.notes},
             {"failed", trace.failed},
             {"events", trace.events}};
}

void from_json(const json& j, RunTrace& trace) {
    trace.trace_version = j.at("trace_version").get<int>();
    trace.query_id = j.at("query_id").get<std::string>();
    trace.strategy = j.at("strategy").get<std::string>();
    trace.stop_layer = j.at("stop_layer").get<int>();
    trace.final_answer = j.at("final_answer").get<std::string>();
    trace.roles_used.clear();
    for (const auto& r : j.at("roles_used")) {
        trace.roles_used.push_back(
            {r.at("index").get<int>(), r.at("description").get<std::string>()});
    }
    trace.notes = j.at("notes").get<std::vector<std::string>>();
    trace.failed = j.at("failed").get<bool>();
    trace.events = j.at("events").get<std::vector<TraceEvent>>();
}

std::string trace_to_line(const RunTrace& trace) {
    json j = trace;
    return j.dump();
}

void write_trace_line(std::ostream& out, const RunTrace& trace) {
    out << trace_to_line(trace) << '\n';
}

std::vector<RunTrace> read_traces(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open trace file: " + path);
    }
    std::vector<RunTrace> traces;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            json j = json::parse(line);
            RunTrace trace = j.get<RunTrace>();
            if (trace.trace_version != 1) {
                throw SchemaError("unsupported trace_version " +
                                      std::to_string(trace.trace_version),
                                  line_number);
            }
            traces.push_back(std::move(trace));
        } catch (const SchemaError&) {
            throw;
        } catch (const json::exception& e) {
            throw SchemaError(std::string("bad trace line: ") + e.what(), line_number);
        }
    }
    return traces;
}

RunTrace canonicalized(RunTrace trace) {
    for (auto& e : trace.events) {
        e.latency_ms = 0;
    }
    return trace;
}

} // namespace smoa
