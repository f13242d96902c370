#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "smoa/chat.hpp"

namespace smoa {

/// Text template with bracket placeholders like [Response Number].
/// render substitutes every occurrence of each required placeholder and
/// throws TemplateError when a required value is missing or an unknown
/// key is supplied.
struct PromptTemplate {
    std::string name;
    std::string body;
    std::vector<std::string> required_placeholders;

    std::string render(const std::map<std::string, std::string>& values) const;
};

/// Parsed output of a judge/moderator turn. chosen holds candidate
/// indices (0-based). normalized is set when the raw model output had to
/// be repaired (duplicates, out-of-range, wrong count).
struct JudgeVerdict {
    std::string reasoning;
    std::vector<int> chosen;
    bool end_debate = false;
    bool normalized = false;
};

struct RoleProfile {
    int index = 0;
    std::string description;
};

// canonical templates (bodies are fixed byte-for-byte, see golden fixtures)
const PromptTemplate& aggregate_template();
const PromptTemplate& judge_moderator_template();
const PromptTemplate& role_generation_template();
const PromptTemplate& judge_selection_template(); // split mode, selection half
const PromptTemplate& moderator_stop_template();  // split mode, stop half
const PromptTemplate& mad_debater_template();
const PromptTemplate& mad_judge_template();
const PromptTemplate& grader_template();

/// System prompt carries the synthesis instruction plus the numbered
/// reference list (1-based); user prompt is the bare query.
std::vector<ChatMessage> render_aggregate_prompt(const std::vector<std::string>& references,
                                                 const std::string& query);

/// System prompt asks for k selections plus the end-debate flag; user
/// prompt lists candidates 0-based followed by the query.
std::vector<ChatMessage> render_judge_moderator_prompt(const std::vector<std::string>& candidates,
                                                       const std::string& query, int k);

std::vector<ChatMessage> render_judge_selection_prompt(const std::vector<std::string>& candidates,
                                                       const std::string& query, int k);

std::vector<ChatMessage> render_moderator_stop_prompt(const std::vector<std::string>& candidates,
                                                      const std::string& query);

/// Single user message asking for n role descriptions for the task given
/// by the dataset description and task requirement (concatenated).
std::vector<ChatMessage> render_role_generation_prompt(const std::string& dataset_description,
                                                       const std::string& task_requirement, int n);

std::vector<ChatMessage> render_mad_debater_prompt(const std::string& side,
                                                   const std::vector<std::string>& transcript,
                                                   const std::string& query);

std::vector<ChatMessage> render_mad_judge_prompt(const std::vector<std::string>& transcript,
                                                 const std::string& query);

std::vector<ChatMessage> render_grader_prompt(const std::vector<std::string>& aspects,
                                              const std::string& query,
                                              const std::string& answer);

/// Pulls the first JSON object out of free-form model text: tries a
/// direct parse, then fenced code blocks, then a balanced-brace scan.
std::optional<nlohmann::json> recover_json_object(const std::string& text);

/// Repairs a raw selection list: dedupe keeping first occurrence, drop
/// indices outside [0, n_candidates), truncate to k, pad with the lowest
/// unused indices. Sets *changed when the result differs from the input.
std::vector<int> normalize_chosen(const std::vector<int>& chosen, int k, int n_candidates,
                                  bool* changed = nullptr);

/// Parses a combined judge/moderator reply. All three schema keys must
/// be present ("reasoning", "chosen responses", "end debate"); throws
/// UnparseableVerdictError otherwise. The selection is normalized.
JudgeVerdict parse_judge_verdict(const std::string& text, int k, int n_candidates);

/// Split-mode halves are parsed leniently: selection needs only
/// "chosen responses", stop needs only "end debate".
JudgeVerdict parse_selection_verdict(const std::string& text, int k, int n_candidates);
bool parse_stop_verdict(const std::string& text);

/// Splits role-generation output on [Generated Role Description N]
/// markers; text before the first marker is ignored. Throws
/// RoleCountMismatchError when fewer than n non-empty segments follow.
std::vector<RoleProfile> parse_roles(const std::string& text, int n);

/// Returns the text after the last marker occurrence (optional colon
/// and surrounding whitespace stripped), or nullopt when the marker is
/// absent.
std::optional<std::string> extract_answer(const std::string& text,
                                          const std::string& marker = "#ANSWER#");

/// Renders a verdict as the fenced JSON snippet the judge schema asks
/// for; used to script judge turns in tests.
std::string serialize_verdict(const JudgeVerdict& verdict);

/// Flattens messages to "[role]\n<content>\n" blocks for golden files.
std::string serialize_messages(const std::vector<ChatMessage>& messages);

} // namespace smoa
