#include "smoa/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"

namespace smoa {

namespace {

using json = nlohmann::json;

const char* const k_responses_heading = "Responses from models:";

const char* const k_aggregate_body =
    R"tpl(You have been provided with a set of responses from various open-source models to the latest user query. Your task is to synthesize these responses into a single, high-quality response. It is crucial to critically evaluate the information provided in these responses, recognizing that some of it may be biased or incorrect. Your response should not simply replicate the given answers but should offer a refined, accurate, and comprehensive reply to the instruction. Ensure your response is well-structured, coherent, and adheres to the highest standards of accuracy and reliability.)tpl";

const char* const k_judge_moderator_body =
    R"tpl(You are a moderator. You will be provided with a set of responses from various open-source models to the latest user query. Your task is to carefully and meticulously select [Response Number] responses from them, according to correctness, fluency, relevance, and quality. It is crucial to critically evaluate the information provided in these responses, recognizing that some of them may be biased or incorrect. Additionally, you need to decide whether to end the debate by measuring the consistency between responses and giving an indicator controlling ending the debate or not.

The output should be a markdown code snippet formatted in the following schema:

{
"reasoning": str // Logical reasoning behind the chosen response
"chosen responses": list // the best [Response Number] response. For example [0, 1]
"end debate": bool // whether end the debate
})tpl";

const char* const k_judge_selection_body =
    R"tpl(You are a moderator. You will be provided with a set of responses from various open-source models to the latest user query. Your task is to carefully and meticulously select [Response Number] responses from them, according to correctness, fluency, relevance, and quality. It is crucial to critically evaluate the information provided in these responses, recognizing that some of them may be biased or incorrect.

The output should be a markdown code snippet formatted in the following schema:

{
"reasoning": str // Logical reasoning behind the chosen response
"chosen responses": list // the best [Response Number] response. For example [0, 1]
})tpl";

const char* const k_moderator_stop_body =
    R"tpl(You are a moderator. You will be provided with a set of responses from various open-source models to the latest user query. Your task is to decide whether to end the debate by measuring the consistency between responses and giving an indicator controlling ending the debate or not.

The output should be a markdown code snippet formatted in the following schema:

{
"reasoning": str // Logical reasoning behind the decision
"end debate": bool // whether end the debate
})tpl";

const char* const k_role_generation_body =
    R"tpl(Your task is to assign [Model Number] different roles and identities to a group of large language models for efficiently solving problems in a given task. Each role description should include information about occupation, personality, and social group. Separate each role description with [Generated Role Description]

Here is an example to follow:

Task: GSM8K (Grade School Math 8K) is a dataset of 8.5K high quality linguistically diverse grade school math word problems. The dataset was created to support the task of question answering on basic mathematical problems that require multi-step reasoning.

Output:
[Generated Role Description 1]
You are a data analyst specializing in business intelligence, you are curious, detail-driven, and passionate about uncovering the stories behind numbers. You excel at interpreting trends, identifying patterns, and making predictions based on data. Regularly collaborating with business professionals, IT specialists, and data scientists, you thrive in extracting valuable insights from datasets to drive informed decisions.

[Generated Role Description 2]
You are a business consultant with extensive experience in sales and marketing strategies, you are strategic, goal-oriented, and focused on optimizing outcomes. Constantly seeking ways to improve efficiency and increase sales, you leverage data to inform their decisions. You regularly engage with entrepreneurs, marketers, and business executives, sharing insights and strategies for business growth.

[Generated Role Description 3]
You are a seasoned math professor with a Ph.D. in Applied Mathematics, you are logical, analytical, and detail-oriented, with a passion for breaking down problems and ensuring mathematically sound solutions. You are methodical, preferring to work with numbers and formulas. Often found in academic circles, they engage in deep mathematical discussions and mentor students within university settings.

[Generated Role Description 4]
You are a middle school math teacher with over a decade of experience, you are patient, nurturing, and passionate about making math accessible and enjoyable. you excel at simplifying complex problems using real-world examples to ensure understanding. Closely connected with educators, parents, and students, you frequently participate in community events and school functions to promote learning.

Provide [Model Number] role description for solving questions in the following task formatted according to the output schema above:

Task: [Task Description]

Output:)tpl";

const char* const k_mad_debater_body =
    R"tpl(You are the [Debater Side] debater in a structured debate about the user's question. Present the strongest argument for your position, directly engaging with the points raised so far. Keep your argument focused and finish with the answer you currently defend.)tpl";

const char* const k_mad_judge_body =
    R"tpl(You are the judge of a debate between an affirmative and a negative debater about the user's question. Review the question and the full transcript, weigh the arguments from both sides, and give the final answer to the question.)tpl";

const char* const k_grader_body =
    R"tpl(You are an impartial grader. You will be given a question and a response. Rate the response on each of the following aspects: [Aspect List]. Use an integer from 1 to 10 for each aspect, where 1 is worst and 10 is best.

The output should be a markdown code snippet formatted in the following schema:

{
"reasoning": str // brief justification for the scores
"scores": dict // one integer per aspect keyed by aspect name
})tpl";

std::string numbered_list(const std::vector<std::string>& items, int start) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            out += '\n';
        }
        out += std::to_string(start + static_cast<int>(i));
        out += ". ";
        out += items[i];
    }
    return out;
}

std::string responses_block(const std::vector<std::string>& candidates, const std::string& query) {
    std::string out = k_responses_heading;
    out += '\n';
    out += numbered_list(candidates, 0);
    out += "\n\nQuestion: ";
    out += query;
    return out;
}

std::string debate_block(const std::vector<std::string>& transcript) {
    if (transcript.empty()) {
        return "(none yet)";
    }
    std::string out;
    for (std::size_t i = 0; i < transcript.size(); ++i) {
        if (i > 0) {
            out += "\n\n";
        }
        out += '[';
        out += (i % 2 == 0) ? "affirmative" : "negative";
        out += " round ";
        out += std::to_string(i / 2 + 1);
        out += "]\n";
        out += transcript[i];
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
        --end;
    }
    return s.substr(begin, end - begin);
}

std::optional<json> try_parse_object(const std::string& text) {
    try {
        json parsed = json::parse(text);
        if (parsed.is_object()) {
            return parsed;
        }
    } catch (const json::exception&) {
    }
    return std::nullopt;
}

// scans for a balanced {...} span starting at pos, respecting strings
std::optional<std::string> balanced_object_at(const std::string& text, std::size_t pos) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = pos; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            --depth;
            if (depth == 0) {
                return text.substr(pos, i - pos + 1);
            }
        }
    }
    return std::nullopt;
}

} // namespace

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    for (const auto& [key, value] : values) {
        if (std::find(required_placeholders.begin(), required_placeholders.end(), key) ==
            required_placeholders.end()) {
            throw TemplateError("template " + name + " has no placeholder " + key);
        }
    }
    std::string out = body;
    for (const auto& placeholder : required_placeholders) {
        auto it = values.find(placeholder);
        if (it == values.end()) {
            throw TemplateError("template " + name + " missing value for " + placeholder);
        }
        std::size_t pos = 0;
        while ((pos = out.find(placeholder, pos)) != std::string::npos) {
            out.replace(pos, placeholder.size(), it->second);
            pos += it->second.size();
        }
    }
    return out;
}

const PromptTemplate& aggregate_template() {
    static const PromptTemplate tpl{"aggregate", k_aggregate_body, {}};
    return tpl;
}

const PromptTemplate& judge_moderator_template() {
    static const PromptTemplate tpl{"judge_moderator", k_judge_moderator_body,
                                    {"[Response Number]"}};
    return tpl;
}

const PromptTemplate& role_generation_template() {
    static const PromptTemplate tpl{"role_generation", k_role_generation_body,
                                    {"[Model Number]", "[Task Description]"}};
    return tpl;
}

const PromptTemplate& judge_selection_template() {
    static const PromptTemplate tpl{"judge_selection", k_judge_selection_body,
                                    {"[Response Number]"}};
    return tpl;
}

const PromptTemplate& moderator_stop_template() {
    static const PromptTemplate tpl{"moderator_stop", k_moderator_stop_body, {}};
    return tpl;
}

const PromptTemplate& mad_debater_template() {
    static const PromptTemplate tpl{"mad_debater", k_mad_debater_body, {"[Debater Side]"}};
    return tpl;
}

const PromptTemplate& mad_judge_template() {
    static const PromptTemplate tpl{"mad_judge", k_mad_judge_body, {}};
    return tpl;
}

const PromptTemplate& grader_template() {
    static const PromptTemplate tpl{"llm_grader", k_grader_body, {"[Aspect List]"}};
    return tpl;
}

std::vector<ChatMessage> render_aggregate_prompt(const std::vector<std::string>& references,
                                                 const std::string& query) {
    if (references.empty()) {
        throw EmptyResponsesError("aggregate prompt needs at least one reference response");
    }
    std::string system = aggregate_template().render({});
    system += "\n\n";
    system += k_responses_heading;
    system += '\n';
    system += numbered_list(references, 1);
    return {system_message(system), user_message(query)};
}

std::vector<ChatMessage> render_judge_moderator_prompt(const std::vector<std::string>& candidates,
                                                       const std::string& query, int k) {
    if (candidates.empty()) {
        throw EmptyResponsesError("judge prompt needs at least one candidate response");
    }
    if (k < 1) {
        throw BadKError("selection count must be at least 1, got " + std::to_string(k));
    }
    std::string system =
        judge_moderator_template().render({{"[Response Number]", std::to_string(k)}});
    return {system_message(system), user_message(responses_block(candidates, query))};
}

std::vector<ChatMessage> render_judge_selection_prompt(const std::vector<std::string>& candidates,
                                                       const std::string& query, int k) {
    if (candidates.empty()) {
        throw EmptyResponsesError("selection prompt needs at least one candidate response");
    }
    if (k < 1) {
        throw BadKError("selection count must be at least 1, got " + std::to_string(k));
    }
    std::string system =
        judge_selection_template().render({{"[Response Number]", std::to_string(k)}});
    return {system_message(system), user_message(responses_block(candidates, query))};
}

std::vector<ChatMessage> render_moderator_stop_prompt(const std::vector<std::string>& candidates,
                                                      const std::string& query) {
    if (candidates.empty()) {
        throw EmptyResponsesError("stop prompt needs at least one candidate response");
    }
    std::string system = moderator_stop_template().render({});
    return {system_message(system), user_message(responses_block(candidates, query))};
}

std::vector<ChatMessage> render_role_generation_prompt(const std::string& dataset_description,
                                                       const std::string& task_requirement,
                                                       int n) {
    if (n < 1) {
        throw ConfigError("role count must be at least 1, got " + std::to_string(n));
    }
    std::string body = role_generation_template().render(
        {{"[Model Number]", std::to_string(n)},
         {"[Task Description]", dataset_description + task_requirement}});
    return {user_message(body)};
}

std::vector<ChatMessage> render_mad_debater_prompt(const std::string& side,
                                                   const std::vector<std::string>& transcript,
                                                   const std::string& query) {
    std::string system = mad_debater_template().render({{"[Debater Side]", side}});
    std::string user = "Question: " + query + "\n\nDebate so far:\n" + debate_block(transcript) +
                       "\n\nPresent your next argument.";
    return {system_message(system), user_message(user)};
}

std::vector<ChatMessage> render_mad_judge_prompt(const std::vector<std::string>& transcript,
                                                 const std::string& query) {
    std::string system = mad_judge_template().render({});
    std::string user = "Question: " + query + "\n\nDebate transcript:\n" +
                       debate_block(transcript) + "\n\nGive the final answer.";
    return {system_message(system), user_message(user)};
}

std::vector<ChatMessage> render_grader_prompt(const std::vector<std::string>& aspects,
                                              const std::string& query,
                                              const std::string& answer) {
    if (aspects.empty()) {
        throw ConfigError("grader needs at least one aspect");
    }
    std::string joined;
    for (std::size_t i = 0; i < aspects.size(); ++i) {
        if (i > 0) {
            joined += ", ";
        }
        joined += aspects[i];
    }
    std::string system = grader_template().render({{"[Aspect List]", joined}});
    std::string user = "Question: " + query + "\n\nResponse:\n" + answer;
    return {system_message(system), user_message(user)};
}

std::optional<json> recover_json_object(const std::string& text) {
    if (auto direct = try_parse_object(trim(text))) {
        return direct;
    }
    // fenced blocks, with or without a language tag line
    std::size_t search = 0;
    while (true) {
        std::size_t open = text.find("```", search);
        if (open == std::string::npos) {
            break;
        }
        std::size_t body_start = open + 3;
        std::size_t close = text.find("```", body_start);
        if (close == std::string::npos) {
            break;
        }
        std::string inner = text.substr(body_start, close - body_start);
        std::size_t first_newline = inner.find('\n');
        if (first_newline != std::string::npos &&
            inner.substr(0, first_newline).find('{') == std::string::npos) {
            inner = inner.substr(first_newline + 1);
        }
        if (auto fenced = try_parse_object(trim(inner))) {
            return fenced;
        }
        search = close + 3;
    }
    // last resort: any balanced brace span that parses
    for (std::size_t pos = text.find('{'); pos != std::string::npos;
         pos = text.find('{', pos + 1)) {
        if (auto span = balanced_object_at(text, pos)) {
            if (auto parsed = try_parse_object(*span)) {
                return parsed;
            }
        }
    }
    return std::nullopt;
}

std::vector<int> normalize_chosen(const std::vector<int>& chosen, int k, int n_candidates,
                                  bool* changed) {
    if (n_candidates < 1) {
        throw EmptyResponsesError("cannot select from zero candidates");
    }
    if (k < 1) {
        throw BadKError("selection count must be at least 1, got " + std::to_string(k));
    }
    const int effective_k = std::min(k, n_candidates);
    std::vector<int> out;
    std::set<int> seen;
    for (int idx : chosen) {
        if (idx < 0 || idx >= n_candidates) {
            continue;
        }
        if (seen.insert(idx).second) {
            out.push_back(idx);
        }
        if (static_cast<int>(out.size()) == effective_k) {
            break;
        }
    }
    for (int idx = 0; static_cast<int>(out.size()) < effective_k; ++idx) {
        if (seen.insert(idx).second) {
            out.push_back(idx);
        }
    }
    if (changed != nullptr) {
        *changed = out != chosen;
    }
    return out;
}

JudgeVerdict parse_judge_verdict(const std::string& text, int k, int n_candidates) {
    auto object = recover_json_object(text);
    if (!object) {
        throw UnparseableVerdictError("no JSON object found in judge output");
    }
    const json& j = *object;
    if (!j.contains("reasoning") || !j.contains("chosen responses") || !j.contains("end debate")) {
        throw UnparseableVerdictError("judge output missing a required schema key");
    }
    if (!j["chosen responses"].is_array()) {
        throw UnparseableVerdictError("chosen responses is not a list");
    }
    if (!j["end debate"].is_boolean()) {
        throw UnparseableVerdictError("end debate is not a bool");
    }
    JudgeVerdict verdict;
    verdict.reasoning =
        j["reasoning"].is_string() ? j["reasoning"].get<std::string>() : j["reasoning"].dump();
    verdict.end_debate = j["end debate"].get<bool>();
    std::vector<int> raw;
    bool dropped = false;
    for (const auto& element : j["chosen responses"]) {
        if (element.is_number_integer()) {
            raw.push_back(element.get<int>());
        } else {
            dropped = true;
        }
    }
    bool changed = false;
    verdict.chosen = normalize_chosen(raw, k, n_candidates, &changed);
    verdict.normalized = changed || dropped;
    return verdict;
}

JudgeVerdict parse_selection_verdict(const std::string& text, int k, int n_candidates) {
    auto object = recover_json_object(text);
    if (!object) {
        throw UnparseableVerdictError("no JSON object found in selection output");
    }
    const json& j = *object;
    if (!j.contains("chosen responses") || !j["chosen responses"].is_array()) {
        throw UnparseableVerdictError("selection output has no usable chosen responses list");
    }
    JudgeVerdict verdict;
    if (j.contains("reasoning") && j["reasoning"].is_string()) {
        verdict.reasoning = j["reasoning"].get<std::string>();
    }
    std::vector<int> raw;
    bool dropped = false;
    for (const auto& element : j["chosen responses"]) {
        if (element.is_number_integer()) {
            raw.push_back(element.get<int>());
        } else {
            dropped = true;
        }
    }
    bool changed = false;
    verdict.chosen = normalize_chosen(raw, k, n_candidates, &changed);
    verdict.normalized = changed || dropped;
    return verdict;
}

bool parse_stop_verdict(const std::string& text) {
    auto object = recover_json_object(text);
    if (!object) {
        throw UnparseableVerdictError("no JSON object found in stop output");
    }
    const json& j = *object;
    if (!j.contains("end debate") || !j["end debate"].is_boolean()) {
        throw UnparseableVerdictError("stop output has no usable end debate flag");
    }
    return j["end debate"].get<bool>();
}

std::vector<RoleProfile> parse_roles(const std::string& text, int n) {
    if (n < 1) {
        throw ConfigError("role count must be at least 1, got " + std::to_string(n));
    }
    static const std::regex marker(R"(\[Generated Role Description\s*[0-9]*\])");
    std::vector<std::pair<std::size_t, std::size_t>> spans; // marker begin, end
    for (auto it = std::sregex_iterator(text.begin(), text.end(), marker);
         it != std::sregex_iterator(); ++it) {
        spans.emplace_back(it->position(), it->position() + it->length());
    }
    std::vector<RoleProfile> roles;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        std::size_t begin = spans[i].second;
        std::size_t end = (i + 1 < spans.size()) ? spans[i + 1].first : text.size();
        std::string segment = trim(text.substr(begin, end - begin));
        if (!segment.empty()) {
            roles.push_back({static_cast<int>(roles.size()), std::move(segment)});
        }
        if (static_cast<int>(roles.size()) == n) {
            break;
        }
    }
    if (static_cast<int>(roles.size()) < n) {
        throw RoleCountMismatchError("expected " + std::to_string(n) + " role descriptions, got " +
                                     std::to_string(roles.size()));
    }
    return roles;
}

std::optional<std::string> extract_answer(const std::string& text, const std::string& marker) {
    if (marker.empty()) {
        return std::nullopt;
    }
    std::size_t pos = text.rfind(marker);
    if (pos == std::string::npos) {
        return std::nullopt;
    }
    std::size_t begin = pos + marker.size();
    while (begin < text.size() && std::isspace(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    if (begin < text.size() && text[begin] == ':') {
        ++begin;
    }
    while (begin < text.size() && std::isspace(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    std::size_t end = text.size();
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return text.substr(begin, end - begin);
}

std::string serialize_verdict(const JudgeVerdict& verdict) {
    json j;
    j["reasoning"] = verdict.reasoning;
    j["chosen responses"] = verdict.chosen;
    j["end debate"] = verdict.end_debate;
    return "```json\n" + j.dump() + "\n```";
}

std::string serialize_messages(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const auto& m : messages) {
        out += '[';
        out += to_string(m.role);
        out += "]\n";
        out += m.content;
        out += '\n';
    }
    return out;
}

} // namespace smoa
