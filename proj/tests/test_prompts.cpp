#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"
#include "smoa/prompts.hpp"

using namespace smoa;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open fixture " << path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string golden(const std::string& name) {
    return read_file(std::string(SMOA_FIXTURE_DIR) + "/golden/" + name);
}

} // namespace

TEST_CASE("rendered prompts match golden files byte for byte") {
    CHECK_EQ(serialize_messages(render_aggregate_prompt(
                 {"<RESPONSE_1>", "<RESPONSE_2>", "<RESPONSE_3>", "<RESPONSE_4>"}, "<QUERY>")),
             golden("aggregate_prompt.txt"));
    CHECK_EQ(serialize_messages(render_judge_moderator_prompt(
                 {"<RESPONSE_0>", "<RESPONSE_1>", "<RESPONSE_2>", "<RESPONSE_3>"}, "<QUERY>", 2)),
             golden("judge_moderator_prompt.txt"));
    CHECK_EQ(serialize_messages(
                 render_role_generation_prompt("<DATASET_DESCRIPTION>", "<TASK_REQUIREMENT>", 4)),
             golden("role_generation_prompt.txt"));
    CHECK_EQ(serialize_messages(render_mad_debater_prompt("negative", {"<ARGUMENT_1>"}, "<QUERY>")),
             golden("mad_debater_prompt.txt"));
    CHECK_EQ(serialize_messages(render_mad_judge_prompt({"<ARGUMENT_1>", "<ARGUMENT_2>"}, "<QUERY>")),
             golden("mad_judge_prompt.txt"));
}

TEST_CASE("template render substitutes every occurrence and rejects bad keys") {
    PromptTemplate tpl{"demo", "[X] and [X] but not [Y]", {"[X]"}};
    CHECK_EQ(tpl.render({{"[X]", "ok"}}), "ok and ok but not [Y]");
    CHECK_THROWS_AS(tpl.render({}), TemplateError);
    CHECK_THROWS_AS(tpl.render({{"[X]", "ok"}, {"[Z]", "extra"}}), TemplateError);

    // replacement text containing the placeholder must not loop forever
    PromptTemplate self{"self", "[X]", {"[X]"}};
    CHECK_EQ(self.render({{"[X]", "[X] nested"}}), "[X] nested");
}

TEST_CASE("aggregate prompt layout") {
    auto messages = render_aggregate_prompt({"A", "B"}, "Q");
    REQUIRE_EQ(messages.size(), 2);
    CHECK_EQ(messages[0].role, Role::system);
    CHECK_EQ(messages[1].role, Role::user);
    CHECK_EQ(messages[1].content, "Q");
    CHECK_MESSAGE(messages[0].content.rfind("You have been provided with a set of responses from "
                                            "various open-source models",
                                            0) == 0,
                  "system prompt must open with the synthesis instruction");
    CHECK_NE(messages[0].content.find("\n\nResponses from models:\n1. A\n2. B"), std::string::npos);
    CHECK_EQ(messages[0].content.find("Q"), std::string::npos); // query only in the user turn
    CHECK_THROWS_AS(render_aggregate_prompt({}, "Q"), EmptyResponsesError);
}

TEST_CASE("judge moderator prompt layout") {
    auto messages = render_judge_moderator_prompt({"c0", "c1", "c2"}, "Q", 2);
    REQUIRE_EQ(messages.size(), 2);
    const std::string& system = messages[0].content;
    CHECK_NE(system.find("select 2 responses"), std::string::npos);
    CHECK_NE(system.find("the best 2 response"), std::string::npos);
    CHECK_NE(system.find("\"chosen responses\": list"), std::string::npos);
    CHECK_NE(system.find("\"end debate\": bool"), std::string::npos);
    CHECK_EQ(messages[1].content, "Responses from models:\n0. c0\n1. c1\n2. c2\n\nQuestion: Q");

    auto k3 = render_judge_moderator_prompt({"a", "b", "c"}, "Q", 3);
    CHECK_NE(k3[0].content.find("select 3 responses"), std::string::npos);

    CHECK_THROWS_AS(render_judge_moderator_prompt({"a"}, "Q", 0), BadKError);
    CHECK_THROWS_AS(render_judge_moderator_prompt({}, "Q", 1), EmptyResponsesError);
}

TEST_CASE("role generation prompt layout") {
    auto messages = render_role_generation_prompt("Desc. ", "Solve it.", 4);
    REQUIRE_EQ(messages.size(), 1);
    CHECK_EQ(messages[0].role, Role::user);
    const std::string& body = messages[0].content;
    CHECK_NE(body.find("assign 4 different roles"), std::string::npos);
    CHECK_NE(body.find("Provide 4 role description"), std::string::npos);
    // dataset description and task requirement are concatenated verbatim
    CHECK_NE(body.find("Task: Desc. Solve it."), std::string::npos);

    auto one = render_role_generation_prompt("D", "T", 1);
    CHECK_NE(one[0].content.find("assign 1 different roles"), std::string::npos);

    CHECK_THROWS_AS(render_role_generation_prompt("D", "T", 0), ConfigError);
}

TEST_CASE("mad prompts") {
    auto first = render_mad_debater_prompt("affirmative", {}, "Q");
    REQUIRE_EQ(first.size(), 2);
    CHECK_NE(first[0].content.find("affirmative debater"), std::string::npos);
    CHECK_NE(first[1].content.find("(none yet)"), std::string::npos);

    auto second = render_mad_debater_prompt("negative", {"arg one", "arg two"}, "Q");
    const std::string& user = second[1].content;
    CHECK_NE(user.find("[affirmative round 1]\narg one"), std::string::npos);
    CHECK_NE(user.find("[negative round 1]\narg two"), std::string::npos);
    CHECK_LT(user.find("arg one"), user.find("arg two"));

    auto judge = render_mad_judge_prompt({"a1", "a2", "a3"}, "Q");
    CHECK_NE(judge[1].content.find("[affirmative round 2]\na3"), std::string::npos);
    CHECK_NE(judge[1].content.find("Give the final answer."), std::string::npos);
}

TEST_CASE("grader prompt joins aspects") {
    auto messages = render_grader_prompt({"accuracy", "clarity"}, "Q", "final text");
    CHECK_NE(messages[0].content.find("accuracy, clarity"), std::string::npos);
    CHECK_NE(messages[1].content.find("Question: Q"), std::string::npos);
    CHECK_NE(messages[1].content.find("final text"), std::string::npos);
    CHECK_THROWS_AS(render_grader_prompt({}, "Q", "a"), ConfigError);
}

TEST_CASE("split mode templates stay disjoint") {
    CHECK_EQ(judge_selection_template().body.find("end debate"), std::string::npos);
    CHECK_EQ(moderator_stop_template().body.find("chosen responses"), std::string::npos);
    CHECK_NE(moderator_stop_template().body.find("\"end debate\": bool"), std::string::npos);

    auto selection = render_judge_selection_prompt({"a", "b"}, "Q", 1);
    CHECK_NE(selection[0].content.find("select 1 responses"), std::string::npos);
    auto stop = render_moderator_stop_prompt({"a", "b"}, "Q");
    CHECK_EQ(stop[1].content, "Responses from models:\n0. a\n1. b\n\nQuestion: Q");
}

TEST_CASE("recover_json_object variants") {
    CHECK_EQ((*recover_json_object(R"({"a": 1})"))["a"], 1);
    CHECK_EQ((*recover_json_object("```json\n{\"a\": 2}\n```"))["a"], 2);
    CHECK_EQ((*recover_json_object("```\n{\"a\": 3}\n```"))["a"], 3);
    CHECK_EQ((*recover_json_object("Sure, here it is:\n```json\n{\"a\": 4}\n```\nDone."))["a"], 4);

    auto braces_in_string = recover_json_object(R"(text {"a": "b}c", "d": {"e": 1}} tail)");
    REQUIRE(braces_in_string.has_value());
    CHECK_EQ((*braces_in_string)["a"], "b}c");
    CHECK_EQ((*braces_in_string)["d"]["e"], 1);

    auto escaped = recover_json_object(R"(noise {"a": "he said \"}\" ok"} more)");
    REQUIRE(escaped.has_value());
    CHECK_EQ((*escaped)["a"], "he said \"}\" ok");

    CHECK_FALSE(recover_json_object("no object here").has_value());
    CHECK_FALSE(recover_json_object("{\"never\": closed").has_value());
    CHECK_FALSE(recover_json_object("[1, 2, 3]").has_value()); // arrays are not verdicts
}

TEST_CASE("normalize_chosen repairs selections") {
    bool changed = false;
    CHECK_EQ(normalize_chosen({2, 2, 9}, 2, 4, &changed), std::vector<int>{2, 0});
    CHECK(changed);

    CHECK_EQ(normalize_chosen({0, 1}, 2, 4, &changed), std::vector<int>{0, 1});
    CHECK_FALSE(changed);

    CHECK_EQ(normalize_chosen({3, 1}, 2, 4, &changed), std::vector<int>{3, 1}); // order kept
    CHECK_FALSE(changed);

    CHECK_EQ(normalize_chosen({}, 2, 4), std::vector<int>{0, 1});       // pad from scratch
    CHECK_EQ(normalize_chosen({1, 0, 2}, 2, 4), std::vector<int>{1, 0}); // truncate
    CHECK_EQ(normalize_chosen({0, 1, 2}, 5, 3), std::vector<int>{0, 1, 2}); // k capped at n

    CHECK_THROWS_AS(normalize_chosen({0}, 0, 4), BadKError);
    CHECK_THROWS_AS(normalize_chosen({0}, 2, 0), EmptyResponsesError);
}

TEST_CASE("normalize_chosen properties over random inputs") {
    std::mt19937 rng(20240817);
    std::uniform_int_distribution<int> n_dist(1, 6);
    std::uniform_int_distribution<int> k_dist(1, 8);
    std::uniform_int_distribution<int> len_dist(0, 10);
    std::uniform_int_distribution<int> idx_dist(-3, 9);
    for (int trial = 0; trial < 500; ++trial) {
        int n = n_dist(rng);
        int k = k_dist(rng);
        std::vector<int> raw(len_dist(rng));
        for (int& v : raw) {
            v = idx_dist(rng);
        }
        auto out = normalize_chosen(raw, k, n);
        CHECK_EQ(static_cast<int>(out.size()), std::min(k, n));
        std::set<int> unique(out.begin(), out.end());
        CHECK_EQ(unique.size(), out.size());
        for (int idx : out) {
            CHECK_GE(idx, 0);
            CHECK_LT(idx, n);
        }
        bool changed_again = true;
        CHECK_EQ(normalize_chosen(out, k, n, &changed_again), out); // idempotent
        CHECK_FALSE(changed_again);
    }
}

TEST_CASE("parse_judge_verdict accepts the documented schema") {
    const std::string raw = R"({"reasoning": "Responses 0 and 1 agree on the final fraction and )"
                            R"(show consistent work.", "chosen responses": [0, 1], "end debate": true})";
    auto verdict = parse_judge_verdict(raw, 2, 4);
    CHECK_EQ(verdict.chosen, std::vector<int>{0, 1});
    CHECK(verdict.end_debate);
    CHECK_FALSE(verdict.normalized);
    CHECK_NE(verdict.reasoning.find("consistent work"), std::string::npos);

    // the fenced form the template asks for parses to the same verdict
    auto fenced = parse_judge_verdict("```json\n" + raw + "\n```", 2, 4);
    CHECK_EQ(fenced.chosen, verdict.chosen);
    CHECK_EQ(fenced.end_debate, verdict.end_debate);
    CHECK_EQ(fenced.reasoning, verdict.reasoning);

    // prose around the snippet is tolerated
    auto wrapped = parse_judge_verdict("Here is my verdict:\n```json\n" + raw + "\n```\nThanks!",
                                       2, 4);
    CHECK_EQ(wrapped.chosen, std::vector<int>{0, 1});
}

TEST_CASE("parse_judge_verdict normalizes bad selections") {
    auto verdict =
        parse_judge_verdict(R"({"reasoning": "r", "chosen responses": [2, 2, 9], "end debate": false})",
                            2, 4);
    CHECK_EQ(verdict.chosen, std::vector<int>{2, 0});
    CHECK(verdict.normalized);
    CHECK_FALSE(verdict.end_debate);

    // non-integer entries are dropped but the verdict still parses
    auto dropped =
        parse_judge_verdict(R"({"reasoning": "r", "chosen responses": [1, "x"], "end debate": false})",
                            2, 4);
    CHECK_EQ(dropped.chosen, std::vector<int>{1, 0});
    CHECK(dropped.normalized);

    // non-string reasoning is coerced, not fatal
    auto coerced =
        parse_judge_verdict(R"({"reasoning": {"note": 1}, "chosen responses": [0], "end debate": true})",
                            1, 2);
    CHECK_EQ(coerced.reasoning, R"({"note":1})");
}

TEST_CASE("parse_judge_verdict rejects schema violations") {
    CHECK_THROWS_AS(parse_judge_verdict("no json at all", 2, 4), UnparseableVerdictError);
    CHECK_THROWS_AS(parse_judge_verdict(R"({"chosen responses": [0], "end debate": true})", 2, 4),
                    UnparseableVerdictError); // reasoning missing
    CHECK_THROWS_AS(parse_judge_verdict(R"({"reasoning": "r", "end debate": true})", 2, 4),
                    UnparseableVerdictError); // selection missing
    CHECK_THROWS_AS(parse_judge_verdict(R"({"reasoning": "r", "chosen responses": [0]})", 2, 4),
                    UnparseableVerdictError); // flag missing
    CHECK_THROWS_AS(
        parse_judge_verdict(R"({"reasoning": "r", "chosen responses": 3, "end debate": true})", 2, 4),
        UnparseableVerdictError); // selection not a list
    CHECK_THROWS_AS(
        parse_judge_verdict(R"({"reasoning": "r", "chosen responses": [0], "end debate": "yes"})", 2,
                            4),
        UnparseableVerdictError); // flag not a bool
}

TEST_CASE("split mode parsers are lenient about the other half") {
    auto selection = parse_selection_verdict(R"({"chosen responses": [1, 3]})", 2, 4);
    CHECK_EQ(selection.chosen, std::vector<int>{1, 3});
    CHECK_FALSE(selection.end_debate);
    CHECK_FALSE(selection.normalized);

    CHECK(parse_stop_verdict(R"({"end debate": true})"));
    CHECK_FALSE(parse_stop_verdict(R"({"reasoning": "r", "end debate": false})"));

    CHECK_THROWS_AS(parse_selection_verdict(R"({"end debate": true})", 2, 4),
                    UnparseableVerdictError);
    CHECK_THROWS_AS(parse_stop_verdict(R"({"end debate": "nope"})"), UnparseableVerdictError);
    CHECK_THROWS_AS(parse_stop_verdict("garbage"), UnparseableVerdictError);
}

TEST_CASE("verdict serialization round trips through the parser") {
    std::mt19937 rng(9001);
    std::uniform_int_distribution<int> n_dist(1, 6);
    std::uniform_int_distribution<int> bool_dist(0, 1);
    std::uniform_int_distribution<int> len_dist(0, 40);
    std::uniform_int_distribution<int> char_dist(0, 94);
    for (int trial = 0; trial < 200; ++trial) {
        int n = n_dist(rng);
        std::uniform_int_distribution<int> k_dist(1, n);
        int k = k_dist(rng);

        JudgeVerdict verdict;
        verdict.end_debate = bool_dist(rng) == 1;
        int len = len_dist(rng);
        for (int i = 0; i < len; ++i) {
            char c = static_cast<char>(' ' + char_dist(rng)); // printable, includes " and \
            verdict.reasoning.push_back(c);
        }
        if (bool_dist(rng) == 1) {
            verdict.reasoning += "\nsecond line\twith tab";
        }
        std::vector<int> pool(n);
        std::iota(pool.begin(), pool.end(), 0);
        std::shuffle(pool.begin(), pool.end(), rng);
        verdict.chosen.assign(pool.begin(), pool.begin() + k);

        auto parsed = parse_judge_verdict(serialize_verdict(verdict), k, n);
        CHECK_EQ(parsed.reasoning, verdict.reasoning);
        CHECK_EQ(parsed.chosen, verdict.chosen);
        CHECK_EQ(parsed.end_debate, verdict.end_debate);
        CHECK_FALSE(parsed.normalized);
    }
}

TEST_CASE("parse_judge_verdict is total over arbitrary input") {
    std::mt19937 rng(424242);
    std::uniform_int_distribution<int> mode_dist(0, 3);
    std::uniform_int_distribution<int> len_dist(0, 120);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    const std::string valid =
        R"({"reasoning": "r", "chosen responses": [0, 1], "end debate": true})";
    int parsed_count = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::string input;
        switch (mode_dist(rng)) {
        case 0: { // raw bytes
            int len = len_dist(rng);
            for (int i = 0; i < len; ++i) {
                input.push_back(static_cast<char>(byte_dist(rng)));
            }
            break;
        }
        case 1: { // truncated valid verdict
            std::uniform_int_distribution<int> cut(0, static_cast<int>(valid.size()));
            input = valid.substr(0, cut(rng));
            break;
        }
        case 2: { // fenced object with randomly wrong value types
            json j;
            j["reasoning"] = byte_dist(rng) % 2 == 0 ? json("ok") : json(7);
            j["chosen responses"] =
                byte_dist(rng) % 2 == 0 ? json::array({0, 1}) : json("not a list");
            j["end debate"] = byte_dist(rng) % 2 == 0 ? json(true) : json("true");
            input = "```json\n" + j.dump() + "\n```";
            break;
        }
        default: { // json-ish noise around a brace soup
            int len = len_dist(rng);
            input = "{";
            const std::string alphabet = "{}[]\":, abtrue01\\n";
            std::uniform_int_distribution<int> pick(0, static_cast<int>(alphabet.size()) - 1);
            for (int i = 0; i < len; ++i) {
                input.push_back(alphabet[pick(rng)]);
            }
            break;
        }
        }
        try {
            auto verdict = parse_judge_verdict(input, 2, 4);
            ++parsed_count;
            CHECK_EQ(verdict.chosen.size(), 2);
            for (int idx : verdict.chosen) {
                CHECK_GE(idx, 0);
                CHECK_LT(idx, 4);
            }
        } catch (const UnparseableVerdictError&) {
            // the only acceptable failure mode
        }
    }
    CHECK_GT(parsed_count, 0); // the generator must exercise the happy path too
}

TEST_CASE("parse_roles splits on markers") {
    const std::string text = "Sure! Here are the roles.\n"
                             "[Generated Role Description 1]\n"
                             "You are a data analyst specializing in business intelligence.\n\n"
                             "[Generated Role Description 2]\nYou are a business consultant.\n\n"
                             "[Generated Role Description 3]\nYou are a math professor.\n\n"
                             "[Generated Role Description 4]\nYou are a math teacher.\n";
    auto roles = parse_roles(text, 4);
    REQUIRE_EQ(roles.size(), 4);
    CHECK_EQ(roles[0].index, 0);
    CHECK_EQ(roles[0].description, "You are a data analyst specializing in business intelligence.");
    CHECK_EQ(roles[3].description, "You are a math teacher.");

    // unnumbered markers split the same way
    auto bare = parse_roles("[Generated Role Description]\nfirst\n[Generated Role Description]\nsecond",
                            2);
    CHECK_EQ(bare[0].description, "first");
    CHECK_EQ(bare[1].description, "second");

    // surplus segments are truncated to the first n
    auto surplus = parse_roles("[Generated Role Description 1]\na\n"
                               "[Generated Role Description 2]\nb\n"
                               "[Generated Role Description 3]\nc",
                               2);
    REQUIRE_EQ(surplus.size(), 2);
    CHECK_EQ(surplus[1].description, "b");

    // empty segments between adjacent markers are skipped
    auto gappy = parse_roles("[Generated Role Description 1]\n \n"
                             "[Generated Role Description 2]\nreal role",
                             1);
    CHECK_EQ(gappy[0].description, "real role");

    CHECK_THROWS_AS(parse_roles("[Generated Role Description 1]\nonly one", 4),
                    RoleCountMismatchError);
    CHECK_THROWS_AS(parse_roles("no markers whatsoever", 1), RoleCountMismatchError);
    CHECK_THROWS_AS(parse_roles("whatever", 0), ConfigError);
}

TEST_CASE("extract_answer finds the last marker") {
    CHECK_EQ(extract_answer("Multiplying gives 16/21.\n#ANSWER#: 16/21"), "16/21");
    CHECK_EQ(extract_answer("#ANSWER#: a\nreconsidering...\n#ANSWER#: b\n"), "b");
    CHECK_EQ(extract_answer("#ANSWER#\n6/55"), "6/55");
    CHECK_EQ(extract_answer("#ANSWER#:  (4/11) * (3/10)  "), "(4/11) * (3/10)");
    CHECK_EQ(extract_answer("ends with the marker #ANSWER#:"), "");
    CHECK_FALSE(extract_answer("no marker in sight").has_value());
    CHECK_FALSE(extract_answer("lowercase #answer#: 5").has_value()); // case sensitive

    CHECK_EQ(extract_answer("verdict FINAL: 42", "FINAL"), "42");
    CHECK_FALSE(extract_answer("anything", "").has_value());
}
