#include "smoa/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <future>

#include "call_util.hpp"
#include "smoa/errors.hpp"

namespace smoa {

namespace {

bool resolve_capture(const ModelGateway& gateway, const EngineOptions& options) {
    return options.capture_content.value_or(gateway.is_mock());
}

} // namespace

std::string normalize_answer(const std::string& answer) {
    std::string out;
    bool pending_space = false;
    for (char raw : answer) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

VoteTally majority_vote(const std::vector<std::string>& answers) {
    if (answers.empty()) {
        throw EmptyResponsesError("majority vote needs at least one answer");
    }
    VoteTally tally;
    std::vector<std::string> first_seen_order;
    for (const auto& answer : answers) {
        std::string key = normalize_answer(answer);
        if (tally.counts.find(key) == tally.counts.end()) {
            first_seen_order.push_back(key);
        }
        ++tally.counts[key];
    }
    int best = -1;
    for (const auto& key : first_seen_order) {
        if (tally.counts[key] > best) {
            best = tally.counts[key];
            tally.winner = key;
        }
    }
    return tally;
}

RunTrace run_self_consistency(const ModelGateway& gateway, const PipelineConfig& config,
                              const EngineOptions& options, const std::string& query_id,
                              const std::string& query) {
    const bool capture = resolve_capture(gateway, options);
    const std::string& endpoint = config.proposers.front();
    const int m = config.sc_paths;

    RunTrace trace;
    trace.query_id = query_id;
    trace.strategy = "sc";
    trace.stop_layer = 1;

    std::vector<std::future<detail::CallOutcome>> futures;
    futures.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        futures.push_back(std::async(std::launch::async, [&gateway, &config, &endpoint, &query,
                                                          capture] {
            return detail::perform_call(gateway, CallRole::sc_sampler, 0, endpoint,
                                        {user_message(query)}, config.temperature,
                                        config.max_tokens, capture);
        }));
    }

    std::vector<std::string> sample_texts;
    std::vector<bool> sample_ok;
    for (int i = 0; i < m; ++i) {
        detail::CallOutcome outcome = futures[static_cast<std::size_t>(i)].get();
        trace.events.push_back(outcome.event);
        sample_ok.push_back(outcome.ok);
        sample_texts.push_back(outcome.ok ? outcome.response.content : std::string());
        if (!outcome.ok) {
            trace.notes.push_back("sample_failed: sample " + std::to_string(i) + ": " +
                                  outcome.error);
        }
    }

    if (std::none_of(sample_ok.begin(), sample_ok.end(), [](bool ok) { return ok; })) {
        trace.failed = true;
        trace.notes.push_back("run_failed: all samples failed");
        return trace;
    }

    std::vector<std::string> answers;
    std::vector<int> answer_sample; // sample index per extracted answer
    for (int i = 0; i < m; ++i) {
        if (!sample_ok[static_cast<std::size_t>(i)]) {
            continue;
        }
        auto answer = extract_answer(sample_texts[static_cast<std::size_t>(i)]);
        if (answer && !answer->empty()) {
            answers.push_back(*answer);
            answer_sample.push_back(i);
        }
    }

    if (answers.empty()) {
        for (int i = 0; i < m; ++i) {
            if (sample_ok[static_cast<std::size_t>(i)]) {
                trace.final_answer = sample_texts[static_cast<std::size_t>(i)];
                break;
            }
        }
        trace.notes.push_back("no_answer_marker");
        return trace;
    }

    VoteTally tally = majority_vote(answers);
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (normalize_answer(answers[i]) == tally.winner) {
            trace.final_answer = sample_texts[static_cast<std::size_t>(answer_sample[i])];
            break;
        }
    }
    return trace;
}

RunTrace run_mad(const ModelGateway& gateway, const PipelineConfig& config,
                 const EngineOptions& options, const std::string& query_id,
                 const std::string& query) {
    const bool capture = resolve_capture(gateway, options);
    const int rounds = config.mad_rounds;

    RunTrace trace;
    trace.query_id = query_id;
    trace.strategy = "mad";

    DebateState debate;
    std::vector<std::string> transcript_texts;
    for (int round = 1; round <= rounds; ++round) {
        debate.round = round;
        for (int side = 0; side < 2; ++side) {
            const char* speaker = (side == 0) ? "affirmative" : "negative";
            auto outcome = detail::perform_call(
                gateway, CallRole::debater, round,
                config.proposers[static_cast<std::size_t>(side)],
                render_mad_debater_prompt(speaker, transcript_texts, query), config.temperature,
                config.max_tokens, capture);
            trace.events.push_back(outcome.event);
            if (!outcome.ok) {
                trace.notes.push_back("debater_failed: round " + std::to_string(round) + " " +
                                      speaker + ": " + outcome.error);
            }
            transcript_texts.push_back(outcome.ok ? outcome.response.content : std::string());
            debate.transcript.emplace_back(speaker, transcript_texts.back());
        }
    }

    trace.stop_layer = rounds;
    auto judged = detail::perform_call(gateway, CallRole::aggregator, rounds, config.aggregator,
                                       render_mad_judge_prompt(transcript_texts, query),
                                       config.temperature, config.max_tokens, capture);
    trace.events.push_back(judged.event);
    if (!judged.ok) {
        trace.failed = true;
        trace.notes.push_back("judge_failed: " + judged.error);
        return trace;
    }
    trace.final_answer = judged.response.content;
    if (trace.final_answer.empty()) {
        trace.failed = true;
        trace.notes.push_back("empty_final_answer");
    }
    return trace;
}

} // namespace smoa
