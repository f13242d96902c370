#include "smoa/pipeline.hpp"

#include <algorithm>
#include <future>
#include <set>

#include "call_util.hpp"
#include "smoa/baselines.hpp"
#include "smoa/errors.hpp"

namespace smoa {

namespace {

bool usable(const Candidate& c) { return !c.failed && !c.text.empty(); }

std::vector<std::string> candidate_texts(const LayerState& state) {
    std::vector<std::string> texts;
    texts.reserve(state.candidates.size());
    for (const auto& c : state.candidates) {
        texts.push_back(c.text);
    }
    return texts;
}

std::vector<int> all_indices(int n) {
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = i;
    }
    return out;
}

} // namespace

void PipelineConfig::validate() const {
    static const std::set<std::string> known = {"moa", "smoa", "sc", "mad"};
    if (known.count(strategy) == 0) {
        throw ConfigError("unknown strategy: " + strategy);
    }
    if (proposers.empty()) {
        throw ConfigError("at least one proposer endpoint is required");
    }
    if (layers < 1) {
        throw ConfigError("layers must be at least 1");
    }
    if (temperature < 0.0) {
        throw ConfigError("temperature must be non-negative");
    }
    if (max_tokens < 1) {
        throw ConfigError("max_tokens must be at least 1");
    }
    if (strategy == "moa" || strategy == "smoa") {
        if (aggregator.empty()) {
            throw ConfigError("strategy " + strategy + " needs an aggregator endpoint");
        }
    }
    if (strategy == "smoa") {
        if (judge_moderator.empty()) {
            throw ConfigError("strategy smoa needs a judge_moderator endpoint");
        }
        if (k < 1 || k > n()) {
            throw BadKError("k must be in [1, " + std::to_string(n()) + "], got " +
                            std::to_string(k));
        }
        if (roles_enabled && aggregator.empty()) {
            throw ConfigError("role generation needs an aggregator endpoint");
        }
    }
    if (strategy == "sc") {
        if (n() != 1) {
            throw ConfigError("strategy sc samples exactly one endpoint, got " +
                              std::to_string(n()) + " proposers");
        }
        if (sc_paths < 1) {
            throw ConfigError("sc_paths must be at least 1");
        }
    }
    if (strategy == "mad") {
        if (n() != 2) {
            throw ConfigError("strategy mad needs exactly two debater endpoints, got " +
                              std::to_string(n()));
        }
        if (mad_rounds < 1) {
            throw ConfigError("mad_rounds must be at least 1");
        }
        if (aggregator.empty()) {
            throw ConfigError("strategy mad needs an aggregator endpoint for the judge");
        }
    }
}

JudgeVerdict fallback_verdict(const std::vector<std::string>& candidates, int k) {
    if (candidates.empty()) {
        throw EmptyResponsesError("cannot build a fallback verdict from zero candidates");
    }
    if (k < 1) {
        throw BadKError("selection count must be at least 1, got " + std::to_string(k));
    }
    const int n = static_cast<int>(candidates.size());
    const int effective_k = std::min(k, n);
    std::vector<int> chosen;
    for (int i = 0; i < n && static_cast<int>(chosen.size()) < effective_k; ++i) {
        if (!candidates[static_cast<std::size_t>(i)].empty()) {
            chosen.push_back(i);
        }
    }
    for (int i = 0; i < n && static_cast<int>(chosen.size()) < effective_k; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
            chosen.push_back(i);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    JudgeVerdict verdict;
    verdict.reasoning = "fallback selection";
    verdict.chosen = std::move(chosen);
    verdict.end_debate = false;
    verdict.normalized = true;
    return verdict;
}

Engine::Engine(const ModelGateway& gateway, PipelineConfig config, EngineOptions options)
    : gateway_(gateway), config_(std::move(config)), options_(options) {
    config_.validate();
    for (const auto& id : config_.proposers) {
        gateway_.endpoint(id); // throws on unknown ids up front
    }
    if (!config_.aggregator.empty()) {
        gateway_.endpoint(config_.aggregator);
    }
    if (!config_.judge_moderator.empty()) {
        gateway_.endpoint(config_.judge_moderator);
    }
}

bool Engine::capture_content() const {
    return options_.capture_content.value_or(gateway_.is_mock());
}

const Engine::RoleCache& Engine::ensure_roles(bool& take_event) const {
    std::lock_guard lock(role_mutex_);
    if (role_cache_.state == RoleCache::State::pending) {
        auto messages = render_role_generation_prompt(config_.dataset_description,
                                                      config_.task_requirement, config_.n());
        auto outcome =
            detail::perform_call(gateway_, CallRole::role_generator, 0, config_.aggregator,
                                 std::move(messages), config_.temperature, config_.max_tokens,
                                 capture_content());
        role_cache_.event = outcome.event;
        if (!outcome.ok) {
            role_cache_.state = RoleCache::State::failed;
            role_cache_.error = outcome.error;
        } else {
            try {
                role_cache_.roles = parse_roles(outcome.response.content, config_.n());
                role_cache_.state = RoleCache::State::ready;
            } catch (const Error& e) {
                role_cache_.state = RoleCache::State::failed;
                role_cache_.error = e.what();
            }
        }
        role_event_taken_ = false;
    }
    take_event = !role_event_taken_;
    role_event_taken_ = true;
    return role_cache_;
}

Engine::RoleGeneration Engine::prewarm_roles() const {
    bool take = false;
    const RoleCache& cache = ensure_roles(take);
    RoleGeneration out;
    out.roles = cache.roles;
    out.event = cache.event;
    out.from_cache = !take;
    out.error = cache.error;
    return out;
}

std::vector<RoleProfile> Engine::generate_roles() const {
    bool take = false;
    const RoleCache& cache = ensure_roles(take);
    if (cache.state != RoleCache::State::ready) {
        throw RoleCountMismatchError("role generation failed: " + cache.error);
    }
    return cache.roles;
}

RunTrace Engine::run(const std::string& query_id, const std::string& query) const {
    if (config_.strategy == "smoa") {
        return run_layered(query_id, query, true);
    }
    if (config_.strategy == "moa") {
        return run_layered(query_id, query, false);
    }
    if (config_.strategy == "sc") {
        return run_self_consistency(gateway_, config_, options_, query_id, query);
    }
    return run_mad(gateway_, config_, options_, query_id, query);
}

RunTrace Engine::run_layered(const std::string& query_id, const std::string& query,
                             bool sparse) const {
    RunTrace trace;
    trace.query_id = query_id;
    trace.strategy = sparse ? "smoa" : "moa";

    std::vector<RoleProfile> roles;
    if (sparse && config_.roles_enabled) {
        bool take = false;
        const RoleCache& cache = ensure_roles(take);
        if (take) {
            trace.events.push_back(cache.event);
        }
        if (cache.state == RoleCache::State::ready) {
            roles = cache.roles;
            trace.roles_used = roles;
        } else {
            trace.notes.push_back("roles_degraded: " + cache.error);
        }
    }

    std::vector<std::string> forwarded;
    int executed = 0;
    for (int i = 1; i <= config_.layers; ++i) {
        std::vector<ChatMessage> base = (i == 1)
                                            ? std::vector<ChatMessage>{user_message(query)}
                                            : render_aggregate_prompt(forwarded, query);
        LayerState state = run_layer(i, base, query, roles, trace);
        executed = i;
        bool any_usable = std::any_of(state.candidates.begin(), state.candidates.end(), usable);
        if (!any_usable) {
            trace.stop_layer = i;
            trace.failed = true;
            trace.notes.push_back("layer_failed: no usable candidate in layer " +
                                  std::to_string(i));
            return trace;
        }
        if (sparse) {
            JudgeVerdict verdict = select_and_moderate(state, query, trace);
            std::vector<int> chosen = config_.response_selection_enabled
                                          ? verdict.chosen
                                          : all_indices(config_.n());
            forwarded.clear();
            for (int idx : chosen) {
                forwarded.push_back(state.candidates[static_cast<std::size_t>(idx)].text);
            }
            if (config_.early_stopping_enabled && verdict.end_debate) {
                break;
            }
        } else {
            forwarded = candidate_texts(state);
        }
    }
    trace.stop_layer = executed;

    auto agg_messages = render_aggregate_prompt(forwarded, query);
    auto outcome =
        detail::perform_call(gateway_, CallRole::aggregator, executed, config_.aggregator,
                             std::move(agg_messages), config_.temperature, config_.max_tokens,
                             capture_content());
    trace.events.push_back(outcome.event);
    if (!outcome.ok) {
        trace.failed = true;
        trace.notes.push_back("aggregator_failed: " + outcome.error);
        return trace;
    }
    trace.final_answer = outcome.response.content;
    if (trace.final_answer.empty()) {
        trace.failed = true;
        trace.notes.push_back("empty_final_answer");
    }
    return trace;
}

LayerState Engine::run_layer(int layer_index, const std::vector<ChatMessage>& base_messages,
                             const std::string& query, const std::vector<RoleProfile>& roles,
                             RunTrace& trace) const {
    LayerState state;
    state.layer_index = layer_index;
    state.input = base_messages;

    std::vector<std::future<detail::CallOutcome>> futures;
    futures.reserve(config_.proposers.size());
    for (int j = 0; j < config_.n(); ++j) {
        std::vector<ChatMessage> messages;
        if (!roles.empty()) {
            const std::string& role_text = roles[static_cast<std::size_t>(j)].description;
            if (layer_index == 1) {
                messages = {system_message(role_text), user_message(query)};
            } else {
                messages = {system_message(role_text + "\n\n" + base_messages.front().content),
                            user_message(query)};
            }
        } else {
            messages = base_messages;
        }
        futures.push_back(std::async(
            std::launch::async,
            [this, layer_index, j, messages = std::move(messages)]() mutable {
                return detail::perform_call(gateway_, CallRole::proposer, layer_index,
                                            config_.proposers[static_cast<std::size_t>(j)],
                                            std::move(messages), config_.temperature,
                                            config_.max_tokens, capture_content());
            }));
    }
    for (int j = 0; j < config_.n(); ++j) {
        detail::CallOutcome outcome = futures[static_cast<std::size_t>(j)].get();
        trace.events.push_back(outcome.event);
        Candidate candidate;
        candidate.proposer_index = j;
        candidate.failed = !outcome.ok;
        candidate.text = outcome.ok ? outcome.response.content : std::string();
        if (!outcome.ok) {
            trace.notes.push_back("proposer_failed: layer " + std::to_string(layer_index) +
                                  " proposer " + std::to_string(j) + ": " + outcome.error);
        }
        state.candidates.push_back(std::move(candidate));
    }
    return state;
}

JudgeVerdict Engine::select_and_moderate(LayerState& state, const std::string& query,
                                         RunTrace& trace) const {
    const std::vector<std::string> texts = candidate_texts(state);
    const int n = static_cast<int>(texts.size());
    JudgeVerdict verdict;

    if (config_.judge_split_mode) {
        auto selection =
            detail::perform_call(gateway_, CallRole::judge_moderator, state.layer_index,
                                 config_.judge_moderator,
                                 render_judge_selection_prompt(texts, query, config_.k),
                                 config_.temperature, config_.max_tokens, capture_content());
        trace.events.push_back(selection.event);
        if (selection.ok) {
            try {
                verdict = parse_selection_verdict(selection.response.content, config_.k, n);
            } catch (const UnparseableVerdictError& e) {
                verdict = fallback_verdict(texts, config_.k);
                trace.notes.push_back("judge_fallback: layer " +
                                      std::to_string(state.layer_index) + ": " + e.what());
            }
        } else {
            verdict = fallback_verdict(texts, config_.k);
            trace.notes.push_back("judge_call_failed: layer " +
                                  std::to_string(state.layer_index) + ": " + selection.error);
        }
        auto stop = detail::perform_call(gateway_, CallRole::judge_moderator, state.layer_index,
                                         config_.judge_moderator,
                                         render_moderator_stop_prompt(texts, query),
                                         config_.temperature, config_.max_tokens,
                                         capture_content());
        trace.events.push_back(stop.event);
        verdict.end_debate = false;
        if (stop.ok) {
            try {
                verdict.end_debate = parse_stop_verdict(stop.response.content);
            } catch (const UnparseableVerdictError& e) {
                trace.notes.push_back("stop_fallback: layer " +
                                      std::to_string(state.layer_index) + ": " + e.what());
            }
        } else {
            trace.notes.push_back("stop_call_failed: layer " + std::to_string(state.layer_index) +
                                  ": " + stop.error);
        }
    } else {
        auto outcome =
            detail::perform_call(gateway_, CallRole::judge_moderator, state.layer_index,
                                 config_.judge_moderator,
                                 render_judge_moderator_prompt(texts, query, config_.k),
                                 config_.temperature, config_.max_tokens, capture_content());
        trace.events.push_back(outcome.event);
        if (outcome.ok) {
            try {
                verdict = parse_judge_verdict(outcome.response.content, config_.k, n);
            } catch (const UnparseableVerdictError& e) {
                verdict = fallback_verdict(texts, config_.k);
                trace.notes.push_back("judge_fallback: layer " +
                                      std::to_string(state.layer_index) + ": " + e.what());
            }
        } else {
            verdict = fallback_verdict(texts, config_.k);
            trace.notes.push_back("judge_call_failed: layer " +
                                  std::to_string(state.layer_index) + ": " + outcome.error);
        }
    }
    state.verdict = verdict;
    return verdict;
}

} // namespace smoa
