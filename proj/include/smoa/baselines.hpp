#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "smoa/pipeline.hpp"

namespace smoa {

struct VoteTally {
    std::map<std::string, int> counts; // keyed by normalized answer
    std::string winner;
};

struct DebateState {
    int round = 0;
    std::vector<std::pair<std::string, std::string>> transcript; // (speaker, text)
};

/// trim + collapse internal whitespace runs to one space + ASCII lowercase
std::string normalize_answer(const std::string& answer);

/// Counts normalized answers; the winner is the most frequent, ties
/// broken by earliest first occurrence in sampling order.
VoteTally majority_vote(const std::vector<std::string>& answers);

/// m independent samples from the single configured endpoint, majority
/// vote over extracted answers; y_final is the full text of the earliest
/// sample whose answer matches the winner.
RunTrace run_self_consistency(const ModelGateway& gateway, const PipelineConfig& config,
                              const EngineOptions& options, const std::string& query_id,
                              const std::string& query);

/// Two debaters alternate (affirmative first) for the configured rounds;
/// the aggregator endpoint judges the transcript and emits y_final.
RunTrace run_mad(const ModelGateway& gateway, const PipelineConfig& config,
                 const EngineOptions& options, const std::string& query_id,
                 const std::string& query);

} // namespace smoa
