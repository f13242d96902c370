#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "smoa/gateway.hpp"
#include "smoa/prompts.hpp"
#include "smoa/trace.hpp"

namespace smoa {

/// Everything needed to run one strategy. proposers is the ordered list
/// of n endpoint ids; for sc the single sampled endpoint, for mad the
/// two debaters. aggregator doubles as the mad judge and the role
/// generator endpoint.
struct PipelineConfig {
    std::string strategy = "smoa"; // moa | smoa | sc | mad
    std::vector<std::string> proposers;
    std::string aggregator;
    std::string judge_moderator;
    int layers = 2;
    int k = 2;
    bool roles_enabled = true;
    bool response_selection_enabled = true;
    bool early_stopping_enabled = true;
    bool judge_split_mode = false;
    double temperature = 0.7;
    int max_tokens = 2048;
    std::string dataset_description;
    std::string task_requirement;
    int sc_paths = 4;
    int mad_rounds = 2;

    int n() const { return static_cast<int>(proposers.size()); }
    void validate() const;
};

struct Candidate {
    int proposer_index = 0;
    std::string text;
    bool failed = false;
};

/// Snapshot of one layer after the proposer barrier: the role-free input
/// messages, the n candidates in proposer-index order, and the verdict
/// once the judge ran.
struct LayerState {
    int layer_index = 0;
    std::vector<ChatMessage> input;
    std::vector<Candidate> candidates;
    std::optional<JudgeVerdict> verdict;
};

struct EngineOptions {
    /// Store request messages and response text on trace events. Unset
    /// means: capture when the gateway is mocked.
    std::optional<bool> capture_content;
};

/// Verdict used when the judge output cannot be parsed: the first k
/// non-empty candidates in order (padded with the lowest unused indices
/// if fewer than k are non-empty), end_debate false.
JudgeVerdict fallback_verdict(const std::vector<std::string>& candidates, int k);

/// Runs one query through the configured strategy and returns the full
/// trace. Failures are folded into the trace (failed flag plus notes)
/// rather than thrown, so a batch never aborts on one bad query. Safe to
/// call concurrently; role profiles are generated once per (dataset
/// description, task requirement, n) and shared.
class Engine {
public:
    Engine(const ModelGateway& gateway, PipelineConfig config, EngineOptions options = {});

    const PipelineConfig& config() const { return config_; }
    bool capture_content() const;

    /// Generates (or returns cached) role profiles plus the trace event
    /// of the generating call. from_cache is true when no call was made;
    /// a non-empty error means role generation failed and later runs
    /// will proceed with roles disabled.
    struct RoleGeneration {
        std::vector<RoleProfile> roles;
        TraceEvent event;
        bool from_cache = false;
        std::string error;
    };
    RoleGeneration prewarm_roles() const;

    /// Strict form: returns the cached-or-generated profiles, throwing
    /// RoleCountMismatchError (or the underlying call error) on failure.
    std::vector<RoleProfile> generate_roles() const;

    RunTrace run(const std::string& query_id, const std::string& query) const;

private:
    struct RoleCache {
        enum class State { pending, ready, failed };
        State state = State::pending;
        std::vector<RoleProfile> roles;
        TraceEvent event;
        std::string error;
    };

    RunTrace run_layered(const std::string& query_id, const std::string& query,
                         bool sparse) const;
    LayerState run_layer(int layer_index, const std::vector<ChatMessage>& base_messages,
                         const std::string& query, const std::vector<RoleProfile>& roles,
                         RunTrace& trace) const;
    JudgeVerdict select_and_moderate(LayerState& state, const std::string& query,
                                     RunTrace& trace) const;
    const RoleCache& ensure_roles(bool& take_event) const;

    const ModelGateway& gateway_;
    PipelineConfig config_;
    EngineOptions options_;

    mutable std::mutex role_mutex_;
    mutable RoleCache role_cache_;
    mutable bool role_event_taken_ = false;
};

} // namespace smoa
