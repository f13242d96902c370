#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "smoa/dataset.hpp"
#include "smoa/ledger.hpp"
#include "smoa/pipeline.hpp"

namespace smoa {

struct GraderSpec {
    std::string grader_endpoint;
    std::vector<std::string> aspects;
};

/// Aggregate result of one benchmark pass. Token totals are the fold
/// over every written trace event (grading calls are accounted
/// separately and never enter traces or the ledger).
struct RunSummary {
    std::string dataset_id;
    std::string strategy;
    int n = 0;
    int layers = 0;
    int k = 0;
    int records_total = 0;
    int records_failed = 0;
    int records_scored = 0;
    std::optional<double> exact_match; // mean over scored records
    std::map<std::string, double> aspect_scores;
    int graded_records = 0;
    int ungraded_records = 0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::map<std::string, long> prompt_tokens_by_role;
    std::map<std::string, long> completion_tokens_by_role;
    long grading_prompt_tokens = 0;
    long grading_completion_tokens = 0;
    long long cost_milli_cents = 0;
    std::string currency;
    double wall_time_ms = 0.0;

    double cost() const { return static_cast<double>(cost_milli_cents) / 100000.0; }
};

void to_json(nlohmann::json& j, const RunSummary& summary);
void from_json(const nlohmann::json& j, RunSummary& summary);

std::string summary_csv_header();
std::string summary_csv_row(const RunSummary& summary);

struct BenchmarkOptions {
    int concurrency = 4;
    std::string trace_path;      // empty: keep traces in memory only
    std::string dataset_id;
    std::string run_id_prefix;   // namespaces ledger run ids across sweep points
    const PriceTable* prices = nullptr;
    std::optional<GraderSpec> grader;
    EngineOptions engine;
};

struct BenchmarkResult {
    std::vector<RunTrace> traces; // role-generation trace first when present
    RunSummary summary;
};

/// Runs every record through the strategy with bounded parallelism.
/// Traces are committed in dataset order, each line flushed before the
/// next starts writing, so a killed process leaves a valid JSONL prefix.
/// Role profiles are generated once up front and logged as their own
/// trace line (query_id "__roles__"). Per-record failures are folded
/// into the summary, never thrown.
BenchmarkResult run_benchmark(const ModelGateway& gateway, const PipelineConfig& config,
                              const std::vector<DatasetRecord>& records,
                              const BenchmarkOptions& options, CostLedger* ledger = nullptr);

/// 1 when the normalized extracted answer equals the normalized
/// reference, else 0. flagged is set when the answer marker is missing.
int score_exact_match(const RunTrace& trace, const DatasetRecord& record,
                      bool* flagged = nullptr);

/// Pulls per-aspect numeric scores out of a grader reply. Throws
/// GradeParseError when no scores object can be recovered; aspects
/// missing from the reply are simply absent from the result.
std::map<std::string, double> parse_grade_scores(const std::string& text,
                                                 const std::vector<std::string>& aspects);

struct GradeResult {
    std::map<std::string, double> scores;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    bool ok = false;
    std::string error;
};

/// One grader call covering all aspects at temperature 0.
GradeResult grade_with_llm(const ModelGateway& gateway, const GraderSpec& grader,
                           const RunTrace& trace, const DatasetRecord& record);

struct SweepPoint {
    std::string param;
    int value = 0;
    RunSummary summary;
};

/// Reruns the benchmark for each value of "k" or "n". For n beyond the
/// configured proposer list the list repeats round-robin. Trace paths
/// gain a _<param><value> suffix; ledger run ids are prefixed the same
/// way.
std::vector<SweepPoint> sweep(const ModelGateway& gateway, const PipelineConfig& base_config,
                              const std::vector<DatasetRecord>& records,
                              const BenchmarkOptions& base_options, const std::string& param,
                              const std::vector<int>& values, CostLedger* ledger = nullptr);

} // namespace smoa
