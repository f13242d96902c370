#include "smoa/harness.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>

#include <nlohmann/json.hpp>

#include "smoa/baselines.hpp"
#include "smoa/errors.hpp"

namespace smoa {

namespace {

using json = nlohmann::json;

std::string format_fixed(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6f", value);
    return buffer;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    std::size_t dot = path.find_last_of('.');
    std::size_t slash = path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + suffix;
    }
    return path.substr(0, dot) + suffix + path.substr(dot);
}

} // namespace

void to_json(json& j, const RunSummary& summary) {
    j = json{{"dataset_id", summary.dataset_id},
             {"strategy", summary.strategy},
             {"n", summary.n},
             {"layers", summary.layers},
             {"k", summary.k},
             {"records_total", summary.records_total},
             {"records_failed", summary.records_failed},
             {"records_scored", summary.records_scored},
             {"aspect_scores", summary.aspect_scores},
             {"graded_records", summary.graded_records},
             {"ungraded_records", summary.ungraded_records},
             {"prompt_tokens", summary.prompt_tokens},
             {"completion_tokens", summary.completion_tokens},
             {"prompt_tokens_by_role", summary.prompt_tokens_by_role},
             {"completion_tokens_by_role", summary.completion_tokens_by_role},
             {"grading_prompt_tokens", summary.grading_prompt_tokens},
             {"grading_completion_tokens", summary.grading_completion_tokens},
             {"cost_milli_cents", summary.cost_milli_cents},
             {"cost", summary.cost()},
             {"currency", summary.currency},
             {"wall_time_ms", summary.wall_time_ms}};
    if (summary.exact_match) {
        j["exact_match"] = *summary.exact_match;
    } else {
        j["exact_match"] = nullptr;
    }
}

void from_json(const json& j, RunSummary& summary) {
    summary.dataset_id = j.at("dataset_id").get<std::string>();
    summary.strategy = j.at("strategy").get<std::string>();
    summary.n = j.at("n").get<int>();
    summary.layers = j.at("layers").get<int>();
    summary.k = j.at("k").get<int>();
    summary.records_total = j.at("records_total").get<int>();
    summary.records_failed = j.at("records_failed").get<int>();
    summary.records_scored = j.at("records_scored").get<int>();
    summary.aspect_scores = j.at("aspect_scores").get<std::map<std::string, double>>();
    summary.graded_records = j.at("graded_records").get<int>();
    summary.ungraded_records = j.at("ungraded_records").get<int>();
    summary.prompt_tokens = j.at("prompt_tokens").get<long>();
    summary.completion_tokens = j.at("completion_tokens").get<long>();
    summary.prompt_tokens_by_role =
        j.at("prompt_tokens_by_role").get<std::map<std::string, long>>();
    summary.completion_tokens_by_role =
        j.at("completion_tokens_by_role").get<std::map<std::string, long>>();
    summary.grading_prompt_tokens = j.at("grading_prompt_tokens").get<long>();
    summary.grading_completion_tokens = j.at("grading_completion_tokens").get<long>();
    summary.cost_milli_cents = j.at("cost_milli_cents").get<long long>();
    summary.currency = j.at("currency").get<std::string>();
    summary.wall_time_ms = j.at("wall_time_ms").get<double>();
    if (j.contains("exact_match") && !j.at("exact_match").is_null()) {
        summary.exact_match = j.at("exact_match").get<double>();
    } else {
        summary.exact_match = std::nullopt;
    }
}

std::string summary_csv_header() {
    return "dataset,strategy,n,l,k,score,prompt_tokens,completion_tokens,cost";
}

std::string summary_csv_row(const RunSummary& summary) {
    std::string score;
    if (summary.exact_match) {
        score = format_fixed(*summary.exact_match);
    } else if (!summary.aspect_scores.empty()) {
        double sum = 0.0;
        for (const auto& [aspect, value] : summary.aspect_scores) {
            sum += value;
        }
        score = format_fixed(sum / static_cast<double>(summary.aspect_scores.size()));
    }
    std::string row = csv_escape(summary.dataset_id);
    row += ',';
    row += summary.strategy;
    row += ',';
    row += std::to_string(summary.n);
    row += ',';
    row += std::to_string(summary.layers);
    row += ',';
    row += std::to_string(summary.k);
    row += ',';
    row += score;
    row += ',';
    row += std::to_string(summary.prompt_tokens);
    row += ',';
    row += std::to_string(summary.completion_tokens);
    row += ',';
    row += format_fixed(summary.cost());
    return row;
}

int score_exact_match(const RunTrace& trace, const DatasetRecord& record, bool* flagged) {
    if (!record.reference) {
        throw ConfigError("record " + record.id + " has no reference answer");
    }
    if (flagged != nullptr) {
        *flagged = false;
    }
    auto answer = extract_answer(trace.final_answer);
    if (!answer || answer->empty()) {
        if (flagged != nullptr) {
            *flagged = true;
        }
        return 0;
    }
    return normalize_answer(*answer) == normalize_answer(*record.reference) ? 1 : 0;
}

std::map<std::string, double> parse_grade_scores(const std::string& text,
                                                 const std::vector<std::string>& aspects) {
    auto object = recover_json_object(text);
    if (!object) {
        throw GradeParseError("no JSON object in grader reply");
    }
    if (!object->contains("scores") || !object->at("scores").is_object()) {
        throw GradeParseError("grader reply has no scores object");
    }
    std::map<std::string, double> out;
    const json& scores = object->at("scores");
    for (const auto& aspect : aspects) {
        if (scores.contains(aspect) && scores.at(aspect).is_number()) {
            out[aspect] = scores.at(aspect).get<double>();
        }
    }
    return out;
}

GradeResult grade_with_llm(const ModelGateway& gateway, const GraderSpec& grader,
                           const RunTrace& trace, const DatasetRecord& record) {
    if (grader.aspects.empty()) {
        throw ConfigError("grader needs at least one aspect");
    }
    GradeResult result;
    ChatRequest request;
    request.endpoint_id = grader.grader_endpoint;
    request.messages = render_grader_prompt(grader.aspects, record.prompt, trace.final_answer);
    request.temperature = 0.0;
    request.max_tokens = 1024;
    try {
        ChatResponse response = gateway.complete_chat(request);
        result.prompt_tokens = response.prompt_tokens;
        result.completion_tokens = response.completion_tokens;
        result.scores = parse_grade_scores(response.content, grader.aspects);
        result.ok = true;
    } catch (const Error& e) {
        result.error = e.what();
    }
    return result;
}

BenchmarkResult run_benchmark(const ModelGateway& gateway, const PipelineConfig& config,
                              const std::vector<DatasetRecord>& records,
                              const BenchmarkOptions& options, CostLedger* ledger) {
    config.validate();
    if (records.empty()) {
        throw ConfigError("dataset is empty");
    }
    if (options.concurrency < 1) {
        throw ConfigError("concurrency must be at least 1");
    }
    const auto started = std::chrono::steady_clock::now();

    Engine engine(gateway, config, options.engine);
    BenchmarkResult result;

    std::ofstream trace_out;
    const bool write_traces = !options.trace_path.empty();
    if (write_traces) {
        trace_out.open(options.trace_path, std::ios::trunc);
        if (!trace_out) {
            throw IoError("cannot open trace output: " + options.trace_path);
        }
    }

    auto commit = [&](const RunTrace& trace) {
        if (write_traces) {
            trace_out << trace_to_line(trace) << '\n';
            trace_out.flush();
        }
        if (ledger != nullptr) {
            for (std::size_t idx = 0; idx < trace.events.size(); ++idx) {
                const TraceEvent& e = trace.events[idx];
                ledger->record({options.run_id_prefix + trace.query_id, static_cast<int>(idx),
                                e.call_role, e.endpoint_id, e.prompt_tokens,
                                e.completion_tokens});
            }
        }
        result.traces.push_back(trace);
    };

    if (config.strategy == "smoa" && config.roles_enabled) {
        auto generation = engine.prewarm_roles();
        RunTrace roles_trace;
        roles_trace.query_id = "__roles__";
        roles_trace.strategy = config.strategy;
        roles_trace.roles_used = generation.roles;
        roles_trace.failed = !generation.error.empty();
        if (roles_trace.failed) {
            roles_trace.notes.push_back("roles_degraded: " + generation.error);
        }
        if (!generation.from_cache) {
            roles_trace.events.push_back(generation.event);
        }
        commit(roles_trace);
    }
    const std::size_t roles_offset = result.traces.size();

    const std::size_t total = records.size();
    std::vector<std::future<RunTrace>> futures(total);
    std::size_t next_launch = 0;
    std::size_t next_commit = 0;
    while (next_commit < total) {
        while (next_launch < total &&
               next_launch - next_commit < static_cast<std::size_t>(options.concurrency)) {
            const DatasetRecord& record = records[next_launch];
            futures[next_launch] = std::async(std::launch::async, [&engine, &record] {
                try {
                    return engine.run(record.id, record.prompt);
                } catch (const std::exception& e) {
                    RunTrace crashed;
                    crashed.query_id = record.id;
                    crashed.failed = true;
                    crashed.notes.push_back(std::string("run_exception: ") + e.what());
                    return crashed;
                }
            });
            ++next_launch;
        }
        commit(futures[next_commit].get());
        ++next_commit;
    }

    RunSummary& summary = result.summary;
    summary.dataset_id = options.dataset_id;
    summary.strategy = config.strategy;
    summary.n = config.n();
    summary.layers = config.layers;
    summary.k = config.k;
    summary.records_total = static_cast<int>(total);

    double score_sum = 0.0;
    std::map<std::string, double> aspect_sums;
    std::map<std::string, int> aspect_counts;
    for (std::size_t i = 0; i < total; ++i) {
        const RunTrace& trace = result.traces[roles_offset + i];
        if (trace.failed) {
            ++summary.records_failed;
            continue;
        }
        if (records[i].reference) {
            score_sum += score_exact_match(trace, records[i]);
            ++summary.records_scored;
        }
        if (options.grader) {
            GradeResult grade = grade_with_llm(gateway, *options.grader, trace, records[i]);
            summary.grading_prompt_tokens += grade.prompt_tokens;
            summary.grading_completion_tokens += grade.completion_tokens;
            if (grade.ok && !grade.scores.empty()) {
                ++summary.graded_records;
                for (const auto& [aspect, value] : grade.scores) {
                    aspect_sums[aspect] += value;
                    ++aspect_counts[aspect];
                }
            } else {
                ++summary.ungraded_records;
            }
        }
    }
    if (summary.records_scored > 0) {
        summary.exact_match = score_sum / summary.records_scored;
    }
    for (const auto& [aspect, count] : aspect_counts) {
        summary.aspect_scores[aspect] = aspect_sums[aspect] / count;
    }

    long long accumulated_mc = 0;
    for (const auto& trace : result.traces) {
        for (const auto& e : trace.events) {
            summary.prompt_tokens += e.prompt_tokens;
            summary.completion_tokens += e.completion_tokens;
            summary.prompt_tokens_by_role[to_string(e.call_role)] += e.prompt_tokens;
            summary.completion_tokens_by_role[to_string(e.call_role)] += e.completion_tokens;
            if (options.prices != nullptr) {
                accumulated_mc += static_cast<long long>(e.prompt_tokens) *
                                  options.prices->prompt_milli_cents_per_1k(e.endpoint_id);
                accumulated_mc += static_cast<long long>(e.completion_tokens) *
                                  options.prices->completion_milli_cents_per_1k(e.endpoint_id);
            }
        }
    }
    summary.cost_milli_cents = accumulated_mc / 1000;
    if (options.prices != nullptr) {
        summary.currency = options.prices->currency();
    }
    summary.wall_time_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
    return result;
}

std::vector<SweepPoint> sweep(const ModelGateway& gateway, const PipelineConfig& base_config,
                              const std::vector<DatasetRecord>& records,
                              const BenchmarkOptions& base_options, const std::string& param,
                              const std::vector<int>& values, CostLedger* ledger) {
    if (param != "k" && param != "n") {
        throw ConfigError("sweep parameter must be k or n, got " + param);
    }
    if (values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }
    std::vector<SweepPoint> points;
    for (int value : values) {
        PipelineConfig config = base_config;
        if (param == "k") {
            config.k = value;
        } else {
            if (value < 1) {
                throw ConfigError("sweep n values must be positive");
            }
            std::vector<std::string> proposers;
            proposers.reserve(static_cast<std::size_t>(value));
            for (int i = 0; i < value; ++i) {
                proposers.push_back(
                    base_config.proposers[static_cast<std::size_t>(i) %
                                          base_config.proposers.size()]);
            }
            config.proposers = std::move(proposers);
        }
        config.validate();

        BenchmarkOptions options = base_options;
        const std::string label = param + std::to_string(value);
        options.run_id_prefix = base_options.run_id_prefix + label + "/";
        if (!base_options.trace_path.empty()) {
            options.trace_path = with_suffix(base_options.trace_path, "_" + label);
        }
        BenchmarkResult result = run_benchmark(gateway, config, records, options, ledger);
        points.push_back({param, value, result.summary});
    }
    return points;
}

} // namespace smoa
