#include "smoa/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"

namespace smoa {

namespace {

using json = nlohmann::json;

std::string resolve_path(const std::filesystem::path& base_dir, const std::string& path) {
    if (path.empty()) {
        return path;
    }
    std::filesystem::path p(path);
    if (p.is_absolute()) {
        return p.string();
    }
    return (base_dir / p).lexically_normal().string();
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw ConfigError("cannot parse " + key + "=" + value + " as bool");
}

int parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        int parsed = std::stoi(value, &used);
        if (used == value.size()) {
            return parsed;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("cannot parse " + key + "=" + value + " as integer");
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        double parsed = std::stod(value, &used);
        if (used == value.size()) {
            return parsed;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("cannot parse " + key + "=" + value + " as number");
}

void read_pipeline(const json& j, PipelineConfig& pipeline) {
    pipeline.strategy = j.value("strategy", pipeline.strategy);
    if (j.contains("proposers")) {
        pipeline.proposers = j.at("proposers").get<std::vector<std::string>>();
    }
    pipeline.aggregator = j.value("aggregator", pipeline.aggregator);
    pipeline.judge_moderator = j.value("judge_moderator", pipeline.judge_moderator);
    pipeline.layers = j.value("layers", pipeline.layers);
    pipeline.k = j.value("k", pipeline.k);
    pipeline.roles_enabled = j.value("roles_enabled", pipeline.roles_enabled);
    pipeline.response_selection_enabled =
        j.value("response_selection_enabled", pipeline.response_selection_enabled);
    pipeline.early_stopping_enabled =
        j.value("early_stopping_enabled", pipeline.early_stopping_enabled);
    pipeline.judge_split_mode = j.value("judge_split_mode", pipeline.judge_split_mode);
    pipeline.temperature = j.value("temperature", pipeline.temperature);
    pipeline.max_tokens = j.value("max_tokens", pipeline.max_tokens);
    pipeline.dataset_description = j.value("dataset_description", pipeline.dataset_description);
    pipeline.task_requirement = j.value("task_requirement", pipeline.task_requirement);
    pipeline.sc_paths = j.value("sc_paths", pipeline.sc_paths);
    pipeline.mad_rounds = j.value("mad_rounds", pipeline.mad_rounds);
}

} // namespace

RunConfigFile RunConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad config " + path + ": " + e.what());
    }
    const std::filesystem::path base_dir = std::filesystem::path(path).parent_path();

    RunConfigFile config;
    if (!j.contains("endpoints") || !j.at("endpoints").is_array() || j.at("endpoints").empty()) {
        throw ConfigError("config needs a non-empty endpoints list");
    }
    for (const auto& entry : j.at("endpoints")) {
        config.endpoints.push_back(entry.get<ModelEndpoint>());
    }
    if (j.contains("pipeline")) {
        read_pipeline(j.at("pipeline"), config.pipeline);
    }
    config.price_table_path = resolve_path(base_dir, j.value("price_table", std::string()));
    config.mock_script_path = resolve_path(base_dir, j.value("mock_script", std::string()));
    if (j.contains("retry")) {
        const json& r = j.at("retry");
        config.retry.max_attempts = r.value("max_attempts", config.retry.max_attempts);
        config.retry.base_delay_ms = r.value("base_delay_ms", config.retry.base_delay_ms);
        config.retry.multiplier = r.value("multiplier", config.retry.multiplier);
    }
    config.concurrency = j.value("concurrency", config.concurrency);
    config.max_in_flight = j.value("max_in_flight", config.max_in_flight);
    if (j.contains("grader")) {
        const json& g = j.at("grader");
        GraderSpec grader;
        grader.grader_endpoint = g.value("endpoint", std::string());
        if (g.contains("aspects")) {
            grader.aspects = g.at("aspects").get<std::vector<std::string>>();
        }
        config.grader = grader;
    }
    return config;
}

void RunConfigFile::apply_override(const std::string& key, const std::string& value) {
    if (key == "concurrency") {
        concurrency = parse_int(value, key);
        return;
    }
    if (key == "max_in_flight") {
        max_in_flight = parse_int(value, key);
        return;
    }
    std::string field = key;
    const std::string prefix = "pipeline.";
    if (field.rfind(prefix, 0) == 0) {
        field = field.substr(prefix.size());
    }
    if (field == "strategy") {
        pipeline.strategy = value;
    } else if (field == "aggregator") {
        pipeline.aggregator = value;
    } else if (field == "judge_moderator") {
        pipeline.judge_moderator = value;
    } else if (field == "layers") {
        pipeline.layers = parse_int(value, key);
    } else if (field == "k") {
        pipeline.k = parse_int(value, key);
    } else if (field == "roles_enabled") {
        pipeline.roles_enabled = parse_bool(value, key);
    } else if (field == "response_selection_enabled") {
        pipeline.response_selection_enabled = parse_bool(value, key);
    } else if (field == "early_stopping_enabled") {
        pipeline.early_stopping_enabled = parse_bool(value, key);
    } else if (field == "judge_split_mode") {
        pipeline.judge_split_mode = parse_bool(value, key);
    } else if (field == "temperature") {
        pipeline.temperature = parse_double(value, key);
    } else if (field == "max_tokens") {
        pipeline.max_tokens = parse_int(value, key);
    } else if (field == "dataset_description") {
        pipeline.dataset_description = value;
    } else if (field == "task_requirement") {
        pipeline.task_requirement = value;
    } else if (field == "sc_paths") {
        pipeline.sc_paths = parse_int(value, key);
    } else if (field == "mad_rounds") {
        pipeline.mad_rounds = parse_int(value, key);
    } else {
        throw ConfigError("unknown override key: " + key);
    }
}

void RunConfigFile::apply_override(const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key=value, got: " + assignment);
    }
    apply_override(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfigFile::validate() const {
    pipeline.validate();
    std::set<std::string> ids;
    for (const auto& ep : endpoints) {
        if (ep.id.empty()) {
            throw ConfigError("endpoint with empty id");
        }
        if (!ids.insert(ep.id).second) {
            throw ConfigError("duplicate endpoint id: " + ep.id);
        }
    }
    std::set<std::string> referenced(pipeline.proposers.begin(), pipeline.proposers.end());
    if (!pipeline.aggregator.empty()) {
        referenced.insert(pipeline.aggregator);
    }
    if (!pipeline.judge_moderator.empty()) {
        referenced.insert(pipeline.judge_moderator);
    }
    if (grader && !grader->grader_endpoint.empty()) {
        referenced.insert(grader->grader_endpoint);
    }
    const bool mock = !mock_script_path.empty();
    for (const auto& id : referenced) {
        auto it = std::find_if(endpoints.begin(), endpoints.end(),
                               [&](const ModelEndpoint& ep) { return ep.id == id; });
        if (it == endpoints.end()) {
            throw ConfigError("pipeline references undefined endpoint: " + id);
        }
        if (!mock && it->base_url.empty()) {
            throw ConfigError("endpoint " + id + " has no base_url and no mock script is set");
        }
    }
    if (grader) {
        if (grader->grader_endpoint.empty()) {
            throw ConfigError("grader needs an endpoint id");
        }
        if (grader->aspects.empty()) {
            throw ConfigError("grader needs at least one aspect");
        }
    }
    if (concurrency < 1) {
        throw ConfigError("concurrency must be at least 1");
    }
    if (max_in_flight < 1) {
        throw ConfigError("max_in_flight must be at least 1");
    }
    if (retry.max_attempts < 1) {
        throw ConfigError("retry max_attempts must be at least 1");
    }
}

std::unique_ptr<ModelGateway> build_gateway(const RunConfigFile& config) {
    GatewayOptions options;
    options.retry = config.retry;
    options.max_in_flight = config.max_in_flight;
    auto gateway = std::make_unique<ModelGateway>(config.endpoints, options);
    if (!config.mock_script_path.empty()) {
        gateway->set_mock_script(
            std::make_shared<const MockScript>(MockScript::from_file(config.mock_script_path)));
    }
    return gateway;
}

} // namespace smoa
