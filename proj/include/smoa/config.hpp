#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smoa/gateway.hpp"
#include "smoa/harness.hpp"
#include "smoa/pipeline.hpp"

namespace smoa {

/// On-disk run configuration. Relative paths (price table, mock script)
/// are resolved against the config file's directory at load time. When
/// mock_script_path is set every endpoint is served from the script;
/// otherwise endpoints need a live base_url.
struct RunConfigFile {
    std::vector<ModelEndpoint> endpoints;
    PipelineConfig pipeline;
    std::string price_table_path;
    RetryPolicy retry;
    int concurrency = 4;
    int max_in_flight = 8;
    std::string mock_script_path;
    std::optional<GraderSpec> grader;

    static RunConfigFile load(const std::string& path);

    /// --set style override. Unqualified keys address pipeline fields
    /// ("k=3"); "concurrency" and "max_in_flight" are also settable.
    /// Values are parsed per the target field's type.
    void apply_override(const std::string& key, const std::string& value);

    /// Splits "key=value" and applies it.
    void apply_override(const std::string& assignment);

    void validate() const;
};

/// Builds the gateway for this config, attaching the mock script when
/// one is configured.
std::unique_ptr<ModelGateway> build_gateway(const RunConfigFile& config);

} // namespace smoa
