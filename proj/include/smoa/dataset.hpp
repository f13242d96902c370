#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smoa {

struct DatasetRecord {
    std::string id;
    std::string prompt;
    std::optional<std::string> reference;
    std::map<std::string, std::string> meta;
};

/// Loads a JSONL dataset (one record per line, blank lines skipped).
/// Strict mode throws SchemaError naming the 1-based line of the first
/// bad record; lenient mode skips bad lines and reports them through
/// skipped. Duplicate ids are schema violations.
std::vector<DatasetRecord> load_jsonl(const std::string& path, bool lenient = false,
                                      std::vector<std::string>* skipped = nullptr);

} // namespace smoa
