#include "smoa/dataset.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"

namespace smoa {

namespace {

using json = nlohmann::json;

DatasetRecord parse_record(const json& j) {
    if (!j.is_object()) {
        throw SchemaError("record is not an object", 0);
    }
    if (!j.contains("id") || !j.at("id").is_string()) {
        throw SchemaError("record needs a string id", 0);
    }
    if (!j.contains("prompt") || !j.at("prompt").is_string()) {
        throw SchemaError("record needs a string prompt", 0);
    }
    DatasetRecord record;
    record.id = j.at("id").get<std::string>();
    record.prompt = j.at("prompt").get<std::string>();
    if (j.contains("reference") && !j.at("reference").is_null()) {
        if (!j.at("reference").is_string()) {
            throw SchemaError("reference must be a string", 0);
        }
        record.reference = j.at("reference").get<std::string>();
    }
    if (j.contains("meta") && !j.at("meta").is_null()) {
        if (!j.at("meta").is_object()) {
            throw SchemaError("meta must be an object", 0);
        }
        for (const auto& [key, value] : j.at("meta").items()) {
            if (!value.is_string()) {
                throw SchemaError("meta values must be strings", 0);
            }
            record.meta[key] = value.get<std::string>();
        }
    }
    return record;
}

} // namespace

std::vector<DatasetRecord> load_jsonl(const std::string& path, bool lenient,
                                      std::vector<std::string>* skipped) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset: " + path);
    }
    std::vector<DatasetRecord> records;
    std::set<std::string> seen_ids;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::string problem;
        try {
            json j = json::parse(line);
            DatasetRecord record = parse_record(j);
            if (!seen_ids.insert(record.id).second) {
                throw SchemaError("duplicate record id: " + record.id, line_number);
            }
            records.push_back(std::move(record));
            continue;
        } catch (const SchemaError& e) {
            problem = e.what();
        } catch (const json::exception& e) {
            problem = std::string("invalid JSON: ") + e.what();
        }
        if (!lenient) {
            throw SchemaError(problem, line_number);
        }
        if (skipped != nullptr) {
            skipped->push_back("line " + std::to_string(line_number) + ": " + problem);
        }
    }
    return records;
}

} // namespace smoa
