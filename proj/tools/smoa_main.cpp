#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "smoa/config.hpp"
#include "smoa/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_partial = 1;
constexpr int exit_usage = 2;

struct RunArgs {
    std::string config_path;
    std::string dataset_path;
    std::string out_dir;
    std::string strategy;
    std::vector<std::string> overrides;
    bool lenient = false;
};

struct SweepArgs {
    std::string config_path;
    std::string dataset_path;
    std::string out_dir;
    std::string param_spec;
    std::vector<std::string> overrides;
    bool lenient = false;
};

struct ReportArgs {
    std::string traces_dir;
    std::string format = "csv";
    std::string out_path;
};

struct RolesArgs {
    std::string config_path;
    std::string task_desc;
    int n = 0;
};

smoa::RunConfigFile load_config(const std::string& path, const std::string& strategy,
                                const std::vector<std::string>& overrides) {
    smoa::RunConfigFile config = smoa::RunConfigFile::load(path);
    if (!strategy.empty()) {
        config.pipeline.strategy = strategy;
    }
    for (const auto& assignment : overrides) {
        config.apply_override(assignment);
    }
    config.validate();
    return config;
}

std::vector<smoa::DatasetRecord> load_dataset(const std::string& path, bool lenient) {
    std::vector<std::string> skipped;
    auto records = smoa::load_jsonl(path, lenient, &skipped);
    for (const auto& message : skipped) {
        std::cerr << "warning: skipped " << message << '\n';
    }
    return records;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw smoa::IoError("cannot write: " + path.string());
    }
    out << text;
}

void print_summary(const smoa::RunSummary& summary) {
    std::cout << "strategy=" << summary.strategy << " records=" << summary.records_total
              << " failed=" << summary.records_failed;
    if (summary.exact_match) {
        std::cout << " exact_match=" << *summary.exact_match;
    }
    std::cout << " prompt_tokens=" << summary.prompt_tokens
              << " completion_tokens=" << summary.completion_tokens;
    if (!summary.currency.empty()) {
        std::cout << " cost=" << summary.cost() << ' ' << summary.currency;
    }
    std::cout << '\n';
}

// "k=1..4" or "n=2,4,6" → (name, values)
std::pair<std::string, std::vector<int>> parse_param_spec(const std::string& spec) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
        throw smoa::ConfigError("sweep parameter must look like k=1..4, got: " + spec);
    }
    std::string name = spec.substr(0, eq);
    std::string rest = spec.substr(eq + 1);
    std::vector<int> values;
    std::size_t dots = rest.find("..");
    try {
        if (dots != std::string::npos) {
            int lo = std::stoi(rest.substr(0, dots));
            int hi = std::stoi(rest.substr(dots + 2));
            if (hi < lo) {
                throw smoa::ConfigError("empty sweep range: " + spec);
            }
            for (int v = lo; v <= hi; ++v) {
                values.push_back(v);
            }
        } else {
            std::size_t pos = 0;
            while (pos <= rest.size()) {
                std::size_t comma = rest.find(',', pos);
                std::string item =
                    rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
                values.push_back(std::stoi(item));
                if (comma == std::string::npos) {
                    break;
                }
                pos = comma + 1;
            }
        }
    } catch (const std::invalid_argument&) {
        throw smoa::ConfigError("cannot parse sweep values in: " + spec);
    } catch (const std::out_of_range&) {
        throw smoa::ConfigError("sweep value out of range in: " + spec);
    }
    return {name, values};
}

int cmd_run(const RunArgs& args) {
    auto config = load_config(args.config_path, args.strategy, args.overrides);
    auto gateway = smoa::build_gateway(config);
    auto records = load_dataset(args.dataset_path, args.lenient);
    if (records.empty()) {
        std::cerr << "error: dataset has no records: " << args.dataset_path << '\n';
        return exit_usage;
    }

    fs::create_directories(args.out_dir);
    smoa::PriceTable prices;
    const bool have_prices = !config.price_table_path.empty();
    if (have_prices) {
        prices = smoa::PriceTable::from_file(config.price_table_path);
    }

    smoa::CostLedger ledger;
    smoa::BenchmarkOptions options;
    options.concurrency = config.concurrency;
    options.trace_path = (fs::path(args.out_dir) / "traces.jsonl").string();
    options.dataset_id = fs::path(args.dataset_path).stem().string();
    options.prices = have_prices ? &prices : nullptr;
    options.grader = config.grader;

    auto result = smoa::run_benchmark(*gateway, config.pipeline, records, options, &ledger);

    json summary_json = result.summary;
    write_text(fs::path(args.out_dir) / "summary.json", summary_json.dump(2) + "\n");
    write_text(fs::path(args.out_dir) / "summary.csv",
               smoa::summary_csv_header() + "\n" + smoa::summary_csv_row(result.summary) + "\n");
    {
        std::ofstream ledger_out(fs::path(args.out_dir) / "ledger.csv");
        ledger.export_csv(ledger_out);
    }
    print_summary(result.summary);
    return result.summary.records_failed > 0 ? exit_partial : exit_ok;
}

int cmd_sweep(const SweepArgs& args) {
    auto config = load_config(args.config_path, "", args.overrides);
    auto gateway = smoa::build_gateway(config);
    auto records = load_dataset(args.dataset_path, args.lenient);
    if (records.empty()) {
        std::cerr << "error: dataset has no records: " << args.dataset_path << '\n';
        return exit_usage;
    }
    auto [param, values] = parse_param_spec(args.param_spec);

    fs::create_directories(args.out_dir);
    smoa::PriceTable prices;
    const bool have_prices = !config.price_table_path.empty();
    if (have_prices) {
        prices = smoa::PriceTable::from_file(config.price_table_path);
    }

    smoa::CostLedger ledger;
    smoa::BenchmarkOptions options;
    options.concurrency = config.concurrency;
    options.trace_path = (fs::path(args.out_dir) / "traces.jsonl").string();
    options.dataset_id = fs::path(args.dataset_path).stem().string();
    options.prices = have_prices ? &prices : nullptr;
    options.grader = config.grader;

    auto points = smoa::sweep(*gateway, config.pipeline, records, options, param, values, &ledger);

    std::string csv = smoa::summary_csv_header() + "\n";
    int failed = 0;
    for (const auto& point : points) {
        csv += smoa::summary_csv_row(point.summary) + "\n";
        failed += point.summary.records_failed;
        json summary_json = point.summary;
        write_text(fs::path(args.out_dir) /
                       ("summary_" + point.param + std::to_string(point.value) + ".json"),
                   summary_json.dump(2) + "\n");
    }
    write_text(fs::path(args.out_dir) / ("sweep_" + param + ".csv"), csv);
    {
        std::ofstream ledger_out(fs::path(args.out_dir) / "ledger.csv");
        ledger.export_csv(ledger_out);
    }
    std::cout << csv;
    return failed > 0 ? exit_partial : exit_ok;
}

int cmd_report(const ReportArgs& args) {
    if (!fs::is_directory(args.traces_dir)) {
        std::cerr << "error: not a directory: " << args.traces_dir << '\n';
        return exit_usage;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(args.traces_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<smoa::RunSummary> summaries;
    for (const auto& file : files) {
        std::ifstream in(file);
        json j;
        try {
            in >> j;
            summaries.push_back(j.get<smoa::RunSummary>());
        } catch (const std::exception&) {
            // not a summary file, skip
        }
    }
    if (summaries.empty()) {
        std::cerr << "error: no summary files under " << args.traces_dir << '\n';
        return exit_usage;
    }

    std::string output;
    if (args.format == "json") {
        json array = json::array();
        for (const auto& summary : summaries) {
            array.push_back(summary);
        }
        output = array.dump(2) + "\n";
    } else {
        output = smoa::summary_csv_header() + "\n";
        for (const auto& summary : summaries) {
            output += smoa::summary_csv_row(summary) + "\n";
        }
    }
    if (args.out_path.empty()) {
        std::cout << output;
    } else {
        write_text(args.out_path, output);
    }
    return exit_ok;
}

int cmd_roles(const RolesArgs& args) {
    auto config = load_config(args.config_path, "", {});
    auto gateway = smoa::build_gateway(config);
    std::string description =
        args.task_desc.empty() ? config.pipeline.dataset_description : args.task_desc;
    int n = args.n > 0 ? args.n : config.pipeline.n();

    smoa::ChatRequest request;
    request.endpoint_id = config.pipeline.aggregator;
    request.messages = smoa::render_role_generation_prompt(
        description, args.task_desc.empty() ? config.pipeline.task_requirement : "", n);
    request.temperature = config.pipeline.temperature;
    request.max_tokens = config.pipeline.max_tokens;

    auto response = gateway->complete_chat(request);
    try {
        auto roles = smoa::parse_roles(response.content, n);
        for (const auto& role : roles) {
            std::cout << '[' << role.index << "] " << role.description << "\n\n";
        }
    } catch (const smoa::RoleCountMismatchError& e) {
        std::cerr << "error: " << e.what() << '\n';
        std::cerr << response.content << '\n';
        return exit_partial;
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixture-of-agents pipeline runner"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run one strategy over a dataset");
    run->add_option("--config", run_args.config_path, "config file")->required();
    run->add_option("--dataset", run_args.dataset_path, "dataset JSONL")->required();
    run->add_option("--out", run_args.out_dir, "output directory")->required();
    run->add_option("--strategy", run_args.strategy, "override pipeline strategy");
    run->add_option("--set", run_args.overrides, "config override key=value")
        ->take_all()
        ->expected(-1);
    run->add_flag("--lenient", run_args.lenient, "skip malformed dataset lines");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "rerun while sweeping k or n");
    sweep_cmd->add_option("--config", sweep_args.config_path, "config file")->required();
    sweep_cmd->add_option("--dataset", sweep_args.dataset_path, "dataset JSONL")->required();
    sweep_cmd->add_option("--out", sweep_args.out_dir, "output directory")->required();
    sweep_cmd->add_option("--param", sweep_args.param_spec, "k=1..4 or n=2..7")->required();
    sweep_cmd->add_option("--set", sweep_args.overrides, "config override key=value")
        ->take_all()
        ->expected(-1);
    sweep_cmd->add_flag("--lenient", sweep_args.lenient, "skip malformed dataset lines");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "aggregate summaries into one table");
    report->add_option("--traces", report_args.traces_dir, "directory with summary files")
        ->required();
    report->add_option("--format", report_args.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    report->add_option("--out", report_args.out_path, "write table here instead of stdout");

    RolesArgs roles_args;
    auto* roles = app.add_subcommand("roles", "generate and print role profiles");
    roles->add_option("--config", roles_args.config_path, "config file")->required();
    roles->add_option("--task-desc", roles_args.task_desc, "task description override");
    roles->add_option("-n", roles_args.n, "number of roles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*run) {
            return cmd_run(run_args);
        }
        if (*sweep_cmd) {
            return cmd_sweep(sweep_args);
        }
        if (*report) {
            return cmd_report(report_args);
        }
        if (*roles) {
            return cmd_roles(roles_args);
        }
    } catch (const smoa::SchemaError& e) {
        std::cerr << "error: line " << e.line() << ": " << e.what() << '\n';
        return exit_usage;
    } catch (const smoa::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}
