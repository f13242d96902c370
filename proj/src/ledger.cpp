#include "smoa/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smoa/errors.hpp"

namespace smoa {

namespace {

using json = nlohmann::json;

long to_milli_cents_per_1k(double price, const std::string& what) {
    if (price < 0.0 || !std::isfinite(price)) {
        throw ConfigError("negative or non-finite price for " + what);
    }
    return std::llround(price * 100000.0);
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

double safe_ratio(long long candidate, long long baseline) {
    if (baseline == 0) {
        return candidate == 0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(candidate) / static_cast<double>(baseline);
}

} // namespace

void PriceTable::set_price(const std::string& endpoint_id, double prompt_per_1k,
                           double completion_per_1k) {
    Entry entry;
    entry.prompt_mc_per_1k = to_milli_cents_per_1k(prompt_per_1k, endpoint_id + " prompt");
    entry.completion_mc_per_1k =
        to_milli_cents_per_1k(completion_per_1k, endpoint_id + " completion");
    entries_[endpoint_id] = entry;
}

bool PriceTable::has_price(const std::string& endpoint_id) const {
    return entries_.count(endpoint_id) != 0;
}

long PriceTable::prompt_milli_cents_per_1k(const std::string& endpoint_id) const {
    auto it = entries_.find(endpoint_id);
    if (it == entries_.end()) {
        throw UnknownEndpointError("no price for endpoint: " + endpoint_id);
    }
    return it->second.prompt_mc_per_1k;
}

long PriceTable::completion_milli_cents_per_1k(const std::string& endpoint_id) const {
    auto it = entries_.find(endpoint_id);
    if (it == entries_.end()) {
        throw UnknownEndpointError("no price for endpoint: " + endpoint_id);
    }
    return it->second.completion_mc_per_1k;
}

PriceTable PriceTable::from_json(const json& j) {
    PriceTable table;
    if (j.contains("currency")) {
        table.set_currency(j.at("currency").get<std::string>());
    }
    if (!j.contains("prices") || !j.at("prices").is_object()) {
        throw ConfigError("price table needs a prices object");
    }
    for (const auto& [endpoint_id, entry] : j.at("prices").items()) {
        if (!entry.contains("prompt_per_1k") || !entry.contains("completion_per_1k")) {
            throw ConfigError("price entry for " + endpoint_id +
                              " needs prompt_per_1k and completion_per_1k");
        }
        table.set_price(endpoint_id, entry.at("prompt_per_1k").get<double>(),
                        entry.at("completion_per_1k").get<double>());
    }
    return table;
}

PriceTable PriceTable::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open price table: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad price table " + path + ": " + e.what());
    }
    return from_json(j);
}

std::string CostTotals::cost_string() const {
    long long mc = cost_milli_cents;
    bool negative = mc < 0;
    if (negative) {
        mc = -mc;
    }
    std::ostringstream out;
    if (negative) {
        out << '-';
    }
    out << mc / 100000 << '.';
    long long frac = mc % 100000;
    // milli-cents give 5 fractional digits; render 6 for a stable width
    out << std::string(5 - std::to_string(frac).size(), '0') << frac << '0';
    return out.str();
}

void CostLedger::record(const UsageRecord& usage) {
    if (usage.prompt_tokens < 0 || usage.completion_tokens < 0) {
        throw ConfigError("negative token count for run " + usage.run_id);
    }
    std::lock_guard lock(mutex_);
    if (!seen_.insert({usage.run_id, usage.event_index}).second) {
        throw DuplicateEventError("duplicate usage record: " + usage.run_id + " #" +
                                  std::to_string(usage.event_index));
    }
    records_.push_back(usage);
}

std::size_t CostLedger::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::vector<UsageRecord> CostLedger::records() const {
    std::vector<UsageRecord> out;
    {
        std::lock_guard lock(mutex_);
        out = records_;
    }
    std::sort(out.begin(), out.end(), [](const UsageRecord& a, const UsageRecord& b) {
        if (a.run_id != b.run_id) {
            return a.run_id < b.run_id;
        }
        return a.event_index < b.event_index;
    });
    return out;
}

CostTotals CostLedger::token_totals() const { return compute(nullptr, nullptr); }

CostTotals CostLedger::totals(const PriceTable& prices) const { return compute(&prices, nullptr); }

CostTotals CostLedger::totals_for_runs(const PriceTable& prices,
                                       const std::set<std::string>& run_ids) const {
    return compute(&prices, &run_ids);
}

CostTotals CostLedger::compute(const PriceTable* prices,
                               const std::set<std::string>* run_ids) const {
    std::vector<UsageRecord> snapshot;
    {
        std::lock_guard lock(mutex_);
        snapshot = records_;
    }
    CostTotals totals;
    long long accumulated = 0; // token-weighted milli-cents, still per 1K
    for (const auto& r : snapshot) {
        if (run_ids != nullptr && run_ids->count(r.run_id) == 0) {
            continue;
        }
        totals.prompt_tokens += r.prompt_tokens;
        totals.completion_tokens += r.completion_tokens;
        if (prices != nullptr) {
            accumulated += static_cast<long long>(r.prompt_tokens) *
                           prices->prompt_milli_cents_per_1k(r.endpoint_id);
            accumulated += static_cast<long long>(r.completion_tokens) *
                           prices->completion_milli_cents_per_1k(r.endpoint_id);
        }
    }
    totals.cost_milli_cents = accumulated / 1000;
    if (prices != nullptr) {
        totals.currency = prices->currency();
    }
    return totals;
}

void CostLedger::export_csv(std::ostream& out) const {
    out << "run_id,event_index,call_role,endpoint_id,prompt_tokens,completion_tokens\n";
    for (const auto& r : records()) {
        out << csv_escape(r.run_id) << ',' << r.event_index << ',' << to_string(r.call_role)
            << ',' << csv_escape(r.endpoint_id) << ',' << r.prompt_tokens << ','
            << r.completion_tokens << '\n';
    }
}

RunComparison compare_runs(const CostSummary& candidate, const CostSummary& baseline) {
    RunComparison cmp;
    cmp.cost_ratio = safe_ratio(candidate.cost_milli_cents, baseline.cost_milli_cents);
    cmp.prompt_token_delta = candidate.prompt_tokens - baseline.prompt_tokens;
    cmp.completion_token_delta = candidate.completion_tokens - baseline.completion_tokens;
    cmp.prompt_token_ratio = safe_ratio(candidate.prompt_tokens, baseline.prompt_tokens);
    cmp.completion_token_ratio = safe_ratio(candidate.completion_tokens, baseline.completion_tokens);
    return cmp;
}

} // namespace smoa
