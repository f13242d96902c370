#pragma once

#include <iosfwd>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "smoa/trace.hpp"

namespace smoa {

struct UsageRecord {
    std::string run_id;
    int event_index = 0;
    CallRole call_role = CallRole::proposer;
    std::string endpoint_id;
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

/// Per-endpoint prices held as integer milli-cents per 1K tokens
/// (1 currency unit = 100000 milli-cents), so totals are exact and
/// independent of summation order.
class PriceTable {
public:
    PriceTable() = default;

    void set_price(const std::string& endpoint_id, double prompt_per_1k, double completion_per_1k);
    bool has_price(const std::string& endpoint_id) const;
    long prompt_milli_cents_per_1k(const std::string& endpoint_id) const;
    long completion_milli_cents_per_1k(const std::string& endpoint_id) const;

    const std::string& currency() const { return currency_; }
    void set_currency(std::string currency) { currency_ = std::move(currency); }

    static PriceTable from_json(const nlohmann::json& j);
    static PriceTable from_file(const std::string& path);

private:
    struct Entry {
        long prompt_mc_per_1k = 0;
        long completion_mc_per_1k = 0;
    };
    std::map<std::string, Entry> entries_;
    std::string currency_ = "USD";
};

struct CostTotals {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long long cost_milli_cents = 0;
    std::string currency = "USD";

    double cost() const { return static_cast<double>(cost_milli_cents) / 100000.0; }
    std::string cost_string() const; // fixed 6 decimals
};

struct CostSummary {
    std::string label;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long long cost_milli_cents = 0;
};

struct RunComparison {
    double cost_ratio = 0.0; // candidate cost / baseline cost
    long prompt_token_delta = 0;
    long completion_token_delta = 0;
    double prompt_token_ratio = 0.0;
    double completion_token_ratio = 0.0;
};

/// Append-only usage log shared by every run in a benchmark. Thread
/// safe; (run_id, event_index) pairs must be unique.
class CostLedger {
public:
    void record(const UsageRecord& usage);

    std::size_t size() const;
    std::vector<UsageRecord> records() const; // snapshot sorted by (run, event)

    /// Token sums with no pricing applied.
    CostTotals token_totals() const;

    /// Token sums plus cost. Throws UnknownEndpointError when a record's
    /// endpoint has no price. The division to milli-cents happens once on
    /// the grand total.
    CostTotals totals(const PriceTable& prices) const;
    CostTotals totals_for_runs(const PriceTable& prices,
                               const std::set<std::string>& run_ids) const;

    /// Deterministic CSV sorted by (run_id, event_index).
    void export_csv(std::ostream& out) const;

private:
    CostTotals compute(const PriceTable* prices, const std::set<std::string>* run_ids) const;

    mutable std::mutex mutex_;
    std::vector<UsageRecord> records_;
    std::set<std::pair<std::string, int>> seen_;
};

RunComparison compare_runs(const CostSummary& candidate, const CostSummary& baseline);

} // namespace smoa
