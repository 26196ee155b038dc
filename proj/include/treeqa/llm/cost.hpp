#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "treeqa/llm/gateway.hpp"

namespace treeqa::llm {

struct Rate {
    double input_usd_per_1k = 0.0;
    double output_usd_per_1k = 0.0;
};

// model id -> rates; file format {"<model>": {"input_usd_per_1k": x, "output_usd_per_1k": y}}
class PricingTable {
public:
    static PricingTable load(const std::filesystem::path& path);
    static PricingTable from_json(const nlohmann::json& j);

    void set(std::string model, Rate rate);
    const Rate& rate(const std::string& model) const;
    bool has(const std::string& model) const { return rates_.count(model) > 0; }

private:
    std::map<std::string, Rate> rates_;
};

struct CostBucket {
    std::uint64_t calls = 0;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    std::uint64_t estimated_calls = 0;
    double usd = 0.0;

    std::uint64_t total_tokens() const { return prompt_tokens + completion_tokens; }
};

struct CostReport {
    CostBucket total;
    std::map<std::string, CostBucket> by_stage;
    std::map<std::string, CostBucket> by_dataset;
    std::map<std::string, CostBucket> by_method;
    // (dataset, method) -> stage -> bucket
    std::map<std::pair<std::string, std::string>, std::map<std::string, CostBucket>> by_run_stage;

    nlohmann::json to_json() const;
    // One row per dataset, method and stage.
    std::string to_csv() const;
};

CostReport cost_report(const std::vector<LedgerEntry>& ledger, const PricingTable& pricing);

}  // namespace treeqa::llm
