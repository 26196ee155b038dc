#include "treeqa/llm/cost.hpp"

#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "treeqa/error.hpp"
#include "treeqa/text.hpp"

namespace treeqa::llm {

PricingTable PricingTable::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(text::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, "pricing file " + path.string() + ": " + e.what());
    }
}

PricingTable PricingTable::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "pricing must be a JSON object keyed by model");
    PricingTable table;
    for (const auto& [model, r] : j.items()) {
        table.set(model, Rate{r.at("input_usd_per_1k").get<double>(), r.at("output_usd_per_1k").get<double>()});
    }
    return table;
}

void PricingTable::set(std::string model, Rate rate) {
    if (!(rate.input_usd_per_1k >= 0.0) || !(rate.output_usd_per_1k >= 0.0) || !std::isfinite(rate.input_usd_per_1k) ||
        !std::isfinite(rate.output_usd_per_1k))
        throw Error(ErrorKind::Config, "rates for '" + model + "' must be finite and >= 0");
    rates_.insert_or_assign(std::move(model), rate);
}

const Rate& PricingTable::rate(const std::string& model) const {
    auto it = rates_.find(model);
    if (it == rates_.end()) throw Error(ErrorKind::UnpricedModel, "no pricing for model '" + model + "'");
    return it->second;
}

namespace {

void add(CostBucket& b, const LedgerEntry& e, double usd) {
    ++b.calls;
    b.prompt_tokens += e.prompt_tokens;
    b.completion_tokens += e.completion_tokens;
    if (e.estimated) ++b.estimated_calls;
    b.usd += usd;
}

nlohmann::json bucket_json(const CostBucket& b) {
    return {{"calls", b.calls},
            {"prompt_tokens", b.prompt_tokens},
            {"completion_tokens", b.completion_tokens},
            {"estimated_calls", b.estimated_calls},
            {"usd", b.usd}};
}

nlohmann::json buckets_json(const std::map<std::string, CostBucket>& m) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, b] : m) out[k] = bucket_json(b);
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

CostReport cost_report(const std::vector<LedgerEntry>& ledger, const PricingTable& pricing) {
    CostReport r;
    for (const auto& e : ledger) {
        const Rate& rate = pricing.rate(e.model);
        const double usd = static_cast<double>(e.prompt_tokens) / 1000.0 * rate.input_usd_per_1k +
                           static_cast<double>(e.completion_tokens) / 1000.0 * rate.output_usd_per_1k;
        add(r.total, e, usd);
        add(r.by_stage[e.stage], e, usd);
        add(r.by_dataset[e.dataset], e, usd);
        add(r.by_method[e.method], e, usd);
        add(r.by_run_stage[{e.dataset, e.method}][e.stage], e, usd);
    }
    return r;
}

nlohmann::json CostReport::to_json() const {
    nlohmann::json runs = nlohmann::json::object();
    for (const auto& [run, stages] : by_run_stage) runs[run.first + "/" + run.second] = buckets_json(stages);
    return {{"total", bucket_json(total)},
            {"by_stage", buckets_json(by_stage)},
            {"by_dataset", buckets_json(by_dataset)},
            {"by_method", buckets_json(by_method)},
            {"by_run_stage", runs}};
}

std::string CostReport::to_csv() const {
    std::ostringstream out;
    out << "dataset,method,stage,calls,prompt_tokens,completion_tokens,usd\n";
    for (const auto& [run, stages] : by_run_stage) {
        const auto& [dataset, method] = run;
        for (const auto& [stage, b] : stages) {
            out << csv_field(dataset) << ',' << csv_field(method) << ',' << csv_field(stage) << ',' << b.calls << ','
                << b.prompt_tokens << ',' << b.completion_tokens << ',' << std::fixed << std::setprecision(6) << b.usd
                << '\n';
        }
    }
    return out.str();
}

}  // namespace treeqa::llm
