#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treeqa/eval/dataset.hpp"
#include "treeqa/eval/metrics.hpp"

namespace treeqa::eval {

enum class Metric { cover_em, answer_recall, entity_recall, disambig_f1 };

std::string_view to_string(Metric m);
// Accepts "cover_em", "ar", "er", "dis_f1" and the long names.
Metric parse_metric(std::string_view name);
std::vector<Metric> parse_metric_list(std::string_view csv);

struct Prediction {
    std::string question_id;
    std::string text;
};

struct QuestionScore {
    std::string question_id;
    std::map<Metric, double> scores;
};

struct MetricsReport {
    std::string dataset;
    std::string method;
    std::optional<std::uint64_t> seed;
    std::string scorer;
    bool scorer_is_proxy = false;
    std::vector<QuestionScore> questions;
    std::map<Metric, double> aggregates;  // means over questions where the metric applies

    std::size_t sample_size() const { return questions.size(); }
};

// Entity recall needs entities and Dis-F1 needs qa pairs; records without them
// are left out of that metric's mean. Unknown question ids raise SchemaMismatch.
MetricsReport evaluate(const std::vector<QuestionRecord>& records, const std::vector<Prediction>& predictions,
                       const std::vector<Metric>& metrics, AnswerExtractor& extractor);

nlohmann::json to_json(const MetricsReport& report);

// Mean COVER-EM over hotpotqa, musique and 2wikimqa; empty unless all three are present.
std::optional<double> multihop_average(const std::vector<MetricsReport>& reports, std::string_view method);

// One row per method in the column layout
// HotpotQA | MuSiQue | 2WikiMQA | AVG | AmbigDoc AR | ER | ASQA Dis-F1 | COV-EM,
// scores shown as percentages with one decimal. Reports on other datasets go
// into a second, per-dataset table.
std::string render_table(const std::vector<MetricsReport>& reports);

}  // namespace treeqa::eval
