#include "treeqa/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "treeqa/error.hpp"
#include "treeqa/text.hpp"

namespace treeqa::eval {

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::cover_em: return "cover_em";
        case Metric::answer_recall: return "ar";
        case Metric::entity_recall: return "er";
        case Metric::disambig_f1: return "dis_f1";
    }
    return "?";
}

Metric parse_metric(std::string_view name) {
    const auto n = text::to_lower_ascii(text::trim(name));
    if (n == "cover_em" || n == "cov-em" || n == "cover-em") return Metric::cover_em;
    if (n == "ar" || n == "answer_recall") return Metric::answer_recall;
    if (n == "er" || n == "entity_recall") return Metric::entity_recall;
    if (n == "dis_f1" || n == "dis-f1" || n == "disambig_f1") return Metric::disambig_f1;
    throw Error(ErrorKind::Config, "unknown metric '" + std::string(name) + "'");
}

std::vector<Metric> parse_metric_list(std::string_view csv) {
    std::vector<Metric> out;
    for (const auto& part : text::split(csv, ',')) {
        if (text::trim(part).empty()) continue;
        const auto m = parse_metric(part);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (out.empty()) throw Error(ErrorKind::Config, "metric list is empty");
    return out;
}

MetricsReport evaluate(const std::vector<QuestionRecord>& records, const std::vector<Prediction>& predictions,
                       const std::vector<Metric>& metrics, AnswerExtractor& extractor) {
    std::unordered_map<std::string, const QuestionRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);

    MetricsReport report;
    report.scorer = extractor.name();
    report.scorer_is_proxy = extractor.proxy();
    std::map<Metric, std::pair<double, std::size_t>> sums;
    for (const auto& p : predictions) {
        auto it = by_id.find(p.question_id);
        if (it == by_id.end()) throw Error(ErrorKind::SchemaMismatch, "prediction for unknown question '" + p.question_id + "'");
        const QuestionRecord& r = *it->second;
        QuestionScore qs{p.question_id, {}};
        for (Metric m : metrics) {
            std::optional<double> v;
            switch (m) {
                case Metric::cover_em: v = cover_em(p.text, r.answers); break;
                case Metric::answer_recall: v = answer_recall(p.text, r.answers); break;
                case Metric::entity_recall:
                    if (!r.entities.empty()) v = entity_recall(p.text, r.entities);
                    break;
                case Metric::disambig_f1:
                    if (!r.qa_pairs.empty()) v = disambig_f1(p.text, r.qa_pairs, extractor);
                    break;
            }
            if (!v) continue;
            qs.scores[m] = *v;
            sums[m].first += *v;
            ++sums[m].second;
        }
        report.questions.push_back(std::move(qs));
    }
    for (const auto& [m, s] : sums) report.aggregates[m] = s.first / static_cast<double>(s.second);
    return report;
}

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json aggregates = nlohmann::json::object();
    for (const auto& [m, v] : report.aggregates) aggregates[std::string(to_string(m))] = v;
    nlohmann::json questions = nlohmann::json::array();
    for (const auto& q : report.questions) {
        nlohmann::json row{{"question_id", q.question_id}};
        for (const auto& [m, v] : q.scores) row[std::string(to_string(m))] = v;
        questions.push_back(std::move(row));
    }
    nlohmann::json j{{"dataset", report.dataset},
                     {"method", report.method},
                     {"sample_size", report.sample_size()},
                     {"seed", report.seed ? nlohmann::json(*report.seed) : nlohmann::json()},
                     {"scorer", {{"name", report.scorer}, {"proxy", report.scorer_is_proxy}}},
                     {"recall_semantics", "AmbigDocs-compatible (containment)"},
                     {"aggregates", aggregates},
                     {"questions", questions}};
    return j;
}

namespace {

const MetricsReport* find_report(const std::vector<MetricsReport>& reports, std::string_view method,
                                 std::string_view dataset) {
    for (const auto& r : reports)
        if (r.method == method && r.dataset == dataset) return &r;
    return nullptr;
}

std::optional<double> cell(const std::vector<MetricsReport>& reports, std::string_view method, std::string_view dataset,
                           Metric m) {
    const auto* r = find_report(reports, method, dataset);
    if (!r) return std::nullopt;
    auto it = r->aggregates.find(m);
    if (it == r->aggregates.end()) return std::nullopt;
    return it->second;
}

std::string pct(std::optional<double> v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *v * 100.0);
    return buf;
}

// Text columns left-aligned, numbers right-aligned.
std::string align(const std::vector<std::vector<std::string>>& rows, std::size_t text_columns = 1) {
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) line += " | ";
            const auto pad = std::string(width[c] - row[c].size(), ' ');
            line += c < text_columns ? row[c] + pad : pad + row[c];
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out;
}

}  // namespace

std::optional<double> multihop_average(const std::vector<MetricsReport>& reports, std::string_view method) {
    double sum = 0.0;
    for (const char* ds : {"hotpotqa", "musique", "2wikimqa"}) {
        const auto v = cell(reports, method, ds, Metric::cover_em);
        if (!v) return std::nullopt;
        sum += *v;
    }
    return sum / 3.0;
}

std::string render_table(const std::vector<MetricsReport>& reports) {
    static const std::set<std::string> kBenchmarks{"hotpotqa", "musique", "2wikimqa", "ambigdoc", "asqa"};
    std::vector<std::string> methods;
    std::vector<const MetricsReport*> others;
    for (const auto& r : reports) {
        if (!kBenchmarks.count(r.dataset)) {
            others.push_back(&r);
            continue;
        }
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    }

    std::string out;
    if (!methods.empty()) {
        std::vector<std::vector<std::string>> rows{
            {"Method", "HotpotQA", "MuSiQue", "2WikiMQA", "AVG", "AmbigDoc AR", "ER", "ASQA Dis-F1", "COV-EM"}};
        for (const auto& m : methods) {
            rows.push_back({m, pct(cell(reports, m, "hotpotqa", Metric::cover_em)),
                            pct(cell(reports, m, "musique", Metric::cover_em)),
                            pct(cell(reports, m, "2wikimqa", Metric::cover_em)), pct(multihop_average(reports, m)),
                            pct(cell(reports, m, "ambigdoc", Metric::answer_recall)),
                            pct(cell(reports, m, "ambigdoc", Metric::entity_recall)),
                            pct(cell(reports, m, "asqa", Metric::disambig_f1)),
                            pct(cell(reports, m, "asqa", Metric::cover_em))});
        }
        out += align(rows);
    }
    if (!others.empty()) {
        if (!out.empty()) out += "\n";
        std::vector<std::vector<std::string>> rows{{"Dataset", "Method", "COV-EM", "AR", "ER", "Dis-F1"}};
        for (const auto* r : others) {
            std::vector<std::string> row{r->dataset, r->method};
            for (Metric m : {Metric::cover_em, Metric::answer_recall, Metric::entity_recall, Metric::disambig_f1}) {
                auto it = r->aggregates.find(m);
                row.push_back(pct(it == r->aggregates.end() ? std::nullopt : std::optional<double>(it->second)));
            }
            rows.push_back(std::move(row));
        }
        out += align(rows, 2);
    }
    return out;
}

}  // namespace treeqa::eval
