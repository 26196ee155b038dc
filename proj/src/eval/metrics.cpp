#include "treeqa/eval/metrics.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <nlohmann/json.hpp>

#include "treeqa/error.hpp"
#include "treeqa/net.hpp"
#include "treeqa/text.hpp"

namespace treeqa::eval {

namespace {

bool is_article(const std::string& w) { return w == "a" || w == "an" || w == "the"; }

void require_golds(std::size_t n, const char* what) {
    if (n == 0) throw Error(ErrorKind::Config, std::string(what) + " needs at least one gold");
}

double bag_f1(const std::vector<std::string>& pred, std::size_t begin, std::size_t end,
              const std::vector<std::string>& gold) {
    if (begin == end || gold.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& g : gold) ++counts[g];
    std::size_t overlap = 0;
    for (std::size_t i = begin; i < end; ++i) {
        auto it = counts.find(pred[i]);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double p = static_cast<double>(overlap) / static_cast<double>(end - begin);
    const double r = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2 * p * r / (p + r);
}

}  // namespace

std::vector<std::string> normalized_tokens(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::ispunct(c)) continue;
        cleaned += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    }
    auto words = text::split_whitespace(cleaned);
    std::size_t skip = 0;
    while (skip < words.size() && is_article(words[skip])) ++skip;
    words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(skip));
    return words;
}

std::string normalize(std::string_view text) { return text::join(normalized_tokens(text), " "); }

bool contains_normalized(std::string_view prediction, std::string_view gold) {
    const auto g = normalize(gold);
    if (g.empty()) return false;
    return normalize(prediction).find(g) != std::string::npos;
}

int cover_em(std::string_view prediction, const std::vector<std::string>& golds) {
    require_golds(golds.size(), "cover_em");
    return std::any_of(golds.begin(), golds.end(), [&](const std::string& g) { return contains_normalized(prediction, g); })
               ? 1
               : 0;
}

double answer_recall(std::string_view prediction, const std::vector<std::string>& gold_answers) {
    require_golds(gold_answers.size(), "answer_recall");
    const auto hits = std::count_if(gold_answers.begin(), gold_answers.end(),
                                    [&](const std::string& g) { return contains_normalized(prediction, g); });
    return static_cast<double>(hits) / static_cast<double>(gold_answers.size());
}

double entity_recall(std::string_view prediction, const std::vector<std::string>& gold_entities) {
    require_golds(gold_entities.size(), "entity_recall");
    return answer_recall(prediction, gold_entities);
}

double token_f1(std::string_view prediction, std::string_view gold) {
    const auto p = normalized_tokens(prediction);
    return bag_f1(p, 0, p.size(), normalized_tokens(gold));
}

double ContainmentExtractor::pair_f1(std::string_view prediction, const QaPair& pair) {
    double best = 0.0;
    const auto pred = normalized_tokens(prediction);
    for (const auto& gold : pair.answers) {
        if (contains_normalized(prediction, gold)) return 1.0;
        const auto g = normalized_tokens(gold);
        const auto max_len = std::min(pred.size(), 2 * g.size() + 2);
        for (std::size_t len = 1; len <= max_len; ++len) {
            for (std::size_t b = 0; b + len <= pred.size(); ++b) best = std::max(best, bag_f1(pred, b, b + len, g));
        }
    }
    return best;
}

HttpAnswerExtractor::HttpAnswerExtractor(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {}

double HttpAnswerExtractor::pair_f1(std::string_view prediction, const QaPair& pair) {
    const auto ep = net::parse_endpoint(url_, "/extract");
    httplib::Client cli(ep.base);
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    const nlohmann::json body{{"question", pair.question}, {"context", std::string(prediction)}};
    auto res = cli.Post(ep.path, body.dump(), "application/json");
    if (!res) throw Error(ErrorKind::ScorerUnavailable, "answer extractor unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error(ErrorKind::ScorerUnavailable, "answer extractor returned HTTP " + std::to_string(res->status));
    std::string answer;
    try {
        answer = nlohmann::json::parse(res->body).at("answer").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ScorerUnavailable, std::string("answer extractor reply: ") + e.what());
    }
    double best = 0.0;
    for (const auto& gold : pair.answers) best = std::max(best, token_f1(answer, gold));
    return best;
}

double disambig_f1(std::string_view prediction, const std::vector<QaPair>& pairs, AnswerExtractor& extractor) {
    if (pairs.empty()) throw Error(ErrorKind::Config, "disambig_f1 needs at least one qa pair");
    double sum = 0.0;
    for (const auto& p : pairs) sum += extractor.pair_f1(prediction, p);
    return sum / static_cast<double>(pairs.size());
}

}  // namespace treeqa::eval
