#include "treeqa/index/rerank.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "treeqa/error.hpp"
#include "treeqa/net.hpp"

namespace treeqa::index {

std::vector<double> Bm25PassthroughScorer::score(std::string_view, const std::vector<Candidate>& candidates) {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back(c.bm25_score);
    return out;
}

HttpRelevanceScorer::HttpRelevanceScorer(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {}

std::vector<double> HttpRelevanceScorer::score(std::string_view anchor, const std::vector<Candidate>& candidates) {
    const auto ep = net::parse_endpoint(url_, "/rerank");
    httplib::Client cli(ep.base);
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    nlohmann::json passages = nlohmann::json::array();
    for (const auto& c : candidates) passages.push_back(c.passage);
    const nlohmann::json body{{"anchor", anchor}, {"passages", passages}};
    auto res = cli.Post(ep.path, body.dump(), "application/json");
    if (!res) throw Error(ErrorKind::ScorerUnavailable, url_ + " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error(ErrorKind::ScorerUnavailable, url_ + " returned HTTP " + std::to_string(res->status));
    try {
        return nlohmann::json::parse(res->body).at("scores").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ScorerUnavailable, std::string("malformed scorer reply: ") + e.what());
    }
}

std::vector<RankedPassage> rerank(const std::vector<Candidate>& candidates, std::string_view anchor,
                                  RelevanceScorer& scorer, std::size_t m) {
    if (candidates.empty()) return {};
    const auto scores = scorer.score(anchor, candidates);
    if (scores.size() != candidates.size())
        throw Error(ErrorKind::ScorerUnavailable, scorer.name() + " returned " + std::to_string(scores.size()) +
                                                      " scores for " + std::to_string(candidates.size()) + " passages");
    for (double s : scores) {
        if (!std::isfinite(s)) throw Error(ErrorKind::ScorerUnavailable, scorer.name() + " returned a non-finite score");
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(std::min(m, order.size()));
    std::vector<RankedPassage> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back(RankedPassage{candidates[i].doc_id, scores[i], candidates[i].bm25_score});
    return out;
}

}  // namespace treeqa::index
