#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace treeqa::index {

struct Candidate {
    std::string doc_id;
    double bm25_score = 0.0;
    std::string passage;  // "title text" as shown to the scorer
};

struct RankedPassage {
    std::string doc_id;
    double score = 0.0;       // scorer output
    double bm25_score = 0.0;  // original retrieval score, kept for the trace

    bool operator==(const RankedPassage&) const = default;
};

// Scores (anchor, passage) pairs. Implementations may be local heuristics or
// a remote cross-encoder.
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual std::string name() const = 0;
    virtual std::vector<double> score(std::string_view anchor, const std::vector<Candidate>& candidates) = 0;
};

// Echoes the BM25 score, so reranking preserves retrieval order.
class Bm25PassthroughScorer : public RelevanceScorer {
public:
    std::string name() const override { return "bm25-passthrough"; }
    std::vector<double> score(std::string_view anchor, const std::vector<Candidate>& candidates) override;
};

// Remote scorer speaking POST {anchor, passages[]} -> {scores[]}.
class HttpRelevanceScorer : public RelevanceScorer {
public:
    explicit HttpRelevanceScorer(std::string url, std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
    std::string name() const override { return "http:" + url_; }
    std::vector<double> score(std::string_view anchor, const std::vector<Candidate>& candidates) override;

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
};

// Stable sort by scorer output descending (ties keep input order), top m.
// Throws ScorerUnavailable when the scorer fails or returns a bad vector.
std::vector<RankedPassage> rerank(const std::vector<Candidate>& candidates, std::string_view anchor,
                                  RelevanceScorer& scorer, std::size_t m);

}  // namespace treeqa::index
