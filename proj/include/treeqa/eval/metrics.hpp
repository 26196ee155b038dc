#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace treeqa::eval {

// Lowercase, delete punctuation, collapse whitespace, drop leading articles.
std::string normalize(std::string_view text);
std::vector<std::string> normalized_tokens(std::string_view text);

// Containment of a normalized gold in the normalized prediction. Golds that
// normalize to nothing never match.
bool contains_normalized(std::string_view prediction, std::string_view gold);

int cover_em(std::string_view prediction, const std::vector<std::string>& golds);
double answer_recall(std::string_view prediction, const std::vector<std::string>& gold_answers);
double entity_recall(std::string_view prediction, const std::vector<std::string>& gold_entities);

// Bag-of-tokens F1 over normalized tokens.
double token_f1(std::string_view prediction, std::string_view gold);

struct QaPair {
    std::string question;
    std::vector<std::string> answers;  // any one is acceptable
};

// Scores how well a long-form prediction answers one disambiguated
// sub-question.
class AnswerExtractor {
public:
    virtual ~AnswerExtractor() = default;
    virtual std::string name() const = 0;
    virtual bool proxy() const = 0;
    virtual double pair_f1(std::string_view prediction, const QaPair& pair) = 0;
};

// 1 when a gold answer is contained, else the best token F1 of any
// prediction window against any gold.
class ContainmentExtractor : public AnswerExtractor {
public:
    std::string name() const override { return "containment-proxy"; }
    bool proxy() const override { return true; }
    double pair_f1(std::string_view prediction, const QaPair& pair) override;
};

// Remote reading-comprehension model: POST {question, context} -> {answer}.
class HttpAnswerExtractor : public AnswerExtractor {
public:
    explicit HttpAnswerExtractor(std::string url, std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
    std::string name() const override { return "http:" + url_; }
    bool proxy() const override { return false; }
    double pair_f1(std::string_view prediction, const QaPair& pair) override;

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
};

double disambig_f1(std::string_view prediction, const std::vector<QaPair>& pairs, AnswerExtractor& extractor);

}  // namespace treeqa::eval
