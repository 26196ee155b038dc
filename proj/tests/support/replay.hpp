#pragma once

// Loads the committed replay fixtures and wires an engine around them.

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "treeqa/index/bm25.hpp"
#include "treeqa/llm/gateway.hpp"
#include "treeqa/llm/provider.hpp"
#include "treeqa/pipeline/engine.hpp"
#include "treeqa/syntax/parse_source.hpp"

namespace treeqa::replay {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(TREEQA_FIXTURES) / rel; }

struct DatasetRow {
    std::string id;
    std::string question;
    std::vector<std::string> answers;
};

inline std::vector<DatasetRow> read_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<DatasetRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        rows.push_back({j.at("id"), j.at("question"), j.at("answers").get<std::vector<std::string>>()});
    }
    return rows;
}

// Remembers every prompt it forwards.
class CapturingProvider : public llm::Provider {
public:
    explicit CapturingProvider(std::shared_ptr<llm::Provider> inner) : inner_(std::move(inner)) {}
    std::string id() const override { return inner_->id(); }
    llm::Completion complete(const llm::CompletionRequest& r) override {
        {
            std::lock_guard lock(mu_);
            requests_.push_back(r);
        }
        return inner_->complete(r);
    }
    std::vector<llm::CompletionRequest> requests() const {
        std::lock_guard lock(mu_);
        return requests_;
    }

private:
    std::shared_ptr<llm::Provider> inner_;
    mutable std::mutex mu_;
    std::vector<llm::CompletionRequest> requests_;
};

struct Bench {
    std::string dir;
    index::Index index;
    std::shared_ptr<CapturingProvider> provider;
    std::unique_ptr<llm::LlmGateway> gateway;
    std::vector<DatasetRow> rows;
    std::string parses;

    explicit Bench(const std::string& name, std::shared_ptr<llm::MockProvider> mock = nullptr)
        : dir(fixture(name).string()), index(index::Index::build(index::load_corpus_jsonl(fixture(name + "/corpus.jsonl")))) {
        if (!mock) mock = std::make_shared<llm::MockProvider>(llm::MockProvider::from_file(fixture(name + "/transcript.jsonl")));
        provider = std::make_shared<CapturingProvider>(mock);
        gateway = std::make_unique<llm::LlmGateway>(provider, llm::CompletionParams{}, 4);
        rows = read_rows(fixture(name + "/dataset.jsonl"));
        parses = std::filesystem::exists(fixture(name + "/parses")) ? fixture(name + "/parses").string() : dir;
    }

    syntax::SyntaxTree tree(const DatasetRow& row) const {
        syntax::FixtureParseSource src(parses);
        return src.parse(row.id, row.question, syntax::Formalism::dependency);
    }

    pipeline::Question question(const DatasetRow& row) const { return {row.id, row.question, "toy"}; }

    pipeline::Engine engine(pipeline::PipelineConfig cfg = {}, index::RelevanceScorer* scorer = nullptr) {
        return pipeline::Engine(cfg, {&index, gateway.get(), scorer});
    }
};

}  // namespace treeqa::replay
