#pragma once

#include <string>
#include <vector>

#include "treeqa/index/bm25.hpp"
#include "treeqa/index/rerank.hpp"
#include "treeqa/llm/gateway.hpp"
#include "treeqa/pipeline/config.hpp"
#include "treeqa/pipeline/queries.hpp"
#include "treeqa/pipeline/trace.hpp"
#include "treeqa/syntax/tree.hpp"

namespace treeqa::pipeline {

struct Question {
    std::string id;
    std::string text;
    std::string dataset;
};

// Borrowed collaborators. `index` may be null for cot-only, `scorer` is only
// needed by Tree-Retrieval.
struct Resources {
    const index::Index* index = nullptr;
    llm::LlmGateway* gateway = nullptr;
    index::RelevanceScorer* scorer = nullptr;
};

class Engine {
public:
    Engine(PipelineConfig config, Resources resources);

    const PipelineConfig& config() const { return config_; }

    // Full run for one question. `tree` is the unpruned parse in the method's
    // formalism and may be null for methods that do not use one.
    RunTrace run(const Question& q, const Method& method, const syntax::SyntaxTree* tree) const;

    RunTrace run_treerare(const Question& q, const syntax::SyntaxTree& tree) const;
    RunTrace run_tree_retrieval(const Question& q, const syntax::SyntaxTree& tree) const;
    RunTrace run_ablation(const Question& q, MethodKind mode, const syntax::SyntaxTree* tree) const;

    // Building blocks, exposed for tests. `method` labels ledger entries.
    QuerySet generate_queries(const Question& q, const std::string& method, const syntax::SyntaxNode& node,
                              const std::vector<EvidenceBlock>& child_evidence, StepLog& log) const;
    EvidenceSet answer_subcomponent(const Question& q, const std::string& method, const syntax::SyntaxNode& node,
                                    const QuerySet& queries, const std::vector<index::Hit>& docs,
                                    const std::string& question_binding, StepLog& log) const;
    llm::FinalAnswer synthesize_answer(const Question& q, const std::string& method,
                                       const std::vector<EvidenceBlock>& evidence, StepLog& log,
                                       std::string* raw = nullptr) const;

private:
    llm::Completion call(const Question& q, const std::string& method, const std::string& stage, llm::TemplateId id,
                         llm::Bindings bindings, const char* bulk_key, std::string anchor, StepLog& log) const;

    RunTrace process_tree(const Question& q, const Method& method, const syntax::SyntaxTree& pruned) const;
    NodeRecord process_node(const Question& q, const Method& method, const syntax::SyntaxTree& tree,
                            syntax::NodeId id, const std::vector<EvidenceBlock>& child_blocks) const;
    void finish(const Question& q, RunTrace& trace, const std::string& method, llm::TemplateId fag,
                const std::string& documents) const;
    std::vector<const index::Paragraph*> lookup(const std::vector<index::Hit>& hits) const;
    const index::Index& require_index() const;

    PipelineConfig config_;
    Resources res_;
};

}  // namespace treeqa::pipeline
