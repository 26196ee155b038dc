#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace treeqa::syntax {

enum class Formalism { dependency, constituency };

std::string_view to_string(Formalism f);
// Accepts "dependency"/"dep"/"dt" and "constituency"/"const"/"ct".
Formalism parse_formalism(std::string_view s);

struct Token {
    int index = 0;  // 1-based
    std::string surface;
    std::string lemma;
    std::string upos;
    std::string xpos;
    std::string deprel;  // dependency formalism only
    int head = 0;        // dependency formalism only; 0 marks the root
};

using NodeId = std::size_t;

struct SyntaxNode {
    NodeId id = 0;
    Formalism formalism = Formalism::dependency;
    std::string label;
    std::vector<int> span;  // ascending token indices
    std::string surface;
    std::vector<NodeId> children;
    std::optional<NodeId> parent;
    int head_token = 0;  // dependency only

    // Filled in by prune(). Before pruning kept_children == children.
    bool skipped = false;
    std::vector<NodeId> kept_children;

    int leftmost() const { return span.front(); }
    bool is_leaf() const { return children.empty(); }
};

class SyntaxTree {
public:
    SyntaxTree() = default;

    // Builds a dependency tree from tokens carrying HEAD/DEPREL. The caller
    // guarantees exactly one root and acyclic heads (parse_conllu checks).
    static SyntaxTree from_heads(std::string question, std::vector<Token> tokens);

    const std::string& question() const { return question_; }
    const std::vector<Token>& tokens() const { return tokens_; }
    Formalism formalism() const { return formalism_; }
    NodeId root() const { return root_; }
    const SyntaxNode& node(NodeId id) const { return nodes_.at(id); }
    const std::vector<SyntaxNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    bool pruned() const { return pruned_; }

    // Throws std::logic_error naming the first broken structural invariant.
    void validate() const;

private:
    friend class TreeBuilder;
    friend SyntaxTree prune(const SyntaxTree& tree, const struct PrunePolicy& policy);

    void finalize();  // spans, surfaces, sorted children, kept_children

    std::string question_;
    std::vector<Token> tokens_;
    std::vector<SyntaxNode> nodes_;
    Formalism formalism_ = Formalism::dependency;
    NodeId root_ = 0;
    bool pruned_ = false;
};

struct PrunePolicy {
    int min_phrase_tokens = 3;
    std::set<std::string> skip_labels;

    static PrunePolicy defaults(Formalism f, int min_phrase_tokens = 3);
    bool skips_label(std::string_view label) const;
};

SyntaxTree parse_conllu(std::string_view doc);
SyntaxTree parse_ptb(std::string_view doc, std::string question = {});

std::string to_conllu(const SyntaxTree& tree);
std::string to_ptb(const SyntaxTree& tree);

// Marks non-informative and short nodes as skipped and re-attaches their
// kept descendants to the nearest unskipped ancestor. The root is never
// skipped; it is reserved for final synthesis.
SyntaxTree prune(const SyntaxTree& tree, const PrunePolicy& policy);

// Unskipped non-root nodes, children before parents, siblings by leftmost
// token.
std::vector<NodeId> traversal_order(const SyntaxTree& tree);

}  // namespace treeqa::syntax
