#include "treeqa/syntax/tree.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "treeqa/error.hpp"
#include "treeqa/text.hpp"

namespace treeqa::syntax {

std::string_view to_string(Formalism f) {
    return f == Formalism::dependency ? "dependency" : "constituency";
}

Formalism parse_formalism(std::string_view s) {
    const auto lower = text::to_lower_ascii(s);
    if (lower == "dependency" || lower == "dep" || lower == "dt") return Formalism::dependency;
    if (lower == "constituency" || lower == "const" || lower == "ct") return Formalism::constituency;
    throw Error(ErrorKind::Config, "unknown formalism '" + std::string(s) + "'");
}

SyntaxTree SyntaxTree::from_heads(std::string question, std::vector<Token> tokens) {
    SyntaxTree tree;
    tree.formalism_ = Formalism::dependency;
    tree.tokens_ = std::move(tokens);
    tree.nodes_.resize(tree.tokens_.size());
    for (std::size_t i = 0; i < tree.tokens_.size(); ++i) {
        const Token& tok = tree.tokens_[i];
        SyntaxNode& node = tree.nodes_[i];
        node.id = i;
        node.formalism = Formalism::dependency;
        node.label = tok.deprel;
        node.head_token = tok.index;
        if (tok.head == 0) {
            tree.root_ = i;
        } else {
            const auto parent = static_cast<NodeId>(tok.head - 1);
            node.parent = parent;
            tree.nodes_[parent].children.push_back(i);
        }
    }
    tree.question_ = std::move(question);
    if (tree.question_.empty()) {
        std::vector<std::string> words;
        for (const auto& t : tree.tokens_) words.push_back(t.surface);
        tree.question_ = text::join(words, " ");
    }
    tree.finalize();
    return tree;
}

void SyntaxTree::finalize() {
    // Spans are computed bottom-up with an explicit post-order so deep chains
    // do not recurse.
    std::vector<NodeId> order;
    order.reserve(nodes_.size());
    std::vector<std::pair<NodeId, bool>> stack{{root_, false}};
    while (!stack.empty()) {
        auto [id, expanded] = stack.back();
        stack.pop_back();
        if (expanded) {
            order.push_back(id);
            continue;
        }
        stack.emplace_back(id, true);
        for (NodeId c : nodes_[id].children) stack.emplace_back(c, false);
    }
    for (NodeId id : order) {
        SyntaxNode& n = nodes_[id];
        if (formalism_ == Formalism::dependency) {
            n.span = {n.head_token};
        } else if (!n.children.empty()) {
            n.span.clear();  // constituency leaves already carry their token
        }
        for (NodeId c : n.children) {
            const auto& cs = nodes_[c].span;
            n.span.insert(n.span.end(), cs.begin(), cs.end());
        }
        std::sort(n.span.begin(), n.span.end());
        std::vector<std::string> words;
        words.reserve(n.span.size());
        for (int t : n.span) words.push_back(tokens_[static_cast<std::size_t>(t - 1)].surface);
        n.surface = text::join(words, " ");
    }
    for (auto& n : nodes_) {
        std::sort(n.children.begin(), n.children.end(), [this](NodeId a, NodeId b) {
            return nodes_[a].leftmost() < nodes_[b].leftmost();
        });
        n.kept_children = n.children;
        n.skipped = false;
    }
    pruned_ = false;
}

void SyntaxTree::validate() const {
    if (nodes_.empty()) throw std::logic_error("tree has no nodes");
    if (nodes_[root_].parent) throw std::logic_error("root has a parent");
    std::size_t roots = 0;
    for (const auto& n : nodes_) {
        if (!n.parent) ++roots;
        if (n.span.empty()) throw std::logic_error("node without span");
        if (!std::is_sorted(n.span.begin(), n.span.end())) throw std::logic_error("span not sorted");
        std::vector<int> composed;
        if (n.formalism == Formalism::dependency) composed.push_back(n.head_token);
        for (NodeId c : n.children) {
            if (nodes_[c].parent != n.id) throw std::logic_error("child/parent mismatch");
            const auto& cs = nodes_[c].span;
            composed.insert(composed.end(), cs.begin(), cs.end());
        }
        if (!n.children.empty() || n.formalism == Formalism::dependency) {
            std::sort(composed.begin(), composed.end());
            if (composed != n.span) throw std::logic_error("span composition broken at node " + std::to_string(n.id));
        }
        if (n.formalism == Formalism::constituency && n.span.back() - n.span.front() + 1 != static_cast<int>(n.span.size()))
            throw std::logic_error("constituent span not contiguous");
    }
    if (roots != 1) throw std::logic_error("expected exactly one root");
    // Acyclic and connected: every node reaches the root within size() steps.
    for (const auto& n : nodes_) {
        std::size_t steps = 0;
        std::optional<NodeId> cur = n.id;
        while (cur && *cur != root_) {
            cur = nodes_[*cur].parent;
            if (++steps > nodes_.size()) throw std::logic_error("cycle detected");
        }
        if (!cur) throw std::logic_error("node not connected to root");
    }
    std::vector<bool> covered(tokens_.size(), false);
    for (const auto& n : nodes_) {
        if (n.children.empty())
            for (int t : n.span) covered[static_cast<std::size_t>(t - 1)] = true;
        if (n.formalism == Formalism::dependency) covered[static_cast<std::size_t>(n.head_token - 1)] = true;
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end())
        throw std::logic_error("tokens not covered by leaves");
}

PrunePolicy PrunePolicy::defaults(Formalism f, int min_phrase_tokens) {
    PrunePolicy p;
    p.min_phrase_tokens = min_phrase_tokens;
    if (f == Formalism::dependency) {
        p.skip_labels = {"punct", "det", "cc", "case", "mark"};
    } else {
        p.skip_labels = {"DT", "CC", ".", ",", ":", "``", "''", "-LRB-", "-RRB-", "#", "$", "HYPH", "NFP"};
    }
    return p;
}

bool PrunePolicy::skips_label(std::string_view label) const {
    if (skip_labels.count(std::string(label))) return true;
    // Subtyped relations (det:predet) and function-tagged constituents
    // (NP-SBJ) fall back to their base label.
    std::size_t cut = label.find(':');
    if (cut == std::string_view::npos && !label.empty() && label.front() != '-') {
        cut = label.find_first_of("-=");
    }
    if (cut == std::string_view::npos || cut == 0) return false;
    return skip_labels.count(std::string(label.substr(0, cut))) > 0;
}

SyntaxTree prune(const SyntaxTree& tree, const PrunePolicy& policy) {
    if (policy.min_phrase_tokens < 1) throw Error(ErrorKind::Config, "min_phrase_tokens must be >= 1");
    SyntaxTree out = tree;
    for (auto& n : out.nodes_) {
        n.skipped = n.id != out.root_ &&
                    (policy.skips_label(n.label) ||
                     static_cast<int>(n.span.size()) < policy.min_phrase_tokens);
    }
    // kept_children(n) = nearest unskipped descendants along each branch.
    std::function<void(NodeId, std::vector<NodeId>&)> collect = [&](NodeId id, std::vector<NodeId>& acc) {
        for (NodeId c : out.nodes_[id].children) {
            if (out.nodes_[c].skipped) {
                collect(c, acc);
            } else {
                acc.push_back(c);
            }
        }
    };
    for (auto& n : out.nodes_) {
        std::vector<NodeId> kept;
        collect(n.id, kept);
        std::sort(kept.begin(), kept.end(), [&](NodeId a, NodeId b) {
            return out.nodes_[a].leftmost() < out.nodes_[b].leftmost();
        });
        n.kept_children = std::move(kept);
    }
    out.pruned_ = true;
    return out;
}

std::vector<NodeId> traversal_order(const SyntaxTree& tree) {
    std::vector<NodeId> order;
    if (tree.size() == 0) return order;
    std::vector<std::pair<NodeId, bool>> stack{{tree.root(), false}};
    while (!stack.empty()) {
        auto [id, expanded] = stack.back();
        stack.pop_back();
        const SyntaxNode& n = tree.node(id);
        if (expanded) {
            if (id != tree.root() && !n.skipped) order.push_back(id);
            continue;
        }
        stack.emplace_back(id, true);
        // reversed so the leftmost child is expanded first
        for (auto it = n.kept_children.rbegin(); it != n.kept_children.rend(); ++it) stack.emplace_back(*it, false);
    }
    return order;
}

}  // namespace treeqa::syntax
