#include <cctype>
#include <functional>
#include <stdexcept>

#include "treeqa/error.hpp"
#include "treeqa/syntax/tree.hpp"
#include "treeqa/text.hpp"

namespace treeqa::syntax {

// Recursive-descent reader for (TAG ...) bracketings. Whitespace between
// atoms is insignificant.
class TreeBuilder {
public:
    explicit TreeBuilder(std::string_view doc) : doc_(doc) {}

    SyntaxTree build(std::string question) {
        skip_ws();
        if (pos_ >= doc_.size()) throw Error(ErrorKind::UnbalancedBrackets, "empty input");
        if (doc_[pos_] != '(') throw Error(ErrorKind::UnbalancedBrackets, "tree must start with '('");
        tree_.formalism_ = Formalism::constituency;
        tree_.root_ = read_constituent(std::nullopt);
        skip_ws();
        if (pos_ != doc_.size())
            throw Error(ErrorKind::UnbalancedBrackets, "trailing input at offset " + std::to_string(pos_));
        if (question.empty()) {
            std::vector<std::string> words;
            for (const auto& t : tree_.tokens_) words.push_back(t.surface);
            question = text::join(words, " ");
        }
        tree_.question_ = std::move(question);
        tree_.finalize();
        return std::move(tree_);
    }

private:
    void skip_ws() {
        while (pos_ < doc_.size() && std::isspace(static_cast<unsigned char>(doc_[pos_]))) ++pos_;
    }

    std::string read_atom() {
        const std::size_t start = pos_;
        while (pos_ < doc_.size() && doc_[pos_] != '(' && doc_[pos_] != ')' &&
               !std::isspace(static_cast<unsigned char>(doc_[pos_])))
            ++pos_;
        return std::string(doc_.substr(start, pos_ - start));
    }

    NodeId read_constituent(std::optional<NodeId> parent) {
        const std::size_t open_at = pos_;
        ++pos_;  // '('
        skip_ws();
        if (pos_ >= doc_.size()) throw Error(ErrorKind::UnbalancedBrackets, "unclosed '(' at offset " + std::to_string(open_at));

        std::string label;
        if (doc_[pos_] != '(' && doc_[pos_] != ')') label = read_atom();

        const NodeId id = tree_.nodes_.size();
        {
            SyntaxNode node;
            node.id = id;
            node.formalism = Formalism::constituency;
            node.label = label.empty() && !parent ? "ROOT" : label;
            node.parent = parent;
            tree_.nodes_.push_back(std::move(node));
        }

        std::vector<NodeId> children;
        std::vector<std::string> words;
        while (true) {
            skip_ws();
            if (pos_ >= doc_.size())
                throw Error(ErrorKind::UnbalancedBrackets, "unclosed '(' at offset " + std::to_string(open_at));
            if (doc_[pos_] == ')') {
                ++pos_;
                break;
            }
            if (doc_[pos_] == '(') {
                children.push_back(read_constituent(id));
            } else {
                words.push_back(read_atom());
            }
        }

        if (children.empty() && words.empty())
            throw Error(ErrorKind::EmptyConstituent, "constituent '" + label + "' at offset " + std::to_string(open_at) + " is empty");
        if (!children.empty() && !words.empty())
            throw Error(ErrorKind::EmptyConstituent, "constituent '" + label + "' mixes bare tokens with subtrees");
        if (words.size() > 1)
            throw Error(ErrorKind::EmptyConstituent, "preterminal '" + label + "' has " + std::to_string(words.size()) + " tokens");

        if (!words.empty()) {
            if (label.empty()) throw Error(ErrorKind::EmptyConstituent, "preterminal without a tag");
            Token tok;
            tok.index = static_cast<int>(tree_.tokens_.size()) + 1;
            tok.surface = words.front();
            tok.upos = label;
            tok.xpos = label;
            tree_.nodes_[id].span = {tok.index};
            tree_.tokens_.push_back(std::move(tok));
        }
        tree_.nodes_[id].children = std::move(children);
        return id;
    }

    std::string_view doc_;
    std::size_t pos_ = 0;
    SyntaxTree tree_;
};

SyntaxTree parse_ptb(std::string_view doc, std::string question) {
    return TreeBuilder(doc).build(std::move(question));
}

std::string to_ptb(const SyntaxTree& tree) {
    if (tree.formalism() != Formalism::constituency)
        throw std::invalid_argument("to_ptb requires a constituency tree");
    std::string out;
    std::function<void(NodeId)> emit = [&](NodeId id) {
        const SyntaxNode& n = tree.node(id);
        out += '(';
        out += n.label;
        if (n.children.empty()) {
            out += ' ';
            out += tree.tokens()[static_cast<std::size_t>(n.span.front() - 1)].surface;
        }
        for (NodeId c : n.children) {
            out += ' ';
            emit(c);
        }
        out += ')';
    };
    emit(tree.root());
    return out;
}

}  // namespace treeqa::syntax
