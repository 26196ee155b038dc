#include <charconv>
#include <set>
#include <sstream>
#include <stdexcept>

#include "treeqa/error.hpp"
#include "treeqa/syntax/tree.hpp"
#include "treeqa/text.hpp"

namespace treeqa::syntax {

namespace {

std::optional<int> parse_int(std::string_view s) {
    int value = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

std::string field_or_empty(const std::string& s) { return s == "_" ? std::string() : s; }

}  // namespace

SyntaxTree parse_conllu(std::string_view doc) {
    std::vector<Token> tokens;
    std::string question;
    std::set<int> seen_ids;
    bool block_closed = false;
    std::size_t line_no = 0;

    for (std::string raw : text::split(doc, '\n')) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (text::trim(raw).empty()) {
            if (!tokens.empty()) block_closed = true;
            continue;
        }
        if (raw.front() == '#') {
            const auto body = text::trim(std::string_view(raw).substr(1));
            if (body.substr(0, 4) == "text") {
                const auto eq = body.find('=');
                if (eq != std::string_view::npos && text::trim(body.substr(4, eq - 4)).empty())
                    question = std::string(text::trim(body.substr(eq + 1)));
            }
            continue;
        }
        if (block_closed)
            throw LineError(ErrorKind::MalformedConllu, line_no, "more than one sentence block");

        const auto cols = text::split(raw, '\t');
        if (cols.size() != 10)
            throw LineError(ErrorKind::MalformedConllu, line_no,
                            "expected 10 tab-separated columns, got " + std::to_string(cols.size()));
        // multiword ranges (3-4) and empty nodes (5.1) carry no tree structure
        if (cols[0].find_first_of("-.") != std::string::npos) continue;

        const auto id = parse_int(cols[0]);
        if (!id || *id < 1) throw LineError(ErrorKind::MalformedConllu, line_no, "bad token id '" + cols[0] + "'");
        if (!seen_ids.insert(*id).second)
            throw LineError(ErrorKind::MalformedConllu, line_no, "duplicate token id " + cols[0]);
        if (*id != static_cast<int>(tokens.size()) + 1)
            throw LineError(ErrorKind::MalformedConllu, line_no, "token ids must be contiguous from 1");
        const auto head = parse_int(cols[6]);
        if (!head || *head < 0) throw LineError(ErrorKind::MalformedConllu, line_no, "bad HEAD '" + cols[6] + "'");
        if (cols[1].empty()) throw LineError(ErrorKind::MalformedConllu, line_no, "empty FORM");

        Token tok;
        tok.index = *id;
        tok.surface = cols[1];
        tok.lemma = field_or_empty(cols[2]);
        tok.upos = field_or_empty(cols[3]);
        tok.xpos = field_or_empty(cols[4]);
        tok.head = *head;
        tok.deprel = field_or_empty(cols[7]);
        tokens.push_back(std::move(tok));
    }

    if (tokens.empty()) throw Error(ErrorKind::MalformedConllu, "no token rows");
    const int count = static_cast<int>(tokens.size());
    int roots = 0;
    for (const auto& t : tokens) {
        if (t.head > count)
            throw Error(ErrorKind::MalformedConllu, "HEAD " + std::to_string(t.head) + " out of range for token " +
                                                        std::to_string(t.index));
        if (t.head == t.index) throw Error(ErrorKind::CyclicHeads, "token " + std::to_string(t.index) + " heads itself");
        if (t.head == 0) ++roots;
    }
    if (roots > 1) throw Error(ErrorKind::MultipleRoots, std::to_string(roots) + " tokens have HEAD=0");
    if (roots == 0) throw Error(ErrorKind::CyclicHeads, "no token has HEAD=0");

    // Every token must reach the root; a walk longer than the sentence is a cycle.
    for (const auto& t : tokens) {
        int cur = t.index;
        int steps = 0;
        while (cur != 0) {
            cur = tokens[static_cast<std::size_t>(cur - 1)].head;
            if (++steps > count)
                throw Error(ErrorKind::CyclicHeads, "cycle through token " + std::to_string(t.index));
        }
    }
    return SyntaxTree::from_heads(std::move(question), std::move(tokens));
}

std::string to_conllu(const SyntaxTree& tree) {
    if (tree.formalism() != Formalism::dependency)
        throw std::invalid_argument("to_conllu requires a dependency tree");
    auto or_blank = [](const std::string& s) { return s.empty() ? std::string("_") : s; };
    std::ostringstream out;
    out << "# text = " << tree.question() << '\n';
    for (const auto& t : tree.tokens()) {
        out << t.index << '\t' << t.surface << '\t' << or_blank(t.lemma) << '\t' << or_blank(t.upos) << '\t'
            << or_blank(t.xpos) << "\t_\t" << t.head << '\t' << or_blank(t.deprel) << "\t_\t_\n";
    }
    out << '\n';
    return out.str();
}

}  // namespace treeqa::syntax
