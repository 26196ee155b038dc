#pragma once

// Seeded generators for property tests over syntax trees. Trees are emitted as
// text so every property also exercises the readers.

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace treeqa::gen {

inline std::size_t draw(std::mt19937_64& rng, std::size_t bound) { return static_cast<std::size_t>(rng() % bound); }

// Random recursive tree over `n` tokens; heads may cross (non-projective).
inline std::string random_conllu(std::mt19937_64& rng, int n) {
    static const std::vector<std::string> kLabels = {"nsubj", "obj",  "nmod", "amod", "det",  "case",
                                                     "punct", "conj", "cc",   "acl",  "advmod", "mark",
                                                     "obl",   "compound", "flat"};
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 1);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> head(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i < n; ++i) {
        const int parent = order[draw(rng, static_cast<std::size_t>(i))];
        head[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = parent;
    }
    std::ostringstream out;
    out << "# text = random\n";
    for (int t = 1; t <= n; ++t) {
        const bool is_root = head[static_cast<std::size_t>(t)] == 0;
        out << t << "\tw" << t << "\t_\tX\t_\t_\t" << head[static_cast<std::size_t>(t)] << '\t'
            << (is_root ? std::string("root") : kLabels[draw(rng, kLabels.size())]) << "\t_\t_\n";
    }
    out << '\n';
    return out.str();
}

namespace detail {
inline void random_constituent(std::mt19937_64& rng, int leaves, int& next_word, std::ostringstream& out) {
    static const std::vector<std::string> kPhrases = {"NP", "VP", "PP", "S", "SBAR", "ADJP", "WHNP"};
    static const std::vector<std::string> kTags = {"NN", "NNS", "VB", "JJ", "IN", "DT", "CC", ".", "NNP", "WP"};
    if (leaves == 1 && draw(rng, 3) != 0) {
        out << '(' << kTags[draw(rng, kTags.size())] << " w" << next_word++ << ')';
        return;
    }
    out << '(' << kPhrases[draw(rng, kPhrases.size())];
    const int parts = std::min(leaves, 1 + static_cast<int>(draw(rng, 3)));
    // split `leaves` into `parts` positive sizes
    std::vector<int> cuts;
    for (int i = 1; i < leaves; ++i) cuts.push_back(i);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(static_cast<std::size_t>(parts - 1));
    std::sort(cuts.begin(), cuts.end());
    int prev = 0;
    cuts.push_back(leaves);
    for (int c : cuts) {
        out << ' ';
        random_constituent(rng, c - prev, next_word, out);
        prev = c;
    }
    out << ')';
}
}  // namespace detail

inline std::string random_ptb(std::mt19937_64& rng, int leaves) {
    std::ostringstream out;
    int next_word = 1;
    out << "(ROOT ";
    detail::random_constituent(rng, leaves, next_word, out);
    out << ')';
    return out.str();
}

}  // namespace treeqa::gen
