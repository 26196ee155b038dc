#include "treeqa/llm/prompts.hpp"

#include <algorithm>

#include "treeqa/error.hpp"

namespace treeqa::llm {

namespace {

constexpr std::string_view kFagMultihop =
    "Answer the following question: {{question}} ,\n"
    "with following documents: {{documents}}. \n"
    "Your response should strictly follow the format:\n"
    "Explanations :[give your step by step Analysis here ]\n"
    "\n"
    "FINAL:(BE CONCISE, ONLY a FEW phrases)\n"
    "\n"
    "let's think step by step";

constexpr std::string_view kQgAmbiguous =
    "You're a disambiguation expert analyzing \"{{phrase}}\" in: \n"
    "{{question}}  \n"
    "Instruction:\n"
    "1. Analyze the question by considering these potential ambiguities:\n"
    "   - Temporal: Check for unclear time references, periods, or temporal scope\n"
    "   - Entity: Identify names, references, or terms that could refer to multiple entities\n"
    "   - Semantic: Look for words with multiple meanings (polysemy/homonymy)\n"
    "   - Scope: Consider possible boundaries and levels of detail\n"
    "   - Intent: Examine possible purposes and expected answer types\n"
    "   - Cultural: Consider cultural-dependent interpretations\n"
    "   - Quantitative: Check for unclear measurements or numerical references\n"
    "   - Linguistic: Analyze syntax and referential clarity\n"
    "   - Categorical: Consider possible classification schemes\n"
    "   - Contextual: Examine required background knowledge and relationships\n"
    "2. Analyze the question word by word. Return disambiguated question and its interperatation for each "
    "different meaning\n"
    "\n"
    "Here is what we currently know\n"
    "Documents:{{context}}\n"
    "\n"
    "pick top 5 questions that are best in disambiguating the question. (covers different meanings of the "
    "questions) and strictly FOLLOW the format: response: question1; question2;....";

// Written in the style of the ambiguous variant; asks for simple lookup
// queries instead of disambiguations.
constexpr std::string_view kQgMultihop =
    "You're a search expert analyzing \"{{phrase}}\" in: \n"
    "{{question}}  \n"
    "Instruction:\n"
    "1. Work out which facts about \"{{phrase}}\" must be known before the question can be answered.\n"
    "2. Write short, self-contained search queries that would retrieve those facts. Resolve references using "
    "what we already know.\n"
    "\n"
    "Here is what we currently know\n"
    "Documents:{{context}}\n"
    "\n"
    "pick top 5 queries that are best for finding the missing facts and strictly FOLLOW the format: response: "
    "query1; query2;....";

constexpr std::string_view kFagAmbiguous =
    "The question may be ambiguous and have multiple correct answers, and in that case, you have to provide a "
    "long-form answer including all correct answers.\n"
    "1. Carefully go through all the given documents.\n"
    "2.The using your and context, provide answer. \n"
    "Your response should strictly follow the format:\n"
    "Explanations (Step 2):[give your step by step Analysis here ]\n"
    "FINAL(Step 2):\n"
    "Please ONLY reply according to this format\n"
    "Question: {{question}} \n"
    "Document: {{documents}}\n"
    "let's think step by step";

constexpr std::string_view kSag =
    "Answer the {{question}} based on on the document info. For each question find as many answers as possible. "
    "Response all the answers in a short paragraph (as specific as possible). \n"
    "Relevant Document: {{context}}";

struct Slot {
    std::size_t begin;
    std::size_t end;  // one past the closing braces
    std::string name;
};

std::vector<Slot> scan(std::string_view body) {
    std::vector<Slot> out;
    std::size_t pos = 0;
    while ((pos = body.find("{{", pos)) != std::string_view::npos) {
        const auto close = body.find("}}", pos + 2);
        if (close == std::string_view::npos) break;
        const auto name = body.substr(pos + 2, close - pos - 2);
        const bool ident = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
            return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
        });
        if (ident) {
            out.push_back({pos, close + 2, std::string(name)});
            pos = close + 2;
        } else {
            pos += 2;
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::qg_multihop: return "qg_multihop";
        case TemplateId::qg_ambiguous: return "qg_ambiguous";
        case TemplateId::sag: return "sag";
        case TemplateId::fag_multihop: return "fag_multihop";
        case TemplateId::fag_ambiguous: return "fag_ambiguous";
    }
    return "unknown";
}

TemplateId parse_template_id(std::string_view name) {
    for (auto id : {TemplateId::qg_multihop, TemplateId::qg_ambiguous, TemplateId::sag, TemplateId::fag_multihop,
                    TemplateId::fag_ambiguous}) {
        if (to_string(id) == name) return id;
    }
    throw Error(ErrorKind::Config, "unknown template id '" + std::string(name) + "'");
}

std::string_view template_body(TemplateId id) {
    switch (id) {
        case TemplateId::qg_multihop: return kQgMultihop;
        case TemplateId::qg_ambiguous: return kQgAmbiguous;
        case TemplateId::sag: return kSag;
        case TemplateId::fag_multihop: return kFagMultihop;
        case TemplateId::fag_ambiguous: return kFagAmbiguous;
    }
    return {};
}

std::vector<std::string> placeholders(std::string_view body) {
    std::vector<std::string> names;
    for (auto& slot : scan(body)) {
        if (std::find(names.begin(), names.end(), slot.name) == names.end()) names.push_back(std::move(slot.name));
    }
    return names;
}

std::string render_template(std::string_view body, const Bindings& bindings) {
    std::string out;
    out.reserve(body.size());
    std::size_t last = 0;
    for (const auto& slot : scan(body)) {
        auto it = bindings.find(slot.name);
        if (it == bindings.end()) throw Error(ErrorKind::MissingBinding, "no binding for {{" + slot.name + "}}");
        out.append(body.substr(last, slot.begin - last));
        out.append(it->second);
        last = slot.end;
    }
    out.append(body.substr(last));
    return out;
}

std::string render_prompt(TemplateId id, const Bindings& bindings) { return render_template(template_body(id), bindings); }

}  // namespace treeqa::llm
