#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace treeqa::llm {

enum class TemplateId { qg_multihop, qg_ambiguous, sag, fag_multihop, fag_ambiguous };

std::string_view to_string(TemplateId id);
TemplateId parse_template_id(std::string_view name);

using Bindings = std::map<std::string, std::string, std::less<>>;

std::string_view template_body(TemplateId id);

// Names of the {{placeholders}} in `body`, in order of first appearance.
std::vector<std::string> placeholders(std::string_view body);

// Substitutes every placeholder verbatim. Extra bindings are ignored; a
// placeholder without a binding raises MissingBinding.
std::string render_template(std::string_view body, const Bindings& bindings);
std::string render_prompt(TemplateId id, const Bindings& bindings);

}  // namespace treeqa::llm
