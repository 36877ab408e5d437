#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "figret/corpus.hpp"

namespace figret {

/// Teacher prompt templates. Placeholders are `{name}` tokens; only names
/// passed to `render_template` are substituted, so literal JSON braces in the
/// templates survive.
struct PromptTemplates {
    std::string scoring;
    std::string relevance_part1;
    std::string relevance_part2;
    std::string comprehensiveness;
    std::string purity;
    std::string exemplar;

    /// Copies compiled in from templates/*.txt.
    static PromptTemplates builtin();

    /// Reads `<dir>/<name>.txt` for each template; missing files keep the
    /// built-in text.
    static PromptTemplates load(const std::filesystem::path& dir);
};

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// "[id] text" per line.
std::string render_documents(std::span<const Document> docs);

}  // namespace figret
