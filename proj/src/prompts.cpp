#include "figret/prompts.hpp"

#include "figret/io.hpp"
#include "figret_builtin_templates.hpp"

namespace figret {

PromptTemplates PromptTemplates::builtin() {
    PromptTemplates t;
    t.scoring = std::string(builtin_templates::scoring);
    t.relevance_part1 = std::string(builtin_templates::relevance_part1);
    t.relevance_part2 = std::string(builtin_templates::relevance_part2);
    t.comprehensiveness = std::string(builtin_templates::comprehensiveness);
    t.purity = std::string(builtin_templates::purity);
    t.exemplar = std::string(builtin_templates::exemplar);
    return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    auto t = builtin();
    const auto maybe = [&](const char* name, std::string& slot) {
        const auto p = dir / (std::string(name) + ".txt");
        if (std::filesystem::exists(p)) slot = read_file(p);
    };
    maybe("scoring", t.scoring);
    maybe("relevance_part1", t.relevance_part1);
    maybe("relevance_part2", t.relevance_part2);
    maybe("comprehensiveness", t.comprehensiveness);
    maybe("purity", t.purity);
    maybe("exemplar", t.exemplar);
    return t;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

std::string render_documents(std::span<const Document> docs) {
    std::string out;
    for (const auto& d : docs) {
        out += '[';
        out += d.id;
        out += "] ";
        out += d.text;
        out += '\n';
    }
    if (!out.empty()) out.pop_back();
    return out;
}

}  // namespace figret
