#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "microeval/data.hpp"
#include "microeval/digest.hpp"
#include "microeval/errors.hpp"
#include "microeval/setting.hpp"
#include "microeval/strings.hpp"

namespace microeval {

// ─── Template rendering ────────────────────────────────────────────────
//
// Templates are plain UTF-8 text with named {placeholder} tokens. Rendering
// is a single pass over the template: each declared placeholder is replaced
// at most once and substituted values are never rescanned, so a generated
// answer containing the literal string "{criteria}" passes through verbatim.

inline std::string render_template(
    std::string_view tpl,
    std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
    std::string out;
    out.reserve(tpl.size() + 128);
    std::vector<bool> used(values.size(), false);
    size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            size_t close = tpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                std::string_view name = tpl.substr(i + 1, close - i - 1);
                size_t vi = 0;
                bool replaced = false;
                for (const auto& [key, value] : values) {
                    if (key == name && !used[vi]) {
                        out += value;
                        used[vi] = true;
                        replaced = true;
                        break;
                    }
                    ++vi;
                }
                if (replaced) {
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tpl[i++];
    }
    return out;
}

inline size_t count_placeholder(std::string_view tpl, std::string_view name) {
    const std::string token = "{" + std::string(name) + "}";
    size_t count = 0, pos = 0;
    while ((pos = tpl.find(token, pos)) != std::string_view::npos) {
        ++count;
        pos += token.size();
    }
    return count;
}

// ─── Template set ──────────────────────────────────────────────────────

// Every prompt the harness sends is assembled from this set. Template files
// are selected per language tag through a manifest; the shipped defaults are
// the Japanese originals with English translations alongside.
struct PromptTemplateSet {
    std::string language_tag;
    std::string background_header;      // fixed text, no placeholder
    std::string knowledge_item_prefix;  // {i}
    std::string answer_template;        // {question}
    std::string strategy_block;         // {conclusions}
    std::string judge_template;         // {generated_answer}, {criteria}
    std::string knowledge_qa_template;  // {question}
    std::string qa_synthesis_template;  // {fact}
    std::string sft_synthesis_template; // {chunk}

    std::string digest() const {
        std::string all = language_tag;
        for (const std::string* part :
             {&background_header, &knowledge_item_prefix, &answer_template, &strategy_block,
              &judge_template, &knowledge_qa_template, &qa_synthesis_template,
              &sft_synthesis_template}) {
            all += '\0';
            all += *part;
        }
        return sha256_hex(all);
    }
};

namespace detail {

inline std::string load_template_file(const std::filesystem::path& path) {
    std::string text = read_file(path);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

inline void check_placeholders(const std::string& tpl, const char* role,
                               std::initializer_list<const char*> names) {
    for (const char* name : names) {
        size_t n = count_placeholder(tpl, name);
        if (n != 1)
            throw DataError("template '" + std::string(role) + "' must contain {" +
                            std::string(name) + "} exactly once, found " + std::to_string(n));
    }
}

}  // namespace detail

inline std::vector<std::string> template_languages(const std::filesystem::path& manifest_path) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(manifest_path.string() + ": malformed manifest: " + e.what());
    }
    std::vector<std::string> langs;
    for (auto it = manifest.begin(); it != manifest.end(); ++it) langs.push_back(it.key());
    return langs;
}

inline PromptTemplateSet load_template_set(const std::filesystem::path& manifest_path,
                                           const std::string& language_tag) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(manifest_path.string() + ": malformed manifest: " + e.what());
    }
    if (!manifest.contains(language_tag))
        throw DataError("template manifest has no language '" + language_tag + "': " +
                        manifest_path.string());
    const auto& entry = manifest.at(language_tag);
    const auto base = manifest_path.parent_path();
    auto file = [&](const char* role) -> std::string {
        if (!entry.contains(role))
            throw DataError("template manifest language '" + language_tag +
                            "' is missing role '" + role + "'");
        return detail::load_template_file(base / entry.at(role).get<std::string>());
    };

    PromptTemplateSet t;
    t.language_tag = language_tag;
    t.background_header = file("background_header");
    t.knowledge_item_prefix = file("knowledge_item_prefix");
    t.answer_template = file("answer");
    t.strategy_block = file("strategy");
    t.judge_template = file("judge");
    t.knowledge_qa_template = file("knowledge_qa");
    t.qa_synthesis_template = file("qa_synthesis");
    t.sft_synthesis_template = file("sft_synthesis");

    detail::check_placeholders(t.knowledge_item_prefix, "knowledge_item_prefix", {"i"});
    detail::check_placeholders(t.answer_template, "answer", {"question"});
    detail::check_placeholders(t.strategy_block, "strategy", {"conclusions"});
    detail::check_placeholders(t.judge_template, "judge", {"generated_answer", "criteria"});
    detail::check_placeholders(t.knowledge_qa_template, "knowledge_qa", {"question"});
    detail::check_placeholders(t.qa_synthesis_template, "qa_synthesis", {"fact"});
    detail::check_placeholders(t.sft_synthesis_template, "sft_synthesis", {"chunk"});
    return t;
}

// ─── Prompt construction ───────────────────────────────────────────────
//
// All build_* functions are pure: identical inputs produce identical bytes.
// Prompts are assembled from sections separated by one blank line and end
// with a single trailing newline; golden tests freeze the exact layout.

inline std::string build_answer_prompt(const EvalItem& item, PromptSetting setting,
                                       const PromptTemplateSet& t) {
    auto validation = validate_for_setting(item, setting);
    if (!validation.ok())
        throw PreconditionError("item '" + item.id + "' is invalid for setting '" +
                                to_string(setting) + "': " + join(validation.reasons, "; "));

    std::vector<std::string> sections;
    switch (setting) {
        case PromptSetting::NoOracle:
            break;
        case PromptSetting::OracleElicitation: {
            sections.push_back(t.background_header);
            int index = 0;
            for (const auto& fact : item.oracle_facts) {
                std::string prefix = render_template(t.knowledge_item_prefix,
                                                     {{"i", std::to_string(++index)}});
                sections.push_back(prefix + "\n" + fact.text);
            }
            break;
        }
        case PromptSetting::OracleReasoning: {
            sections.push_back(t.background_header);
            std::vector<std::string> lines;
            for (const auto& c : item.oracle_conclusions)
                if (!c.is_guidance) lines.push_back("- " + c.text);
            if (!lines.empty()) sections.push_back(join(lines, "\n"));
            break;
        }
    }

    sections.push_back(render_template(t.answer_template, {{"question", item.question}}));

    if (setting == PromptSetting::OracleReasoning) {
        // Guidance conclusions go into the strategy block after the question,
        // not into the pre-question list.
        std::vector<std::string> guidance;
        for (const auto& c : item.oracle_conclusions)
            if (c.is_guidance) guidance.push_back("- " + c.text);
        if (!guidance.empty())
            sections.push_back(
                render_template(t.strategy_block, {{"conclusions", join(guidance, "\n")}}));
    }

    return join(sections, "\n\n") + "\n";
}

inline std::string build_judge_prompt(const std::string& generated_answer,
                                      const Condition& condition, const PromptTemplateSet& t) {
    if (generated_answer.empty()) throw PreconditionError("generated answer is empty");
    if (condition.text.empty()) throw PreconditionError("condition text is empty");
    return render_template(t.judge_template, {{"generated_answer", generated_answer},
                                              {"criteria", condition.text}}) +
           "\n";
}

inline std::string build_knowledge_qa_prompt(const std::string& question,
                                             const PromptTemplateSet& t) {
    if (question.empty()) throw PreconditionError("knowledge question is empty");
    return render_template(t.knowledge_qa_template, {{"question", question}}) + "\n";
}

inline std::string build_qa_synthesis_prompt(const OracleFact& fact,
                                             const PromptTemplateSet& t) {
    if (fact.text.empty()) throw PreconditionError("oracle fact text is empty");
    return render_template(t.qa_synthesis_template, {{"fact", fact.text}}) + "\n";
}

inline std::string build_sft_synthesis_prompt(const std::string& chunk,
                                              const PromptTemplateSet& t) {
    if (chunk.empty()) throw PreconditionError("document chunk is empty");
    return render_template(t.sft_synthesis_template, {{"chunk", chunk}}) + "\n";
}

}  // namespace microeval
