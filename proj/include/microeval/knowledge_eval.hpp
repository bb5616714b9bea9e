#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "microeval/data.hpp"
#include "microeval/errors.hpp"
#include "microeval/gateway.hpp"
#include "microeval/prompts.hpp"
#include "microeval/strings.hpp"

namespace microeval {

// ─── Answer normalization ──────────────────────────────────────────────
//
// Exact match after a light normalization: first output line only, outer
// whitespace stripped (ASCII plus the ideographic space), punctuation
// removed. Case is preserved; '/', '-' and '_' survive because they appear
// inside product and component names.

namespace detail {

constexpr std::string_view kStrippable[] = {
    " ", "\t", "\v", "\f", "\r", "\xe3\x80\x80",  // U+3000
};

constexpr std::string_view kPunctuation[] = {
    ".", ",", ":", ";", "!", "?", "\"", "'", "(", ")", "[", "]", "{", "}",
    "\xe3\x80\x82",  // 。
    "\xe3\x80\x81",  // 、
    "\xef\xbc\x8c",  // ，
    "\xef\xbc\x9a",  // ：
    "\xef\xbc\x9b",  // ；
    "\xef\xbc\x81",  // ！
    "\xef\xbc\x9f",  // ？
    "\xe3\x80\x8c",  // 「
    "\xe3\x80\x8d",  // 」
    "\xe3\x80\x8e",  // 『
    "\xe3\x80\x8f",  // 』
    "\xef\xbc\x88",  // （
    "\xef\xbc\x89",  // ）
    "\xe3\x83\xbb",  // ・
};

inline bool prefix_in(std::string_view text, size_t pos, std::string_view token) {
    return text.compare(pos, token.size(), token) == 0;
}

inline std::string_view strip_outer(std::string_view text) {
    bool moved = true;
    while (moved && !text.empty()) {
        moved = false;
        for (auto token : kStrippable) {
            if (prefix_in(text, 0, token)) {
                text.remove_prefix(token.size());
                moved = true;
            }
            if (text.size() >= token.size() &&
                prefix_in(text, text.size() - token.size(), token)) {
                text.remove_suffix(token.size());
                moved = true;
            }
        }
    }
    return text;
}

}  // namespace detail

namespace detail {

inline std::string remove_punctuation(std::string_view line) {
    std::string cleaned;
    cleaned.reserve(line.size());
    size_t i = 0;
    while (i < line.size()) {
        bool removed = false;
        for (auto token : kPunctuation) {
            if (prefix_in(line, i, token)) {
                i += token.size();
                removed = true;
                break;
            }
        }
        if (!removed) cleaned += line[i++];
    }
    return cleaned;
}

}  // namespace detail

inline std::string normalize_answer(const std::string& raw) {
    std::string_view line(raw);
    if (auto nl = line.find('\n'); nl != std::string_view::npos) line = line.substr(0, nl);

    // Iterate to a fixpoint: on malformed byte sequences a removal can butt
    // two fragments together into a fresh punctuation token, and the result
    // must be stable under renormalization regardless of input encoding.
    std::string current(detail::strip_outer(line));
    for (;;) {
        std::string next(detail::strip_outer(detail::remove_punctuation(current)));
        if (next == current) return current;
        current = std::move(next);
    }
}

// ─── Memorization (perplexity) ─────────────────────────────────────────

struct PerplexityRecord {
    std::string fact_id;
    double perplexity = 0.0;
    size_t scored_tokens = 0;
};

struct PerplexityReport {
    std::vector<PerplexityRecord> facts;
    double mean_perplexity = 0.0;
};

// Per-paragraph perplexity of the oracle facts under the target model:
// exp of the negated mean token logprob. Tokens the backend returns without
// a logprob (typically the first) are excluded from the mean.
inline PerplexityReport measure_memorization(const Dataset& dataset, const std::string& model_id,
                                             Gateway& gateway) {
    if (model_id.empty()) throw PreconditionError("model id is empty");
    std::vector<const OracleFact*> facts;
    for (const auto& item : dataset.items)
        for (const auto& fact : item.oracle_facts) facts.push_back(&fact);
    if (facts.empty()) throw PreconditionError("dataset has no oracle facts");

    PerplexityReport report;
    report.facts.resize(facts.size());
    parallel_for(facts.size(), gateway.max_in_flight(), [&](size_t i) {
        const ScoreResult scored = gateway.score_tokens(model_id, facts[i]->text);
        double sum = 0.0;
        size_t count = 0;
        for (const auto& token : scored.tokens) {
            if (!token.logprob) continue;
            sum += *token.logprob;
            count += 1;
        }
        if (count == 0)
            throw DataError("fact '" + facts[i]->id + "' produced no scored tokens");
        report.facts[i] = {facts[i]->id, std::exp(-sum / static_cast<double>(count)), count};
    });

    double total = 0.0;
    for (const auto& record : report.facts) total += record.perplexity;
    report.mean_perplexity = total / static_cast<double>(report.facts.size());
    return report;
}

// ─── Closed-book QA synthesis ──────────────────────────────────────────

struct SynthesisParse {
    bool ok = false;
    std::string question;
    std::string answer;
};

// Models sometimes restate the few-shot examples before the real pair, so
// the last question/answer block wins. The answer block runs to the next
// section marker or end of output.
inline SynthesisParse parse_synthesis_output(const std::string& output) {
    static const std::string kQuestion = "### Question";
    static const std::string kAnswer = "### Answer";
    const size_t apos = output.rfind(kAnswer);
    if (apos == std::string::npos) return {};
    const size_t qpos = output.rfind(kQuestion, apos);
    if (qpos == std::string::npos || qpos + kQuestion.size() > apos) return {};

    std::string question =
        trim(output.substr(qpos + kQuestion.size(), apos - qpos - kQuestion.size()));
    size_t answer_end = output.find("###", apos + kAnswer.size());
    if (answer_end == std::string::npos) answer_end = output.size();
    std::string answer =
        trim(output.substr(apos + kAnswer.size(), answer_end - apos - kAnswer.size()));
    if (question.empty() || answer.empty()) return {};
    return {true, std::move(question), std::move(answer)};
}

// Drafts one closed-book QA per oracle fact. Every draft starts in the
// pending state; a human pass promotes it to approved/edited or deletes it.
// Unparseable model output is kept as a deleted entry with the raw text so
// curation can see what happened.
inline std::vector<KnowledgeQA> synthesize_knowledge_qas(const Dataset& dataset,
                                                         const std::string& model_id,
                                                         const PromptTemplateSet& templates,
                                                         Gateway& gateway, int max_tokens = 512) {
    if (model_id.empty()) throw PreconditionError("model id is empty");
    std::vector<const OracleFact*> facts;
    for (const auto& item : dataset.items)
        for (const auto& fact : item.oracle_facts) facts.push_back(&fact);
    if (facts.empty()) throw PreconditionError("dataset has no oracle facts");

    std::vector<KnowledgeQA> qas(facts.size());
    parallel_for(facts.size(), gateway.max_in_flight(), [&](size_t i) {
        CompletionRequest request;
        request.model_id = model_id;
        request.prompt = build_qa_synthesis_prompt(*facts[i], templates);
        request.decode_mode = DecodeMode::Greedy;
        request.max_tokens = max_tokens;
        const std::string output = gateway.complete(request).text;

        KnowledgeQA qa;
        qa.id = facts[i]->id + ".qa";
        qa.source_fact_id = facts[i]->id;
        const SynthesisParse parsed = parse_synthesis_output(output);
        if (parsed.ok) {
            qa.question = parsed.question;
            qa.answer = parsed.answer;
            qa.curation_status = CurationStatus::Pending;
        } else {
            qa.curation_status = CurationStatus::Deleted;
            qa.raw_output = output;
        }
        qas[i] = std::move(qa);
    });
    return qas;
}

// ─── Elicitation accuracy ──────────────────────────────────────────────

struct AccuracyRecord {
    std::string qa_id;
    std::string model_answer;
    std::string normalized_model;
    std::string normalized_gold;
    bool correct = false;
};

struct AccuracyReport {
    std::vector<AccuracyRecord> records;
    size_t evaluated = 0;
    double accuracy = 0.0;
};

// Closed-book accuracy over curated QAs: greedy decoding, normalized exact
// match. Only approved and edited entries are scored unless uncurated
// (pending) entries are explicitly allowed; deleted entries never score.
inline AccuracyReport measure_elicitation(const std::vector<KnowledgeQA>& qas,
                                          const std::string& model_id,
                                          const PromptTemplateSet& templates, Gateway& gateway,
                                          bool allow_uncurated = false, int max_tokens = 64) {
    if (model_id.empty()) throw PreconditionError("model id is empty");
    std::vector<const KnowledgeQA*> eligible;
    size_t pending = 0;
    for (const auto& qa : qas) {
        switch (qa.curation_status) {
            case CurationStatus::Approved:
            case CurationStatus::Edited:
                eligible.push_back(&qa);
                break;
            case CurationStatus::Pending:
                ++pending;
                if (allow_uncurated) eligible.push_back(&qa);
                break;
            case CurationStatus::Deleted:
                break;
        }
    }
    if (eligible.empty())
        throw PreconditionError("no scoreable knowledge QAs (" + std::to_string(pending) +
                                " pending; pass allow_uncurated to include them)");

    AccuracyReport report;
    report.records.resize(eligible.size());
    parallel_for(eligible.size(), gateway.max_in_flight(), [&](size_t i) {
        const KnowledgeQA& qa = *eligible[i];
        CompletionRequest request;
        request.model_id = model_id;
        request.prompt = build_knowledge_qa_prompt(qa.question, templates);
        request.decode_mode = DecodeMode::Greedy;
        request.max_tokens = max_tokens;
        const std::string output = gateway.complete(request).text;

        AccuracyRecord record;
        record.qa_id = qa.id;
        record.model_answer = output;
        record.normalized_model = normalize_answer(output);
        record.normalized_gold = normalize_answer(qa.answer);
        record.correct = !record.normalized_gold.empty() &&
                         record.normalized_model == record.normalized_gold;
        report.records[i] = std::move(record);
    });

    report.evaluated = report.records.size();
    size_t correct = 0;
    for (const auto& record : report.records)
        if (record.correct) ++correct;
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.evaluated);
    return report;
}

}  // namespace microeval
