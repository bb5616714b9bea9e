#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "microeval/data.hpp"
#include "microeval/errors.hpp"
#include "microeval/gateway.hpp"
#include "microeval/prompts.hpp"
#include "microeval/setting.hpp"
#include "microeval/strings.hpp"

namespace microeval {

// ─── Judge output parsing ──────────────────────────────────────────────

struct JudgeParse {
    bool yes = false;
    // Set when the trimmed output starts with neither Yes/yes nor No/no.
    // Such outputs count as No and are tallied separately.
    bool malformed = false;
};

inline JudgeParse parse_judge_output(const std::string& output) {
    const std::string_view trimmed = trim_view(output);
    auto starts_with = [&](std::string_view prefix) {
        return trimmed.substr(0, prefix.size()) == prefix;
    };
    if (starts_with("Yes") || starts_with("yes")) return {true, false};
    if (starts_with("No") || starts_with("no")) return {false, false};
    return {false, true};
}

// ─── Records ───────────────────────────────────────────────────────────

struct ConditionVerdict {
    std::string checklist_id;
    std::string condition_id;
    bool yes = false;
    bool malformed = false;
    // The judge call itself failed after retries; counts as No.
    bool judge_failed = false;
};

struct AnswerRecord {
    std::string item_id;
    PromptSetting setting = PromptSetting::NoOracle;
    std::uint64_t seed = 0;
    std::string answer;
    bool generation_failed = false;
    std::vector<ConditionVerdict> verdicts;
    bool correct = false;
};

struct SkippedItem {
    std::string item_id;
    std::string reason;
};

struct SettingScore {
    PromptSetting setting = PromptSetting::NoOracle;
    double macro_asr = 0.0;  // mean over items of the per-item success fraction
    double micro_asr = 0.0;  // correct samples over all samples
    size_t samples = 0;
    size_t correct_samples = 0;
};

struct DiagnosisGaps {
    double no_oracle_asr = 0.0;
    double elicitation_gap = 0.0;
    double reasoning_gap = 0.0;
    double composing_gap = 0.0;
    double threshold = 0.0;
    // Subset of {"elicit", "reason", "compose"} whose gap exceeds the threshold.
    std::vector<std::string> bottlenecks;
};

struct EvalRunResult {
    std::vector<AnswerRecord> records;
    std::vector<SettingScore> scores;
    std::vector<SkippedItem> skipped;
    size_t malformed_judge_count = 0;
    std::optional<DiagnosisGaps> diagnosis;
};

// ─── Pure scoring helpers ──────────────────────────────────────────────

// An answer is correct when at least one checklist has every condition
// judged Yes. Malformed or failed judge calls count as No.
inline bool answer_is_correct(const EvalItem& item, const std::vector<ConditionVerdict>& verdicts) {
    for (const auto& checklist : item.checklists) {
        bool all_yes = !checklist.conditions.empty();
        for (const auto& condition : checklist.conditions) {
            bool found_yes = false;
            for (const auto& v : verdicts) {
                if (v.checklist_id == checklist.id && v.condition_id == condition.id) {
                    found_yes = v.yes;
                    break;
                }
            }
            if (!found_yes) {
                all_yes = false;
                break;
            }
        }
        if (all_yes) return true;
    }
    return false;
}

inline DiagnosisGaps diagnose(double asr_no_oracle, double asr_elicitation, double asr_reasoning,
                              double threshold) {
    DiagnosisGaps gaps;
    gaps.no_oracle_asr = asr_no_oracle;
    gaps.elicitation_gap = asr_elicitation - asr_no_oracle;
    gaps.reasoning_gap = asr_reasoning - asr_elicitation;
    gaps.composing_gap = 1.0 - asr_reasoning;
    gaps.threshold = threshold;
    if (gaps.elicitation_gap > threshold) gaps.bottlenecks.push_back("elicit");
    if (gaps.reasoning_gap > threshold) gaps.bottlenecks.push_back("reason");
    if (gaps.composing_gap > threshold) gaps.bottlenecks.push_back("compose");
    return gaps;
}

// ─── Run configuration ─────────────────────────────────────────────────

struct OracleEvalConfig {
    std::string model_id;
    std::string judge_model_id;
    std::vector<PromptSetting> settings;
    int num_seeds = 10;
    double temperature = 0.7;
    int max_tokens = 1024;
    int judge_max_tokens = 16;
    double diagnosis_threshold = 0.05;
};

inline void validate_config(const OracleEvalConfig& config) {
    if (config.model_id.empty()) throw PreconditionError("model id is empty");
    if (config.judge_model_id.empty()) throw PreconditionError("judge model id is empty");
    if (config.settings.empty()) throw PreconditionError("no prompt settings requested");
    std::set<PromptSetting> seen;
    for (auto s : config.settings)
        if (!seen.insert(s).second)
            throw PreconditionError("setting '" + to_string(s) + "' requested twice");
    if (config.num_seeds < 1) throw PreconditionError("seed count must be >= 1");
    if (config.temperature < 0.0) throw PreconditionError("temperature must be >= 0");
    if (config.max_tokens < 1) throw PreconditionError("max tokens must be >= 1");
    if (config.judge_max_tokens < 1) throw PreconditionError("judge max tokens must be >= 1");
}

// ─── Evaluation run ────────────────────────────────────────────────────
//
// Two fan-out phases: every answer generation job across all items, settings
// and seeds first, then every judge job over the generated answers. Items
// invalid for any requested setting are skipped from the whole run so each
// setting scores the same item population.

inline EvalRunResult run_oracle_eval(const Dataset& dataset, const OracleEvalConfig& config,
                                     const PromptTemplateSet& templates, Gateway& gateway) {
    validate_config(config);
    if (dataset.items.empty()) throw PreconditionError("dataset has no items");

    EvalRunResult result;
    std::vector<const EvalItem*> scored_items;
    for (const auto& item : dataset.items) {
        std::vector<std::string> reasons;
        for (auto setting : config.settings) {
            auto validation = validate_for_setting(item, setting);
            if (!validation.ok())
                reasons.push_back(to_string(setting) + ": " + join(validation.reasons, "; "));
        }
        if (reasons.empty())
            scored_items.push_back(&item);
        else
            result.skipped.push_back({item.id, join(reasons, " | ")});
    }
    if (scored_items.empty())
        throw PreconditionError("every item was skipped; nothing to evaluate");

    for (const auto* item : scored_items) {
        for (auto setting : config.settings) {
            for (int s = 1; s <= config.num_seeds; ++s) {
                AnswerRecord record;
                record.item_id = item->id;
                record.setting = setting;
                record.seed = static_cast<std::uint64_t>(s);
                result.records.push_back(std::move(record));
            }
        }
    }

    const DecodeMode mode =
        config.temperature > 0.0 ? DecodeMode::Sample : DecodeMode::Greedy;
    std::map<std::string, const EvalItem*> items_by_id;
    for (const auto* item : scored_items) items_by_id[item->id] = item;

    parallel_for(result.records.size(), gateway.max_in_flight(), [&](size_t i) {
        AnswerRecord& record = result.records[i];
        const EvalItem& item = *items_by_id.at(record.item_id);
        CompletionRequest request;
        request.model_id = config.model_id;
        request.prompt = build_answer_prompt(item, record.setting, templates);
        request.decode_mode = mode;
        request.temperature = config.temperature;
        request.seed = record.seed;
        request.max_tokens = config.max_tokens;
        try {
            record.answer = gateway.complete(request).text;
        } catch (const BackendError&) {
            record.generation_failed = true;
        }
    });

    // One unreachable sample is tolerable noise; a fully unreachable
    // item-setting pair means the backend is down, so stop.
    {
        std::map<std::pair<std::string, PromptSetting>, std::pair<int, int>> failures;
        for (const auto& record : result.records) {
            auto& [failed, total] = failures[{record.item_id, record.setting}];
            total += 1;
            if (record.generation_failed) failed += 1;
        }
        for (const auto& [key, counts] : failures) {
            if (counts.first == counts.second)
                throw BackendError(BackendError::Kind::Transport,
                                   "all " + std::to_string(counts.second) +
                                       " samples failed for item '" + key.first +
                                       "' under setting '" + to_string(key.second) + "'");
        }
    }

    struct JudgeJob {
        size_t record_index;
        size_t verdict_index;
        std::string prompt;
    };
    std::vector<JudgeJob> judge_jobs;
    for (size_t r = 0; r < result.records.size(); ++r) {
        AnswerRecord& record = result.records[r];
        if (record.generation_failed) continue;
        const EvalItem& item = *items_by_id.at(record.item_id);
        for (const auto& checklist : item.checklists) {
            for (const auto& condition : checklist.conditions) {
                ConditionVerdict verdict;
                verdict.checklist_id = checklist.id;
                verdict.condition_id = condition.id;
                record.verdicts.push_back(std::move(verdict));
                JudgeJob job;
                job.record_index = r;
                job.verdict_index = record.verdicts.size() - 1;
                job.prompt = record.answer.empty()
                                 ? ""
                                 : build_judge_prompt(record.answer, condition, templates);
                judge_jobs.push_back(std::move(job));
            }
        }
    }

    std::atomic<size_t> malformed{0};
    parallel_for(judge_jobs.size(), gateway.max_in_flight(), [&](size_t i) {
        const JudgeJob& job = judge_jobs[i];
        ConditionVerdict& verdict =
            result.records[job.record_index].verdicts[job.verdict_index];
        if (job.prompt.empty()) {
            // An empty generation cannot satisfy any condition.
            verdict.malformed = true;
            ++malformed;
            return;
        }
        CompletionRequest request;
        request.model_id = config.judge_model_id;
        request.prompt = job.prompt;
        request.decode_mode = DecodeMode::Greedy;
        request.max_tokens = config.judge_max_tokens;
        try {
            const JudgeParse parse = parse_judge_output(gateway.complete(request).text);
            verdict.yes = parse.yes;
            verdict.malformed = parse.malformed;
            if (parse.malformed) ++malformed;
        } catch (const BackendError&) {
            verdict.judge_failed = true;
        }
    });
    result.malformed_judge_count = malformed.load();

    for (auto& record : result.records) {
        if (record.generation_failed) continue;
        record.correct = answer_is_correct(*items_by_id.at(record.item_id), record.verdicts);
    }

    for (auto setting : config.settings) {
        SettingScore score;
        score.setting = setting;
        double item_fraction_sum = 0.0;
        for (const auto* item : scored_items) {
            size_t correct = 0, total = 0;
            for (const auto& record : result.records) {
                if (record.item_id != item->id || record.setting != setting) continue;
                total += 1;
                if (record.correct) correct += 1;
            }
            item_fraction_sum += static_cast<double>(correct) / static_cast<double>(total);
            score.samples += total;
            score.correct_samples += correct;
        }
        score.macro_asr = item_fraction_sum / static_cast<double>(scored_items.size());
        score.micro_asr =
            static_cast<double>(score.correct_samples) / static_cast<double>(score.samples);
        result.scores.push_back(score);
    }

    const bool has_all =
        std::all_of(kAllSettings.begin(), kAllSettings.end(), [&](PromptSetting s) {
            return std::find(config.settings.begin(), config.settings.end(), s) !=
                   config.settings.end();
        });
    if (has_all) {
        auto macro = [&](PromptSetting s) {
            for (const auto& score : result.scores)
                if (score.setting == s) return score.macro_asr;
            throw PreconditionError("missing score for setting " + to_string(s));
        };
        result.diagnosis = diagnose(macro(PromptSetting::NoOracle),
                                    macro(PromptSetting::OracleElicitation),
                                    macro(PromptSetting::OracleReasoning),
                                    config.diagnosis_threshold);
    }
    return result;
}

// ─── Flat exports ──────────────────────────────────────────────────────

inline std::string asr_csv(const EvalRunResult& result) {
    std::string out = "item_id,setting,seed,correct\n";
    for (const auto& record : result.records) {
        out += record.item_id;
        out += ',';
        out += to_string(record.setting);
        out += ',';
        out += std::to_string(record.seed);
        out += ',';
        out += record.correct ? '1' : '0';
        out += '\n';
    }
    return out;
}

}  // namespace microeval
