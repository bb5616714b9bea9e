#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>

#include "microeval/canonical_json.hpp"
#include "microeval/data.hpp"
#include "microeval/digest.hpp"
#include "microeval/errors.hpp"
#include "microeval/gateway.hpp"
#include "microeval/knowledge_eval.hpp"
#include "microeval/oracle_eval.hpp"
#include "microeval/strings.hpp"

namespace microeval {

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json eval_config_to_json(const OracleEvalConfig& config) {
    nlohmann::json settings = nlohmann::json::array();
    for (auto setting : config.settings) settings.push_back(to_string(setting));
    return nlohmann::json{
        {"model_id", config.model_id},
        {"judge_model_id", config.judge_model_id},
        {"settings", std::move(settings)},
        {"num_seeds", config.num_seeds},
        {"temperature", config.temperature},
        {"max_tokens", config.max_tokens},
        {"judge_max_tokens", config.judge_max_tokens},
        {"diagnosis_threshold", config.diagnosis_threshold},
    };
}

inline std::string eval_config_digest(const OracleEvalConfig& config) {
    return sha256_hex(canonical_dump(eval_config_to_json(config)));
}

// The scoreboard of one evaluation run. No wall-clock fields: rerunning the
// same inputs (warm cache or not) reproduces this file byte for byte.
inline nlohmann::json asr_report_json(const EvalRunResult& result,
                                      const std::string& dataset_digest,
                                      const std::string& template_digest,
                                      const OracleEvalConfig& config) {
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& score : result.scores) {
        scores.push_back(nlohmann::json{
            {"setting", to_string(score.setting)},
            {"macro_asr", score.macro_asr},
            {"micro_asr", score.micro_asr},
            {"samples", score.samples},
            {"correct_samples", score.correct_samples},
        });
    }
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& skip : result.skipped)
        skipped.push_back(nlohmann::json{{"item_id", skip.item_id}, {"reason", skip.reason}});

    nlohmann::json report{
        {"dataset_digest", dataset_digest},
        {"template_digest", template_digest},
        {"config_digest", eval_config_digest(config)},
        {"scores", std::move(scores)},
        {"skipped_items", std::move(skipped)},
        {"malformed_judge_count", result.malformed_judge_count},
        {"notes",
         nlohmann::json::array(
             {"guidance conclusions appear only in the post-question strategy block"})},
    };
    if (result.diagnosis) {
        const DiagnosisGaps& gaps = *result.diagnosis;
        report["diagnosis"] = nlohmann::json{
            {"no_oracle_asr", gaps.no_oracle_asr},
            {"elicitation_gap", gaps.elicitation_gap},
            {"reasoning_gap", gaps.reasoning_gap},
            {"composing_gap", gaps.composing_gap},
            {"threshold", gaps.threshold},
            {"bottlenecks", gaps.bottlenecks},
        };
    }
    return report;
}

inline std::string answers_jsonl(const EvalRunResult& result) {
    std::string out;
    for (const auto& record : result.records) {
        nlohmann::json verdicts = nlohmann::json::array();
        for (const auto& verdict : record.verdicts) {
            verdicts.push_back(nlohmann::json{
                {"checklist_id", verdict.checklist_id},
                {"condition_id", verdict.condition_id},
                {"yes", verdict.yes},
                {"malformed", verdict.malformed},
                {"judge_failed", verdict.judge_failed},
            });
        }
        out += nlohmann::json{
            {"item_id", record.item_id},
            {"setting", to_string(record.setting)},
            {"seed", record.seed},
            {"answer", record.answer},
            {"generation_failed", record.generation_failed},
            {"correct", record.correct},
            {"verdicts", std::move(verdicts)},
        }.dump();
        out += '\n';
    }
    return out;
}

inline nlohmann::json run_manifest_json(const OracleEvalConfig& config,
                                        const std::string& dataset_digest,
                                        const std::string& template_digest,
                                        const GatewayCounters& counters,
                                        const std::string& started_at,
                                        const std::string& finished_at) {
    return nlohmann::json{
        {"started_at", started_at},
        {"finished_at", finished_at},
        {"config", eval_config_to_json(config)},
        {"config_digest", eval_config_digest(config)},
        {"dataset_digest", dataset_digest},
        {"template_digest", template_digest},
        {"gateway",
         {{"cache_hits", counters.cache_hits},
          {"cache_misses", counters.cache_misses},
          {"backend_calls", counters.backend_calls},
          {"retries", counters.retries}}},
    };
}

struct EvalRunPaths {
    std::filesystem::path manifest;
    std::filesystem::path asr_report;
    std::filesystem::path answers;
    std::filesystem::path csv;
};

inline EvalRunPaths write_eval_run(const std::filesystem::path& run_dir,
                                   const EvalRunResult& result, const OracleEvalConfig& config,
                                   const std::string& dataset_digest,
                                   const std::string& template_digest,
                                   const GatewayCounters& counters,
                                   const std::string& started_at,
                                   const std::string& finished_at) {
    EvalRunPaths paths;
    paths.manifest = run_dir / "manifest.json";
    paths.asr_report = run_dir / "asr_report.json";
    paths.answers = run_dir / "answers.jsonl";
    paths.csv = run_dir / "asr.csv";
    write_file(paths.manifest,
               run_manifest_json(config, dataset_digest, template_digest, counters, started_at,
                                 finished_at)
                       .dump(2) +
                   "\n");
    write_file(paths.asr_report,
               canonical_dump(asr_report_json(result, dataset_digest, template_digest, config)));
    write_file(paths.answers, answers_jsonl(result));
    write_file(paths.csv, asr_csv(result));
    return paths;
}

// ─── Knowledge probe artifacts ─────────────────────────────────────────

inline nlohmann::json perplexity_report_json(const PerplexityReport& report,
                                             const std::string& model_id,
                                             const std::string& dataset_digest) {
    nlohmann::json facts = nlohmann::json::array();
    for (const auto& record : report.facts) {
        facts.push_back(nlohmann::json{
            {"fact_id", record.fact_id},
            {"perplexity", record.perplexity},
            {"scored_tokens", record.scored_tokens},
        });
    }
    return nlohmann::json{
        {"model_id", model_id},
        {"dataset_digest", dataset_digest},
        {"mean_perplexity", report.mean_perplexity},
        {"facts", std::move(facts)},
    };
}

inline nlohmann::json accuracy_report_json(const AccuracyReport& report,
                                           const std::string& model_id,
                                           const std::string& dataset_digest) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& record : report.records) {
        records.push_back(nlohmann::json{
            {"qa_id", record.qa_id},
            {"model_answer", record.model_answer},
            {"normalized_model", record.normalized_model},
            {"normalized_gold", record.normalized_gold},
            {"correct", record.correct},
        });
    }
    return nlohmann::json{
        {"model_id", model_id},
        {"dataset_digest", dataset_digest},
        {"accuracy", report.accuracy},
        {"evaluated", report.evaluated},
        {"records", std::move(records)},
    };
}

}  // namespace microeval
