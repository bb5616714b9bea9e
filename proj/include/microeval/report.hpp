#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "microeval/canonical_json.hpp"
#include "microeval/errors.hpp"
#include "microeval/oracle_eval.hpp"
#include "microeval/setting.hpp"
#include "microeval/strings.hpp"

namespace microeval {

// ─── Inputs ────────────────────────────────────────────────────────────

// Everything the diagnosis needs about one evaluated model tag. ASRs come
// from a finished evaluation run; the knowledge numbers are optional since
// memorization and elicitation probes are separate passes.
struct TagMetrics {
    std::string tag;
    double asr_no_oracle = 0.0;
    double asr_elicitation = 0.0;
    double asr_reasoning = 0.0;
    std::string dataset_digest;
    std::optional<double> mean_perplexity;
    std::optional<double> elicitation_accuracy;
};

struct DiagnosisOptions {
    double bottleneck_gap = 0.05;
    double sufficient_asr = 0.90;
    double elicitation_resolve = 0.05;
};

struct TagDiagnosis {
    TagMetrics metrics;
    DiagnosisGaps gaps;
    // Answer quality under oracle-reasoning already clears the bar; the
    // remaining gaps are not worth chasing.
    bool sufficient = false;
    // This tag reaches, without any oracle, the reference tag's ASR under
    // oracle-elicitation: whatever knowledge was missing has been absorbed.
    bool elicitation_resolved = false;
};

struct DiagnosisReport {
    std::vector<TagDiagnosis> tags;
    DiagnosisOptions options;
    std::string dataset_digest;
    std::string reference_tag;
};

// ─── Assembly ──────────────────────────────────────────────────────────

// The first tag is the reference model. All tags must have been evaluated
// on the identical dataset; a digest mismatch means the comparison is
// meaningless, so it is an error rather than a footnote.
inline DiagnosisReport build_diagnosis_report(const std::vector<TagMetrics>& tags,
                                              const DiagnosisOptions& options = {}) {
    if (tags.empty()) throw PreconditionError("no model tags to diagnose");
    for (const auto& tag : tags)
        if (tag.tag.empty()) throw PreconditionError("model tag name is empty");
    for (size_t i = 1; i < tags.size(); ++i)
        if (tags[i].dataset_digest != tags[0].dataset_digest)
            throw DataError("tag '" + tags[i].tag + "' was evaluated on dataset " +
                            tags[i].dataset_digest + " but tag '" + tags[0].tag + "' on " +
                            tags[0].dataset_digest);

    DiagnosisReport report;
    report.options = options;
    report.dataset_digest = tags[0].dataset_digest;
    report.reference_tag = tags[0].tag;
    const double reference_elicitation = tags[0].asr_elicitation;
    for (const auto& metrics : tags) {
        TagDiagnosis diagnosis;
        diagnosis.metrics = metrics;
        diagnosis.gaps = diagnose(metrics.asr_no_oracle, metrics.asr_elicitation,
                                  metrics.asr_reasoning, options.bottleneck_gap);
        diagnosis.sufficient = metrics.asr_reasoning >= options.sufficient_asr;
        diagnosis.elicitation_resolved =
            std::fabs(metrics.asr_no_oracle - reference_elicitation) <=
            options.elicitation_resolve;
        report.tags.push_back(std::move(diagnosis));
    }
    return report;
}

// Reads the ASR section of a finished run plus optional knowledge probe
// artifacts, all produced by this tool.
inline TagMetrics load_tag_metrics(const std::string& tag,
                                   const std::filesystem::path& asr_report_path,
                                   const std::optional<std::filesystem::path>& perplexity_path,
                                   const std::optional<std::filesystem::path>& accuracy_path) {
    TagMetrics metrics;
    metrics.tag = tag;
    nlohmann::json report;
    try {
        report = nlohmann::json::parse(read_file(asr_report_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(asr_report_path.string() + ": malformed report: " + e.what());
    }
    try {
        metrics.dataset_digest = report.at("dataset_digest").get<std::string>();
        const auto& scores = report.at("scores");
        auto macro = [&](PromptSetting setting) {
            const std::string name = to_string(setting);
            for (const auto& score : scores)
                if (score.at("setting").get<std::string>() == name)
                    return score.at("macro_asr").get<double>();
            throw DataError(asr_report_path.string() + ": no score for setting '" + name + "'");
        };
        metrics.asr_no_oracle = macro(PromptSetting::NoOracle);
        metrics.asr_elicitation = macro(PromptSetting::OracleElicitation);
        metrics.asr_reasoning = macro(PromptSetting::OracleReasoning);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(asr_report_path.string() + ": unexpected report shape: " + e.what());
    }

    auto read_metric = [&](const std::filesystem::path& path, const char* field) {
        try {
            nlohmann::json doc = nlohmann::json::parse(read_file(path));
            const std::string digest = doc.at("dataset_digest").get<std::string>();
            if (digest != metrics.dataset_digest)
                throw DataError("tag '" + tag + "': " + path.string() + " was measured on dataset " +
                                digest + " but the evaluation ran on " + metrics.dataset_digest);
            return doc.at(field).get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ": unexpected shape: " + e.what());
        }
    };
    if (perplexity_path) metrics.mean_perplexity = read_metric(*perplexity_path, "mean_perplexity");
    if (accuracy_path) metrics.elicitation_accuracy = read_metric(*accuracy_path, "accuracy");
    return metrics;
}

// ─── Rendering ─────────────────────────────────────────────────────────

namespace detail {

inline std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

inline std::string fixed4(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return buf;
}

}  // namespace detail

inline nlohmann::json diagnosis_report_to_json(const DiagnosisReport& report) {
    nlohmann::json tags = nlohmann::json::array();
    for (const auto& tag : report.tags) {
        nlohmann::json knowledge;
        knowledge["mean_perplexity"] = tag.metrics.mean_perplexity
                                           ? nlohmann::json(*tag.metrics.mean_perplexity)
                                           : nlohmann::json(nullptr);
        knowledge["elicitation_accuracy"] = tag.metrics.elicitation_accuracy
                                                ? nlohmann::json(*tag.metrics.elicitation_accuracy)
                                                : nlohmann::json(nullptr);
        tags.push_back(nlohmann::json{
            {"tag", tag.metrics.tag},
            {"asr",
             {{"no-oracle", tag.metrics.asr_no_oracle},
              {"oracle-elicitation", tag.metrics.asr_elicitation},
              {"oracle-reasoning", tag.metrics.asr_reasoning}}},
            {"gaps",
             {{"elicit", tag.gaps.elicitation_gap},
              {"reason", tag.gaps.reasoning_gap},
              {"compose", tag.gaps.composing_gap}}},
            {"bottlenecks", tag.gaps.bottlenecks},
            {"sufficient", tag.sufficient},
            {"elicitation_resolved", tag.elicitation_resolved},
            {"knowledge", std::move(knowledge)},
        });
    }
    return nlohmann::json{
        {"dataset_digest", report.dataset_digest},
        {"reference_tag", report.reference_tag},
        {"thresholds",
         {{"bottleneck_gap", report.options.bottleneck_gap},
          {"sufficient_asr", report.options.sufficient_asr},
          {"elicitation_resolve", report.options.elicitation_resolve}}},
        {"tags", std::move(tags)},
    };
}

inline std::string render_diagnosis_json(const DiagnosisReport& report) {
    return canonical_dump(diagnosis_report_to_json(report));
}

inline std::string render_diagnosis_markdown(const DiagnosisReport& report) {
    std::string out = "# Bottleneck Diagnosis\n\n";
    out += "Dataset: `" + report.dataset_digest + "`\n";
    out += "Reference tag: " + report.reference_tag + "\n\n";

    out += "## Answer success rate\n\n";
    out += "| tag | no-oracle | oracle-elicitation | oracle-reasoning |\n";
    out += "| --- | --- | --- | --- |\n";
    for (const auto& tag : report.tags) {
        out += "| " + tag.metrics.tag + " | " + detail::fixed4(tag.metrics.asr_no_oracle) +
               " | " + detail::fixed4(tag.metrics.asr_elicitation) + " | " +
               detail::fixed4(tag.metrics.asr_reasoning) + " |\n";
    }

    out += "\n## Capability gaps (threshold " +
           detail::fixed4(report.options.bottleneck_gap) + ")\n\n";
    out += "| tag | elicit | reason | compose | bottlenecks | sufficient | "
           "elicitation resolved |\n";
    out += "| --- | --- | --- | --- | --- | --- | --- |\n";
    for (const auto& tag : report.tags) {
        out += "| " + tag.metrics.tag + " | " + detail::fixed4(tag.gaps.elicitation_gap) + " | " +
               detail::fixed4(tag.gaps.reasoning_gap) + " | " +
               detail::fixed4(tag.gaps.composing_gap) + " | " +
               (tag.gaps.bottlenecks.empty() ? std::string("none")
                                             : join(tag.gaps.bottlenecks, ", ")) +
               " | " + (tag.sufficient ? "yes" : "no") + " | " +
               (tag.elicitation_resolved ? "yes" : "no") + " |\n";
    }

    bool any_knowledge = false;
    for (const auto& tag : report.tags)
        if (tag.metrics.mean_perplexity || tag.metrics.elicitation_accuracy)
            any_knowledge = true;
    if (any_knowledge) {
        out += "\n## Knowledge probes\n\n";
        out += "| tag | mean perplexity | elicitation accuracy |\n";
        out += "| --- | --- | --- |\n";
        for (const auto& tag : report.tags) {
            out += "| " + tag.metrics.tag + " | " +
                   (tag.metrics.mean_perplexity ? detail::fixed4(*tag.metrics.mean_perplexity)
                                                : std::string("-")) +
                   " | " +
                   (tag.metrics.elicitation_accuracy
                        ? detail::fixed4(*tag.metrics.elicitation_accuracy)
                        : std::string("-")) +
                   " |\n";
        }
    }
    return out;
}

inline std::string render_diagnosis_csv(const DiagnosisReport& report) {
    std::string out = "tag,metric,setting,value\n";
    for (const auto& tag : report.tags) {
        out += tag.metrics.tag + ",asr," + to_string(PromptSetting::NoOracle) + "," +
               detail::fixed6(tag.metrics.asr_no_oracle) + "\n";
        out += tag.metrics.tag + ",asr," + to_string(PromptSetting::OracleElicitation) + "," +
               detail::fixed6(tag.metrics.asr_elicitation) + "\n";
        out += tag.metrics.tag + ",asr," + to_string(PromptSetting::OracleReasoning) + "," +
               detail::fixed6(tag.metrics.asr_reasoning) + "\n";
        out += tag.metrics.tag + ",mean_perplexity,," +
               (tag.metrics.mean_perplexity ? detail::fixed6(*tag.metrics.mean_perplexity)
                                            : std::string()) +
               "\n";
        out += tag.metrics.tag + ",elicitation_accuracy,," +
               (tag.metrics.elicitation_accuracy
                    ? detail::fixed6(*tag.metrics.elicitation_accuracy)
                    : std::string()) +
               "\n";
    }
    return out;
}

}  // namespace microeval
