#include <catch_amalgamated.hpp>

#include <microeval/report.hpp>
#include <microeval/runs.hpp>

#include "test_support.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

using namespace microeval;
using Catch::Matchers::ContainsSubstring;

namespace {

// Exactly representable ASRs so the rendered decimals are predictable.
TagMetrics tag_base() {
    TagMetrics m;
    m.tag = "base";
    m.asr_no_oracle = 0.25;
    m.asr_elicitation = 0.5;
    m.asr_reasoning = 0.9375;
    m.dataset_digest = "d1";
    m.mean_perplexity = 2.5;
    return m;
}

TagMetrics tag_tuned() {
    TagMetrics m;
    m.tag = "tuned";
    m.asr_no_oracle = 0.5;
    m.asr_elicitation = 0.5;
    m.asr_reasoning = 1.0;
    m.dataset_digest = "d1";
    m.elicitation_accuracy = 0.75;
    return m;
}

EvalRunResult small_result() {
    EvalRunResult result;
    AnswerRecord good;
    good.item_id = "a";
    good.setting = PromptSetting::NoOracle;
    good.seed = 1;
    good.answer = "alpha";
    good.verdicts.push_back({"cl1", "c1", true, false, false});
    good.correct = true;
    result.records.push_back(good);

    AnswerRecord failed;
    failed.item_id = "a";
    failed.setting = PromptSetting::NoOracle;
    failed.seed = 2;
    failed.generation_failed = true;
    failed.verdicts.push_back({"cl1", "c1", false, true, false});
    result.records.push_back(failed);

    result.scores.push_back({PromptSetting::NoOracle, 0.5, 0.5, 2, 1});
    result.skipped.push_back({"b", "oracle-elicitation: item has no oracle facts"});
    result.malformed_judge_count = 1;
    return result;
}

OracleEvalConfig small_config() {
    OracleEvalConfig config;
    config.model_id = "target";
    config.judge_model_id = "judge";
    config.settings = {PromptSetting::NoOracle};
    config.num_seeds = 2;
    return config;
}

}  // namespace

// ─── Diagnosis assembly ────────────────────────────────────────────────

TEST_CASE("diagnosis report uses the first tag as reference") {
    const DiagnosisReport report = build_diagnosis_report({tag_base(), tag_tuned()});
    CHECK(report.reference_tag == "base");
    CHECK(report.dataset_digest == "d1");
    REQUIRE(report.tags.size() == 2);

    const TagDiagnosis& base = report.tags[0];
    CHECK(base.gaps.elicitation_gap == 0.25);
    CHECK(base.gaps.reasoning_gap == 0.4375);
    CHECK(base.gaps.composing_gap == 0.0625);
    CHECK(base.gaps.bottlenecks == std::vector<std::string>{"elicit", "reason", "compose"});
    CHECK(base.sufficient);            // 0.9375 >= 0.90
    CHECK_FALSE(base.elicitation_resolved);  // |0.25 - 0.5| > 0.05

    const TagDiagnosis& tuned = report.tags[1];
    CHECK(tuned.gaps.bottlenecks == std::vector<std::string>{"reason"});
    CHECK(tuned.sufficient);
    // Matches the reference tag's oracle-elicitation ASR without any oracle.
    CHECK(tuned.elicitation_resolved);
}

TEST_CASE("diagnosis thresholds are configurable") {
    DiagnosisOptions options;
    options.bottleneck_gap = 0.25;
    options.sufficient_asr = 0.95;
    options.elicitation_resolve = 0.25;
    const DiagnosisReport report = build_diagnosis_report({tag_base()}, options);

    const TagDiagnosis& base = report.tags[0];
    // elicit gap 0.25 is not strictly above 0.25; reason 0.4375 is.
    CHECK(base.gaps.bottlenecks == std::vector<std::string>{"reason"});
    CHECK_FALSE(base.sufficient);  // 0.9375 < 0.95
    CHECK(base.elicitation_resolved);  // |0.25 - 0.5| <= 0.25
}

TEST_CASE("diagnosis rejects unusable tag lists") {
    CHECK_THROWS_AS(build_diagnosis_report({}), PreconditionError);

    TagMetrics anonymous = tag_base();
    anonymous.tag = "";
    CHECK_THROWS_AS(build_diagnosis_report({anonymous}), PreconditionError);

    TagMetrics other_dataset = tag_tuned();
    other_dataset.dataset_digest = "d2";
    try {
        build_diagnosis_report({tag_base(), other_dataset});
        FAIL("digest mismatch must throw");
    } catch (const DataError& e) {
        const std::string what = e.what();
        CHECK_THAT(what, ContainsSubstring("tag 'tuned'"));
        CHECK_THAT(what, ContainsSubstring("d2"));
        CHECK_THAT(what, ContainsSubstring("tag 'base'"));
        CHECK_THAT(what, ContainsSubstring("d1"));
    }
}

// ─── Rendering ─────────────────────────────────────────────────────────

TEST_CASE("diagnosis json carries thresholds and per-tag knowledge") {
    const DiagnosisReport report = build_diagnosis_report({tag_base(), tag_tuned()});
    const nlohmann::json j = diagnosis_report_to_json(report);

    CHECK(j.at("dataset_digest") == "d1");
    CHECK(j.at("reference_tag") == "base");
    CHECK(j.at("thresholds").at("bottleneck_gap") == 0.05);
    CHECK(j.at("thresholds").at("sufficient_asr") == 0.90);

    const nlohmann::json& base = j.at("tags").at(0);
    CHECK(base.at("tag") == "base");
    CHECK(base.at("asr").at("no-oracle") == 0.25);
    CHECK(base.at("asr").at("oracle-elicitation") == 0.5);
    CHECK(base.at("asr").at("oracle-reasoning") == 0.9375);
    CHECK(base.at("gaps").at("elicit") == 0.25);
    CHECK(base.at("sufficient") == true);
    CHECK(base.at("elicitation_resolved") == false);
    CHECK(base.at("knowledge").at("mean_perplexity") == 2.5);
    CHECK(base.at("knowledge").at("elicitation_accuracy").is_null());

    const nlohmann::json& tuned = j.at("tags").at(1);
    CHECK(tuned.at("knowledge").at("mean_perplexity").is_null());
    CHECK(tuned.at("knowledge").at("elicitation_accuracy") == 0.75);
    CHECK(tuned.at("bottlenecks") == nlohmann::json::array({"reason"}));
}

TEST_CASE("diagnosis json rendering is byte stable") {
    const DiagnosisReport report = build_diagnosis_report({tag_base(), tag_tuned()});
    const std::string once = render_diagnosis_json(report);
    CHECK(once == render_diagnosis_json(report));
    CHECK(once.back() == '\n');
    CHECK_THAT(once, ContainsSubstring("\"bottleneck_gap\": 0.050000"));
}

TEST_CASE("diagnosis markdown lays out the three tables") {
    const DiagnosisReport report = build_diagnosis_report({tag_base(), tag_tuned()});
    const std::string expected =
        "# Bottleneck Diagnosis\n"
        "\n"
        "Dataset: `d1`\n"
        "Reference tag: base\n"
        "\n"
        "## Answer success rate\n"
        "\n"
        "| tag | no-oracle | oracle-elicitation | oracle-reasoning |\n"
        "| --- | --- | --- | --- |\n"
        "| base | 0.2500 | 0.5000 | 0.9375 |\n"
        "| tuned | 0.5000 | 0.5000 | 1.0000 |\n"
        "\n"
        "## Capability gaps (threshold 0.0500)\n"
        "\n"
        "| tag | elicit | reason | compose | bottlenecks | sufficient | elicitation resolved |\n"
        "| --- | --- | --- | --- | --- | --- | --- |\n"
        "| base | 0.2500 | 0.4375 | 0.0625 | elicit, reason, compose | yes | no |\n"
        "| tuned | 0.0000 | 0.5000 | 0.0000 | reason | yes | yes |\n"
        "\n"
        "## Knowledge probes\n"
        "\n"
        "| tag | mean perplexity | elicitation accuracy |\n"
        "| --- | --- | --- |\n"
        "| base | 2.5000 | - |\n"
        "| tuned | - | 0.7500 |\n";
    CHECK(render_diagnosis_markdown(report) == expected);
}

TEST_CASE("markdown omits the knowledge table when no probes ran") {
    TagMetrics solo = tag_base();
    solo.tag = "solo";
    solo.asr_no_oracle = 0.75;
    solo.asr_elicitation = 1.0;
    solo.asr_reasoning = 1.0;
    solo.dataset_digest = "d2";
    solo.mean_perplexity.reset();

    DiagnosisOptions options;
    options.bottleneck_gap = 0.25;
    const std::string expected =
        "# Bottleneck Diagnosis\n"
        "\n"
        "Dataset: `d2`\n"
        "Reference tag: solo\n"
        "\n"
        "## Answer success rate\n"
        "\n"
        "| tag | no-oracle | oracle-elicitation | oracle-reasoning |\n"
        "| --- | --- | --- | --- |\n"
        "| solo | 0.7500 | 1.0000 | 1.0000 |\n"
        "\n"
        "## Capability gaps (threshold 0.2500)\n"
        "\n"
        "| tag | elicit | reason | compose | bottlenecks | sufficient | elicitation resolved |\n"
        "| --- | --- | --- | --- | --- | --- | --- |\n"
        "| solo | 0.2500 | 0.0000 | 0.0000 | none | yes | no |\n";
    CHECK(render_diagnosis_markdown(build_diagnosis_report({solo}, options)) == expected);
}

TEST_CASE("diagnosis csv leaves missing knowledge values empty") {
    const DiagnosisReport report = build_diagnosis_report({tag_base(), tag_tuned()});
    const std::string expected =
        "tag,metric,setting,value\n"
        "base,asr,no-oracle,0.250000\n"
        "base,asr,oracle-elicitation,0.500000\n"
        "base,asr,oracle-reasoning,0.937500\n"
        "base,mean_perplexity,,2.500000\n"
        "base,elicitation_accuracy,,\n"
        "tuned,asr,no-oracle,0.500000\n"
        "tuned,asr,oracle-elicitation,0.500000\n"
        "tuned,asr,oracle-reasoning,1.000000\n"
        "tuned,mean_perplexity,,\n"
        "tuned,elicitation_accuracy,,0.750000\n";
    CHECK(render_diagnosis_csv(report) == expected);
}

// ─── Loading tag metrics from run artifacts ────────────────────────────

TEST_CASE("tag metrics load from a written evaluation report") {
    TempDir dir;
    const nlohmann::json report{
        {"dataset_digest", "feedc0de"},
        {"scores",
         nlohmann::json::array({
             {{"setting", "no-oracle"}, {"macro_asr", 0.125}},
             {{"setting", "oracle-elicitation"}, {"macro_asr", 0.5}},
             {{"setting", "oracle-reasoning"}, {"macro_asr", 0.875}},
         })},
    };
    write_file(dir.file("asr_report.json"), report.dump());

    SECTION("asr only") {
        const TagMetrics m = load_tag_metrics("m", dir.file("asr_report.json"), {}, {});
        CHECK(m.tag == "m");
        CHECK(m.dataset_digest == "feedc0de");
        CHECK(m.asr_no_oracle == 0.125);
        CHECK(m.asr_elicitation == 0.5);
        CHECK(m.asr_reasoning == 0.875);
        CHECK_FALSE(m.mean_perplexity.has_value());
        CHECK_FALSE(m.elicitation_accuracy.has_value());
    }

    SECTION("with knowledge probe artifacts") {
        write_file(dir.file("ppl.json"),
                   nlohmann::json{{"dataset_digest", "feedc0de"}, {"mean_perplexity", 3.25}}
                       .dump());
        write_file(dir.file("acc.json"),
                   nlohmann::json{{"dataset_digest", "feedc0de"}, {"accuracy", 0.625}}.dump());
        const TagMetrics m = load_tag_metrics("m", dir.file("asr_report.json"),
                                              dir.file("ppl.json"), dir.file("acc.json"));
        CHECK(m.mean_perplexity == 3.25);
        CHECK(m.elicitation_accuracy == 0.625);
    }

    SECTION("side file from another dataset is rejected") {
        write_file(dir.file("acc.json"),
                   nlohmann::json{{"dataset_digest", "abad1dea"}, {"accuracy", 0.625}}.dump());
        try {
            load_tag_metrics("m", dir.file("asr_report.json"), {}, dir.file("acc.json"));
            FAIL("digest mismatch must throw");
        } catch (const DataError& e) {
            const std::string what = e.what();
            CHECK_THAT(what, ContainsSubstring("tag 'm'"));
            CHECK_THAT(what, ContainsSubstring("was measured on dataset abad1dea"));
            CHECK_THAT(what, ContainsSubstring("feedc0de"));
        }
    }
}

TEST_CASE("tag metrics loader rejects unusable reports") {
    TempDir dir;

    SECTION("missing setting") {
        const nlohmann::json partial{
            {"dataset_digest", "d"},
            {"scores",
             nlohmann::json::array({
                 {{"setting", "no-oracle"}, {"macro_asr", 0.125}},
                 {{"setting", "oracle-elicitation"}, {"macro_asr", 0.5}},
             })},
        };
        write_file(dir.file("asr_report.json"), partial.dump());
        CHECK_THROWS_WITH(load_tag_metrics("m", dir.file("asr_report.json"), {}, {}),
                          ContainsSubstring("no score for setting 'oracle-reasoning'"));
    }

    SECTION("not json at all") {
        write_file(dir.file("asr_report.json"), "not json{{{");
        CHECK_THROWS_WITH(load_tag_metrics("m", dir.file("asr_report.json"), {}, {}),
                          ContainsSubstring("malformed report"));
    }

    SECTION("valid json, wrong shape") {
        write_file(dir.file("asr_report.json"), "{\"scores\": []}");
        CHECK_THROWS_WITH(load_tag_metrics("m", dir.file("asr_report.json"), {}, {}),
                          ContainsSubstring("unexpected report shape"));
    }

    SECTION("side file with missing field") {
        const nlohmann::json report{
            {"dataset_digest", "d"},
            {"scores",
             nlohmann::json::array({
                 {{"setting", "no-oracle"}, {"macro_asr", 0.0}},
                 {{"setting", "oracle-elicitation"}, {"macro_asr", 0.0}},
                 {{"setting", "oracle-reasoning"}, {"macro_asr", 0.0}},
             })},
        };
        write_file(dir.file("asr_report.json"), report.dump());
        write_file(dir.file("ppl.json"), nlohmann::json{{"dataset_digest", "d"}}.dump());
        CHECK_THROWS_WITH(
            load_tag_metrics("m", dir.file("asr_report.json"), dir.file("ppl.json"), {}),
            ContainsSubstring("unexpected shape"));
    }
}

// ─── Run artifact serialization ────────────────────────────────────────

TEST_CASE("asr report json is reproducible and timestamp free") {
    const EvalRunResult result = small_result();
    const OracleEvalConfig config = small_config();
    const nlohmann::json j = asr_report_json(result, "dd", "td", config);

    CHECK(j.at("dataset_digest") == "dd");
    CHECK(j.at("template_digest") == "td");
    CHECK(j.at("config_digest") == eval_config_digest(config));
    CHECK(j.at("malformed_judge_count") == 1);
    CHECK_FALSE(j.contains("diagnosis"));
    CHECK_FALSE(j.contains("started_at"));
    CHECK_FALSE(j.contains("finished_at"));

    const nlohmann::json& score = j.at("scores").at(0);
    CHECK(score.at("setting") == "no-oracle");
    CHECK(score.at("macro_asr") == 0.5);
    CHECK(score.at("samples") == 2);
    CHECK(score.at("correct_samples") == 1);

    const nlohmann::json& skip = j.at("skipped_items").at(0);
    CHECK(skip.at("item_id") == "b");
    CHECK(skip.at("reason") == "oracle-elicitation: item has no oracle facts");

    REQUIRE(j.at("notes").is_array());
    CHECK(j.at("notes").size() == 1);

    CHECK(canonical_dump(j) == canonical_dump(asr_report_json(result, "dd", "td", config)));
}

TEST_CASE("asr report embeds the diagnosis when present") {
    EvalRunResult result = small_result();
    DiagnosisGaps gaps = diagnose(0.25, 0.5, 1.0, 0.05);
    result.diagnosis = gaps;
    const nlohmann::json j = asr_report_json(result, "dd", "td", small_config());
    REQUIRE(j.contains("diagnosis"));
    CHECK(j.at("diagnosis").at("no_oracle_asr") == 0.25);
    CHECK(j.at("diagnosis").at("elicitation_gap") == 0.25);
    CHECK(j.at("diagnosis").at("composing_gap") == 0.0);
    CHECK(j.at("diagnosis").at("bottlenecks") ==
          nlohmann::json::array({"elicit", "reason"}));
}

TEST_CASE("answers jsonl round trips every record") {
    const std::string jsonl = answers_jsonl(small_result());
    std::vector<std::string> lines;
    size_t start = 0;
    for (size_t pos = jsonl.find('\n'); pos != std::string::npos;
         start = pos + 1, pos = jsonl.find('\n', start))
        lines.push_back(jsonl.substr(start, pos - start));
    REQUIRE(lines.size() == 2);

    const nlohmann::json first = nlohmann::json::parse(lines[0]);
    CHECK(first.at("item_id") == "a");
    CHECK(first.at("setting") == "no-oracle");
    CHECK(first.at("seed") == 1);
    CHECK(first.at("answer") == "alpha");
    CHECK(first.at("correct") == true);
    CHECK(first.at("verdicts").at(0).at("yes") == true);

    const nlohmann::json second = nlohmann::json::parse(lines[1]);
    CHECK(second.at("generation_failed") == true);
    CHECK(second.at("verdicts").at(0).at("malformed") == true);
}

TEST_CASE("eval config digest tracks the configuration") {
    const OracleEvalConfig config = small_config();
    CHECK(eval_config_digest(config) == eval_config_digest(small_config()));

    OracleEvalConfig warmer = small_config();
    warmer.temperature = 0.9;
    CHECK(eval_config_digest(warmer) != eval_config_digest(config));
}

TEST_CASE("write eval run produces the full artifact set") {
    TempDir dir;
    const EvalRunResult result = small_result();
    const OracleEvalConfig config = small_config();
    GatewayCounters counters;
    counters.cache_hits = 3;
    counters.cache_misses = 5;
    counters.backend_calls = 6;
    counters.retries = 1;

    const EvalRunPaths paths = write_eval_run(dir.file("run"), result, config, "dd", "td",
                                              counters, "2026-01-02T03:04:05Z",
                                              "2026-01-02T03:05:06Z");
    CHECK(std::filesystem::exists(paths.manifest));
    CHECK(std::filesystem::exists(paths.asr_report));
    CHECK(std::filesystem::exists(paths.answers));
    CHECK(std::filesystem::exists(paths.csv));

    CHECK(read_file(paths.asr_report) ==
          canonical_dump(asr_report_json(result, "dd", "td", config)));
    CHECK(read_file(paths.answers) == answers_jsonl(result));
    CHECK(read_file(paths.csv) == asr_csv(result));

    const nlohmann::json manifest = nlohmann::json::parse(read_file(paths.manifest));
    CHECK(manifest.at("started_at") == "2026-01-02T03:04:05Z");
    CHECK(manifest.at("finished_at") == "2026-01-02T03:05:06Z");
    CHECK(manifest.at("config").at("model_id") == "target");
    CHECK(manifest.at("config_digest") == eval_config_digest(config));
    CHECK(manifest.at("dataset_digest") == "dd");
    CHECK(manifest.at("gateway").at("cache_hits") == 3);
    CHECK(manifest.at("gateway").at("backend_calls") == 6);
    CHECK(manifest.at("gateway").at("retries") == 1);
}

TEST_CASE("utc timestamps use the compact iso form") {
    const std::string stamp = utc_timestamp();
    REQUIRE(stamp.size() == 20);
    CHECK(stamp[4] == '-');
    CHECK(stamp[7] == '-');
    CHECK(stamp[10] == 'T');
    CHECK(stamp[13] == ':');
    CHECK(stamp[16] == ':');
    CHECK(stamp[19] == 'Z');
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u, 11u, 12u, 14u, 15u, 17u, 18u})
        CHECK(std::isdigit(static_cast<unsigned char>(stamp[i])));
}

TEST_CASE("knowledge probe reports serialize digests alongside values") {
    PerplexityReport ppl;
    ppl.mean_perplexity = 2.25;
    ppl.facts.push_back({"a.f1", 2.0, 7});
    ppl.facts.push_back({"a.f2", 2.5, 9});
    const nlohmann::json pj = perplexity_report_json(ppl, "m", "dd");
    CHECK(pj.at("model_id") == "m");
    CHECK(pj.at("dataset_digest") == "dd");
    CHECK(pj.at("mean_perplexity") == 2.25);
    CHECK(pj.at("facts").at(1).at("fact_id") == "a.f2");
    CHECK(pj.at("facts").at(1).at("scored_tokens") == 9);

    AccuracyReport acc;
    acc.accuracy = 0.5;
    acc.evaluated = 2;
    acc.records.push_back({"a.f1.qa", "Alpha.", "Alpha", "Alpha", true});
    acc.records.push_back({"a.f2.qa", "Beta", "Beta", "Gamma", false});
    const nlohmann::json aj = accuracy_report_json(acc, "m", "dd");
    CHECK(aj.at("accuracy") == 0.5);
    CHECK(aj.at("evaluated") == 2);
    CHECK(aj.at("records").at(0).at("normalized_model") == "Alpha");
    CHECK(aj.at("records").at(1).at("correct") == false);

    // These side files feed straight back into the metrics loader.
    TempDir dir;
    write_file(dir.file("ppl.json"), canonical_dump(pj));
    const nlohmann::json shape{
        {"dataset_digest", "dd"},
        {"scores",
         nlohmann::json::array({
             {{"setting", "no-oracle"}, {"macro_asr", 0.0}},
             {{"setting", "oracle-elicitation"}, {"macro_asr", 0.0}},
             {{"setting", "oracle-reasoning"}, {"macro_asr", 0.0}},
         })},
    };
    write_file(dir.file("asr_report.json"), shape.dump());
    const TagMetrics m = load_tag_metrics("m", dir.file("asr_report.json"), dir.file("ppl.json"), {});
    CHECK(m.mean_perplexity == 2.25);
}
