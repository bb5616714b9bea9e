// Full diagnosis loop in one process: a scripted model with a weak
// reasoning stage, the three prompt settings, both knowledge probes and
// the merged markdown report on stdout.

#include <microeval/microeval.hpp>

#include <iostream>
#include <memory>

using namespace microeval;

int main(int argc, char** argv) {
    const std::string manifest = argc > 1 ? argv[1] : "templates/manifest.json";
    const PromptTemplateSet templates = load_template_set(manifest, "ja");

    SimGenConfig gen;
    gen.num_items = 12;
    gen.hops = 3;
    const Dataset dataset = generate_sim_dataset(gen);

    // Knows its facts when asked, rarely combines them correctly.
    SimBackendConfig sim;
    sim.profile = {0.9, 0.2, 0.95};
    auto backend = std::make_shared<SimBackend>(dataset, sim);
    Gateway gateway(backend, GatewayConfig{});

    OracleEvalConfig config;
    config.model_id = "demo-model";
    config.judge_model_id = "demo-judge";
    config.settings = {PromptSetting::NoOracle, PromptSetting::OracleElicitation,
                       PromptSetting::OracleReasoning};
    config.num_seeds = 10;

    const EvalRunResult result = run_oracle_eval(dataset, config, templates, gateway);
    auto macro = [&](PromptSetting setting) {
        for (const auto& score : result.scores)
            if (score.setting == setting) return score.macro_asr;
        return 0.0;
    };

    TagMetrics metrics;
    metrics.tag = config.model_id;
    metrics.asr_no_oracle = macro(PromptSetting::NoOracle);
    metrics.asr_elicitation = macro(PromptSetting::OracleElicitation);
    metrics.asr_reasoning = macro(PromptSetting::OracleReasoning);
    metrics.dataset_digest = dataset_digest(dataset);

    // Knowledge probes against the same backend: per-fact perplexity, then
    // closed-book accuracy on QAs the backend drafts itself. A real run
    // would curate the drafts first.
    const PerplexityReport memorization = measure_memorization(dataset, config.model_id, gateway);
    metrics.mean_perplexity = memorization.mean_perplexity;

    const std::vector<KnowledgeQA> qas =
        synthesize_knowledge_qas(dataset, config.model_id, templates, gateway);
    const AccuracyReport elicitation =
        measure_elicitation(qas, config.model_id, templates, gateway, /*allow_uncurated=*/true);
    metrics.elicitation_accuracy = elicitation.accuracy;

    std::cout << render_diagnosis_markdown(build_diagnosis_report({metrics}));

    const auto& counters = gateway.counters();
    std::cerr << "\nbackend calls: " << counters.backend_calls << "\n";
    return 0;
}
