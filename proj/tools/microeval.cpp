// Command line front end: dataset generation, evaluation runs, knowledge
// probes, report merging and dataset validation.

#include <CLI11.hpp>
#include <microeval/microeval.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace me = microeval;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string backend = "http";
    std::string model_id;
    std::string judge_model_id;
    std::string base_url;
    std::string templates = "templates/manifest.json";
    std::string language = "ja";
    std::string cache_dir;
    int retry_limit = 3;
    int max_in_flight = 4;
    double temperature = 0.7;
    int num_seeds = 10;
    int max_tokens = 1024;
    int judge_max_tokens = 16;
    double threshold = 0.05;
    double p_elicit = 1.0;
    double p_reason = 1.0;
    double p_compose = 1.0;
    double scripted_logprob = std::log(0.5);
};

nlohmann::json load_config(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(me::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw me::UsageError(path + ": malformed config: " + e.what());
    }
    if (!cfg.is_object()) throw me::UsageError(path + ": config must be a JSON object");
    static const std::set<std::string> known = {
        "backend",     "model_id",    "judge_model_id", "base_url",
        "templates",   "language",    "cache_dir",      "retry_limit",
        "max_in_flight", "temperature", "num_seeds",    "max_tokens",
        "judge_max_tokens", "diagnosis_threshold", "p_elicit", "p_reason",
        "p_compose",   "scripted_logprob",
    };
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        if (it.key() == "api_key" || it.key() == "apikey")
            throw me::UsageError(
                "config files must not contain secrets; set MICROEVAL_API_KEY instead");
        if (!known.count(it.key()))
            throw me::UsageError(path + ": unknown config key '" + it.key() + "'");
    }
    return cfg;
}

// Command line wins over config file; config file wins over built-in
// defaults. An option the parsed subcommand does not define is filled from
// the config unconditionally.
void merge_config(const CLI::App* cmd, const nlohmann::json& cfg, CommonOpts& o) {
    auto absent = [&](const char* flag) {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt == nullptr || opt->count() == 0;
    };
    auto str = [&](const char* flag, const char* key, std::string& dst) {
        if (cfg.contains(key) && absent(flag)) dst = cfg.at(key).get<std::string>();
    };
    auto num = [&](const char* flag, const char* key, auto& dst) {
        using T = std::decay_t<decltype(dst)>;
        if (cfg.contains(key) && absent(flag)) dst = cfg.at(key).get<T>();
    };
    try {
        str("--backend", "backend", o.backend);
        str("--model", "model_id", o.model_id);
        str("--judge-model", "judge_model_id", o.judge_model_id);
        str("--base-url", "base_url", o.base_url);
        str("--templates", "templates", o.templates);
        str("--language", "language", o.language);
        str("--cache-dir", "cache_dir", o.cache_dir);
        num("--retry-limit", "retry_limit", o.retry_limit);
        num("--max-in-flight", "max_in_flight", o.max_in_flight);
        num("--temperature", "temperature", o.temperature);
        num("--num-seeds", "num_seeds", o.num_seeds);
        num("--max-tokens", "max_tokens", o.max_tokens);
        num("--judge-max-tokens", "judge_max_tokens", o.judge_max_tokens);
        num("--threshold", "diagnosis_threshold", o.threshold);
        num("--p-elicit", "p_elicit", o.p_elicit);
        num("--p-reason", "p_reason", o.p_reason);
        num("--p-compose", "p_compose", o.p_compose);
        num("--scripted-logprob", "scripted_logprob", o.scripted_logprob);
    } catch (const nlohmann::json::exception& e) {
        throw me::UsageError(std::string("config value has the wrong type: ") + e.what());
    }
    if (const char* url = std::getenv("MICROEVAL_BASE_URL"); url && *url && absent("--base-url"))
        o.base_url = url;
}

struct GatewayBundle {
    std::shared_ptr<me::ModelBackend> backend;
    std::unique_ptr<me::Gateway> gateway;
};

GatewayBundle make_gateway(const CommonOpts& o, const me::Dataset& dataset) {
    std::shared_ptr<me::ModelBackend> backend;
    if (o.backend == "sim") {
        me::SimBackendConfig cfg;
        cfg.profile = {o.p_elicit, o.p_reason, o.p_compose};
        cfg.scripted_logprob = o.scripted_logprob;
        backend = std::make_shared<me::SimBackend>(dataset, cfg);
    } else if (o.backend == "http") {
        me::HttpBackendConfig cfg;
        cfg.base_url = o.base_url;
        if (const char* key = std::getenv("MICROEVAL_API_KEY"); key) cfg.api_key = key;
        if (cfg.base_url.empty())
            throw me::UsageError(
                "no backend URL; pass --base-url, set MICROEVAL_BASE_URL or add base_url "
                "to the config");
        backend = std::make_shared<me::HttpBackend>(cfg);
    } else {
        throw me::UsageError("unknown backend '" + o.backend + "' (expected http or sim)");
    }

    me::GatewayConfig gw;
    gw.cache_dir = o.cache_dir;
    gw.retry_limit = o.retry_limit;
    gw.max_in_flight = static_cast<size_t>(std::max(o.max_in_flight, 1));
    return {backend, std::make_unique<me::Gateway>(backend, gw)};
}

std::string resolve_model_id(const CommonOpts& o) {
    if (!o.model_id.empty()) return o.model_id;
    if (o.backend == "sim") return "sim-model";
    throw me::UsageError("no model id; pass --model or set model_id in the config");
}

std::vector<me::PromptSetting> parse_settings(const std::vector<std::string>& names) {
    std::vector<me::PromptSetting> settings;
    for (const auto& name : names) settings.push_back(me::setting_from_string(name));
    return settings;
}

me::Dataset load_dataset_or_die(const std::string& path) {
    std::vector<std::string> warnings;
    me::Dataset ds = me::load_dataset(path, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return ds;
}

std::pair<std::string, std::string> split_tag_arg(const std::string& arg, const char* flag) {
    const size_t eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
        throw me::UsageError(std::string(flag) + " expects name=path, got '" + arg + "'");
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// ─── Commands ──────────────────────────────────────────────────────────

int cmd_sim_generate(const std::string& out, int num_items, int hops, unsigned rng_seed) {
    me::SimGenConfig cfg;
    cfg.num_items = num_items;
    cfg.hops = hops;
    cfg.rng_seed = rng_seed;
    const me::Dataset ds = me::generate_sim_dataset(cfg);
    me::save_dataset(ds, out);
    std::cout << "wrote " << ds.items.size() << " items to " << out << "\n"
              << "dataset digest: " << me::dataset_digest(ds) << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& dataset_path, const std::string& run_dir,
             const std::vector<std::string>& setting_names, bool force) {
    me::Dataset ds = load_dataset_or_die(dataset_path);
    if (ds.items.empty()) throw me::DataError("dataset has no items: " + dataset_path);

    me::OracleEvalConfig cfg;
    cfg.model_id = resolve_model_id(o);
    cfg.judge_model_id = !o.judge_model_id.empty()
                             ? o.judge_model_id
                             : (o.backend == "sim" ? "sim-judge" : cfg.model_id);
    cfg.settings = parse_settings(setting_names);
    cfg.num_seeds = o.num_seeds;
    cfg.temperature = o.temperature;
    cfg.max_tokens = o.max_tokens;
    cfg.judge_max_tokens = o.judge_max_tokens;
    cfg.diagnosis_threshold = o.threshold;

    const std::filesystem::path dir(run_dir);
    if (std::filesystem::exists(dir / "asr_report.json") && !force)
        throw me::UsageError(run_dir + " already holds a run; pass --force to overwrite");

    const me::PromptTemplateSet templates = me::load_template_set(o.templates, o.language);
    GatewayBundle bundle = make_gateway(o, ds);

    const std::string started = me::utc_timestamp();
    const me::EvalRunResult result = me::run_oracle_eval(ds, cfg, templates, *bundle.gateway);
    const std::string finished = me::utc_timestamp();

    const me::EvalRunPaths paths =
        me::write_eval_run(dir, result, cfg, me::dataset_digest(ds), templates.digest(),
                           bundle.gateway->counters(), started, finished);

    std::cout << "scored " << ds.items.size() - result.skipped.size() << " items ("
              << result.skipped.size() << " skipped), " << cfg.num_seeds
              << " seeds per setting\n";
    for (const auto& score : result.scores)
        std::cout << "  " << me::to_string(score.setting) << ": macro " << fixed4(score.macro_asr)
                  << ", micro " << fixed4(score.micro_asr) << "\n";
    if (result.diagnosis) {
        const auto& d = *result.diagnosis;
        std::cout << "gaps: elicit " << fixed4(d.elicitation_gap) << ", reason "
                  << fixed4(d.reasoning_gap) << ", compose " << fixed4(d.composing_gap) << "\n"
                  << "bottlenecks: "
                  << (d.bottlenecks.empty() ? "none" : me::join(d.bottlenecks, ", ")) << "\n";
    }
    if (result.malformed_judge_count > 0)
        std::cout << "malformed judge outputs: " << result.malformed_judge_count << "\n";
    std::cout << "run artifacts: " << paths.asr_report.parent_path().string() << "\n";
    return 0;
}

int cmd_knowledge_synthesize(const CommonOpts& o, const std::string& dataset_path,
                             std::string out, bool force, int max_tokens) {
    me::Dataset ds = load_dataset_or_die(dataset_path);
    if (out.empty()) out = me::knowledge_path_for(dataset_path).string();
    if (std::filesystem::exists(out) && !force)
        throw me::UsageError(out + " already exists; pass --force to overwrite");

    GatewayBundle bundle = make_gateway(o, ds);
    const std::vector<me::KnowledgeQA> qas = me::synthesize_knowledge_qas(
        ds, resolve_model_id(o), me::load_template_set(o.templates, o.language),
        *bundle.gateway, max_tokens);
    me::save_knowledge_qas(qas, out);

    size_t unparsed = 0;
    for (const auto& qa : qas)
        if (qa.curation_status == me::CurationStatus::Deleted) ++unparsed;
    std::cout << "drafted " << qas.size() << " QAs to " << out << " (" << unparsed
              << " unparseable, kept as deleted)\n"
              << "all drafts are pending; curate before scoring accuracy\n";
    return 0;
}

int cmd_knowledge_perplexity(const CommonOpts& o, const std::string& dataset_path,
                             const std::string& out) {
    me::Dataset ds = load_dataset_or_die(dataset_path);
    GatewayBundle bundle = make_gateway(o, ds);
    const me::PerplexityReport report =
        me::measure_memorization(ds, resolve_model_id(o), *bundle.gateway);
    me::write_file(out, me::canonical_dump(me::perplexity_report_json(
                            report, resolve_model_id(o), me::dataset_digest(ds))));
    std::cout << "mean perplexity over " << report.facts.size() << " facts: "
              << fixed4(report.mean_perplexity) << "\n"
              << "wrote " << out << "\n";
    return 0;
}

int cmd_knowledge_accuracy(const CommonOpts& o, const std::string& dataset_path,
                           std::string qas_path, const std::string& out, bool allow_uncurated) {
    me::Dataset ds = load_dataset_or_die(dataset_path);
    if (qas_path.empty()) qas_path = me::knowledge_path_for(dataset_path).string();
    const std::vector<me::KnowledgeQA> qas = me::load_knowledge_qas(qas_path);
    if (const auto problems = me::check_qas_against(ds, qas); !problems.empty())
        throw me::DataError(qas_path + ": " + me::join(problems, "; "));

    GatewayBundle bundle = make_gateway(o, ds);
    const me::AccuracyReport report =
        me::measure_elicitation(qas, resolve_model_id(o),
                                me::load_template_set(o.templates, o.language), *bundle.gateway,
                                allow_uncurated);
    me::write_file(out, me::canonical_dump(me::accuracy_report_json(
                            report, resolve_model_id(o), me::dataset_digest(ds))));
    std::cout << "elicitation accuracy over " << report.evaluated << " QAs: "
              << fixed4(report.accuracy) << "\n"
              << "wrote " << out << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& tag_args,
               const std::vector<std::string>& perplexity_args,
               const std::vector<std::string>& accuracy_args, const me::DiagnosisOptions& options,
               const std::string& format, const std::string& out) {
    std::vector<std::pair<std::string, std::string>> tags;
    for (const auto& arg : tag_args) {
        auto [name, path] = split_tag_arg(arg, "--tag");
        for (const auto& existing : tags)
            if (existing.first == name)
                throw me::UsageError("tag '" + name + "' given twice");
        tags.emplace_back(name, path);
    }
    auto side_paths = [&](const std::vector<std::string>& args, const char* flag) {
        std::map<std::string, std::string> by_tag;
        for (const auto& arg : args) {
            auto [name, path] = split_tag_arg(arg, flag);
            bool declared = false;
            for (const auto& tag : tags) declared = declared || tag.first == name;
            if (!declared)
                throw me::UsageError(std::string(flag) + " names unknown tag '" + name + "'");
            by_tag[name] = path;
        }
        return by_tag;
    };
    const auto perplexities = side_paths(perplexity_args, "--perplexity");
    const auto accuracies = side_paths(accuracy_args, "--accuracy");

    std::vector<me::TagMetrics> metrics;
    for (const auto& [name, path] : tags) {
        std::optional<std::filesystem::path> ppl, acc;
        if (auto it = perplexities.find(name); it != perplexities.end()) ppl = it->second;
        if (auto it = accuracies.find(name); it != accuracies.end()) acc = it->second;
        metrics.push_back(me::load_tag_metrics(name, path, ppl, acc));
    }

    const me::DiagnosisReport report = me::build_diagnosis_report(metrics, options);
    std::string rendered;
    if (format == "json")
        rendered = me::render_diagnosis_json(report);
    else if (format == "markdown")
        rendered = me::render_diagnosis_markdown(report);
    else
        rendered = me::render_diagnosis_csv(report);

    if (out.empty())
        std::cout << rendered;
    else {
        me::write_file(out, rendered);
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_validate(const std::string& dataset_path, const std::vector<std::string>& setting_names,
                 bool strict) {
    me::Dataset ds = load_dataset_or_die(dataset_path);
    const me::DatasetStats stats = me::dataset_stats(ds);
    std::cout << "items: " << stats.n_items << "\n"
              << "checklists per item: " << fixed4(stats.avg_checklists_per_item) << "\n"
              << "conditions per checklist: " << fixed4(stats.avg_conditions_per_checklist)
              << "\n"
              << "facts per item: " << fixed4(stats.avg_facts_per_item) << "\n"
              << "mandatory fact ratio: " << fixed4(stats.mandatory_fact_ratio) << "\n";

    size_t problems = 0;
    for (const auto& name : setting_names) {
        const me::PromptSetting setting = me::setting_from_string(name);
        std::vector<std::string> invalid;
        for (const auto& item : ds.items) {
            const auto result = me::validate_for_setting(item, setting);
            if (!result.ok())
                invalid.push_back(item.id + " (" + me::join(result.reasons, "; ") + ")");
        }
        problems += invalid.size();
        std::cout << me::to_string(setting) << ": "
                  << (invalid.empty() ? "all items valid"
                                      : std::to_string(invalid.size()) + " invalid") << "\n";
        for (const auto& line : invalid) std::cout << "  " << line << "\n";
    }

    const auto qas_path = me::knowledge_path_for(dataset_path);
    if (std::filesystem::exists(qas_path)) {
        const auto qas = me::load_knowledge_qas(qas_path);
        std::map<me::CurationStatus, size_t> by_status;
        for (const auto& qa : qas) by_status[qa.curation_status] += 1;
        std::cout << "knowledge QAs: " << qas.size();
        for (const auto& [status, count] : by_status)
            std::cout << " " << me::to_string(status) << "=" << count;
        std::cout << "\n";
        const auto qa_problems = me::check_qas_against(ds, qas);
        problems += qa_problems.size();
        for (const auto& line : qa_problems) std::cout << "  " << line << "\n";
    }

    if (strict && problems > 0)
        throw me::DataError(std::to_string(problems) + " validation problems");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-step oracle evaluation harness"};
    app.require_subcommand(1);

    CommonOpts o;
    auto add_common = [&](CLI::App* cmd, bool with_sampling) {
        cmd->add_option("--config", o.config_path, "JSON config file with defaults");
        cmd->add_option("--backend", o.backend, "Backend kind: http or sim");
        cmd->add_option("--model", o.model_id, "Target model id");
        cmd->add_option("--base-url", o.base_url, "Backend base URL (or MICROEVAL_BASE_URL)");
        cmd->add_option("--templates", o.templates, "Prompt template manifest path");
        cmd->add_option("--language", o.language, "Template language tag");
        cmd->add_option("--cache-dir", o.cache_dir, "Response cache directory");
        cmd->add_option("--retry-limit", o.retry_limit, "Retries after the first attempt");
        cmd->add_option("--max-in-flight", o.max_in_flight, "Concurrent backend calls");
        cmd->add_option("--p-elicit", o.p_elicit, "Sim backend: elicit success probability");
        cmd->add_option("--p-reason", o.p_reason, "Sim backend: reason success probability");
        cmd->add_option("--p-compose", o.p_compose, "Sim backend: compose success probability");
        cmd->add_option("--scripted-logprob", o.scripted_logprob,
                        "Sim backend: per-token logprob");
        if (with_sampling) {
            cmd->add_option("--judge-model", o.judge_model_id, "Judge model id");
            cmd->add_option("--temperature", o.temperature, "Sampling temperature");
            cmd->add_option("--num-seeds", o.num_seeds, "Samples per item and setting");
            cmd->add_option("--max-tokens", o.max_tokens, "Generation token budget");
            cmd->add_option("--judge-max-tokens", o.judge_max_tokens, "Judge token budget");
            cmd->add_option("--threshold", o.threshold, "Bottleneck gap threshold");
        }
    };

    // sim-generate
    auto* gen = app.add_subcommand("sim-generate", "Generate a synthetic routing dataset");
    std::string gen_out;
    int gen_items = 20, gen_hops = 4;
    unsigned gen_seed = 1;
    gen->add_option("--out", gen_out, "Dataset JSONL path")->required();
    gen->add_option("--num-items", gen_items, "Number of items");
    gen->add_option("--hops", gen_hops, "Links per route");
    gen->add_option("--rng-seed", gen_seed, "Vocabulary shuffle seed");

    // eval
    auto* eval = app.add_subcommand("eval", "Run the three-setting evaluation");
    std::string eval_dataset, eval_run_dir;
    std::vector<std::string> eval_settings = {"no-oracle", "oracle-elicitation",
                                              "oracle-reasoning"};
    bool eval_force = false;
    eval->add_option("--dataset", eval_dataset, "Dataset JSONL path")->required();
    eval->add_option("--run-dir", eval_run_dir, "Directory for run artifacts")->required();
    eval->add_option("--settings", eval_settings, "Prompt settings to run")->delimiter(',');
    eval->add_flag("--force", eval_force, "Overwrite an existing run directory");
    add_common(eval, true);

    // knowledge
    auto* knowledge = app.add_subcommand("knowledge", "Memorization and elicitation probes");
    knowledge->require_subcommand(1);

    auto* synth = knowledge->add_subcommand("synthesize", "Draft closed-book QAs from facts");
    std::string synth_dataset, synth_out;
    bool synth_force = false;
    int synth_max_tokens = 512;
    synth->add_option("--dataset", synth_dataset, "Dataset JSONL path")->required();
    synth->add_option("--out", synth_out, "QA JSONL path (default: sibling of dataset)");
    synth->add_option("--max-tokens", synth_max_tokens, "Synthesis token budget");
    synth->add_flag("--force", synth_force, "Overwrite an existing QA file");
    add_common(synth, false);

    auto* ppl = knowledge->add_subcommand("perplexity", "Score per-fact perplexity");
    std::string ppl_dataset, ppl_out = "perplexity.json";
    ppl->add_option("--dataset", ppl_dataset, "Dataset JSONL path")->required();
    ppl->add_option("--out", ppl_out, "Report path");
    add_common(ppl, false);

    auto* acc = knowledge->add_subcommand("accuracy", "Score closed-book QA accuracy");
    std::string acc_dataset, acc_qas, acc_out = "accuracy.json";
    bool acc_uncurated = false;
    acc->add_option("--dataset", acc_dataset, "Dataset JSONL path")->required();
    acc->add_option("--qas", acc_qas, "QA JSONL path (default: sibling of dataset)");
    acc->add_option("--out", acc_out, "Report path");
    acc->add_flag("--allow-uncurated", acc_uncurated, "Score pending entries too");
    add_common(acc, false);

    // report
    auto* rep = app.add_subcommand("report", "Merge runs into a diagnosis report");
    std::vector<std::string> rep_tags, rep_ppl, rep_acc;
    me::DiagnosisOptions rep_options;
    std::string rep_format = "json", rep_out;
    rep->add_option("--tag", rep_tags, "name=asr_report.json (first tag is the reference)")
        ->required();
    rep->add_option("--perplexity", rep_ppl, "name=perplexity.json");
    rep->add_option("--accuracy", rep_acc, "name=accuracy.json");
    rep->add_option("--gap-threshold", rep_options.bottleneck_gap, "Bottleneck gap threshold");
    rep->add_option("--sufficient-asr", rep_options.sufficient_asr,
                    "Oracle-reasoning ASR that counts as sufficient");
    rep->add_option("--resolve-tolerance", rep_options.elicitation_resolve,
                    "Tolerance for the elicitation-resolved check");
    rep->add_option("--format", rep_format, "Output format")
        ->check(CLI::IsMember({"json", "markdown", "csv"}));
    rep->add_option("--out", rep_out, "Output path (default: stdout)");

    // validate
    auto* val = app.add_subcommand("validate", "Check a dataset and its QA sibling");
    std::string val_dataset;
    std::vector<std::string> val_settings = {"no-oracle", "oracle-elicitation",
                                             "oracle-reasoning"};
    bool val_strict = false;
    val->add_option("--dataset", val_dataset, "Dataset JSONL path")->required();
    val->add_option("--settings", val_settings, "Settings to check")->delimiter(',');
    val->add_flag("--strict", val_strict, "Exit nonzero on validation problems");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        CLI::App* parsed = app.get_subcommands().front();
        if (parsed == knowledge) parsed = knowledge->get_subcommands().front();
        merge_config(parsed, load_config(o.config_path), o);

        if (gen->parsed()) return cmd_sim_generate(gen_out, gen_items, gen_hops, gen_seed);
        if (eval->parsed())
            return cmd_eval(o, eval_dataset, eval_run_dir, eval_settings, eval_force);
        if (synth->parsed())
            return cmd_knowledge_synthesize(o, synth_dataset, synth_out, synth_force,
                                            synth_max_tokens);
        if (ppl->parsed()) return cmd_knowledge_perplexity(o, ppl_dataset, ppl_out);
        if (acc->parsed())
            return cmd_knowledge_accuracy(o, acc_dataset, acc_qas, acc_out, acc_uncurated);
        if (rep->parsed())
            return cmd_report(rep_tags, rep_ppl, rep_acc, rep_options, rep_format, rep_out);
        if (val->parsed()) return cmd_validate(val_dataset, val_settings, val_strict);
        throw me::UsageError("no command given");
    } catch (const me::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const me::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const me::BackendError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const me::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
