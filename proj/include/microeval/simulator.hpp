#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "microeval/data.hpp"
#include "microeval/digest.hpp"
#include "microeval/errors.hpp"
#include "microeval/gateway.hpp"

namespace microeval {

// ─── Capability profile ────────────────────────────────────────────────

// Per-subtask success probabilities of the pretend model. A stage that the
// prompt setting already solves for the model is skipped, so the three
// settings isolate elicit, reason and compose exactly.
struct SimProfile {
    double p_elicit = 1.0;
    double p_reason = 1.0;
    double p_compose = 1.0;
};

inline void validate_profile(const SimProfile& profile) {
    for (double p : {profile.p_elicit, profile.p_reason, profile.p_compose})
        if (!(p >= 0.0 && p <= 1.0))
            throw PreconditionError("profile probabilities must be within [0, 1]");
}

// Expected answer success rates per setting, in the order no-oracle,
// oracle-elicitation, oracle-reasoning.
inline std::array<double, 3> sim_expected_asrs(const SimProfile& profile) {
    return {profile.p_elicit * profile.p_reason * profile.p_compose,
            profile.p_reason * profile.p_compose, profile.p_compose};
}

// Deterministic coin in [0, 1) for one (scope, seed, knob) triple. The coin
// does not depend on the prompt setting, so per-sample outcomes are nested
// across settings and the ordering no-oracle <= elicitation <= reasoning
// holds exactly, not just in expectation.
inline double sim_coin(const std::string& scope_id, std::uint64_t seed, std::string_view knob) {
    std::string blob = scope_id;
    blob += '\0';
    blob += std::to_string(seed);
    blob += '\0';
    blob += knob;
    const std::string hex = sha256_hex(blob);
    const std::uint64_t value = std::stoull(hex.substr(0, 16), nullptr, 16);
    return static_cast<double>(value) * 0x1p-64;
}

// ─── Synthetic dataset ─────────────────────────────────────────────────

struct SimGenConfig {
    int num_items = 20;
    // Chain length: each item links hops + 1 entities.
    int hops = 4;
    unsigned rng_seed = 1;
};

namespace detail {

// No vocabulary word is a substring of another, and entity tokens append a
// fixed-width numeric suffix, so no token can occur inside a different one.
// Substring checks on generated text are therefore exact token checks.
constexpr std::string_view kSimVocabulary[] = {
    "NODE",   "QUEUE",  "RELAY",  "AGENT",  "PROBE",  "MONITOR", "DISPATCH",
    "BUFFER", "CHANNEL", "BRIDGE", "WORKER", "SOCKET", "BEACON",  "LEDGER",
    "SENSOR", "PARSER", "FILTER", "DAEMON", "ROUTER", "GATEWAY",
};

inline std::string sim_entity(const std::vector<std::string>& vocab, size_t ordinal) {
    char suffix[8];
    std::snprintf(suffix, sizeof suffix, "_%03zu", ordinal / vocab.size());
    return vocab[ordinal % vocab.size()] + suffix;
}

}  // namespace detail

inline Dataset generate_sim_dataset(const SimGenConfig& config) {
    if (config.num_items < 1) throw PreconditionError("item count must be >= 1");
    if (config.hops < 1) throw PreconditionError("hop count must be >= 1");

    std::vector<std::string> vocab;
    for (auto word : detail::kSimVocabulary) vocab.emplace_back(word);
    std::mt19937 rng(config.rng_seed);
    std::shuffle(vocab.begin(), vocab.end(), rng);

    Dataset dataset;
    size_t next_entity = 0;
    for (int i = 0; i < config.num_items; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "sim-%03d", i);

        std::vector<std::string> chain;
        for (int k = 0; k <= config.hops; ++k)
            chain.push_back(detail::sim_entity(vocab, next_entity++));

        EvalItem item;
        item.id = id;
        item.question = "Starting at " + chain.front() +
                        ", which component is the final receiver of route " + item.id +
                        "? <!--sim:" + item.id + "-->";

        for (int j = 1; j <= config.hops; ++j) {
            OracleFact fact;
            fact.id = item.id + ".f" + std::to_string(j);
            fact.text = "Route " + item.id + " link " + std::to_string(j) +
                        ": a signal leaving " + chain[j - 1] + " is delivered to " + chain[j] +
                        ".";
            fact.mandatory = true;
            item.oracle_facts.push_back(std::move(fact));
        }

        OracleConclusion conclusion;
        conclusion.text = "A signal injected at " + chain.front() + " on route " + item.id +
                          " is finally received by " + chain.back() + ".";
        conclusion.is_guidance = false;
        item.oracle_conclusions.push_back(std::move(conclusion));
        if (i % 3 == 2) {
            OracleConclusion guidance;
            guidance.text = "Name both the starting component and the final receiver explicitly.";
            guidance.is_guidance = true;
            item.oracle_conclusions.push_back(std::move(guidance));
        }

        Checklist checklist;
        checklist.id = "cl1";
        checklist.conditions.push_back(
            {"c1", "The answer contains the string \"" + chain.front() + "\"."});
        checklist.conditions.push_back(
            {"c2", "The answer contains the string \"" + chain.back() + "\"."});
        item.checklists.push_back(std::move(checklist));

        dataset.items.push_back(std::move(item));
    }

    dataset.metadata = {{"generator", "sim"},
                        {"num_items", std::to_string(config.num_items)},
                        {"hops", std::to_string(config.hops)},
                        {"rng_seed", std::to_string(config.rng_seed)}};
    return dataset;
}

// ─── Scripted backend ──────────────────────────────────────────────────

struct SimBackendConfig {
    SimProfile profile;
    // Uniform per-token logprob reported by score_tokens; the resulting
    // paragraph perplexity is exactly exp(-scripted_logprob).
    double scripted_logprob = std::log(0.5);
};

// Serves a whole evaluation honestly from the dataset alone: answers route
// questions with coin-flip success per remaining subtask, judges substring
// conditions exactly, synthesizes closed-book QAs, and answers them with the
// elicit knob. Prompts it cannot attribute to the dataset are rejected.
class SimBackend final : public ModelBackend {
  public:
    SimBackend(Dataset dataset, SimBackendConfig config)
        : dataset_(std::move(dataset)), config_(config) {
        validate_profile(config_.profile);
        for (size_t i = 0; i < dataset_.items.size(); ++i) {
            const EvalItem& item = dataset_.items[i];
            items_by_id_[item.id] = i;
            for (const auto& fact : item.oracle_facts) facts_by_id_[fact.id] = &fact;
        }
    }

    CompletionResult complete(const CompletionRequest& request) override {
        const std::string& prompt = request.prompt;
        if (is_judge_prompt(prompt)) return judge(prompt);
        if (auto item_id = marker_value(prompt, "<!--sim:"))
            return answer_route_question(*item_id, prompt, request.seed);
        if (auto fact_id = marker_value(prompt, "<!--simqa:"))
            return answer_knowledge_question(*fact_id);
        if (prompt.find("### Document") != std::string::npos)
            if (auto* fact = find_fact_in(prompt)) return synthesize(*fact);
        throw BackendError(BackendError::Kind::Protocol,
                           "scripted backend cannot interpret this prompt");
    }

    ScoreResult score_tokens(const std::string&, const std::string& text) override {
        ScoreResult result;
        size_t pos = 0;
        while (pos < text.size()) {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                ++pos;
            size_t end = pos;
            while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end])))
                ++end;
            if (end > pos) {
                TokenScore score;
                score.token = text.substr(pos, end - pos);
                if (!result.tokens.empty()) score.logprob = config_.scripted_logprob;
                result.tokens.push_back(std::move(score));
            }
            pos = end;
        }
        return result;
    }

  private:
    static bool is_judge_prompt(const std::string& prompt) {
        return (prompt.find("## 評価対象") != std::string::npos &&
                prompt.find("## 評価基準") != std::string::npos) ||
               (prompt.find("## Evaluation Target") != std::string::npos &&
                prompt.find("## Evaluation Criteria") != std::string::npos);
    }

    static std::optional<std::string> marker_value(const std::string& prompt,
                                                   std::string_view marker) {
        const size_t start = prompt.find(marker);
        if (start == std::string::npos) return std::nullopt;
        const size_t value_start = start + marker.size();
        const size_t end = prompt.find("-->", value_start);
        if (end == std::string::npos) return std::nullopt;
        return prompt.substr(value_start, end - value_start);
    }

    // Headers are matched at line starts only: the prompt's instruction text
    // mentions the same header strings inline, in quotes.
    static std::string section(const std::string& prompt, std::string_view header,
                               std::string_view next_header) {
        const std::string anchor = "\n" + std::string(header) + "\n";
        const size_t start = prompt.find(anchor);
        if (start == std::string::npos) return "";
        const size_t body = start + anchor.size();
        size_t end = prompt.find("\n" + std::string(next_header), body);
        if (end == std::string::npos) end = prompt.size();
        return prompt.substr(body, end - body);
    }

    CompletionResult judge(const std::string& prompt) const {
        const bool ja = prompt.find("## 評価対象") != std::string::npos;
        const std::string answer = ja ? section(prompt, "## 評価対象", "## 評価基準")
                                      : section(prompt, "## Evaluation Target",
                                                "## Evaluation Criteria");
        const std::string criterion = ja ? section(prompt, "## 評価基準", "## 回答")
                                         : section(prompt, "## Evaluation Criteria",
                                                   "## Answer");
        const size_t open = criterion.find('"');
        const size_t close = open == std::string::npos ? std::string::npos
                                                       : criterion.find('"', open + 1);
        if (close == std::string::npos)
            throw BackendError(BackendError::Kind::Protocol,
                               "judge criterion quotes no token");
        const std::string token = criterion.substr(open + 1, close - open - 1);
        return {answer.find(token) != std::string::npos ? "Yes" : "No"};
    }

    CompletionResult answer_route_question(const std::string& item_id, const std::string& prompt,
                                           std::uint64_t seed) const {
        auto it = items_by_id_.find(item_id);
        if (it == items_by_id_.end())
            throw BackendError(BackendError::Kind::Protocol,
                               "unknown route item '" + item_id + "'");
        const EvalItem& item = dataset_.items[it->second];

        // Which subtasks does the model still have to do itself? Oracle
        // conclusions in the prompt cover elicit and reason; oracle facts
        // cover elicit only.
        bool has_conclusion = false;
        for (const auto& c : item.oracle_conclusions)
            if (!c.is_guidance && prompt.find(c.text) != std::string::npos) has_conclusion = true;
        bool has_all_facts = !item.oracle_facts.empty();
        for (const auto& fact : item.oracle_facts)
            if (prompt.find(fact.text) == std::string::npos) has_all_facts = false;

        std::vector<std::string_view> stages;
        if (has_conclusion) {
            stages = {"compose"};
        } else if (has_all_facts) {
            stages = {"reason", "compose"};
        } else {
            stages = {"elicit", "reason", "compose"};
        }

        bool success = true;
        for (auto stage : stages) {
            const double p = stage == std::string_view("elicit")   ? config_.profile.p_elicit
                             : stage == std::string_view("reason") ? config_.profile.p_reason
                                                                   : config_.profile.p_compose;
            if (!(sim_coin(item.id, seed, stage) < p)) success = false;
        }

        const std::string origin = route_origin(item);
        const std::string receiver = success ? route_receiver(item) : wrong_receiver(it->second);
        return {"On route " + item.id + " the signal starts at " + origin +
                " and is finally received by " + receiver + "."};
    }

    CompletionResult answer_knowledge_question(const std::string& fact_id) const {
        auto it = facts_by_id_.find(fact_id);
        if (it == facts_by_id_.end())
            throw BackendError(BackendError::Kind::Protocol,
                               "unknown fact '" + fact_id + "'");
        if (sim_coin(fact_id, 0, "elicit") < config_.profile.p_elicit)
            return {fact_receiver(*it->second)};
        return {"UNKNOWN_000"};
    }

    CompletionResult synthesize(const OracleFact& fact) const {
        std::string link = "this link";
        if (auto pos = fact.text.find(" link "); pos != std::string::npos) {
            auto end = fact.text.find(':', pos);
            if (end != std::string::npos) link = "link " + fact.text.substr(pos + 6, end - pos - 6);
        }
        return {"### Question\nWhich component receives the signal on " + link +
                " described by fact " + fact.id + "? <!--simqa:" + fact.id + "-->\n\n" +
                "### Answer\n" + fact_receiver(fact) + "\n"};
    }

    const OracleFact* find_fact_in(const std::string& prompt) const {
        for (const auto& [id, fact] : facts_by_id_)
            if (prompt.find(fact->text) != std::string::npos) return fact;
        return nullptr;
    }

    static std::string fact_receiver(const OracleFact& fact) {
        static const std::string kMarker = " delivered to ";
        const size_t pos = fact.text.rfind(kMarker);
        if (pos == std::string::npos)
            throw BackendError(BackendError::Kind::Protocol,
                               "fact '" + fact.id + "' does not describe a delivery");
        std::string receiver = fact.text.substr(pos + kMarker.size());
        while (!receiver.empty() && (receiver.back() == '.' || receiver.back() == '\n'))
            receiver.pop_back();
        return receiver;
    }

    static std::string route_origin(const EvalItem& item) {
        static const std::string kMarker = "Starting at ";
        const size_t pos = item.question.find(kMarker);
        const size_t end = item.question.find(',', pos);
        if (pos == std::string::npos || end == std::string::npos)
            throw BackendError(BackendError::Kind::Protocol,
                               "item '" + item.id + "' has no route question");
        return item.question.substr(pos + kMarker.size(), end - pos - kMarker.size());
    }

    static std::string route_receiver(const EvalItem& item) {
        if (item.oracle_facts.empty())
            throw BackendError(BackendError::Kind::Protocol,
                               "item '" + item.id + "' has no route facts");
        return fact_receiver(item.oracle_facts.back());
    }

    std::string wrong_receiver(size_t item_index) const {
        if (dataset_.items.size() < 2) return "GHOST_000";
        const EvalItem& other = dataset_.items[(item_index + 1) % dataset_.items.size()];
        return route_receiver(other);
    }

    Dataset dataset_;
    SimBackendConfig config_;
    std::map<std::string, size_t> items_by_id_;
    std::map<std::string, const OracleFact*> facts_by_id_;
};

}  // namespace microeval
