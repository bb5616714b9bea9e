#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "microeval/digest.hpp"
#include "microeval/errors.hpp"
#include "microeval/setting.hpp"
#include "microeval/strings.hpp"

namespace microeval {

// ─── Evaluation data model ─────────────────────────────────────────────
//
// One EvalItem is the unit of the multi-step oracle evaluation: a question,
// the checklists a judge scores it against, the oracle conclusions injected
// under the oracle-reasoning setting, and the oracle facts injected under
// the oracle-elicitation setting. An answer is correct iff it satisfies all
// conditions of at least one checklist.

struct Condition {
    std::string id;
    std::string text;
};

struct Checklist {
    std::string id;
    std::vector<Condition> conditions;
};

struct OracleConclusion {
    std::string text;
    bool is_guidance = false;  // answer-strategy guidance, not a plain fact
};

struct OracleFact {
    std::string id;  // derived at load time as "<item_id>.f<n>", never serialized
    std::string text;
    std::optional<std::string> section_title;
    bool mandatory = false;
};

struct EvalItem {
    std::string id;
    std::string question;
    std::vector<Checklist> checklists;
    std::vector<OracleConclusion> oracle_conclusions;
    std::vector<OracleFact> oracle_facts;
};

enum class CurationStatus { Pending, Approved, Edited, Deleted };

inline std::string to_string(CurationStatus s) {
    switch (s) {
        case CurationStatus::Pending: return "pending";
        case CurationStatus::Approved: return "approved";
        case CurationStatus::Edited: return "edited";
        case CurationStatus::Deleted: return "deleted";
    }
    return "unknown";
}

inline CurationStatus curation_status_from_string(std::string_view name) {
    if (name == "pending") return CurationStatus::Pending;
    if (name == "approved") return CurationStatus::Approved;
    if (name == "edited") return CurationStatus::Edited;
    if (name == "deleted") return CurationStatus::Deleted;
    throw DataError("unknown curation_status: '" + std::string(name) + "'");
}

// Closed-book question/answer pair synthesized from one oracle fact. The
// answer is a single noun phrase; accuracy is only computed over entries a
// curator has approved or edited (deleted entries are always excluded).
struct KnowledgeQA {
    std::string id;
    std::string source_fact_id;
    std::string question;
    std::string answer;
    CurationStatus curation_status = CurationStatus::Pending;
    // Raw synthesis output, kept so unparseable generations can be inspected
    // and re-curated. Empty for hand-written entries.
    std::string raw_output;
};

struct Dataset {
    std::vector<EvalItem> items;
    std::vector<KnowledgeQA> knowledge_qas;
    std::map<std::string, std::string> metadata;
};

struct DatasetStats {
    std::size_t n_items = 0;
    double avg_checklists_per_item = 0.0;
    double avg_conditions_per_checklist = 0.0;
    double avg_facts_per_item = 0.0;
    double mandatory_fact_ratio = 0.0;
    std::size_t n_knowledge_qas = 0;
};

// ─── JSON (de)serialization ────────────────────────────────────────────

namespace detail {

inline std::string require_string(const nlohmann::json& j, const char* field,
                                  const std::string& where) {
    if (!j.contains(field)) throw DataError(where + ": missing field '" + field + "'");
    if (!j.at(field).is_string())
        throw DataError(where + ": field '" + std::string(field) + "' must be a string");
    return j.at(field).get<std::string>();
}

inline const nlohmann::json& require_array(const nlohmann::json& j, const char* field,
                                           const std::string& where) {
    if (!j.contains(field)) throw DataError(where + ": missing field '" + field + "'");
    if (!j.at(field).is_array())
        throw DataError(where + ": field '" + std::string(field) + "' must be an array");
    return j.at(field);
}

}  // namespace detail

inline nlohmann::json to_json(const EvalItem& item) {
    nlohmann::json j;
    j["id"] = item.id;
    j["question"] = item.question;
    auto checklists = nlohmann::json::array();
    for (const auto& cl : item.checklists) {
        auto conditions = nlohmann::json::array();
        for (const auto& c : cl.conditions)
            conditions.push_back({{"id", c.id}, {"text", c.text}});
        checklists.push_back({{"id", cl.id}, {"conditions", conditions}});
    }
    j["checklists"] = checklists;
    auto conclusions = nlohmann::json::array();
    for (const auto& oc : item.oracle_conclusions)
        conclusions.push_back({{"text", oc.text}, {"is_guidance", oc.is_guidance}});
    j["oracle_conclusions"] = conclusions;
    auto facts = nlohmann::json::array();
    for (const auto& f : item.oracle_facts) {
        nlohmann::json fj;
        if (f.section_title) {
            // The loader joined the title onto the text; peel it back off so
            // the file round-trips without duplicating the heading.
            const std::string prefix = *f.section_title + "\n";
            fj["text"] = f.text.rfind(prefix, 0) == 0 ? f.text.substr(prefix.size()) : f.text;
            fj["section_title"] = *f.section_title;
        } else {
            fj["text"] = f.text;
        }
        if (f.mandatory) fj["mandatory"] = true;
        facts.push_back(fj);
    }
    j["oracle_facts"] = facts;
    return j;
}

inline EvalItem eval_item_from_json(const nlohmann::json& j, const std::string& where) {
    EvalItem item;
    item.id = detail::require_string(j, "id", where);
    item.question = detail::require_string(j, "question", where);
    if (item.question.empty()) throw DataError(where + ": field 'question' is empty");

    for (const auto& cj : detail::require_array(j, "checklists", where)) {
        Checklist cl;
        cl.id = detail::require_string(cj, "id", where);
        std::set<std::string> seen;
        for (const auto& kj : detail::require_array(cj, "conditions", where)) {
            Condition c;
            c.id = detail::require_string(kj, "id", where);
            c.text = detail::require_string(kj, "text", where);
            if (c.text.empty())
                throw DataError(where + ": condition '" + c.id + "' has empty text");
            if (!seen.insert(c.id).second)
                throw DataError(where + ": duplicate condition id '" + c.id +
                                "' in checklist '" + cl.id + "'");
            cl.conditions.push_back(std::move(c));
        }
        if (cl.conditions.empty())
            throw DataError(where + ": checklist '" + cl.id + "' has no conditions");
        item.checklists.push_back(std::move(cl));
    }
    if (item.checklists.empty()) throw DataError(where + ": item has no checklists");

    if (j.contains("oracle_conclusions")) {
        for (const auto& oj : detail::require_array(j, "oracle_conclusions", where)) {
            OracleConclusion oc;
            oc.text = detail::require_string(oj, "text", where);
            if (oc.text.empty())
                throw DataError(where + ": oracle conclusion has empty text");
            oc.is_guidance = oj.value("is_guidance", false);
            item.oracle_conclusions.push_back(std::move(oc));
        }
    }
    if (j.contains("oracle_facts")) {
        int n = 0;
        for (const auto& fj : detail::require_array(j, "oracle_facts", where)) {
            OracleFact f;
            f.id = item.id + ".f" + std::to_string(++n);
            f.text = detail::require_string(fj, "text", where);
            if (f.text.empty()) throw DataError(where + ": oracle fact has empty text");
            if (fj.contains("section_title")) {
                f.section_title = detail::require_string(fj, "section_title", where);
                // Prepend the heading exactly once so downstream consumers see
                // one display string.
                const std::string prefix = *f.section_title + "\n";
                if (f.text.rfind(prefix, 0) != 0) f.text = prefix + f.text;
            }
            f.mandatory = fj.value("mandatory", false);
            item.oracle_facts.push_back(std::move(f));
        }
    }
    return item;
}

inline nlohmann::json to_json(const KnowledgeQA& qa) {
    nlohmann::json j;
    j["id"] = qa.id;
    j["source_fact_id"] = qa.source_fact_id;
    j["question"] = qa.question;
    j["answer"] = qa.answer;
    j["curation_status"] = to_string(qa.curation_status);
    if (!qa.raw_output.empty()) j["raw_output"] = qa.raw_output;
    return j;
}

inline KnowledgeQA knowledge_qa_from_json(const nlohmann::json& j, const std::string& where) {
    KnowledgeQA qa;
    qa.id = detail::require_string(j, "id", where);
    qa.source_fact_id = detail::require_string(j, "source_fact_id", where);
    qa.question = detail::require_string(j, "question", where);
    qa.answer = detail::require_string(j, "answer", where);
    qa.curation_status =
        curation_status_from_string(detail::require_string(j, "curation_status", where));
    if (qa.answer.empty() && qa.curation_status != CurationStatus::Deleted)
        throw DataError(where + ": knowledge QA '" + qa.id + "' has empty answer");
    if (j.contains("raw_output")) qa.raw_output = j.at("raw_output").get<std::string>();
    return qa;
}

// ─── File I/O ──────────────────────────────────────────────────────────
//
// Datasets are UTF-8 JSON-lines: one EvalItem object per line. Knowledge
// QAs live in a sibling file with the same framing. Dataset metadata, when
// present, lives in "<dataset>.meta.json" next to the items file.

inline std::string items_to_jsonl(const Dataset& ds) {
    std::string out;
    for (const auto& item : ds.items) out += to_json(item).dump() + "\n";
    return out;
}

inline std::string knowledge_qas_to_jsonl(const std::vector<KnowledgeQA>& qas) {
    std::string out;
    for (const auto& qa : qas) out += to_json(qa).dump() + "\n";
    return out;
}

// Digest of the canonical item serialization; run directories record it so
// reports refuse to aggregate runs taken on different data.
inline std::string dataset_digest(const Dataset& ds) { return sha256_hex(items_to_jsonl(ds)); }

inline std::filesystem::path metadata_path_for(const std::filesystem::path& dataset_path) {
    std::filesystem::path p = dataset_path;
    p.replace_extension(".meta.json");
    return p;
}

inline std::filesystem::path knowledge_path_for(const std::filesystem::path& dataset_path) {
    std::filesystem::path p = dataset_path;
    p.replace_extension(".knowledge.jsonl");
    return p;
}

inline Dataset load_dataset(const std::filesystem::path& path,
                            std::vector<std::string>* warnings = nullptr) {
    if (!std::filesystem::exists(path))
        throw DataError("dataset file not found: " + path.string());
    Dataset ds;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset: " + path.string());

    std::set<std::string> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_view(line).empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(where + ": malformed record: " + e.what());
        }
        EvalItem item = eval_item_from_json(j, where);
        if (!ids.insert(item.id).second)
            throw DataError(where + ": duplicate item id '" + item.id + "'");
        ds.items.push_back(std::move(item));
    }
    if (ds.items.empty() && warnings)
        warnings->push_back("dataset is empty: " + path.string());

    auto meta = metadata_path_for(path);
    if (std::filesystem::exists(meta)) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(meta));
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(meta.string() + ": malformed metadata: " + e.what());
        }
        for (auto it = j.begin(); it != j.end(); ++it)
            ds.metadata[it.key()] =
                it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
    }
    return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    write_file(path, items_to_jsonl(ds));
    if (!ds.metadata.empty()) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : ds.metadata) j[k] = v;
        write_file(metadata_path_for(path), j.dump(2) + "\n");
    }
}

inline std::vector<KnowledgeQA> load_knowledge_qas(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw DataError("knowledge QA file not found: " + path.string());
    std::vector<KnowledgeQA> qas;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open knowledge QA file: " + path.string());
    std::set<std::string> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_view(line).empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(where + ": malformed record: " + e.what());
        }
        KnowledgeQA qa = knowledge_qa_from_json(j, where);
        if (!ids.insert(qa.id).second)
            throw DataError(where + ": duplicate knowledge QA id '" + qa.id + "'");
        qas.push_back(std::move(qa));
    }
    return qas;
}

inline void save_knowledge_qas(const std::vector<KnowledgeQA>& qas,
                               const std::filesystem::path& path) {
    write_file(path, knowledge_qas_to_jsonl(qas));
}

// ─── Statistics and validation ─────────────────────────────────────────

inline DatasetStats dataset_stats(const Dataset& ds) {
    DatasetStats s;
    s.n_items = ds.items.size();
    s.n_knowledge_qas = ds.knowledge_qas.size();
    std::size_t checklists = 0, conditions = 0, facts = 0, mandatory = 0;
    for (const auto& item : ds.items) {
        checklists += item.checklists.size();
        for (const auto& cl : item.checklists) conditions += cl.conditions.size();
        facts += item.oracle_facts.size();
        for (const auto& f : item.oracle_facts)
            if (f.mandatory) ++mandatory;
    }
    if (s.n_items > 0) {
        s.avg_checklists_per_item = double(checklists) / double(s.n_items);
        s.avg_facts_per_item = double(facts) / double(s.n_items);
    }
    if (checklists > 0) s.avg_conditions_per_checklist = double(conditions) / double(checklists);
    if (facts > 0) s.mandatory_fact_ratio = double(mandatory) / double(facts);
    return s;
}

struct ValidationResult {
    std::vector<std::string> reasons;
    bool ok() const { return reasons.empty(); }
};

// Whether an item carries the oracle material a setting needs. Total: every
// (item, setting) pair yields a result.
inline ValidationResult validate_for_setting(const EvalItem& item, PromptSetting setting) {
    ValidationResult r;
    switch (setting) {
        case PromptSetting::NoOracle:
            break;
        case PromptSetting::OracleElicitation:
            if (item.oracle_facts.empty()) r.reasons.push_back("no oracle facts");
            break;
        case PromptSetting::OracleReasoning:
            if (item.oracle_conclusions.empty()) r.reasons.push_back("no oracle conclusions");
            break;
    }
    return r;
}

// Cross-checks a knowledge QA file against its dataset: every QA must trace
// back to an existing fact, and scoreable entries need question and answer.
inline std::vector<std::string> check_qas_against(const Dataset& ds,
                                                  const std::vector<KnowledgeQA>& qas) {
    std::set<std::string> fact_ids;
    for (const auto& item : ds.items)
        for (const auto& fact : item.oracle_facts) fact_ids.insert(fact.id);
    std::vector<std::string> problems;
    for (const auto& qa : qas) {
        if (!fact_ids.count(qa.source_fact_id))
            problems.push_back("qa '" + qa.id + "' references unknown fact '" +
                               qa.source_fact_id + "'");
        if (qa.curation_status != CurationStatus::Deleted) {
            if (qa.question.empty()) problems.push_back("qa '" + qa.id + "' has no question");
            if (qa.answer.empty()) problems.push_back("qa '" + qa.id + "' has no answer");
        }
    }
    return problems;
}

inline bool operator==(const Condition& a, const Condition& b) {
    return a.id == b.id && a.text == b.text;
}
inline bool operator==(const Checklist& a, const Checklist& b) {
    return a.id == b.id && a.conditions == b.conditions;
}
inline bool operator==(const OracleConclusion& a, const OracleConclusion& b) {
    return a.text == b.text && a.is_guidance == b.is_guidance;
}
inline bool operator==(const OracleFact& a, const OracleFact& b) {
    return a.id == b.id && a.text == b.text && a.section_title == b.section_title &&
           a.mandatory == b.mandatory;
}
inline bool operator==(const EvalItem& a, const EvalItem& b) {
    return a.id == b.id && a.question == b.question && a.checklists == b.checklists &&
           a.oracle_conclusions == b.oracle_conclusions && a.oracle_facts == b.oracle_facts;
}
inline bool operator==(const KnowledgeQA& a, const KnowledgeQA& b) {
    return a.id == b.id && a.source_fact_id == b.source_fact_id && a.question == b.question &&
           a.answer == b.answer && a.curation_status == b.curation_status &&
           a.raw_output == b.raw_output;
}

}  // namespace microeval
