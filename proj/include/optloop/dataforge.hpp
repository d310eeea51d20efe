#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <optloop/prompts.hpp>

namespace optloop {

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct SeedProblem {
    std::string id;
    std::string problem;
    std::string source;  // optional dataset tag
};

enum class ArtifactKind { FiveElement, SolveSpec };
enum class Author { Expert, Model };
enum class Desirability { Desirable, Undesirable, Unreviewed };

inline const char* artifact_kind_name(ArtifactKind k) {
    return k == ArtifactKind::FiveElement ? "five-element" : "solve-spec";
}
inline const char* author_name(Author a) { return a == Author::Expert ? "expert" : "model"; }
inline const char* desirability_name(Desirability d) {
    switch (d) {
        case Desirability::Desirable: return "true";
        case Desirability::Undesirable: return "false";
        case Desirability::Unreviewed: return "unreviewed";
    }
    return "?";
}

// Expert labels are ground truth: author = expert implies a desirable
// completion. Model completions carry the reviewer-assigned label and may
// still be Unreviewed.
struct LabeledRecord {
    std::string id;
    std::string problem;
    ArtifactKind kind = ArtifactKind::FiveElement;
    std::string completion;
    Author author = Author::Expert;
    Desirability desirability = Desirability::Desirable;
};

struct RecordError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void check_record(const LabeledRecord& r) {
    if (r.problem.empty()) throw RecordError("record '" + r.id + "': empty problem text");
    if (r.author == Author::Expert && r.desirability != Desirability::Desirable)
        throw RecordError("record '" + r.id +
                          "': expert completions are ground truth and must be desirable");
}

// JSONL: {id, problem, kind, completion, author, desirability}
inline std::vector<LabeledRecord> load_labeled_records(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw RecordError("cannot open records: " + path);
    std::vector<LabeledRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string t = line;
        while (!t.empty() && (t.back() == '\r' || t.back() == '\n')) t.pop_back();
        if (t.find_first_not_of(" \t") == std::string::npos) continue;
        auto j = nlohmann::json::parse(t, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw RecordError("malformed record at line " + std::to_string(lineno));
        LabeledRecord r;
        r.id = j.contains("id")
                   ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                   : std::to_string(lineno);
        r.problem = j.value("problem", std::string{});
        r.completion = j.value("completion", std::string{});
        std::string kind = j.value("kind", std::string{"five-element"});
        if (kind == "five-element") {
            r.kind = ArtifactKind::FiveElement;
        } else if (kind == "solve-spec") {
            r.kind = ArtifactKind::SolveSpec;
        } else {
            throw RecordError("record '" + r.id + "': unknown kind '" + kind + "'");
        }
        std::string author = j.value("author", std::string{"expert"});
        if (author == "expert") {
            r.author = Author::Expert;
        } else if (author == "model") {
            r.author = Author::Model;
        } else {
            throw RecordError("record '" + r.id + "': unknown author '" + author + "'");
        }
        if (!j.contains("desirability") || j["desirability"].is_null()) {
            r.desirability = r.author == Author::Expert ? Desirability::Desirable
                                                        : Desirability::Unreviewed;
        } else if (j["desirability"].is_boolean()) {
            r.desirability = j["desirability"].get<bool>() ? Desirability::Desirable
                                                           : Desirability::Undesirable;
        } else {
            std::string d = j["desirability"].get<std::string>();
            if (d == "true" || d == "True") {
                r.desirability = Desirability::Desirable;
            } else if (d == "false" || d == "False") {
                r.desirability = Desirability::Undesirable;
            } else if (d == "unreviewed" || d == "Unreviewed") {
                r.desirability = Desirability::Unreviewed;
            } else {
                throw RecordError("record '" + r.id + "': unknown desirability '" + d + "'");
            }
        }
        check_record(r);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Augmentation prompts
// ---------------------------------------------------------------------------

struct PartnerRequired : std::invalid_argument {
    PartnerRequired() : std::invalid_argument("rule 3 requires a partner seed problem") {}
};
struct PartnerForbidden : std::invalid_argument {
    explicit PartnerForbidden(int rule)
        : std::invalid_argument("rule " + std::to_string(rule) +
                                " does not take a partner seed") {}
};

// Rule 3 combines the scenario of problem A with the type of problem B; all
// other rules operate on the single seed.
inline std::string make_augmentation_prompt(const SeedProblem& seed, int rule,
                                            const std::optional<SeedProblem>& partner = {}) {
    PromptKind kind = augment_kind(rule);
    if (seed.problem.empty()) throw std::invalid_argument("seed problem text is empty");
    if (partner && partner->problem.empty())
        throw std::invalid_argument("partner problem text is empty");
    if (rule == 3 && !partner) throw PartnerRequired();
    if (rule != 3 && partner) throw PartnerForbidden(rule);
    std::string block;
    if (rule == 3) {
        block = "Problem A:\n" + seed.problem + "\n\nProblem B:\n" + partner->problem;
    } else {
        block = seed.problem;
    }
    return render_prompt(kind, {{kOriginalProblem, block}});
}

// ---------------------------------------------------------------------------
// Dataset builders
// ---------------------------------------------------------------------------

struct SftPair {
    std::string instruction;
    std::string completion;
};

struct KtoTriple {
    std::string instruction;
    std::string completion;
    bool desirable = false;
};

struct NoDesirableRecords : std::runtime_error {
    NoDesirableRecords() : std::runtime_error("no desirable records to build from") {}
};
struct NoReviewedRecords : std::runtime_error {
    NoReviewedRecords() : std::runtime_error("no reviewed model records to build from") {}
};

namespace forge_detail {

inline std::vector<LabeledRecord> sorted_by_id(std::vector<LabeledRecord> records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const LabeledRecord& a, const LabeledRecord& b) { return a.id < b.id; });
    return records;
}

// Desirable five-element completions per problem, used to build the
// formulation -> solve-spec instruction shape.
inline std::map<std::string, std::vector<std::string>> desirable_formulations(
    const std::vector<LabeledRecord>& records) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& r : records)
        if (r.kind == ArtifactKind::FiveElement && r.desirability == Desirability::Desirable)
            out[r.problem].push_back(r.completion);
    return out;
}

// The instruction shapes one record contributes: problem -> five-element
// for formulation records; problem -> solve-spec and (per desirable
// formulation of the same problem) five-element -> solve-spec for
// solve-spec records. Both dataset builders share this enumeration.
template <typename Fn>
void emit_instruction_shapes(const LabeledRecord& r,
                             const std::map<std::string, std::vector<std::string>>& formulations,
                             Fn&& fn) {
    if (r.kind == ArtifactKind::FiveElement) {
        fn(render_prompt(PromptKind::FormulateFiveElement, {{kProblemDescription, r.problem}}),
           r.completion);
        return;
    }
    fn(render_prompt(PromptKind::SpecFromProblem, {{kProblemDescription, r.problem}}),
       r.completion);
    auto it = formulations.find(r.problem);
    if (it != formulations.end())
        for (const auto& fe : it->second)
            fn(render_prompt(PromptKind::SpecFromFiveElement, {{kFiveElement, fe}}),
               r.completion);
}

}  // namespace forge_detail

// Instruction tuning pairs from desirable records only, in the three
// instruction shapes: problem -> five-element, five-element -> solve-spec,
// problem -> solve-spec. Deterministic: records are processed by id and
// exact duplicate pairs are dropped.
inline std::vector<SftPair> build_sft_dataset(const std::vector<LabeledRecord>& records) {
    if (records.empty()) throw NoDesirableRecords();
    for (const auto& r : records) check_record(r);
    auto sorted = forge_detail::sorted_by_id(records);
    auto formulations = forge_detail::desirable_formulations(sorted);
    std::vector<SftPair> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : sorted) {
        if (r.desirability != Desirability::Desirable) continue;
        forge_detail::emit_instruction_shapes(
            r, formulations, [&](std::string instruction, const std::string& completion) {
                auto key = std::make_pair(instruction, completion);
                if (seen.insert(key).second)
                    out.push_back({std::move(instruction), completion});
            });
    }
    if (out.empty()) throw NoDesirableRecords();
    return out;
}

// Alignment triples from reviewed model completions; instructions use the
// same shapes as the SFT dataset. Expert records route to SFT, and
// Unreviewed completions are excluded. When the corpus contradicts itself
// (the same instruction/completion pair labeled both ways), the desirable
// label wins: reviewed-desirable completions are ground truth, so the KTO
// output never conflicts with the SFT output.
inline std::vector<KtoTriple> build_kto_dataset(const std::vector<LabeledRecord>& records) {
    if (records.empty()) throw NoReviewedRecords();
    for (const auto& r : records) check_record(r);
    auto sorted = forge_detail::sorted_by_id(records);
    auto formulations = forge_detail::desirable_formulations(sorted);
    // The exact pair set the SFT builder emits for this corpus.
    std::set<std::pair<std::string, std::string>> sft_pairs;
    for (const auto& r : sorted)
        if (r.desirability == Desirability::Desirable)
            forge_detail::emit_instruction_shapes(
                r, formulations, [&](std::string instruction, const std::string& completion) {
                    sft_pairs.insert({std::move(instruction), completion});
                });
    std::vector<KtoTriple> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : sorted) {
        if (r.author != Author::Model) continue;
        if (r.desirability == Desirability::Unreviewed) continue;
        bool record_desirable = r.desirability == Desirability::Desirable;
        forge_detail::emit_instruction_shapes(
            r, formulations, [&](std::string instruction, const std::string& completion) {
                auto key = std::make_pair(instruction, completion);
                bool desirable = record_desirable || sft_pairs.count(key) > 0;
                if (seen.insert(key).second)
                    out.push_back({std::move(instruction), completion, desirable});
            });
    }
    if (out.empty()) throw NoReviewedRecords();
    return out;
}

// ---------------------------------------------------------------------------
// JSONL emission
// ---------------------------------------------------------------------------

inline std::string sft_to_jsonl(const std::vector<SftPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        nlohmann::json j = {{"instruction", p.instruction}, {"completion", p.completion}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline std::string kto_to_jsonl(const std::vector<KtoTriple>& triples) {
    std::string out;
    for (const auto& t : triples) {
        nlohmann::json j = {{"instruction", t.instruction},
                            {"completion", t.completion},
                            {"desirable", t.desirable}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace optloop
