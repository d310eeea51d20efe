#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include <optloop/dataforge.hpp>

#include "support/fixtures.hpp"

using namespace optloop;

namespace {

LabeledRecord rec(std::string id, std::string problem, ArtifactKind kind, Author author,
                  Desirability d, std::string completion = "COMPLETION") {
    return LabeledRecord{std::move(id), std::move(problem), kind, std::move(completion),
                         author, d};
}

}  // namespace

TEST_CASE("augmentation prompts: partner rules") {
    SeedProblem seed{"s1", "maximize farm profit", ""};
    SeedProblem partner{"s2", "schedule nurses", ""};
    SECTION("rule 3 requires a partner and includes both problems") {
        CHECK_THROWS_AS(make_augmentation_prompt(seed, 3), PartnerRequired);
        std::string p = make_augmentation_prompt(seed, 3, partner);
        CHECK(p.find("Problem A:") != std::string::npos);
        CHECK(p.find("maximize farm profit") != std::string::npos);
        CHECK(p.find("Problem B:") != std::string::npos);
        CHECK(p.find("schedule nurses") != std::string::npos);
    }
    SECTION("other rules forbid a partner") {
        for (int rule : {1, 2, 4, 5, 6, 7})
            CHECK_THROWS_AS(make_augmentation_prompt(seed, rule, partner), PartnerForbidden);
    }
    SECTION("prompts are byte-stable and carry the rule text") {
        std::string a = make_augmentation_prompt(seed, 1);
        std::string b = make_augmentation_prompt(seed, 1);
        CHECK(a == b);
        CHECK(a.find("based on the context of this problem") != std::string::npos);
        std::string r7 = make_augmentation_prompt(seed, 7);
        CHECK(r7.find("without changing the meaning of the original problem") !=
              std::string::npos);
    }
}

TEST_CASE("expert records must be desirable") {
    CHECK_THROWS_AS(check_record(rec("a", "p", ArtifactKind::FiveElement, Author::Expert,
                                     Desirability::Undesirable)),
                    RecordError);
    CHECK_THROWS_AS(check_record(rec("a", "", ArtifactKind::FiveElement, Author::Expert,
                                     Desirability::Desirable)),
                    RecordError);
}

TEST_CASE("SFT dataset construction") {
    SECTION("one expert five-element record yields one formulation pair") {
        auto pairs = build_sft_dataset({rec("a", "P", ArtifactKind::FiveElement,
                                            Author::Expert, Desirability::Desirable, "FE")});
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].instruction.find("five-element model") != std::string::npos);
        CHECK(pairs[0].instruction.find("P") != std::string::npos);
        CHECK(pairs[0].completion == "FE");
    }
    SECTION("undesirable model records are excluded") {
        std::vector<LabeledRecord> records = {
            rec("a", "P", ArtifactKind::FiveElement, Author::Expert, Desirability::Desirable),
            rec("b", "P", ArtifactKind::SolveSpec, Author::Model, Desirability::Undesirable),
        };
        auto pairs = build_sft_dataset(records);
        CHECK(pairs.size() == 1);
    }
    SECTION("both artifact kinds for one problem yield three instruction shapes") {
        std::vector<LabeledRecord> records = {
            rec("a", "P", ArtifactKind::FiveElement, Author::Expert, Desirability::Desirable,
                "FE-TEXT"),
            rec("b", "P", ArtifactKind::SolveSpec, Author::Expert, Desirability::Desirable,
                "SPEC-TEXT"),
        };
        auto pairs = build_sft_dataset(records);
        REQUIRE(pairs.size() == 3);
        int formulate = 0, from_problem = 0, from_five = 0;
        for (const auto& p : pairs) {
            if (p.instruction.find("write the corresponding five-element model") !=
                std::string::npos)
                ++formulate;
            if (p.instruction.find("based on the problem description provided") !=
                std::string::npos)
                ++from_problem;
            if (p.instruction.find("FE-TEXT") != std::string::npos) ++from_five;
        }
        CHECK(formulate == 1);
        CHECK(from_problem == 1);
        CHECK(from_five == 1);
    }
    SECTION("no desirable records is an error") {
        CHECK_THROWS_AS(build_sft_dataset({rec("a", "P", ArtifactKind::SolveSpec, Author::Model,
                                               Desirability::Unreviewed)}),
                        NoDesirableRecords);
        CHECK_THROWS_AS(build_sft_dataset({}), NoDesirableRecords);
    }
}

TEST_CASE("KTO dataset construction") {
    SECTION("reviewed model records become triples; experts and unreviewed are excluded") {
        std::vector<LabeledRecord> records = {
            rec("a", "P", ArtifactKind::FiveElement, Author::Model, Desirability::Desirable,
                "GOOD"),
            rec("b", "P", ArtifactKind::FiveElement, Author::Model, Desirability::Undesirable,
                "BAD"),
            rec("c", "P", ArtifactKind::FiveElement, Author::Expert, Desirability::Desirable,
                "EXPERT"),
            rec("d", "P", ArtifactKind::FiveElement, Author::Model, Desirability::Unreviewed,
                "PENDING"),
        };
        auto triples = build_kto_dataset(records);
        REQUIRE(triples.size() == 2);
        int desirable = 0;
        for (const auto& t : triples) {
            CHECK(t.completion != "EXPERT");
            CHECK(t.completion != "PENDING");
            if (t.desirable) ++desirable;
        }
        CHECK(desirable == 1);
    }
    SECTION("solve-spec records reuse the SFT instruction shapes") {
        std::vector<LabeledRecord> records = {
            rec("a", "P", ArtifactKind::FiveElement, Author::Expert, Desirability::Desirable,
                "FE-TEXT"),
            rec("b", "P", ArtifactKind::SolveSpec, Author::Model, Desirability::Desirable,
                "SPEC"),
        };
        auto triples = build_kto_dataset(records);
        REQUIRE(triples.size() == 2);  // problem->spec and five-element->spec
        bool has_five_instruction = false;
        for (const auto& t : triples)
            if (t.instruction.find("FE-TEXT") != std::string::npos) has_five_instruction = true;
        CHECK(has_five_instruction);
    }
    SECTION("no reviewed model records is an error") {
        CHECK_THROWS_AS(build_kto_dataset({rec("a", "P", ArtifactKind::FiveElement,
                                               Author::Expert, Desirability::Desirable)}),
                        NoReviewedRecords);
    }
}

TEST_CASE("dataset partition: no conflicting labels across SFT and KTO outputs") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        // Fully random corpus, contradictions included: the builders must
        // still never emit conflicting labels for one pair.
        std::vector<LabeledRecord> records;
        int n = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i) {
            std::string problem = "problem-" + std::to_string(rng() % 4);
            ArtifactKind kind = (rng() & 1) ? ArtifactKind::FiveElement : ArtifactKind::SolveSpec;
            std::string completion =
                std::string(artifact_kind_name(kind)) + "-" + std::to_string(rng() % 3);
            Author author = (rng() & 1) ? Author::Expert : Author::Model;
            Desirability d = author == Author::Expert
                                 ? Desirability::Desirable
                                 : ((rng() & 1) ? Desirability::Desirable
                                                : Desirability::Undesirable);
            records.push_back(
                rec("r" + std::to_string(i), problem, kind, author, d, completion));
        }
        std::vector<SftPair> sft;
        std::vector<KtoTriple> kto;
        try {
            sft = build_sft_dataset(records);
        } catch (const NoDesirableRecords&) {
        }
        try {
            kto = build_kto_dataset(records);
        } catch (const NoReviewedRecords&) {
        }
        for (const auto& t : kto) {
            if (t.desirable) continue;
            for (const auto& p : sft) {
                bool same = p.instruction == t.instruction && p.completion == t.completion;
                CHECK_FALSE(same);  // an undesirable KTO pair must not be SFT data
            }
        }
    }
}

TEST_CASE("builders are deterministic and order-stable by id") {
    std::vector<LabeledRecord> records = {
        rec("b", "P1", ArtifactKind::FiveElement, Author::Model, Desirability::Desirable, "X"),
        rec("a", "P2", ArtifactKind::FiveElement, Author::Expert, Desirability::Desirable, "Y"),
        rec("c", "P1", ArtifactKind::SolveSpec, Author::Model, Desirability::Undesirable, "Z"),
    };
    auto shuffled = records;
    std::reverse(shuffled.begin(), shuffled.end());
    auto p1 = build_sft_dataset(records);
    auto p2 = build_sft_dataset(shuffled);
    REQUIRE(p1.size() == p2.size());
    for (size_t i = 0; i < p1.size(); ++i) {
        CHECK(p1[i].instruction == p2[i].instruction);
        CHECK(p1[i].completion == p2[i].completion);
    }
    auto k1 = build_kto_dataset(records);
    auto k2 = build_kto_dataset(shuffled);
    REQUIRE(k1.size() == k2.size());
    for (size_t i = 0; i < k1.size(); ++i) CHECK(k1[i].completion == k2[i].completion);
}

TEST_CASE("labeled records load from JSONL with invariant enforcement") {
    auto records = load_labeled_records(optloop::test::testdata_path("labeled_records.jsonl"));
    REQUIRE(records.size() == 4);
    CHECK(records[0].author == Author::Expert);
    CHECK(records[0].desirability == Desirability::Desirable);
    CHECK(records[2].desirability == Desirability::Undesirable);
    CHECK(records[3].desirability == Desirability::Unreviewed);

    std::string bad = "./bad_records.jsonl";
    {
        std::ofstream f(bad);
        f << R"({"id": "x", "problem": "p", "kind": "five-element", "completion": "c", "author": "expert", "desirability": "false"})"
          << "\n";
    }
    CHECK_THROWS_AS(load_labeled_records(bad), RecordError);
    std::remove(bad.c_str());
}

TEST_CASE("JSONL emission shapes") {
    auto pairs = build_sft_dataset({rec("a", "P", ArtifactKind::FiveElement, Author::Expert,
                                        Desirability::Desirable, "FE")});
    std::string jsonl = sft_to_jsonl(pairs);
    auto j = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
    CHECK(j.contains("instruction"));
    CHECK(j.contains("completion"));

    auto triples = build_kto_dataset({rec("a", "P", ArtifactKind::FiveElement, Author::Model,
                                          Desirability::Undesirable, "BAD")});
    std::string kto = kto_to_jsonl(triples);
    auto k = nlohmann::json::parse(kto.substr(0, kto.find('\n')));
    CHECK(k.contains("instruction"));
    CHECK(k.contains("completion"));
    CHECK(k["desirable"] == false);
}
