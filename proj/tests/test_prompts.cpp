#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <optloop/prompts.hpp>

using namespace optloop;

TEST_CASE("formulation prompt carries its anchor phrases and the section skeleton") {
    std::string p = render_prompt(PromptKind::FormulateFiveElement,
                                  {{kProblemDescription, "pack the knapsack"}});
    CHECK(p.find("write the corresponding five-element model") != std::string::npos);
    CHECK(p.find("In mathematics, optimization problem can be modeled") != std::string::npos);
    CHECK(p.find("## Sets:") != std::string::npos);
    CHECK(p.find("## Parameters:") != std::string::npos);
    CHECK(p.find("## Variables:") != std::string::npos);
    CHECK(p.find("## Objective:") != std::string::npos);
    CHECK(p.find("## Constraints:") != std::string::npos);
    CHECK(p.find("pack the knapsack") != std::string::npos);
    CHECK(p.find("{PROBLEM DESCRIPTION}") == std::string::npos);
}

TEST_CASE("spec prompts keep the five-element framing and the spec schema") {
    std::string p =
        render_prompt(PromptKind::SpecFromFiveElement, {{kFiveElement, "## Sets: ..."}});
    CHECK(p.find("The five-element model is the abstraction of an optimization problem") !=
          std::string::npos);
    CHECK(p.find("The following is the five-element model of an optimization problem") !=
          std::string::npos);
    CHECK(p.find("Please do not output the running log.") != std::string::npos);
    CHECK(p.find("solve-spec") != std::string::npos);

    std::string q =
        render_prompt(PromptKind::SpecFromProblem, {{kProblemDescription, "a problem"}});
    CHECK(q.find("The problem description is as follows") != std::string::npos);
    CHECK(q.find("a problem") != std::string::npos);
}

TEST_CASE("self-correction prompt carries the verbatim judgment skeleton") {
    std::map<std::string, std::string> bindings = {
        {kProblemDescription, "P"}, {kFiveElement, "F"},        {kSolverCode, "S"},
        {kOutputInformations, "O"}, {kErrorInformations, "E"},
    };
    std::string p = render_prompt(PromptKind::SelfCorrect, bindings);
    CHECK(p.find("The five-element is [Fill in True/False here].") != std::string::npos);
    CHECK(p.find("The code is [Fill in True/False here].") != std::string::npos);
    CHECK(p.find("Please judge whether the modeling and code are correct.") !=
          std::string::npos);
    CHECK(p.find("Analysis:") != std::string::npos);
    CHECK(p.find("Run the code and get the following running information.") !=
          std::string::npos);
}

TEST_CASE("missing placeholder bindings are rejected by name") {
    std::map<std::string, std::string> partial = {
        {kProblemDescription, "P"}, {kFiveElement, "F"}, {kSolverCode, "S"},
        {kErrorInformations, "E"},  // OUTPUT INFORMATIONS missing
    };
    CHECK_THROWS_AS(render_prompt(PromptKind::SelfCorrect, partial), MissingPlaceholder);
    try {
        render_prompt(PromptKind::SelfCorrect, partial);
    } catch (const MissingPlaceholder& e) {
        CHECK(std::string(e.what()).find("OUTPUT INFORMATIONS") != std::string::npos);
    }
}

TEST_CASE("augmentation rules carry their verbatim clauses") {
    auto prompt_for = [](int rule) {
        return render_prompt(augment_kind(rule), {{kOriginalProblem, "seed problem"}});
    };
    CHECK(prompt_for(1).find("based on the context of this problem") != std::string::npos);
    CHECK(prompt_for(2).find("construct a new optimization problem with a new scenario") !=
          std::string::npos);
    CHECK(prompt_for(3).find("scenario of problem A and the optimization problem type of "
                             "problem B") != std::string::npos);
    CHECK(prompt_for(4).find("modify the constraints of this problem") != std::string::npos);
    CHECK(prompt_for(5).find("modify the constraints and object of this problem") !=
          std::string::npos);
    CHECK(prompt_for(6).find("modify the variables and parameters of this problem") !=
          std::string::npos);
    CHECK(prompt_for(7).find("without changing the meaning of the original problem") !=
          std::string::npos);
    for (int rule = 1; rule <= 7; ++rule) {
        std::string p = prompt_for(rule);
        CHECK(p.find("Please generate an optimization problem according to the following "
                     "requirements") != std::string::npos);
        CHECK(p.find("Please construct a new optimization problem according to the above "
                     "requirements") != std::string::npos);
        CHECK(p.find("seed problem") != std::string::npos);
    }
    CHECK_THROWS_AS(augment_kind(0), std::invalid_argument);
    CHECK_THROWS_AS(augment_kind(8), std::invalid_argument);
}

TEST_CASE("rendering is byte-stable") {
    std::map<std::string, std::string> b = {{kProblemDescription, "same input"}};
    CHECK(render_prompt(PromptKind::FormulateFiveElement, b) ==
          render_prompt(PromptKind::FormulateFiveElement, b));
}

TEST_CASE("temperature defaults: deterministic stages, diverse augmentation") {
    CHECK(default_temperature(PromptKind::FormulateFiveElement) == 0.0);
    CHECK(default_temperature(PromptKind::SpecFromFiveElement) == 0.0);
    CHECK(default_temperature(PromptKind::SpecFromProblem) == 0.0);
    CHECK(default_temperature(PromptKind::SelfCorrect) == 0.0);
    for (int rule = 1; rule <= 7; ++rule)
        CHECK(default_temperature(augment_kind(rule)) == 0.7);
}

TEST_CASE("judgment parsing on template-shaped responses") {
    Judgment j = parse_judgment("The five-element is True.\nThe code is False.\nAnalysis: rhs wrong");
    CHECK(j.five_element_ok);
    CHECK_FALSE(j.spec_ok);
    CHECK(j.analysis == "rhs wrong");

    Judgment k = parse_judgment("The five-element is True. The code is True.");
    CHECK(k.five_element_ok);
    CHECK(k.spec_ok);
    CHECK(k.analysis.empty());

    Judgment fallback = parse_judgment("I cannot judge.");
    CHECK_FALSE(fallback.five_element_ok);
    CHECK_FALSE(fallback.spec_ok);
    CHECK(fallback.analysis == "I cannot judge.");
}

TEST_CASE("judgment parsing tolerates case and unfilled templates") {
    Judgment j = parse_judgment("the five-element is TRUE.\nTHE CODE IS false.\nanalysis: x");
    CHECK(j.five_element_ok);
    CHECK_FALSE(j.spec_ok);

    // Unfilled template: the bracket token is not a verdict.
    Judgment unfilled =
        parse_judgment("The five-element is [Fill in True/False here].\nThe code is True.");
    CHECK_FALSE(unfilled.five_element_ok);
    CHECK_FALSE(unfilled.spec_ok);
    CHECK(unfilled.analysis.find("Fill in") != std::string::npos);
}

TEST_CASE("judgment parse/render idempotence over random verdicts") {
    std::mt19937 rng(7);
    const char* phrases[] = {"coefficients look off", "rhs should be 5",
                             "demand row uses the wrong set", "all good",
                             "objective sign flipped"};
    for (int trial = 0; trial < 200; ++trial) {
        bool five = rng() & 1, spec = rng() & 1;
        std::string analysis = phrases[rng() % 5];
        Judgment j = parse_judgment(render_judgment(five, spec, analysis));
        CHECK(j.five_element_ok == five);
        CHECK(j.spec_ok == spec);
        CHECK(j.analysis == analysis);
        // Idempotence: parsing a re-render of the parse is a fixed point.
        Judgment jj = parse_judgment(render_judgment(j.five_element_ok, j.spec_ok, j.analysis));
        CHECK(jj == j);
    }
}
