#pragma once

#include <cctype>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace optloop {

// ---------------------------------------------------------------------------
// Prompt kinds and placeholders
// ---------------------------------------------------------------------------

enum class PromptKind {
    FormulateFiveElement,
    SpecFromFiveElement,
    SpecFromProblem,
    SelfCorrect,
    AugmentRule1,
    AugmentRule2,
    AugmentRule3,
    AugmentRule4,
    AugmentRule5,
    AugmentRule6,
    AugmentRule7,
};

inline PromptKind augment_kind(int rule) {
    if (rule < 1 || rule > 7)
        throw std::invalid_argument("augmentation rule must be in 1..7, got " +
                                    std::to_string(rule));
    return static_cast<PromptKind>(static_cast<int>(PromptKind::AugmentRule1) + rule - 1);
}

inline const char* prompt_kind_name(PromptKind k) {
    switch (k) {
        case PromptKind::FormulateFiveElement: return "formulate_five_element";
        case PromptKind::SpecFromFiveElement: return "spec_from_five_element";
        case PromptKind::SpecFromProblem: return "spec_from_problem";
        case PromptKind::SelfCorrect: return "self_correct";
        case PromptKind::AugmentRule1: return "augment_rule_1";
        case PromptKind::AugmentRule2: return "augment_rule_2";
        case PromptKind::AugmentRule3: return "augment_rule_3";
        case PromptKind::AugmentRule4: return "augment_rule_4";
        case PromptKind::AugmentRule5: return "augment_rule_5";
        case PromptKind::AugmentRule6: return "augment_rule_6";
        case PromptKind::AugmentRule7: return "augment_rule_7";
    }
    return "?";
}

// Placeholder names match the template braces exactly.
inline constexpr const char* kProblemDescription = "PROBLEM DESCRIPTION";
inline constexpr const char* kFiveElement = "FIVE-Element";
inline constexpr const char* kSolverCode = "SOLVER CODE";
inline constexpr const char* kOutputInformations = "OUTPUT INFORMATIONS";
inline constexpr const char* kErrorInformations = "ERROR INFORMATIONS";
inline constexpr const char* kOriginalProblem = "ORIGINAL OPTIMIZATION PROBLEM DESCRIPTION";

struct MissingPlaceholder : std::runtime_error {
    explicit MissingPlaceholder(const std::string& name)
        : std::runtime_error("missing placeholder binding: " + name) {}
};

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

namespace prompt_detail {

// Shared description of the solve-spec JSON format (the artifact's
// executable artifact, which replaces generated solver code).
inline const char* kSolveSpecSchema =
    R"(A solve-spec is a single JSON object with fields "variables", "objective" and "constraints". "variables" is a list of {"name": string, "domain": "continuous"|"integer"|"binary", "lo": number or null, "hi": number or null}. "objective" is {"linear": true, "coeffs": [[variable index, coefficient], ...], "constant": number, "maximized": boolean} stated in minimize form (negate the coefficients of a maximize objective and set "maximized" to true), or {"linear": false, "expr": <expression tree>} when nonlinear. "constraints" is a list of {"coeffs": [[variable index, coefficient], ...], "relation": "<="|">="|"==", "rhs": number}, or {"expr": <expression tree>, "relation": ..., "rhs": number} when nonlinear. An expression tree node is {"num": value}, {"var": index}, or {"op": "add"|"sub"|"mul"|"neg", "a": <node>, "b": <node>}.)";

inline const char* kFormulateTemplate =
    R"(In mathematics, optimization problem can be modeled as the following expression $\min_{\boldsymbol{x} \in \mathcal{X}} f(\boldsymbol{x}), {\rm s.t.} G(\boldsymbol{x}) \leq \boldsymbol{c}$, where $\boldsymbol{x} = (x_1, x_2, \ldots, x_D)^\top$ is the $D$-dimensional decision variable, $\mathcal{X} \subset \mathbb{R}^D$ is the feasible domain, $f: \mathcal{X} \rightarrow \mathbb{R}$ is the objective function and the goal is to find the minima of $f$, $G(\boldsymbol{x}) \leq \boldsymbol{c}$ are the constraints of $\boldsymbol{x}$.

The above definition can be mapped to a five-element consisting of ``Variables, Objective, Constraints, Sets, Parameters''. Variables indicates what $\boldsymbol{x}$ is, Objective describes the form of the objective function $f(\boldsymbol{x})$, and Constraints indicates the constraints $G(\boldsymbol{x})$ and $\mathcal{X}$. These three can abstract the optimization problem. Sets and Parameters are their specific explanations: Sets describes and explains the subscripts of the vectors or matrices in them, and Parameters supplement their specific values.

You need to write the corresponding five-element model based on the problem description and information provided.

The problem description is as follows:
```
{PROBLEM DESCRIPTION}
```

Please write the corresponding five-element model. Please use the plain-text five-element grammar to complete the following template to model the above optimization problem into five-element. Declare sets as `Name = {m1, m2, ...}`, parameters as `Name = value` or `Name[Set] = (v1, v2, ...)`, variables as `Name[Set] : binary|integer|continuous in lo..hi`, the objective as `minimize EXPR` or `maximize EXPR`, and constraints as `EXPR <= EXPR`, `EXPR >= EXPR` or `EXPR == EXPR`, optionally followed by `forall i in Set`:

```
## Sets:
[You need to fill in]

## Parameters:
[You need to fill in]

## Variables:
[You need to fill in]

## Objective:
[You need to fill in]

## Constraints:
[You need to fill in]
```)";

inline std::string spec_from_five_element_template() {
    return std::string(
               R"(The five-element model is the abstraction of an optimization problem, which transforms specific problem scenarios into formal mathematical problems. You need to write the corresponding solve-spec JSON based on the five-element model provided.

The following is the five-element model of an optimization problem:
```
{FIVE-Element}
```

Please write the corresponding solve-spec JSON. )") +
           kSolveSpecSchema +
           R"( Please print only the JSON. Please do not output the running log. You need to write it in a single ```json code block:

```json
[Write your solve-spec here]
```)";
}

inline std::string spec_from_problem_template() {
    return std::string(
               R"(The five-element model is the abstraction of an optimization problem, which transforms specific problem scenarios into formal mathematical problems. You need to write the corresponding solve-spec JSON based on the problem description provided.

The problem description is as follows:
```
{PROBLEM DESCRIPTION}
```

Please write the corresponding solve-spec JSON. )") +
           kSolveSpecSchema +
           R"( Please print only the JSON. Please do not output the running log. You need to write it in a single ```json code block:

```json
[Write your solve-spec here]
```)";
}

inline const char* kSelfCorrectTemplate =
    R"(For the following optimization problem, modeling is performed, and solver code (a solve-spec JSON) is generated and executed based on the modeling. Please judge whether the modeling and code are correct.
The problem is as follows.
```
{PROBLEM DESCRIPTION}
```

The five-element formulation is as follows.
```
{FIVE-Element}
```

The code is as follows.
```
{SOLVER CODE}
```

Run the code and get the following running information.
```
{OUTPUT INFORMATIONS}
{ERROR INFORMATIONS}
```

Please judge whether the above five-element and code are correct, and give your analysis according to the template below.

```
The five-element is [Fill in True/False here].

The code is [Fill in True/False here].

Analysis:
[Fill in your analysis here]
```)";

inline const char* kAugmentTemplate =
    R"(Please generate an optimization problem according to the following requirements and the given format.

{RULE}

The original optimization problem is as follows:
```
{ORIGINAL OPTIMIZATION PROBLEM DESCRIPTION}
```

Please construct a new optimization problem according to the above requirements and the provided questions and in the following format:
```
[Write your new problem here]
```)";

inline const char* augment_rule_text(int rule) {
    switch (rule) {
        case 1:
            return "The following is an optimization problem. Please construct a new "
                   "optimization problem based on the context of this problem.";
        case 2:
            return "The following is an optimization problem. Please find similar problems in "
                   "other fields and construct a new optimization problem with a new scenario.";
        case 3:
            return "There are two optimization problems. Please construct a new optimization "
                   "problem based on the scenario of problem A and the optimization problem "
                   "type of problem B.";
        case 4:
            return "The following is an optimization problem. Please modify the constraints of "
                   "this problem and construct a new optimization problem.";
        case 5:
            return "The following is an optimization problem. Please modify the constraints "
                   "and object of this problem and construct a new optimization problem.";
        case 6:
            return "The following is an optimization problem. Please modify the variables and "
                   "parameters of this problem reasonably and construct a new optimization "
                   "problem.";
        case 7:
            return "The following is an optimization problem. Please modify the description of "
                   "some statements and construct a new optimization problem without changing "
                   "the meaning of the original problem.";
    }
    throw std::invalid_argument("augmentation rule must be in 1..7");
}

inline std::string template_text(PromptKind kind) {
    switch (kind) {
        case PromptKind::FormulateFiveElement:
            return kFormulateTemplate;
        case PromptKind::SpecFromFiveElement:
            return spec_from_five_element_template();
        case PromptKind::SpecFromProblem:
            return spec_from_problem_template();
        case PromptKind::SelfCorrect:
            return kSelfCorrectTemplate;
        default: {
            int rule = static_cast<int>(kind) - static_cast<int>(PromptKind::AugmentRule1) + 1;
            std::string t = kAugmentTemplate;
            const std::string tag = "{RULE}";
            t.replace(t.find(tag), tag.size(), augment_rule_text(rule));
            return t;
        }
    }
}

// Placeholders each template declares (and therefore requires).
inline std::vector<std::string> template_placeholders(PromptKind kind) {
    switch (kind) {
        case PromptKind::FormulateFiveElement:
        case PromptKind::SpecFromProblem:
            return {kProblemDescription};
        case PromptKind::SpecFromFiveElement:
            return {kFiveElement};
        case PromptKind::SelfCorrect:
            return {kProblemDescription, kFiveElement, kSolverCode, kOutputInformations,
                    kErrorInformations};
        default:
            return {kOriginalProblem};
    }
}

inline void replace_all(std::string& text, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace prompt_detail

// Byte-stable template instantiation: the same kind and bindings always
// produce identical text. Templates contain literal braces (LaTeX), so only
// the declared placeholders are substituted.
inline std::string render_prompt(PromptKind kind,
                                 const std::map<std::string, std::string>& bindings) {
    std::string text = prompt_detail::template_text(kind);
    for (const auto& name : prompt_detail::template_placeholders(kind)) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw MissingPlaceholder(name);
        prompt_detail::replace_all(text, "{" + name + "}", it->second);
    }
    return text;
}

// Decoding temperature defaults: deterministic where correctness is judged,
// diverse for augmentation.
inline double default_temperature(PromptKind kind) {
    switch (kind) {
        case PromptKind::FormulateFiveElement:
        case PromptKind::SpecFromFiveElement:
        case PromptKind::SpecFromProblem:
        case PromptKind::SelfCorrect:
            return 0.0;
        default:
            return 0.7;
    }
}

// ---------------------------------------------------------------------------
// Judgment parsing
// ---------------------------------------------------------------------------

struct Judgment {
    bool five_element_ok = false;
    bool spec_ok = false;
    std::string analysis;

    friend bool operator==(const Judgment& a, const Judgment& b) {
        return a.five_element_ok == b.five_element_ok && a.spec_ok == b.spec_ok &&
               a.analysis == b.analysis;
    }
};

namespace prompt_detail {

inline std::string lower_copy(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string trim_copy(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Finds `marker` in `hay` (both lowercase) and reads the following
// True/False token, skipping template punctuation.
inline bool read_verdict(const std::string& hay, const std::string& marker, bool& out) {
    size_t pos = hay.find(marker);
    if (pos == std::string::npos) return false;
    size_t i = pos + marker.size();
    while (i < hay.size() &&
           (hay[i] == ' ' || hay[i] == '[' || hay[i] == '*' || hay[i] == ':' || hay[i] == '\t'))
        ++i;
    if (hay.compare(i, 4, "true") == 0) {
        out = true;
        return true;
    }
    if (hay.compare(i, 5, "false") == 0) {
        out = false;
        return true;
    }
    return false;
}

}  // namespace prompt_detail

// Fills the judgment skeleton of the self-correction template.
inline std::string render_judgment(bool five_element_ok, bool spec_ok,
                                   const std::string& analysis) {
    std::string out = "The five-element is ";
    out += five_element_ok ? "True" : "False";
    out += ".\n\nThe code is ";
    out += spec_ok ? "True" : "False";
    out += ".\n\nAnalysis:\n";
    out += analysis;
    out += "\n";
    return out;
}

// Total: any response yields a judgment. If either verdict is missing, both
// default to False and the whole response becomes the analysis.
inline Judgment parse_judgment(const std::string& response) {
    using namespace prompt_detail;
    std::string hay = lower_copy(response);
    Judgment j;
    bool got_five = read_verdict(hay, "the five-element is", j.five_element_ok);
    bool got_spec = read_verdict(hay, "the code is", j.spec_ok);
    if (!got_five || !got_spec) {
        return Judgment{false, false, trim_copy(response)};
    }
    size_t apos = hay.find("analysis:");
    if (apos != std::string::npos) {
        std::string tail = response.substr(apos + std::string("analysis:").size());
        // Strip a trailing code-fence line if the model closed the template.
        std::string trimmed = trim_copy(tail);
        while (trimmed.size() >= 3 && trimmed.compare(trimmed.size() - 3, 3, "```") == 0)
            trimmed = trim_copy(trimmed.substr(0, trimmed.size() - 3));
        j.analysis = trimmed;
    }
    return j;
}

}  // namespace optloop
