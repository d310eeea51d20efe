#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <optloop/compiler.hpp>
#include <optloop/five_element.hpp>
#include <optloop/gateway.hpp>
#include <optloop/prompts.hpp>
#include <optloop/solver.hpp>

namespace optloop {

// ---------------------------------------------------------------------------
// Configuration and trace types
// ---------------------------------------------------------------------------

struct PipelineConfig {
    int cap = 12;  // maximum number of solve (Execute) entries
    bool skip_five_element = false;
    bool no_self_correction = false;
    double temperature_formulate = 0.0;
    double temperature_spec = 0.0;
    double temperature_judge = 0.0;
    SolveOptions solve;

    nlohmann::json to_json() const {
        return {{"cap", cap},
                {"skip_five_element", skip_five_element},
                {"no_self_correction", no_self_correction},
                {"temperatures",
                 {{"formulate", temperature_formulate},
                  {"spec", temperature_spec},
                  {"judge", temperature_judge}}}};
    }
};

enum class Stage { Formulate, SpecGen, Execute, Judge };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Formulate: return "formulate";
        case Stage::SpecGen: return "spec_gen";
        case Stage::Execute: return "execute";
        case Stage::Judge: return "judge";
    }
    return "?";
}

enum class PipelineStatus { Solved, ExhaustedRetries, Aborted };

inline const char* pipeline_status_name(PipelineStatus s) {
    switch (s) {
        case PipelineStatus::Solved: return "solved";
        case PipelineStatus::ExhaustedRetries: return "exhausted_retries";
        case PipelineStatus::Aborted: return "aborted";
    }
    return "?";
}

struct Attempt {
    Stage stage = Stage::Formulate;
    bool ok = false;  // the stage's own success (parse ok, judge parsed, ...)
    // Gateway stages: the prompt re-renders byte-identically from
    // (prompt_kind, bindings).
    std::optional<PromptKind> prompt_kind;
    std::map<std::string, std::string> bindings;
    std::string prompt;
    std::string response;
    std::string transport_error;
    std::string artifact;  // canonical five-element text or solve-spec JSON text
    std::vector<Diagnostic> diagnostics;
    std::string parse_error;
    std::optional<SolveOutcome> outcome;   // Execute
    std::optional<Judgment> judgment;      // Judge

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["stage"] = stage_name(stage);
        j["ok"] = ok;
        if (prompt_kind) {
            j["prompt_kind"] = prompt_kind_name(*prompt_kind);
            j["bindings"] = bindings;
            j["prompt"] = prompt;
            j["response"] = response;
        }
        if (!transport_error.empty()) j["transport_error"] = transport_error;
        if (!artifact.empty()) j["artifact"] = artifact;
        if (!diagnostics.empty()) j["diagnostics"] = diagnostics_to_json(diagnostics);
        if (!parse_error.empty()) j["parse_error"] = parse_error;
        if (outcome) j["outcome"] = outcome->to_json();
        if (judgment)
            j["judgment"] = {{"five_element", judgment->five_element_ok},
                             {"code", judgment->spec_ok},
                             {"analysis", judgment->analysis}};
        return j;
    }
};

struct PipelineTrace {
    std::string problem;
    PipelineStatus status = PipelineStatus::Aborted;
    int solving_times = 0;  // number of Execute stages entered
    std::vector<Attempt> attempts;
    // Solved: the final execute outcome. Exhausted: the last Optimal
    // execute outcome if any, else the last outcome.
    std::optional<SolveOutcome> final_outcome;
    PipelineConfig config;
    std::string abort_reason;

    bool executable() const {
        for (const auto& a : attempts)
            if (a.stage == Stage::Execute && a.outcome &&
                a.outcome->status != SolveStatus::NotExecutable)
                return true;
        return false;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["problem"] = problem;
        j["status"] = pipeline_status_name(status);
        j["solving_times"] = solving_times;
        j["config"] = config.to_json();
        if (!abort_reason.empty()) j["abort_reason"] = abort_reason;
        j["final_outcome"] =
            final_outcome ? final_outcome->to_json() : nlohmann::json(nullptr);
        j["attempts"] = nlohmann::json::array();
        for (const auto& a : attempts) j["attempts"].push_back(a.to_json());
        return j;
    }
};

// ---------------------------------------------------------------------------
// Response post-processing
// ---------------------------------------------------------------------------

// Pulls the solve-spec JSON out of an LLM response: the last fenced block
// that parses as a JSON object wins; otherwise the whole message is tried.
inline std::optional<std::string> extract_json_document(const std::string& response) {
    auto lines = fe_detail::split_lines(response);
    std::vector<std::string> blocks;
    std::string current;
    bool in_fence = false;
    for (const auto& raw : lines) {
        std::string t = fe_detail::trim(raw);
        if (t.rfind("```", 0) == 0) {
            if (in_fence) {
                blocks.push_back(current);
                current.clear();
            }
            in_fence = !in_fence;
            continue;
        }
        if (in_fence) {
            current += raw;
            current += '\n';
        }
    }
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        auto j = nlohmann::json::parse(*it, nullptr, false);
        if (!j.is_discarded() && j.is_object()) return fe_detail::trim(*it);
    }
    auto whole = nlohmann::json::parse(response, nullptr, false);
    if (!whole.is_discarded() && whole.is_object()) return fe_detail::trim(response);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// The auto-testing loop
// ---------------------------------------------------------------------------

// State machine: Formulate -> SpecGen -> Execute -> Judge, with judgment
// verdicts routing back to Formulate or SpecGen. Every Execute entry counts
// toward the cap; stage-local parse failures re-enter their own stage and
// are separately bounded by the cap so the loop always terminates.
inline PipelineTrace run_pipeline(const std::string& problem, const PipelineConfig& config,
                                  ChatClient& client) {
    PipelineTrace trace;
    trace.problem = problem;
    trace.config = config;

    std::string five_text;  // canonical render of the accepted formulation
    std::string spec_text;  // accepted solve-spec JSON text
    std::optional<CanonicalModel> model;
    std::optional<SolveOutcome> last_outcome;
    std::optional<SolveOutcome> last_optimal;
    int formulate_failures = 0;
    int specgen_failures = 0;

    auto finish = [&](PipelineStatus status, std::string reason = "") {
        trace.status = status;
        trace.abort_reason = std::move(reason);
        if (status == PipelineStatus::Solved)
            trace.final_outcome = last_outcome;
        else
            trace.final_outcome = last_optimal ? last_optimal : last_outcome;
        return trace;
    };

    auto call_gateway = [&](Attempt& attempt, PromptKind kind,
                            std::map<std::string, std::string> bindings,
                            double temperature) -> bool {
        attempt.prompt_kind = kind;
        attempt.bindings = std::move(bindings);
        attempt.prompt = render_prompt(kind, attempt.bindings);
        ChatExchange ex = client.complete(attempt.prompt, temperature);
        attempt.response = ex.response;
        if (!ex.ok()) {
            attempt.transport_error =
                std::string(transport_status_name(ex.status)) + ": " + ex.error;
            return false;
        }
        return true;
    };

    Stage stage = config.skip_five_element ? Stage::SpecGen : Stage::Formulate;
    while (true) {
        switch (stage) {
            case Stage::Formulate: {
                Attempt attempt;
                attempt.stage = Stage::Formulate;
                if (!call_gateway(attempt, PromptKind::FormulateFiveElement,
                                  {{kProblemDescription, problem}},
                                  config.temperature_formulate)) {
                    std::string reason = attempt.transport_error;
                    trace.attempts.push_back(std::move(attempt));
                    return finish(PipelineStatus::Aborted, reason);
                }
                ParseResult parsed = parse_five_element(attempt.response);
                if (parsed.ok()) {
                    five_text = render_five_element(*parsed.model);
                    attempt.artifact = five_text;
                    attempt.ok = true;
                    trace.attempts.push_back(std::move(attempt));
                    stage = Stage::SpecGen;
                } else {
                    attempt.diagnostics = parsed.diagnostics;
                    trace.attempts.push_back(std::move(attempt));
                    if (++formulate_failures >= config.cap)
                        return finish(PipelineStatus::ExhaustedRetries,
                                      "formulation never parsed");
                }
                break;
            }
            case Stage::SpecGen: {
                Attempt attempt;
                attempt.stage = Stage::SpecGen;
                PromptKind kind = config.skip_five_element ? PromptKind::SpecFromProblem
                                                           : PromptKind::SpecFromFiveElement;
                std::map<std::string, std::string> bindings =
                    config.skip_five_element
                        ? std::map<std::string, std::string>{{kProblemDescription, problem}}
                        : std::map<std::string, std::string>{{kFiveElement, five_text}};
                if (!call_gateway(attempt, kind, std::move(bindings),
                                  config.temperature_spec)) {
                    std::string reason = attempt.transport_error;
                    trace.attempts.push_back(std::move(attempt));
                    return finish(PipelineStatus::Aborted, reason);
                }
                auto json_text = extract_json_document(attempt.response);
                SpecParseResult parsed =
                    json_text ? parse_solve_spec_text(*json_text)
                              : SpecParseResult{std::nullopt, "no JSON object in response"};
                if (parsed.ok()) {
                    spec_text = *json_text;
                    model = std::move(parsed.model);
                    attempt.artifact = spec_text;
                    attempt.ok = true;
                    trace.attempts.push_back(std::move(attempt));
                    stage = Stage::Execute;
                } else {
                    attempt.parse_error = parsed.error;
                    trace.attempts.push_back(std::move(attempt));
                    if (++specgen_failures >= config.cap)
                        return finish(PipelineStatus::ExhaustedRetries,
                                      "solve-spec never parsed");
                }
                break;
            }
            case Stage::Execute: {
                Attempt attempt;
                attempt.stage = Stage::Execute;
                attempt.artifact = spec_text;
                SolveOutcome outcome = solve_model(*model, config.solve);
                ++trace.solving_times;
                attempt.ok = outcome.status != SolveStatus::NotExecutable;
                last_outcome = outcome;
                if (outcome.status == SolveStatus::Optimal) last_optimal = outcome;
                attempt.outcome = std::move(outcome);
                trace.attempts.push_back(std::move(attempt));
                if (config.no_self_correction) {
                    return finish(last_outcome->status == SolveStatus::Optimal
                                      ? PipelineStatus::Solved
                                      : PipelineStatus::ExhaustedRetries);
                }
                stage = Stage::Judge;
                break;
            }
            case Stage::Judge: {
                Attempt attempt;
                attempt.stage = Stage::Judge;
                nlohmann::json output = {
                    {"status", solve_status_name(last_outcome->status)},
                    {"objective", last_outcome->objective
                                      ? nlohmann::json(*last_outcome->objective)
                                      : nlohmann::json(nullptr)}};
                nlohmann::json assign = nlohmann::json::object();
                for (const auto& [k, v] : last_outcome->assignment) assign[k] = v;
                output["assignment"] = std::move(assign);
                std::map<std::string, std::string> bindings = {
                    {kProblemDescription, problem},
                    {kFiveElement, five_text},
                    {kSolverCode, spec_text},
                    {kOutputInformations, output.dump(2)},
                    {kErrorInformations, last_outcome->log},
                };
                if (!call_gateway(attempt, PromptKind::SelfCorrect, std::move(bindings),
                                  config.temperature_judge)) {
                    std::string reason = attempt.transport_error;
                    trace.attempts.push_back(std::move(attempt));
                    return finish(PipelineStatus::Aborted, reason);
                }
                Judgment j = parse_judgment(attempt.response);
                attempt.judgment = j;
                attempt.ok = true;
                trace.attempts.push_back(std::move(attempt));
                if (j.five_element_ok && j.spec_ok &&
                    last_outcome->status == SolveStatus::Optimal)
                    return finish(PipelineStatus::Solved);
                // (false, .) returns to formulation; (true, false) to spec
                // generation. A (true, true) verdict on a non-optimal run is
                // treated as a spec problem.
                Stage route = (!j.five_element_ok && !config.skip_five_element)
                                  ? Stage::Formulate
                                  : Stage::SpecGen;
                if (trace.solving_times >= config.cap)
                    return finish(PipelineStatus::ExhaustedRetries, "solve cap reached");
                stage = route;
                break;
            }
        }
    }
}

// Table-4-style ablations: `skip_five_element` removes the formulation
// stage (solve-specs are generated straight from the problem), and
// `no_self_correction` removes the judge stage and forces the cap to 1.
inline PipelineTrace run_pipeline_ablated(const std::string& problem, PipelineConfig config,
                                          ChatClient& client) {
    if (config.no_self_correction) config.cap = 1;
    return run_pipeline(problem, config, client);
}

}  // namespace optloop
