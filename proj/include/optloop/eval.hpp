#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include <optloop/pipeline.hpp>

namespace optloop {

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct ProblemRecord {
    std::string id;
    std::string problem;
    std::optional<double> answer;  // ground-truth optimum; absent by design
                                   // for several benchmark sources
    std::string type;              // LP|IP|MIP|NP|CO|MOP|Other (optional)
    std::string scenario;          // optional
};

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSONL: one {id, problem, answer?, type?, scenario?} object per line.
inline std::vector<ProblemRecord> load_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DatasetError("cannot open dataset: " + path);
    std::vector<ProblemRecord> records;
    std::map<std::string, int> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string trimmed = fe_detail::trim(line);
        if (trimmed.empty()) continue;
        auto j = nlohmann::json::parse(trimmed, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("problem"))
            throw DatasetError("malformed line " + std::to_string(lineno) + " in " + path);
        ProblemRecord r;
        r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        r.problem = j["problem"].get<std::string>();
        if (j.contains("answer") && j["answer"].is_number())
            r.answer = j["answer"].get<double>();
        r.type = j.value("type", std::string{});
        r.scenario = j.value("scenario", std::string{});
        if (!std::isfinite(r.answer.value_or(0.0)))
            throw DatasetError("non-finite answer at line " + std::to_string(lineno));
        if (++seen[r.id] > 1) throw DatasetError("duplicate id '" + r.id + "'");
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct ToleranceSpec {
    double abs_tol = 1e-6;
    double rel_tol = 1e-4;

    bool matches(double value, double truth) const {
        return std::abs(value - truth) <= std::max(abs_tol, rel_tol * std::abs(truth));
    }
};

struct ScoreRow {
    std::string id;
    std::string status;
    bool executable = false;
    bool correct = false;
    int solving_times = 1;
    std::optional<double> objective;
    std::optional<double> truth;
    std::string type;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["id"] = id;
        j["status"] = status;
        j["executable"] = executable;
        j["correct"] = correct;
        j["solving_times"] = solving_times;
        j["objective"] = objective ? nlohmann::json(*objective) : nlohmann::json(nullptr);
        j["truth"] = truth ? nlohmann::json(*truth) : nlohmann::json(nullptr);
        if (!type.empty()) j["type"] = type;
        return j;
    }

    static ScoreRow from_json(const nlohmann::json& j) {
        ScoreRow r;
        r.id = j.value("id", std::string{});
        r.status = j.value("status", std::string{});
        r.executable = j.value("executable", false);
        r.correct = j.value("correct", false);
        r.solving_times = j.value("solving_times", 1);
        if (j.contains("objective") && j["objective"].is_number())
            r.objective = j["objective"].get<double>();
        if (j.contains("truth") && j["truth"].is_number()) r.truth = j["truth"].get<double>();
        r.type = j.value("type", std::string{});
        return r;
    }
};

// executable: some Execute stage ran to a result; correct: the final
// outcome is Optimal and matches ground truth within tolerance. Problems
// without ground truth always score correct = false.
inline ScoreRow score_run(const PipelineTrace& trace, const ProblemRecord& record,
                          const ToleranceSpec& tol = {}) {
    ScoreRow row;
    row.id = record.id;
    row.status = pipeline_status_name(trace.status);
    row.type = record.type;
    row.truth = record.answer;
    row.executable = trace.executable();
    row.solving_times = std::max(1, trace.solving_times);
    if (trace.final_outcome && trace.final_outcome->objective)
        row.objective = trace.final_outcome->objective;
    row.correct = trace.final_outcome &&
                  trace.final_outcome->status == SolveStatus::Optimal && record.answer &&
                  row.objective && tol.matches(*row.objective, *record.answer);
    return row;
}

// ---------------------------------------------------------------------------
// Aggregation and reports
// ---------------------------------------------------------------------------

struct MetricTriple {
    double er = 0.0;   // execution rate
    double sa = 0.0;   // solving accuracy
    double ast = 0.0;  // average solving times
    int count = 0;
};

struct EvalReport {
    std::vector<ScoreRow> rows;
    MetricTriple total;
    std::map<std::string, MetricTriple> by_type;
    int missing_truth = 0;  // rows scored correct=false for lack of a label
    bool incomplete = false;
    nlohmann::json config;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["rows"] = nlohmann::json::array();
        for (const auto& r : rows) j["rows"].push_back(r.to_json());
        j["er"] = total.er;
        j["sa"] = total.sa;
        j["ast"] = total.ast;
        j["count"] = total.count;
        j["missing_truth"] = missing_truth;
        j["incomplete"] = incomplete;
        nlohmann::json bt = nlohmann::json::object();
        for (const auto& [k, v] : by_type)
            bt[k] = {{"er", v.er}, {"sa", v.sa}, {"ast", v.ast}, {"count", v.count}};
        j["by_type"] = std::move(bt);
        if (!config.is_null()) j["config"] = config;
        return j;
    }
};

inline EvalReport aggregate(const std::vector<ScoreRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("aggregate: empty row set");
    EvalReport rep;
    rep.rows = rows;
    auto fold = [](MetricTriple& m, const ScoreRow& r) {
        m.er += r.executable ? 1.0 : 0.0;
        m.sa += r.correct ? 1.0 : 0.0;
        m.ast += r.solving_times;
        ++m.count;
    };
    auto close = [](MetricTriple& m) {
        if (m.count == 0) return;
        m.er /= m.count;
        m.sa /= m.count;
        m.ast /= m.count;
    };
    for (const auto& r : rows) {
        fold(rep.total, r);
        if (!r.type.empty()) fold(rep.by_type[r.type], r);
        if (!r.truth) ++rep.missing_truth;
    }
    close(rep.total);
    for (auto& [k, v] : rep.by_type) close(v);
    return rep;
}

// Plain-text table mirroring the ER / SA / AST column layout of the
// ablation tables.
inline std::string render_report_table(const EvalReport& rep,
                                       const std::string& dataset_name = "all") {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-20s %10s %10s %10s\n", "Dataset", "ER", "SA", "AST");
    out += buf;
    auto line = [&](const std::string& label, const MetricTriple& m) {
        std::snprintf(buf, sizeof(buf), "%-20s %9.1f%% %9.1f%% %10.2f\n", label.c_str(),
                      m.er * 100.0, m.sa * 100.0, m.ast);
        out += buf;
    };
    line(dataset_name, rep.total);
    for (const auto& [type, m] : rep.by_type) line("  " + type, m);
    if (rep.missing_truth > 0)
        out += "(" + std::to_string(rep.missing_truth) +
               " rows lack ground truth and score correct = false)\n";
    if (rep.incomplete) out += "(report incomplete: evaluation was interrupted)\n";
    return out;
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

struct BestOfNResult {
    std::vector<PipelineTrace> traces;
    int selected = -1;  // first correct repeat, else first executable, else 0
    bool correct = false;
};

// Repeats n independent single-attempt runs (self-correction disabled) and
// scores the run correct if ANY repeat matched the ground truth.
inline BestOfNResult run_best_of_n(const std::string& problem, int n,
                                   const PipelineConfig& base_config, ChatClient& client,
                                   const ProblemRecord& record, const ToleranceSpec& tol = {}) {
    if (n < 1) throw std::invalid_argument("run_best_of_n: n must be >= 1");
    BestOfNResult out;
    int first_executable = -1;
    for (int k = 0; k < n; ++k) {
        PipelineConfig config = base_config;
        config.no_self_correction = true;
        PipelineTrace trace = run_pipeline_ablated(problem, config, client);
        ScoreRow row = score_run(trace, record, tol);
        if (row.executable && first_executable < 0) first_executable = k;
        out.traces.push_back(std::move(trace));
        if (row.correct && !out.correct) {
            out.correct = true;
            out.selected = k;
        }
    }
    if (out.selected < 0) out.selected = first_executable >= 0 ? first_executable : 0;
    return out;
}

struct EvalOptions {
    int workers = 1;
    int best_of = 0;  // 0 = the normal self-correction pipeline
    ToleranceSpec tolerance;
    const std::atomic<bool>* stop = nullptr;  // cooperative shutdown flag
};

// Evaluates a dataset, problems in parallel up to the worker limit, then a
// sequential aggregation fold.
inline EvalReport run_eval(const std::vector<ProblemRecord>& records,
                           const PipelineConfig& config, ChatClient& client,
                           const EvalOptions& opt = {}) {
    if (records.empty()) throw DatasetError("dataset has no records");
    std::vector<std::optional<ScoreRow>> slots(records.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> stopped{false};

    auto worker = [&] {
        while (true) {
            if (opt.stop && opt.stop->load()) {
                stopped = true;
                return;
            }
            size_t i = next.fetch_add(1);
            if (i >= records.size()) return;
            const ProblemRecord& rec = records[i];
            if (opt.best_of > 0) {
                BestOfNResult b =
                    run_best_of_n(rec.problem, opt.best_of, config, client, rec, opt.tolerance);
                ScoreRow row = score_run(b.traces[static_cast<size_t>(b.selected)], rec,
                                         opt.tolerance);
                row.correct = b.correct;
                bool any_exec = false;
                for (const auto& t : b.traces) any_exec = any_exec || t.executable();
                row.executable = any_exec;
                row.solving_times = opt.best_of;  // one solve per repeat
                slots[i] = std::move(row);
            } else {
                PipelineTrace trace = run_pipeline(rec.problem, config, client);
                slots[i] = score_run(trace, rec, opt.tolerance);
            }
        }
    };

    int nworkers = std::max(1, opt.workers);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nworkers));
    for (int i = 0; i < nworkers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::vector<ScoreRow> rows;
    for (auto& s : slots)
        if (s) rows.push_back(std::move(*s));
    if (rows.empty()) throw DatasetError("no problems completed before shutdown");
    EvalReport rep = aggregate(rows);
    rep.incomplete = stopped && rows.size() != records.size();
    rep.config = config.to_json();
    return rep;
}

}  // namespace optloop
