// optloop: formulate, solve and evaluate natural-language optimization
// problems through a five-element intermediate representation, embedded
// LP/MILP solvers and a self-correcting LLM loop.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include <optloop/alignment.hpp>
#include <optloop/dataforge.hpp>
#include <optloop/eval.hpp>
#include <optloop/pipeline.hpp>

namespace {

constexpr int kExitSolved = 0;
constexpr int kExitExhausted = 2;
constexpr int kExitAborted = 3;
constexpr int kExitConfig = 64;
constexpr int kExitData = 65;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

std::string read_file_or_die(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        std::cerr << "error: cannot open " << path << "\n";
        std::exit(kExitData);
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Settings resolved with precedence: CLI flag > environment variable >
// config file > built-in default.
struct Settings {
    std::string endpoint;
    std::string api_key;
    std::string model;
    std::string mock_script;
    int cap = 12;
    bool skip_five_element = false;
    bool no_self_correction = false;
    double temperature_formulate = 0.0;
    double temperature_spec = 0.0;
    double temperature_judge = 0.0;
    double abs_tol = 1e-6;
    double rel_tol = 1e-4;
    int workers = 1;
    int best_of = 0;
    int max_concurrent = 4;
    int requests_per_minute = 600;
};

struct SettingsCli {
    std::string config_file;
    Settings s;
    CLI::Option* endpoint_opt = nullptr;
    CLI::Option* api_key_opt = nullptr;
    CLI::Option* model_opt = nullptr;
    CLI::Option* mock_opt = nullptr;
    CLI::Option* cap_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
    CLI::Option* abs_opt = nullptr;
    CLI::Option* rel_opt = nullptr;
};

void add_common_options(CLI::App* cmd, SettingsCli& sc, bool pipeline_opts) {
    cmd->add_option("--config", sc.config_file, "JSON config file");
    sc.endpoint_opt =
        cmd->add_option("--endpoint", sc.s.endpoint, "chat-completions base URL");
    sc.api_key_opt = cmd->add_option("--api-key", sc.s.api_key, "API key");
    sc.model_opt = cmd->add_option("--model", sc.s.model, "model name");
    sc.mock_opt = cmd->add_option("--mock-script", sc.s.mock_script,
                                  "scripted mock client JSON file");
    if (pipeline_opts) {
        sc.cap_opt = cmd->add_option("--cap", sc.s.cap, "max solve attempts (default 12)");
        cmd->add_flag("--skip-five-element", sc.s.skip_five_element,
                      "generate solve-specs directly from the problem");
        cmd->add_flag("--no-self-correction", sc.s.no_self_correction,
                      "single attempt, no judge stage");
        sc.workers_opt = cmd->add_option("--workers", sc.s.workers, "parallel workers");
        sc.abs_opt = cmd->add_option("--abs-tol", sc.s.abs_tol, "absolute answer tolerance");
        sc.rel_opt = cmd->add_option("--rel-tol", sc.s.rel_tol, "relative answer tolerance");
        cmd->add_option("--max-concurrent", sc.s.max_concurrent,
                        "gateway concurrency limit (default 4)");
        cmd->add_option("--requests-per-minute", sc.s.requests_per_minute,
                        "gateway request budget per minute (default 600)");
    }
}

// Applies config file and environment for values the flags did not set.
void resolve_settings(SettingsCli& sc) {
    nlohmann::json cfg = nlohmann::json::object();
    if (!sc.config_file.empty()) {
        std::ifstream f(sc.config_file);
        if (!f) {
            std::cerr << "error: cannot open config " << sc.config_file << "\n";
            std::exit(kExitConfig);
        }
        std::stringstream ss;
        ss << f.rdbuf();
        cfg = nlohmann::json::parse(ss.str(), nullptr, false);
        if (cfg.is_discarded() || !cfg.is_object()) {
            std::cerr << "error: config file is not a JSON object\n";
            std::exit(kExitConfig);
        }
    }
    auto resolve_str = [&](CLI::Option* opt, std::string& value, const char* env,
                           const char* key) {
        if (opt && opt->count() > 0) return;
        if (env) {
            if (const char* v = std::getenv(env)) {
                value = v;
                return;
            }
        }
        if (cfg.contains(key) && cfg[key].is_string()) value = cfg[key].get<std::string>();
    };
    resolve_str(sc.endpoint_opt, sc.s.endpoint, "OPTLOOP_ENDPOINT", "endpoint");
    resolve_str(sc.api_key_opt, sc.s.api_key, "OPTLOOP_API_KEY", "api_key");
    resolve_str(sc.model_opt, sc.s.model, "OPTLOOP_MODEL", "model");
    resolve_str(sc.mock_opt, sc.s.mock_script, nullptr, "mock_script");
    if ((!sc.cap_opt || sc.cap_opt->count() == 0) && cfg.contains("cap"))
        sc.s.cap = cfg["cap"].get<int>();
    if ((!sc.workers_opt || sc.workers_opt->count() == 0) && cfg.contains("workers"))
        sc.s.workers = cfg["workers"].get<int>();
    if ((!sc.abs_opt || sc.abs_opt->count() == 0) && cfg.contains("abs_tol"))
        sc.s.abs_tol = cfg["abs_tol"].get<double>();
    if ((!sc.rel_opt || sc.rel_opt->count() == 0) && cfg.contains("rel_tol"))
        sc.s.rel_tol = cfg["rel_tol"].get<double>();
    if (cfg.contains("skip_five_element"))
        sc.s.skip_five_element = sc.s.skip_five_element || cfg["skip_five_element"].get<bool>();
    if (cfg.contains("no_self_correction"))
        sc.s.no_self_correction =
            sc.s.no_self_correction || cfg["no_self_correction"].get<bool>();
    if (cfg.contains("temperatures") && cfg["temperatures"].is_object()) {
        const auto& t = cfg["temperatures"];
        sc.s.temperature_formulate = t.value("formulate", sc.s.temperature_formulate);
        sc.s.temperature_spec = t.value("spec", sc.s.temperature_spec);
        sc.s.temperature_judge = t.value("judge", sc.s.temperature_judge);
    }
}

// Pipeline commands need exactly one of a live endpoint or a mock script.
std::unique_ptr<optloop::ChatClient> make_client(const Settings& s) {
    bool have_live = !s.endpoint.empty();
    bool have_mock = !s.mock_script.empty();
    if (have_live == have_mock) {
        std::cerr << "error: configure exactly one of --endpoint or --mock-script\n";
        std::exit(kExitConfig);
    }
    if (have_mock) {
        try {
            return std::make_unique<optloop::MockChatClient>(
                optloop::MockChatClient::load_script(s.mock_script));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            std::exit(kExitConfig);
        }
    }
    optloop::GatewayConfig gc;
    gc.endpoint = s.endpoint;
    gc.api_key = s.api_key;
    gc.model = s.model;
    return std::make_unique<optloop::HttpChatClient>(gc);
}

optloop::PipelineConfig pipeline_config(const Settings& s) {
    optloop::PipelineConfig pc;
    pc.cap = s.cap;
    pc.skip_five_element = s.skip_five_element;
    pc.no_self_correction = s.no_self_correction;
    pc.temperature_formulate = s.temperature_formulate;
    pc.temperature_spec = s.temperature_spec;
    pc.temperature_judge = s.temperature_judge;
    return pc;
}

int cmd_solve(const Settings& s, const std::string& problem, const std::string& trace_out) {
    if (s.cap < 1) {
        std::cerr << "error: --cap must be >= 1\n";
        return kExitConfig;
    }
    auto client = make_client(s);
    auto limiter =
        std::make_shared<optloop::RateLimiter>(s.max_concurrent, s.requests_per_minute);
    optloop::LimitedChatClient limited(*client, limiter);
    optloop::PipelineTrace trace =
        optloop::run_pipeline_ablated(problem, pipeline_config(s), limited);

    std::cout << "status: " << optloop::pipeline_status_name(trace.status) << "\n";
    std::cout << "solving_times: " << trace.solving_times << "\n";
    if (trace.final_outcome) {
        const auto& o = *trace.final_outcome;
        std::cout << "outcome: " << optloop::solve_status_name(o.status) << "\n";
        if (o.objective) std::cout << "objective: " << optloop::format_number(*o.objective) << "\n";
        for (const auto& [name, value] : o.assignment)
            std::cout << "  " << name << " = " << optloop::format_number(value) << "\n";
    }
    if (!trace_out.empty()) {
        std::string text = trace.to_json().dump(2);
        if (trace_out == "-") {
            std::cout << text << "\n";
        } else {
            std::ofstream out(trace_out);
            if (!out) {
                std::cerr << "error: cannot write " << trace_out << "\n";
                return kExitData;
            }
            out << text << "\n";
        }
    }
    switch (trace.status) {
        case optloop::PipelineStatus::Solved: return kExitSolved;
        case optloop::PipelineStatus::ExhaustedRetries: return kExitExhausted;
        case optloop::PipelineStatus::Aborted: return kExitAborted;
    }
    return kExitAborted;
}

int cmd_eval(const Settings& s, const std::string& dataset, const std::string& report_out) {
    if (s.cap < 1) {
        std::cerr << "error: --cap must be >= 1\n";
        return kExitConfig;
    }
    std::vector<optloop::ProblemRecord> records;
    try {
        records = optloop::load_dataset(dataset);
        if (records.empty()) throw optloop::DatasetError("dataset is empty: " + dataset);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    if (s.best_of < 0) {
        std::cerr << "error: --best-of must be >= 0\n";
        return kExitConfig;
    }
    auto client = make_client(s);
    auto limiter =
        std::make_shared<optloop::RateLimiter>(s.max_concurrent, s.requests_per_minute);
    optloop::LimitedChatClient limited(*client, limiter);
    optloop::EvalOptions opt;
    opt.workers = s.workers;
    opt.best_of = s.best_of;
    opt.tolerance = {s.abs_tol, s.rel_tol};
    opt.stop = &g_stop;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    optloop::EvalReport report;
    try {
        report = optloop::run_eval(records, pipeline_config(s), limited, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    std::cout << optloop::render_report_table(report, dataset);
    if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!out) {
            std::cerr << "error: cannot write " << report_out << "\n";
            return kExitData;
        }
        out << report.to_json().dump(2) << "\n";
    }
    return kExitSolved;
}

int cmd_augment_prompt(int rule, const std::string& seed, const std::string& partner) {
    try {
        optloop::SeedProblem a{"seed", seed, ""};
        std::optional<optloop::SeedProblem> b;
        if (!partner.empty()) b = optloop::SeedProblem{"partner", partner, ""};
        std::cout << optloop::make_augmentation_prompt(a, rule, b) << "\n";
        return kExitSolved;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

int cmd_kto_loss(const std::string& records_path, double beta, double lambda_d,
                 double lambda_u) {
    try {
        auto records = optloop::load_preference_records(records_path);
        if (records.empty()) {
            std::cerr << "error: no preference records in " << records_path << "\n";
            return kExitData;
        }
        optloop::KtoParams params{beta, lambda_d, lambda_u};
        std::vector<optloop::ScoredCompletion> batch;
        for (const auto& r : records) batch.push_back(r.completion);
        double z_ref = optloop::kto_reference_point(batch, params);
        for (size_t i = 0; i < records.size(); ++i) {
            double reward = optloop::kto_reward(batch[i], params);
            double value = optloop::kto_value(batch[i], z_ref, params);
            std::cout << records[i].id << " desirable=" << (batch[i].desirable ? "true" : "false")
                      << " reward=" << optloop::format_number(reward)
                      << " value=" << optloop::format_number(value) << "\n";
        }
        std::cout << "z_ref: " << optloop::format_number(z_ref) << "\n";
        std::cout << "kto_loss: "
                  << optloop::format_number(
                         optloop::kto_loss_with_reference(batch, z_ref, params))
                  << "\n";
        return kExitSolved;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int cmd_build(const std::string& records_path, const std::string& out_path, bool kto) {
    try {
        auto records = optloop::load_labeled_records(records_path);
        std::string payload;
        size_t count = 0;
        if (kto) {
            auto triples = optloop::build_kto_dataset(records);
            payload = optloop::kto_to_jsonl(triples);
            count = triples.size();
        } else {
            auto pairs = optloop::build_sft_dataset(records);
            payload = optloop::sft_to_jsonl(pairs);
            count = pairs.size();
        }
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return kExitData;
        }
        out << payload;
        std::cout << "wrote " << count << (kto ? " KTO triples to " : " SFT pairs to ")
                  << out_path << "\n";
        return kExitSolved;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"formulate, solve and evaluate natural-language optimization problems"};
    app.require_subcommand(1);

    // solve
    auto* solve = app.add_subcommand("solve", "run the pipeline on one problem");
    SettingsCli solve_sc;
    std::string problem_text, problem_file, trace_out;
    solve->add_option("--problem", problem_text, "problem text");
    solve->add_option("--problem-file", problem_file, "file with the problem text");
    solve->add_option("--trace", trace_out, "write the trace JSON here ('-' = stdout)");
    add_common_options(solve, solve_sc, true);

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a JSONL dataset");
    SettingsCli eval_sc;
    std::string dataset_path, report_out;
    eval->add_option("--dataset", dataset_path, "JSONL dataset")->required();
    eval->add_option("--report", report_out, "write the report JSON here");
    add_common_options(eval, eval_sc, true);
    eval->add_option("--best-of", eval_sc.s.best_of,
                     "best-of-N baseline (independent single attempts)");

    // augment-prompt
    auto* augment = app.add_subcommand("augment-prompt", "render a data-augmentation prompt");
    int rule = 0;
    std::string seed_text, seed_file, partner_text, partner_file;
    augment->add_option("--rule", rule, "augmentation rule 1..7")->required();
    augment->add_option("--seed", seed_text, "seed problem text");
    augment->add_option("--seed-file", seed_file, "file with the seed problem");
    augment->add_option("--partner", partner_text, "partner problem text (rule 3)");
    augment->add_option("--partner-file", partner_file, "file with the partner problem");

    // kto-loss
    auto* ktoloss = app.add_subcommand("kto-loss", "evaluate KTO values and batch loss");
    std::string pref_records;
    double beta = 0.1, lambda_d = 1.0, lambda_u = 1.0;
    ktoloss->add_option("--records", pref_records, "PreferenceRecord JSONL")->required();
    ktoloss->add_option("--beta", beta, "reward scale (default 0.1)");
    ktoloss->add_option("--lambda-d", lambda_d, "desirable weight (default 1.0)");
    ktoloss->add_option("--lambda-u", lambda_u, "undesirable weight (default 1.0)");

    // sft-build / kto-build
    auto* sft = app.add_subcommand("sft-build", "build an SFT dataset from labeled records");
    std::string sft_records, sft_out;
    sft->add_option("--records", sft_records, "LabeledRecord JSONL")->required();
    sft->add_option("--out", sft_out, "output JSONL")->required();
    auto* ktob = app.add_subcommand("kto-build", "build a KTO dataset from labeled records");
    std::string kto_records, kto_out;
    ktob->add_option("--records", kto_records, "LabeledRecord JSONL")->required();
    ktob->add_option("--out", kto_out, "output JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (solve->parsed()) {
        resolve_settings(solve_sc);
        if (problem_text.empty() == problem_file.empty()) {
            std::cerr << "error: provide exactly one of --problem or --problem-file\n";
            return kExitConfig;
        }
        std::string problem =
            problem_text.empty() ? read_file_or_die(problem_file) : problem_text;
        return cmd_solve(solve_sc.s, problem, trace_out);
    }
    if (eval->parsed()) {
        resolve_settings(eval_sc);
        return cmd_eval(eval_sc.s, dataset_path, report_out);
    }
    if (augment->parsed()) {
        if (seed_text.empty() == seed_file.empty()) {
            std::cerr << "error: provide exactly one of --seed or --seed-file\n";
            return kExitConfig;
        }
        std::string seed = seed_text.empty() ? read_file_or_die(seed_file) : seed_text;
        std::string partner = partner_text;
        if (!partner_file.empty()) partner = read_file_or_die(partner_file);
        return cmd_augment_prompt(rule, seed, partner);
    }
    if (ktoloss->parsed()) return cmd_kto_loss(pref_records, beta, lambda_d, lambda_u);
    if (sft->parsed()) return cmd_build(sft_records, sft_out, false);
    if (ktob->parsed()) return cmd_build(kto_records, kto_out, true);
    return kExitConfig;
}
