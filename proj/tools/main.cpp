// ledgerone command line: run one task, run a benchmark, or analyze run logs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ledgerone/agents.hpp"
#include "ledgerone/analysis.hpp"
#include "ledgerone/harness.hpp"
#include "ledgerone/live_model.hpp"
#include "ledgerone/orchestrator.hpp"
#include "ledgerone/sandbox.hpp"
#include "ledgerone/scripted_model.hpp"
#include "ledgerone/simenv.hpp"

namespace fs = std::filesystem;
using namespace ledgerone;

namespace {

std::unique_ptr<CompletionClient> make_client(const std::string& script_path) {
    if (!script_path.empty()) {
        return std::make_unique<ScriptedModel>(ScriptedModel::rules_from_file(script_path));
    }
    return std::make_unique<LiveModelClient>(LiveModelClient::from_env());
}

bool agent_enabled(const std::vector<std::string>& disabled, const std::string& name) {
    return std::find(disabled.begin(), disabled.end(), name) == disabled.end();
}

struct TeamOptions {
    const SimSite* site = nullptr;  // WebSurfer is added only when a site is loaded
    fs::path workspace;
    std::vector<std::string> disabled;
    std::string sandbox_kind = "subprocess";
    std::string container_image = "python:3-slim";
};

/// Owns the stateful backends the agents borrow.
struct TeamBundle {
    std::unique_ptr<Sandbox> sandbox;
    Team team;
};

TeamBundle build_team(CompletionClient& client, const TeamOptions& opt, CallRecorder* recorder) {
    TeamBundle bundle;
    fs::create_directories(opt.workspace);
    if (opt.sandbox_kind == "container") {
        bundle.sandbox = std::make_unique<ContainerSandbox>(opt.workspace, opt.container_image);
    } else {
        bundle.sandbox = std::make_unique<SubprocessSandbox>(opt.workspace);
    }

    if (opt.site && agent_enabled(opt.disabled, "WebSurfer")) {
        bundle.team.add(std::make_unique<WebSurfer>(client, *opt.site, recorder));
    }
    if (agent_enabled(opt.disabled, "FileSurfer")) {
        bundle.team.add(std::make_unique<FileSurfer>(client, opt.workspace, recorder));
    }
    if (agent_enabled(opt.disabled, "Coder")) {
        bundle.team.add(std::make_unique<Coder>(client, recorder));
    }
    if (agent_enabled(opt.disabled, "ComputerTerminal")) {
        bundle.team.add(std::make_unique<ComputerTerminal>(*bundle.sandbox));
    }
    return bundle;
}

nlohmann::json outcome_to_json(const RunOutcome& outcome) {
    return {{"task_id", outcome.task_id},
            {"status", to_string(outcome.status)},
            {"reason", to_string(outcome.reason)},
            {"final_answer", outcome.final_answer},
            {"outer_iterations", outcome.outer_iterations},
            {"dispatches", outcome.dispatches},
            {"model_calls", outcome.model_calls},
            {"usage",
             {{"prompt_units", outcome.usage.prompt_units},
              {"completion_units", outcome.usage.completion_units}}},
            {"error", outcome.error}};
}

int cmd_run(const std::string& task_prompt, const std::string& task_id, const std::string& script_path,
            const std::string& site_path, const fs::path& out_dir, const std::string& mode,
            const std::vector<std::string>& disabled, int time_budget_s, int max_outer,
            int stall_threshold) {
    auto client = make_client(script_path);
    CallRecorder recorder;

    SimSite site;
    TeamOptions opt;
    opt.workspace = out_dir / "workspace";
    opt.disabled = disabled;
    if (!site_path.empty()) {
        site = load_site(site_path);
        opt.site = &site;
    }
    fs::create_directories(out_dir);
    TeamBundle bundle = build_team(*client, opt, &recorder);

    OrchestratorConfig config;
    config.mode = (mode == "simple") ? OrchestratorMode::simple : OrchestratorMode::full;
    config.time_budget = std::chrono::seconds(time_budget_s);
    config.max_outer_iterations = max_outer;
    config.stall_threshold = stall_threshold;

    SteadyClock clock;
    Orchestrator orch(*client, bundle.team, config, clock, &recorder);
    orch.set_run_dir(out_dir);

    TaskSpec spec;
    spec.task_id = task_id;
    spec.prompt = task_prompt;

    Transcript transcript(task_id);
    RunOutcome outcome = orch.run_task(spec, transcript);
    transcript.write_jsonl(out_dir / "transcript.jsonl");
    std::ofstream(out_dir / "outcome.json") << outcome_to_json(outcome).dump(2) << "\n";
    std::cout << outcome_to_json(outcome).dump(2) << "\n";
    return outcome.status == RunStatus::error ? 1 : 0;
}

int cmd_bench(const std::string& manifest_path, const std::string& name, int repetitions, int parallel,
              const std::string& sandbox_kind, const std::string& script_path, const std::string& site_path,
              const fs::path& out_root, const std::string& mode) {
    auto entries = load_manifest(manifest_path);

    SimSite site;
    bool have_site = false;
    if (!site_path.empty()) {
        site = load_site(site_path);
        have_site = true;
    }

    BenchConfig config;
    config.benchmark_name = name;
    config.repetitions = repetitions;
    config.parallelism = parallel;
    config.run_root = out_root;

    // Each parallel unit builds its own client so scripted one-shot state
    // stays per-run.
    TaskRunner runner = [&](const TaskManifestEntry& entry, const fs::path& run_dir) {
        auto client = make_client(script_path);
        CallRecorder recorder;

        TeamOptions opt;
        opt.workspace = run_dir / "workspace";
        opt.sandbox_kind = sandbox_kind;
        if (have_site) opt.site = &site;
        TeamBundle bundle = build_team(*client, opt, &recorder);

        OrchestratorConfig oconfig;
        oconfig.mode = (mode == "simple") ? OrchestratorMode::simple : OrchestratorMode::full;
        SteadyClock clock;
        Orchestrator orch(*client, bundle.team, oconfig, clock, &recorder);
        orch.set_run_dir(run_dir / "artifacts");

        TaskSpec spec;
        spec.task_id = entry.task_id;
        spec.prompt = entry.prompt;
        spec.attachments = entry.attachments;
        spec.setup_prompt = entry.setup_prompt;

        TaskResult result;
        result.transcript = Transcript(entry.task_id);
        RunOutcome outcome = orch.run_task(spec, result.transcript);
        result.final_answer = outcome.final_answer;
        result.status = to_string(outcome.status);
        result.usage = outcome.usage;
        return result;
    };

    BenchmarkResult result = run_benchmark(entries, config, runner, ScorerRegistry::with_defaults());

    fs::create_directories(out_root);
    std::ofstream records_out(out_root / (name + "_records.jsonl"));
    for (const auto& r : result.records) records_out << r.to_json().dump() << "\n";

    nlohmann::json per_category = nlohmann::json::object();
    for (const auto& [cat, agg] : result.per_category) {
        per_category[cat] = {{"n", agg.n},
                             {"successes", agg.successes},
                             {"rate", agg.rate},
                             {"wald_half_width", agg.wald_half_width}};
    }
    nlohmann::json summary = {{"benchmark", name},
                              {"records", result.records.size()},
                              {"per_category", per_category}};
    std::ofstream(out_root / (name + "_summary.json")) << summary.dump(2) << "\n";
    std::cout << summary.dump(2) << "\n";

    const std::size_t expected = entries.size() * static_cast<std::size_t>(repetitions);
    return result.records.size() == expected ? 0 : 1;
}

int cmd_analyze(const fs::path& runs_dir, const std::string& script_path, const std::string& codebook_path,
                const fs::path& out_dir, int bootstrap_n, unsigned seed) {
    auto client = make_client(script_path);
    CallRecorder recorder;

    // Collect (record.json, transcript) pairs; the benchmark is the first
    // path component under the runs root.
    std::vector<Postmortem> postmortems;
    if (!fs::exists(runs_dir)) {
        std::cerr << "runs directory not found: " << runs_dir << "\n";
        return 1;
    }
    for (const auto& entry : fs::recursive_directory_iterator(runs_dir)) {
        if (!entry.is_regular_file() || entry.path().filename() != "record.json") continue;
        nlohmann::json j;
        std::ifstream(entry.path()) >> j;
        RunRecord record = RunRecord::from_json(j);

        std::string transcript_text;
        const fs::path tpath = entry.path().parent_path() / "transcript.jsonl";
        if (fs::exists(tpath)) {
            std::ifstream in(tpath);
            std::string line;
            while (std::getline(in, line)) transcript_text += line + "\n";
        }

        Postmortem pm = distill_postmortem(record.task_id, transcript_text,
                                           record.score >= 1.0 ? "complete" : record.status, *client,
                                           &recorder);
        const fs::path rel = fs::relative(entry.path().parent_path(), runs_dir);
        pm.benchmark = rel.begin() != rel.end() ? rel.begin()->string() : "unknown";
        postmortems.push_back(std::move(pm));
    }
    if (postmortems.empty()) {
        std::cerr << "no record.json files under " << runs_dir << "\n";
        return 1;
    }

    CodeBook book;
    if (!codebook_path.empty()) {
        book = CodeBook::load(codebook_path);
    } else {
        // Codebook construction works on a bootstrap sample of the corpus.
        std::vector<const Postmortem*> sample;
        if (static_cast<int>(postmortems.size()) <= bootstrap_n) {
            for (const auto& pm : postmortems) sample.push_back(&pm);
        } else {
            std::mt19937 rng(seed);
            std::uniform_int_distribution<std::size_t> pick(0, postmortems.size() - 1);
            for (int i = 0; i < bootstrap_n; ++i) sample.push_back(&postmortems[pick(rng)]);
        }
        std::vector<ErrorCode> open_codes;
        for (const auto* pm : sample) {
            auto codes = assign_initial_codes(*pm, *client, &recorder);
            open_codes.insert(open_codes.end(), codes.begin(), codes.end());
        }
        ConsolidationConfig cc;
        cc.seed = seed;
        book = consolidate_codes(open_codes, *client, cc, &recorder);
    }

    auto assignments = apply_codebook(book, postmortems, *client, &recorder);
    AnalysisTables tables = emit_analysis_tables(assignments);

    fs::create_directories(out_dir);
    book.save(out_dir / "codebook.json");
    std::ofstream(out_dir / "distribution.csv") << tables.distribution;
    std::ofstream(out_dir / "heatmap.tsv") << tables.heatmap;

    std::cout << tables.distribution;
    std::cout << "codebook: " << book.codes.size() << " codes, stable=" << (book.stable ? "yes" : "no")
              << " after " << book.iteration << " iteration(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ledgerone: dual-ledger multi-agent task runner"};
    app.require_subcommand(1);

    // run
    std::string task_prompt, task_id = "task", run_script, run_site, run_mode = "full";
    fs::path run_out = "run_out";
    std::vector<std::string> disabled;
    int time_budget_s = 1500, max_outer = 3, stall_threshold = 2;
    auto* run = app.add_subcommand("run", "Run one task with the orchestrated team");
    run->add_option("--task", task_prompt, "Task prompt text")->required();
    run->add_option("--task-id", task_id, "Task identifier");
    run->add_option("--model-script", run_script, "Scripted model rules (JSON); omit to use the live endpoint");
    run->add_option("--site", run_site, "Simulated site manifest for the browser agent");
    run->add_option("--out", run_out, "Run directory");
    run->add_option("--mode", run_mode, "full | simple")->check(CLI::IsMember({"full", "simple"}));
    run->add_option("--disable-agent", disabled, "Agent name to leave off the team (repeatable)");
    run->add_option("--time-budget-s", time_budget_s, "Wall clock budget in seconds");
    run->add_option("--max-outer", max_outer, "Maximum outer-loop iterations");
    run->add_option("--stall-threshold", stall_threshold, "Stall counter threshold before replanning");

    // bench
    std::string manifest_path, bench_name = "bench", bench_sandbox = "subprocess", bench_script, bench_site,
                bench_mode = "full";
    fs::path bench_out = "runs";
    int repetitions = 1, parallel = 0;
    auto* bench = app.add_subcommand("bench", "Run a task manifest as a benchmark");
    bench->add_option("--manifest", manifest_path, "JSONL task manifest")->required();
    bench->add_option("--name", bench_name, "Benchmark name (run directory component)");
    bench->add_option("--repetitions", repetitions, "Repetitions per task");
    bench->add_option("--parallel", parallel, "Worker threads (0: all cores)");
    bench->add_option("--sandbox", bench_sandbox, "subprocess | container")
        ->check(CLI::IsMember({"subprocess", "container"}));
    bench->add_option("--model-script", bench_script, "Scripted model rules (JSON)");
    bench->add_option("--site", bench_site, "Simulated site manifest");
    bench->add_option("--out", bench_out, "Run root directory");
    bench->add_option("--mode", bench_mode, "full | simple")->check(CLI::IsMember({"full", "simple"}));

    // analyze
    fs::path runs_dir = "runs", analyze_out = "analysis";
    std::string analyze_script, codebook_path;
    int bootstrap_n = 200;
    unsigned analyze_seed = 2024;
    auto* analyze = app.add_subcommand("analyze", "Distill and code run logs");
    analyze->add_option("--runs", runs_dir, "Run root to scan for record.json files")->required();
    analyze->add_option("--model-script", analyze_script, "Scripted model rules (JSON)");
    analyze->add_option("--codebook", codebook_path, "Existing codebook to apply (skips construction)");
    analyze->add_option("--out", analyze_out, "Output directory");
    analyze->add_option("--bootstrap", bootstrap_n, "Bootstrap sample size for codebook construction");
    analyze->add_option("--seed", analyze_seed, "Sampling and consolidation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags: usage error
    }

    try {
        if (run->parsed()) {
            return cmd_run(task_prompt, task_id, run_script, run_site, run_out, run_mode, disabled,
                           time_budget_s, max_outer, stall_threshold);
        }
        if (bench->parsed()) {
            return cmd_bench(manifest_path, bench_name, repetitions, parallel, bench_sandbox, bench_script,
                             bench_site, bench_out, bench_mode);
        }
        if (analyze->parsed()) {
            return cmd_analyze(runs_dir, analyze_script, codebook_path, analyze_out, bootstrap_n,
                               analyze_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
