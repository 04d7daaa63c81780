// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Each criterion is verified against an oracle independent of the
// implementation under test (OpenSSL digests, long-double arithmetic,
// brute-force counts over fixture records, published reference figures).

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ledgerone/agents.hpp"
#include "ledgerone/analysis.hpp"
#include "ledgerone/harness.hpp"
#include "ledgerone/md5.hpp"
#include "ledgerone/orchestrator.hpp"
#include "ledgerone/scripted_model.hpp"
#include "ledgerone/simenv.hpp"
#include "ledgerone/stats.hpp"

using namespace ledgerone;
namespace fs = std::filesystem;

#define REQUIRE_OK(cond)                                                            \
    do {                                                                            \
        if (!(cond)) {                                                              \
            std::cerr << "  check failed: " << #cond << " (line " << __LINE__       \
                      << ")\n";                                                     \
            ok = false;                                                             \
        }                                                                           \
    } while (0)

namespace {

ScriptedRule rule(std::string substring, std::string schema, std::string response, bool one_shot = false) {
    return {std::move(substring), std::move(schema), std::move(response), one_shot, false, false};
}

std::string progress_response(bool satisfied, bool in_loop, bool forward, const std::string& speaker,
                              const std::string& instruction) {
    nlohmann::json j = {
        {"request_satisfied", {{"answer", satisfied}, {"reason", "r"}}},
        {"in_loop", {{"answer", in_loop}, {"reason", "r"}}},
        {"forward_progress", {{"answer", forward}, {"reason", "r"}}},
        {"next_speaker", speaker},
        {"instruction", instruction},
    };
    return j.dump();
}

const std::string kLedgerResponse = R"({
  "given_facts": ["the task names a forum"],
  "facts_to_look_up": ["poster activity"],
  "facts_to_derive": ["the comment count"],
  "educated_guesses": ["likely a small number"]
})";

const std::string kPlanResponse = R"({"steps":[{"description":"look","assignee":"Echo"}]})";

class EchoAgent : public WorkerAgent {
public:
    explicit EchoAgent(std::string name) : WorkerAgent({std::move(name), "test agent", {}}) {}
    std::string state_fingerprint() const override {
        return md5_hex("echo:" + std::to_string(context_size()));
    }

protected:
    std::string respond(const std::string&) override { return "done"; }
};

std::string openssl_md5_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_md5(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "ledgerone_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// Criterion 1: protocol conformance over scripted scenarios with exact call
// accounting.

struct ScenarioEnv {
    Team team;
    EchoAgent* echo;
    OrchestratorConfig config;
    ManualClock clock;

    ScenarioEnv() {
        auto agent = std::make_unique<EchoAgent>("Echo");
        echo = agent.get();
        team.add(std::move(agent));
    }
};

TaskSpec echo_task() { return {"t1", "count the comments", {}, ""}; }

bool scenario_happy_path() {
    bool ok = true;
    ScenarioEnv env;
    ScriptedModel model({
        rule("Pre-populate", "task_ledger", kLedgerResponse),
        rule("", "plan", kPlanResponse),
        rule("", "progress_ledger", progress_response(true, false, true, "", "")),
        rule("Produce the final answer", "", "42"),
    });
    Orchestrator orch(model, env.team, env.config, env.clock);
    Transcript t("t1");
    RunOutcome outcome = orch.run_task(echo_task(), t);
    REQUIRE_OK(outcome.status == RunStatus::complete);
    REQUIRE_OK(outcome.final_answer == "42");
    REQUIRE_OK(outcome.dispatches == 0);
    REQUIRE_OK(model.call_schemas() ==
               (std::vector<std::string>{"task_ledger", "plan", "progress_ledger", ""}));
    return ok;
}

bool scenario_stall_replans_at_threshold_plus_one() {
    bool ok = true;
    ScenarioEnv env;  // threshold 2: the third stall event triggers the replan
    ScriptedModel model({
        rule("", "progress_ledger", progress_response(false, true, false, "Echo", "again"), true),
        rule("", "progress_ledger", progress_response(false, true, false, "Echo", "again"), true),
        rule("", "progress_ledger", progress_response(false, true, false, "Echo", "again"), true),
        rule("", "progress_ledger", progress_response(true, false, true, "", "")),
        rule("Pre-populate", "task_ledger", kLedgerResponse),
        rule("", "plan", kPlanResponse),
        rule("Reflect on the work", "reflection",
             R"({"what_went_wrong":"w","learned":"l","new_facts":["f2"],"new_guesses":[],"plan":[]})"),
        rule("Produce the final answer", "", "recovered"),
    });
    Orchestrator orch(model, env.team, env.config, env.clock);
    Transcript t("t1");
    RunOutcome outcome = orch.run_task(echo_task(), t);
    REQUIRE_OK(outcome.status == RunStatus::complete);
    REQUIRE_OK(outcome.dispatches == 2);  // counters 1 and 2 still dispatch
    REQUIRE_OK(outcome.ledger.revision == 1);
    REQUIRE_OK(model.calls_with_schema("progress_ledger") == 4);
    REQUIRE_OK(model.calls_with_schema("reflection") == 1);
    REQUIRE_OK(model.calls_with_schema("plan") == 1);
    REQUIRE_OK(orch.stall_state().counter == 0);
    return ok;
}

bool scenario_reset_restores_agent_fingerprints() {
    bool ok = true;
    ScenarioEnv env;
    const std::string fresh = env.echo->state_fingerprint();
    ScriptedModel model({
        rule("", "progress_ledger", progress_response(false, true, false, "Echo", "again"), true),
        rule("", "progress_ledger", progress_response(false, true, false, "Echo", "again"), true),
        rule("", "progress_ledger", progress_response(false, true, false, "Echo", "again"), true),
        rule("", "progress_ledger", progress_response(true, false, true, "", "")),
        rule("Pre-populate", "task_ledger", kLedgerResponse),
        rule("", "plan", kPlanResponse),
        rule("Reflect on the work", "reflection",
             R"({"what_went_wrong":"w","learned":"l","new_facts":[],"new_guesses":[],"plan":[]})"),
        rule("Produce the final answer", "", "x"),
    });
    Orchestrator orch(model, env.team, env.config, env.clock);
    Transcript t("t1");
    orch.run_task(echo_task(), t);
    // Two dispatches dirtied the agent; the replan reset it and nothing ran
    // afterwards, so its fingerprint must equal the task-start one.
    REQUIRE_OK(env.echo->state_fingerprint() == fresh);
    return ok;
}

bool scenario_attempts_termination() {
    bool ok = true;
    ScenarioEnv env;
    env.config.max_outer_iterations = 1;
    ScriptedModel model({
        rule("Pre-populate", "task_ledger", kLedgerResponse),
        rule("", "plan", kPlanResponse),
        rule("", "progress_ledger", progress_response(false, true, false, "Echo", "again")),
        rule("Produce the final answer", "", "best effort"),
    });
    Orchestrator orch(model, env.team, env.config, env.clock);
    Transcript t("t1");
    RunOutcome outcome = orch.run_task(echo_task(), t);
    REQUIRE_OK(outcome.reason == TerminationReason::attempts);
    REQUIRE_OK(outcome.final_answer == "best effort");
    REQUIRE_OK(model.calls_with_schema("reflection") == 0);
    return ok;
}

bool scenario_time_termination() {
    bool ok = true;
    ScenarioEnv env;
    env.config.time_budget = std::chrono::milliseconds(100);
    env.clock.set_step_per_read(std::chrono::milliseconds(150));
    ScriptedModel model({
        rule("Pre-populate", "task_ledger", kLedgerResponse),
        rule("", "plan", kPlanResponse),
        rule("Produce the final answer", "", "out of time"),
    });
    Orchestrator orch(model, env.team, env.config, env.clock);
    Transcript t("t1");
    RunOutcome outcome = orch.run_task(echo_task(), t);
    REQUIRE_OK(outcome.status == RunStatus::timeout);
    REQUIRE_OK(outcome.reason == TerminationReason::time);
    REQUIRE_OK(model.calls_with_schema("progress_ledger") == 0);
    return ok;
}

bool scenario_best_guess_fallback() {
    bool ok = true;
    ScenarioEnv env;
    env.config.max_outer_iterations = 1;
    ScriptedModel model({
        rule("Pre-populate", "task_ledger", kLedgerResponse),
        rule("", "plan", kPlanResponse),
        rule("", "progress_ledger", progress_response(false, true, false, "Echo", "again")),
        {"Produce the final answer", "", "refused", false, true, false},  // refusal
    });
    Orchestrator orch(model, env.team, env.config, env.clock);
    Transcript t("t1");
    RunOutcome outcome = orch.run_task(echo_task(), t);
    REQUIRE_OK(outcome.final_answer == "likely a small number");  // first educated guess
    return ok;
}

bool scenario_simple_mode_skips_ledgers() {
    bool ok = true;
    ScenarioEnv env;
    env.config.mode = OrchestratorMode::simple;
    env.config.max_outer_iterations = 1;
    env.config.max_inner_rounds_per_outer = 3;
    ScriptedModel model({
        rule("", "speaker_selection", R"({"next_speaker":"Echo","instruction":"poke"})"),
        rule("Produce the final answer", "", "simple"),
    });
    Orchestrator orch(model, env.team, env.config, env.clock);
    Transcript t("t1");
    RunOutcome outcome = orch.run_task(echo_task(), t);
    REQUIRE_OK(outcome.status == RunStatus::complete);
    REQUIRE_OK(outcome.reason == TerminationReason::attempts);
    REQUIRE_OK(outcome.dispatches == 3);
    REQUIRE_OK(model.calls_with_schema("task_ledger") == 0);
    REQUIRE_OK(model.calls_with_schema("plan") == 0);
    REQUIRE_OK(model.calls_with_schema("progress_ledger") == 0);
    REQUIRE_OK(model.calls_with_schema("reflection") == 0);
    REQUIRE_OK(model.calls_with_schema("speaker_selection") == 3);
    return ok;
}

bool scenario_progress_failure_is_a_stall_event() {
    bool ok = true;
    ScenarioEnv env;
    ScriptedModel model({
        rule("Your previous reply was invalid", "progress_ledger", "still broken"),
        rule("", "progress_ledger", "never valid json {", true),
        rule("", "progress_ledger", "never valid json {", true),
        rule("", "progress_ledger", progress_response(true, false, true, "", "")),
        rule("Pre-populate", "task_ledger", kLedgerResponse),
        rule("", "plan", kPlanResponse),
        rule("Produce the final answer", "", "recovered"),
    });
    Orchestrator orch(model, env.team, env.config, env.clock);
    Transcript t("t1");
    RunOutcome outcome = orch.run_task(echo_task(), t);
    REQUIRE_OK(outcome.status == RunStatus::complete);
    REQUIRE_OK(t.full_text().find("stall counter is now 2") != std::string::npos);
    REQUIRE_OK(outcome.ledger.revision == 0);
    return ok;
}

bool criterion_protocol_conformance() {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    REQUIRE_OK(scenario_happy_path());
    REQUIRE_OK(scenario_stall_replans_at_threshold_plus_one());
    REQUIRE_OK(scenario_reset_restores_agent_fingerprints());
    REQUIRE_OK(scenario_attempts_termination());
    REQUIRE_OK(scenario_time_termination());
    REQUIRE_OK(scenario_best_guess_fallback());
    REQUIRE_OK(scenario_simple_mode_skips_ledgers());
    REQUIRE_OK(scenario_progress_failure_is_a_stall_event());
    const auto elapsed = std::chrono::steady_clock::now() - start;
    REQUIRE_OK(elapsed < std::chrono::seconds(10));
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 2: published reference figures. Every reported 95% error bar must
// be reproduced to within 0.1 percentage points, and the z-test must
// reproduce the published better/comparable/worse partition against the
// reference system's score (bold = statistically better one-sided at 0.05,
// underline = statistically comparable two-sided at 0.05).

struct TableRow {
    double value;  // percent
    int n;
    double bar;  // reported +/- in percentage points
};

enum class Mark { bold, underline, plain };

Mark classify(double value, double base, int n) {
    const double s1 = value / 100.0 * n;
    const double s2 = base / 100.0 * n;
    const ZTestResult two_sided = two_proportion_z_test(s1, n, s2, n);
    // One-sided superiority at 0.05 = two-sided at 0.10 with a positive z.
    if (two_proportion_z_test(s1, n, s2, n, 0.10).significant && two_sided.z > 0) return Mark::bold;
    if (!two_sided.significant) return Mark::underline;
    return Mark::plain;
}

bool criterion_reference_figures() {
    bool ok = true;

    const std::vector<TableRow> rows = {
        // completion rate benchmark, n = 300
        {40.53, 300, 5.6}, {39.53, 300, 5.5}, {38.87, 300, 5.5}, {38.21, 300, 5.5},
        {34.55, 300, 5.4}, {33.33, 300, 5.3}, {24.25, 300, 4.8}, {14.60, 300, 4.0},
        {6.67, 300, 2.8},  {92.00, 300, 3.1}, {32.33, 300, 5.3}, {38.00, 300, 5.5},
        // exact-match benchmark, n = 181
        {13.8, 181, 5.0}, {9.9, 181, 4.3}, {5.5, 181, 3.3}, {6.1, 181, 3.5},
        {11.0, 181, 4.6}, {13.3, 181, 4.9},
        // accuracy variant, n = 181
        {26.4, 181, 6.4}, {25.2, 181, 6.3}, {14.5, 181, 5.1}, {16.5, 181, 5.4},
        {25.3, 181, 6.3}, {27.7, 181, 6.5},
        // web benchmark, n = 812
        {57.1, 812, 3.4}, {37.2, 812, 3.3}, {35.5, 812, 3.3}, {33.5, 812, 3.2},
        {23.5, 812, 2.9}, {14.9, 812, 2.4}, {78.2, 812, 2.8}, {32.8, 812, 3.2},
    };
    for (const auto& row : rows) {
        const double computed = 100.0 * wald_interval(row.value / 100.0 * row.n, row.n);
        if (std::abs(computed - row.bar) > 0.1) {
            std::cerr << "  error bar mismatch: value " << row.value << " n " << row.n << " reported "
                      << row.bar << " computed " << computed << "\n";
            ok = false;
        }
    }

    // Partition of the n=300 column against the 38.00 reference (self and
    // human rows excluded from the comparison set).
    const std::vector<std::pair<double, Mark>> column_a = {
        {40.53, Mark::underline}, {39.53, Mark::underline}, {38.87, Mark::underline},
        {38.21, Mark::underline}, {34.55, Mark::underline}, {33.33, Mark::underline},
        {24.25, Mark::plain},     {14.60, Mark::plain},     {6.67, Mark::plain},
    };
    for (const auto& [value, want] : column_a) {
        if (classify(value, 38.00, 300) != want) {
            std::cerr << "  misclassified value " << value << " against 38.00/300\n";
            ok = false;
        }
    }

    // Partition of the n=812 column against the 32.8 reference.
    const std::vector<std::pair<double, Mark>> column_b = {
        {57.1, Mark::bold},      {37.2, Mark::bold},  {35.5, Mark::underline},
        {33.5, Mark::underline}, {23.5, Mark::plain}, {14.9, Mark::plain},
    };
    for (const auto& [value, want] : column_b) {
        if (classify(value, 32.8, 812) != want) {
            std::cerr << "  misclassified value " << value << " against 32.8/812\n";
            ok = false;
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 3: validation/test split purity, stability, and agreement with
// an independent MD5 implementation.

bool criterion_split() {
    bool ok = true;
    std::mt19937 rng(2024);
    std::vector<TaskManifestEntry> entries;
    for (int i = 0; i < 812; ++i) {
        TaskManifestEntry e;
        e.task_id = "task" + std::to_string(i);
        e.template_id = "template_" + std::to_string(rng());
        e.prompt = "p";
        entries.push_back(e);
    }

    auto [validation, test] = split_validation_test(entries);
    REQUIRE_OK(validation.size() + test.size() == entries.size());
    REQUIRE_OK(!validation.empty() && !test.empty());

    std::set<std::string> val_ids;
    for (const auto& e : validation) val_ids.insert(e.task_id);
    for (const auto& e : test) REQUIRE_OK(val_ids.count(e.task_id) == 0);

    auto [validation2, test2] = split_validation_test(entries);
    REQUIRE_OK(validation2.size() == validation.size());
    for (std::size_t i = 0; i < validation.size() && i < validation2.size(); ++i) {
        if (validation2[i].task_id != validation[i].task_id) {
            ok = false;
            break;
        }
    }

    std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
    for (int i = 0; i < 100; ++i) {
        const auto& e = entries[pick(rng)];
        const std::string oracle = openssl_md5_hex(e.template_id);
        REQUIRE_OK(md5_hex(e.template_id) == oracle);
        const bool in_validation = val_ids.count(e.task_id) > 0;
        REQUIRE_OK(in_validation == (oracle[0] >= '0' && oracle[0] <= '7'));
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: workspace isolation and crash containment over randomized
// parallel schedules.

bool criterion_isolation() {
    bool ok = true;
    for (int schedule = 0; schedule < 20; ++schedule) {
        fs::path root = fresh_dir("iso_" + std::to_string(schedule));
        std::vector<TaskManifestEntry> entries;
        for (const std::string& id : {"victim", "crasher"}) {
            TaskManifestEntry e;
            e.task_id = id;
            e.prompt = "p";
            e.expected_answer = "clean";
            entries.push_back(e);
        }

        TaskRunner runner = [schedule](const TaskManifestEntry& e, const fs::path& run_dir) {
            // A schedule-seeded jitter perturbs the interleaving.
            std::mt19937 rng(static_cast<unsigned>(schedule) * 31 + (e.task_id == "victim" ? 1 : 2));
            std::this_thread::sleep_for(std::chrono::microseconds(rng() % 3000));
            const fs::path ws = run_dir / "workspace";
            std::ofstream(ws / ("sentinel_" + e.task_id)) << e.task_id;
            std::this_thread::sleep_for(std::chrono::microseconds(rng() % 3000));
            if (e.task_id == "crasher") throw std::runtime_error("injected crash");
            bool clean = true;
            for (const auto& f : fs::directory_iterator(ws)) {
                if (f.path().filename() != "sentinel_" + e.task_id) clean = false;
            }
            TaskResult r;
            r.final_answer = clean ? "clean" : "leaked";
            r.transcript = Transcript(e.task_id);
            r.transcript.append(Role::user, "user", e.prompt);
            return r;
        };

        BenchmarkResult result = run_benchmark(entries, {"iso", 1, 2, root}, runner,
                                               ScorerRegistry::with_defaults());
        REQUIRE_OK(result.records.size() == 2);
        for (const auto& r : result.records) {
            if (r.task_id == "crasher") {
                REQUIRE_OK(r.status == "error");
            } else {
                REQUIRE_OK(r.status == "complete");
                REQUIRE_OK(r.final_answer == "clean");
                REQUIRE_OK(r.score == 1.0);
            }
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 5: end-to-end simulated benchmark run. The full team, driven by
// a scripted model, browses the fixture forum and reports an answer that
// must equal an independent brute-force count over the site's records.

bool criterion_end_to_end() {
    bool ok = true;
    const fs::path site_path = FIXTURES_DIR "/sites/forum.json";
    SimSite site = load_site(site_path);

    // Oracle: latest poster by tick, then their comments with more
    // downvotes than upvotes, straight from the machine-readable records.
    std::string latest_poster;
    int latest_ts = std::numeric_limits<int>::min();
    for (const auto& post : site.records.at("posts")) {
        if (post.at("ts").get<int>() > latest_ts) {
            latest_ts = post.at("ts").get<int>();
            latest_poster = post.at("author").get<std::string>();
        }
    }
    int expected_count = 0;
    for (const auto& c : site.records.at("comments")) {
        if (c.at("author").get<std::string>() == latest_poster &&
            c.at("downvotes").get<int>() > c.at("upvotes").get<int>()) {
            ++expected_count;
        }
    }
    REQUIRE_OK(expected_count > 0);  // the fixture must make the task non-trivial

    auto browser = [](const std::string& kind, const std::string& target, const std::string& argument) {
        return nlohmann::json{{"kind", kind}, {"target", target}, {"argument", argument}}.dump();
    };
    auto next = [](const std::string& instruction) {
        return progress_response(false, false, true, "WebSurfer", instruction);
    };

    ScriptedModel model({
        rule("Pre-populate", "task_ledger", kLedgerResponse),
        rule("", "plan", R"({"steps":[{"description":"browse the forum","assignee":"WebSurfer"}]})"),
        // Inner loop: archive -> latest poster -> each post's comment scores.
        rule("", "progress_ledger", next("Open the post archive at forum://posts"), true),
        rule("", "progress_ledger", next("Determine which author posted at the highest tick"), true),
        rule("", "progress_ledger", next("Open the first post in the archive"), true),
        rule("", "progress_ledger", next("Report the comment scores on this page"), true),
        rule("", "progress_ledger", next("Visit forum://posts/p2 and wait"), true),
        rule("", "progress_ledger", next("Report the comment scores on this page"), true),
        rule("", "progress_ledger", next("Visit forum://posts/p3 and wait"), true),
        rule("", "progress_ledger", next("Report the comment scores on this page"), true),
        rule("", "progress_ledger", progress_response(true, false, true, "", "")),
        // Browser action selection, keyed on the dispatched instruction.
        rule("post archive", "browser_action", browser("visit_url", "", "forum://posts")),
        rule("highest tick", "browser_action",
             browser("answer_question", "", "which author posted at the highest tick?")),
        rule("first post", "browser_action", browser("click", "10", "")),
        rule("comment scores", "browser_action",
             browser("answer_question", "", "what are the comment scores here?")),
        rule("forum://posts/p2", "browser_action", browser("visit_url", "", "forum://posts/p2")),
        rule("forum://posts/p3", "browser_action", browser("visit_url", "", "forum://posts/p3")),
        // The final-answer prompt embeds the whole transcript, so this rule
        // must precede the content-keyed reading rules below.
        rule("Produce the final answer", "", std::to_string(expected_count)),
        // Reading answers, keyed on distinctive full-document content.
        rule("tick 3: Welcome", "", "The most recent post is p2 by bob at tick 5."),
        rule("Comment c2 by bob", "", "p1: c2 by bob has 7 up, 1 down; c4 by alice has 1 up, 4 down."),
        rule("Comment c1 by bob", "", "p2: c1 by bob has 2 up, 5 down; c5 by carol has 3 up, 3 down."),
        rule("Comment c3 by bob", "", "p3: c3 by bob has 0 up, 1 down."),
    });

    fs::path workspace = fresh_dir("end_to_end_ws");
    SubprocessSandbox sandbox(workspace);
    Team team;
    team.add(std::make_unique<WebSurfer>(model, site));
    team.add(std::make_unique<FileSurfer>(model, workspace));
    team.add(std::make_unique<Coder>(model));
    team.add(std::make_unique<ComputerTerminal>(sandbox));

    OrchestratorConfig config;
    ManualClock clock;
    Orchestrator orch(model, team, config, clock);
    Transcript t("forum-count");
    RunOutcome outcome = orch.run_task(
        {"forum-count",
         "Count the comments with more downvotes than upvotes written by the latest poster.",
         {},
         ""},
        t);

    REQUIRE_OK(outcome.status == RunStatus::complete);
    REQUIRE_OK(outcome.reason == TerminationReason::complete);
    REQUIRE_OK(outcome.dispatches == 8);
    REQUIRE_OK(normalize_answer(outcome.final_answer) == std::to_string(expected_count));
    // The team actually walked the site: every post page shows up.
    REQUIRE_OK(t.full_text().find("Post archive") != std::string::npos);
    REQUIRE_OK(t.full_text().find("Comment c3 by bob") != std::string::npos);
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 6: error-analysis convergence over a synthetic corpus.

bool criterion_error_analysis() {
    bool ok = true;

    struct Kind {
        std::string cause;
        std::string raw_label;  // initial, possibly redundant label
    };
    const std::vector<Kind> kinds = {
        {"timed out waiting for the page", "Slow Timeout"},
        {"exceeded the time budget", "slow-timeouts"},
        {"clicked the wrong link", "misclick"},
        {"pressed the wrong button", "mis click"},
        {"wrong final answer", "wrong-answer"},
        {"answer mismatch against the key", "answer-mismatch"},
        {"looped on the archive page", "repeat-loop"},
        {"file not found in the workspace", "missing-file"},
    };

    std::vector<ScriptedRule> rules;
    for (const auto& k : kinds) {
        rules.push_back(rule(k.cause, "postmortem",
                             nlohmann::json{{"root_cause", k.cause},
                                            {"contributing_factors", {"noise"}},
                                            {"outcome", "failure"}}
                                 .dump()));
        rules.push_back(rule(k.cause, "initial_codes",
                             nlohmann::json{{"codes", {k.raw_label}}}.dump()));
        rules.push_back(rule(k.cause, "apply_codes",
                             nlohmann::json{{"codes", {k.raw_label}}}.dump()));
    }
    rules.push_back(rule("slow-timeouts", "code_consolidation",
                         R"({"merges":[{"from":"slow-timeouts","into":"slow-timeout"},
                                       {"from":"mis-click","into":"misclick"},
                                       {"from":"answer-mismatch","into":"wrong-answer"}]})",
                         true));
    rules.push_back(rule("", "code_consolidation", R"({"merges":[]})"));
    ScriptedModel model(std::move(rules));

    // 50 synthetic postmortems cycling through the failure kinds.
    std::vector<Postmortem> postmortems;
    std::vector<ErrorCode> initial;
    for (int i = 0; i < 50; ++i) {
        const Kind& k = kinds[i % kinds.size()];
        Postmortem pm =
            distill_postmortem("t" + std::to_string(i), "agent log: " + k.cause, "error", model);
        pm.benchmark = (i % 2 == 0) ? "web" : "files";
        pm.variant = (i % 4 == 0) ? "alt" : "";
        REQUIRE_OK(pm.root_cause == k.cause);
        for (auto& c : assign_initial_codes(pm, model)) initial.push_back(std::move(c));
        postmortems.push_back(std::move(pm));
    }
    REQUIRE_OK(initial.size() == 50);

    CodeBook book = consolidate_codes(initial, model);
    REQUIRE_OK(book.stable);
    REQUIRE_OK(book.iteration <= 5);
    REQUIRE_OK(book.codes.size() == 5);  // 8 raw labels, 3 merges
    REQUIRE_OK(book.merge_map.size() == 8);
    REQUIRE_OK(book.merge_map.at("slow-timeouts") == "slow-timeout");
    for (const auto& [from, into] : book.merge_map) REQUIRE_OK(book.find(into) != nullptr);

    std::vector<CodeAssignment> assignments = apply_codebook(book, postmortems, model);
    REQUIRE_OK(assignments.size() == 50);
    AnalysisTables tables = emit_analysis_tables(assignments);

    // Heatmap marginals must equal the distribution exactly.
    int total = 0;
    for (const auto& [code, count] : tables.distribution_counts) {
        int row_sum = 0;
        for (const auto& [col, n] : tables.heatmap_counts.at(code)) row_sum += n;
        REQUIRE_OK(row_sum == count);
        total += count;
        REQUIRE_OK(code != "uncoded");  // every raw label resolved through the book
    }
    REQUIRE_OK(total == 50);

    // The bundled ten-code book must round-trip byte-identically.
    const fs::path fixture = FIXTURES_DIR "/codebooks/default.json";
    CodeBook bundled = CodeBook::load(fixture);
    REQUIRE_OK(bundled.codes.size() == 10);
    const fs::path copy = fresh_dir("codebook") / "roundtrip.json";
    bundled.save(copy);
    REQUIRE_OK(read_file(copy) == read_file(fixture));
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 7: statistics against a long-double reference.

long double reference_quantile(long double probability) {
    // Bisection over the erfl-based normal CDF; independent of the
    // implementation's rational approximation.
    long double lo = -10.0L, hi = 10.0L;
    for (int i = 0; i < 200; ++i) {
        const long double mid = (lo + hi) / 2.0L;
        const long double cdf = 0.5L * (1.0L + std::erf(mid / std::sqrt(2.0L)));
        (cdf < probability ? lo : hi) = mid;
    }
    return (lo + hi) / 2.0L;
}

bool criterion_numeric_precision() {
    bool ok = true;
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> n_dist(2, 5000);
    std::uniform_real_distribution<double> conf_dist(0.80, 0.999);

    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const int n = n_dist(rng);
        std::uniform_int_distribution<int> s_dist(1, n - 1);
        const int s = s_dist(rng);
        const long double p = static_cast<long double>(s) / n;

        // Default confidence uses the documented fixed critical value.
        const long double want95 = 1.959964L * std::sqrt(p * (1.0L - p) / n);
        const double got95 = wald_interval(s, n);
        if (std::abs(got95 - static_cast<double>(want95)) > 1e-9 * static_cast<double>(want95)) {
            ok = false;
            break;
        }

        // Random confidence exercises the quantile approximation.
        const double conf = conf_dist(rng);
        const long double z = reference_quantile((1.0L + conf) / 2.0L);
        const long double want = z * std::sqrt(p * (1.0L - p) / n);
        const double got = wald_interval(s, n, conf);
        if (std::abs(got - static_cast<double>(want)) > 1e-9 * static_cast<double>(want)) {
            std::cerr << "  quantile mismatch at confidence " << conf << ": got " << got << " want "
                      << static_cast<double>(want) << "\n";
            ok = false;
            break;
        }

        // The z statistic itself.
        const int n2 = n_dist(rng);
        std::uniform_int_distribution<int> s2_dist(1, n2 - 1);
        const int s2 = s2_dist(rng);
        const long double p2 = static_cast<long double>(s2) / n2;
        const long double pooled = (static_cast<long double>(s) + s2) / (static_cast<long double>(n) + n2);
        const long double se = std::sqrt(pooled * (1.0L - pooled) * (1.0L / n + 1.0L / n2));
        const long double want_z = (p - p2) / se;
        const double got_z = two_proportion_z_test(s, n, s2, n2).z;
        if (std::abs(got_z - static_cast<double>(want_z)) >
            1e-9 * std::max(1.0, std::abs(static_cast<double>(want_z)))) {
            ok = false;
            break;
        }
        ++checked;
    }
    REQUIRE_OK(checked == 1000);
    return ok;
}

int failures = 0;

void verdict(const std::string& name, bool passed) {
    std::cout << (passed ? "PASS" : "FAIL") << ": " << name << std::endl;
    if (!passed) ++failures;
}

}  // namespace

int main() {
    verdict("protocol conformance across eight scripted scenarios", criterion_protocol_conformance());
    verdict("reference error bars and significance partition", criterion_reference_figures());
    verdict("hash-based validation/test split against an independent MD5", criterion_split());
    verdict("workspace isolation and crash containment over 20 schedules", criterion_isolation());
    verdict("end-to-end simulated benchmark with a brute-force oracle", criterion_end_to_end());
    verdict("error-analysis convergence on 50 synthetic postmortems", criterion_error_analysis());
    verdict("statistics match a long-double reference over 1000 draws", criterion_numeric_precision());
    return failures == 0 ? 0 : 1;
}
