#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerone/agents.hpp"
#include "ledgerone/message.hpp"
#include "ledgerone/model.hpp"
#include "ledgerone/workspace.hpp"

namespace ledgerone {

struct PlanStep {
    std::string description;
    std::string assignee;
};

/// Outer-loop memory: facts, educated guesses, and the step plan. The plan
/// is advisory; dispatch follows the progress ledger.
struct TaskLedger {
    std::vector<std::string> given_facts;
    std::vector<std::string> facts_to_look_up;
    std::vector<std::string> facts_to_derive;
    std::vector<std::string> educated_guesses;
    std::vector<PlanStep> plan;
    int revision = 0;

    nlohmann::json to_json() const;
    std::string summary() const;
};

struct Judgment {
    bool answer = false;
    std::string reason;
};

/// Inner-loop state: the five questions answered each round.
struct ProgressLedger {
    Judgment request_satisfied;
    Judgment in_loop;
    Judgment forward_progress;
    std::string next_speaker;
    std::string instruction;
};

struct StallState {
    int counter = 0;
    int threshold = 2;
};

/// counter' = counter + 1 iff a loop is detected or forward progress is
/// lacking; otherwise unchanged. Never decrements within the inner loop.
StallState update_stall_counter(StallState state, const ProgressLedger& pl);

enum class OrchestratorMode { full, simple };

struct OrchestratorConfig {
    std::chrono::milliseconds time_budget = std::chrono::minutes(25);
    int max_outer_iterations = 3;
    int max_inner_rounds_per_outer = 20;
    int stall_threshold = 2;
    OrchestratorMode mode = OrchestratorMode::full;
    std::string final_answer_prompt = "Report the final answer, or your best educated guess.";
};

struct TaskSpec {
    std::string task_id;
    std::string prompt;
    std::vector<std::string> attachments;
    std::string setup_prompt;
};

enum class TerminationReason { none, complete, time, attempts };
std::string to_string(TerminationReason reason);

struct TerminationCounters {
    int outer_iterations = 0;
    bool satisfied = false;
};

/// Pure predicate over elapsed time, outer iterations, and the satisfied flag.
TerminationReason should_terminate(const OrchestratorConfig& config,
                                   std::chrono::milliseconds elapsed,
                                   const TerminationCounters& counters);

enum class RunStatus { complete, error, timeout };
std::string to_string(RunStatus status);

struct RunOutcome {
    std::string task_id;
    RunStatus status = RunStatus::complete;
    TerminationReason reason = TerminationReason::none;
    std::string final_answer;
    int outer_iterations = 0;
    int dispatches = 0;
    Usage usage;
    std::size_t model_calls = 0;
    TaskLedger ledger;
    std::string error;
};

/// The worker roster owned by one task loop.
class Team {
public:
    void add(std::unique_ptr<WorkerAgent> agent);
    WorkerAgent* find(const std::string& name);
    std::vector<AgentDescription> roster() const;
    std::vector<std::string> names() const;
    void reset_all();
    const std::vector<std::unique_ptr<WorkerAgent>>& workers() const { return workers_; }

private:
    std::vector<std::unique_ptr<WorkerAgent>> workers_;
};

/// Lead agent: maintains the task ledger (outer loop) and progress ledger
/// (inner loop), dispatches instructions, tracks stalling, replans with
/// resets, and produces the final answer.
class Orchestrator {
public:
    Orchestrator(CompletionClient& client, Team& team, OrchestratorConfig config, Clock& clock,
                 CallRecorder* recorder = nullptr);

    /// Persist ledger snapshots and transcripts here when set.
    void set_run_dir(std::filesystem::path dir) { run_dir_ = std::move(dir); }

    TaskLedger initialize_task_ledger(const TaskSpec& task, Transcript& transcript);
    void devise_plan(TaskLedger& ledger, Transcript& transcript);
    std::optional<ProgressLedger> evaluate_progress(const TaskLedger& ledger, Transcript& transcript);
    std::string dispatch_step(const ProgressLedger& pl, Transcript& transcript);
    void replan_and_reset(TaskLedger& ledger, Transcript& transcript);
    std::string produce_final_answer(const TaskLedger& ledger, Transcript& transcript);

    /// Executes the full nested-loop protocol and always returns an
    /// outcome, even on unrecoverable errors.
    RunOutcome run_task(const TaskSpec& task, Transcript& transcript);

    const StallState& stall_state() const { return stall_; }

private:
    ProgressLedger select_speaker_only(Transcript& transcript);  // mode=simple round
    void persist_ledger(const TaskLedger& ledger) const;

    CompletionClient& client_;
    Team& team_;
    OrchestratorConfig config_;
    Clock& clock_;
    CallRecorder* recorder_;
    StallState stall_;
    std::filesystem::path run_dir_;
};

}  // namespace ledgerone
