#include "ledgerone/orchestrator.hpp"

#include <algorithm>
#include <fstream>

#include "ledgerone/errors.hpp"

namespace ledgerone {

namespace {

const ResponseSchema kTaskLedgerSchema{
    "task_ledger",
    {{"given_facts", SchemaField::Type::array},
     {"facts_to_look_up", SchemaField::Type::array},
     {"facts_to_derive", SchemaField::Type::array},
     {"educated_guesses", SchemaField::Type::array}}};

const ResponseSchema kPlanSchema{"plan", {{"steps", SchemaField::Type::array}}};

const ResponseSchema kProgressSchema{
    "progress_ledger",
    {{"request_satisfied", SchemaField::Type::object},
     {"in_loop", SchemaField::Type::object},
     {"forward_progress", SchemaField::Type::object},
     {"next_speaker", SchemaField::Type::string},
     {"instruction", SchemaField::Type::string}}};

const ResponseSchema kReflectionSchema{
    "reflection",
    {{"what_went_wrong", SchemaField::Type::string},
     {"learned", SchemaField::Type::string},
     {"new_facts", SchemaField::Type::array},
     {"new_guesses", SchemaField::Type::array},
     {"plan", SchemaField::Type::array}}};

const ResponseSchema kSpeakerSchema{
    "speaker_selection",
    {{"next_speaker", SchemaField::Type::string}, {"instruction", SchemaField::Type::string}}};

std::vector<std::string> string_list(const nlohmann::json& arr) {
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (v.is_string() && !v.get<std::string>().empty()) out.push_back(v.get<std::string>());
    }
    return out;
}

std::optional<Judgment> parse_judgment(const nlohmann::json& obj) {
    if (!obj.is_object() || !obj.contains("answer") || !obj.at("answer").is_boolean()) return std::nullopt;
    Judgment j;
    j.answer = obj.at("answer").get<bool>();
    j.reason = obj.value("reason", "");
    return j;
}

std::vector<PlanStep> parse_plan_steps(const nlohmann::json& arr) {
    std::vector<PlanStep> steps;
    for (const auto& sj : arr) {
        if (!sj.is_object()) continue;
        PlanStep s;
        s.description = sj.value("description", "");
        s.assignee = sj.value("assignee", "");
        steps.push_back(std::move(s));
    }
    return steps;
}

std::string bullet_list(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& i : items) out += "  - " + i + "\n";
    return out.empty() ? "  (none)\n" : out;
}

}  // namespace

nlohmann::json TaskLedger::to_json() const {
    nlohmann::json plan_json = nlohmann::json::array();
    for (const auto& s : plan) plan_json.push_back({{"description", s.description}, {"assignee", s.assignee}});
    return {{"given_facts", given_facts},
            {"facts_to_look_up", facts_to_look_up},
            {"facts_to_derive", facts_to_derive},
            {"educated_guesses", educated_guesses},
            {"plan", plan_json},
            {"revision", revision}};
}

std::string TaskLedger::summary() const {
    std::string out = "Task ledger (revision " + std::to_string(revision) + ")\n";
    out += "Given or verified facts:\n" + bullet_list(given_facts);
    out += "Facts to look up:\n" + bullet_list(facts_to_look_up);
    out += "Facts to derive:\n" + bullet_list(facts_to_derive);
    out += "Educated guesses:\n" + bullet_list(educated_guesses);
    out += "Plan:\n";
    for (std::size_t i = 0; i < plan.size(); ++i) {
        out += "  " + std::to_string(i + 1) + ". " + plan[i].description + " (" + plan[i].assignee + ")\n";
    }
    if (plan.empty()) out += "  (none)\n";
    return out;
}

StallState update_stall_counter(StallState state, const ProgressLedger& pl) {
    if (pl.in_loop.answer || !pl.forward_progress.answer) {
        ++state.counter;
    }
    return state;
}

std::string to_string(TerminationReason reason) {
    switch (reason) {
        case TerminationReason::none: return "none";
        case TerminationReason::complete: return "complete";
        case TerminationReason::time: return "time";
        case TerminationReason::attempts: return "attempts";
    }
    return "none";
}

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::complete: return "complete";
        case RunStatus::error: return "error";
        case RunStatus::timeout: return "timeout";
    }
    return "complete";
}

TerminationReason should_terminate(const OrchestratorConfig& config, std::chrono::milliseconds elapsed,
                                   const TerminationCounters& counters) {
    if (counters.satisfied) return TerminationReason::complete;
    if (elapsed > config.time_budget) return TerminationReason::time;
    if (counters.outer_iterations >= config.max_outer_iterations) return TerminationReason::attempts;
    return TerminationReason::none;
}

void Team::add(std::unique_ptr<WorkerAgent> agent) { workers_.push_back(std::move(agent)); }

WorkerAgent* Team::find(const std::string& name) {
    for (auto& w : workers_) {
        if (w->name() == name) return w.get();
    }
    return nullptr;
}

std::vector<AgentDescription> Team::roster() const {
    std::vector<AgentDescription> out;
    for (const auto& w : workers_) out.push_back(w->description());
    return out;
}

std::vector<std::string> Team::names() const {
    std::vector<std::string> out;
    for (const auto& w : workers_) out.push_back(w->name());
    return out;
}

void Team::reset_all() {
    for (auto& w : workers_) w->reset();
}

Orchestrator::Orchestrator(CompletionClient& client, Team& team, OrchestratorConfig config, Clock& clock,
                           CallRecorder* recorder)
    : client_(client), team_(team), config_(std::move(config)), clock_(clock), recorder_(recorder) {
    stall_.threshold = config_.stall_threshold;
}

TaskLedger Orchestrator::initialize_task_ledger(const TaskSpec& task, Transcript& transcript) {
    if (task.prompt.empty()) throw std::invalid_argument("task description must be non-empty");

    std::string prompt = "Pre-populate the task ledger for this task.\nTask: " + task.prompt + "\n";
    if (!task.setup_prompt.empty()) prompt += task.setup_prompt + "\n";
    if (!task.attachments.empty()) {
        prompt += "Attachments:\n";
        for (const auto& a : task.attachments) prompt += "  - " + a + "\n";
    }
    prompt += "List given or verified facts, facts to look up, facts to derive, and educated guesses.";

    nlohmann::json obj = complete_structured(
        client_, {ChatMessage::text(Role::user, "orchestrator", prompt)}, kTaskLedgerSchema, recorder_);

    TaskLedger ledger;
    ledger.given_facts = string_list(obj.at("given_facts"));
    ledger.facts_to_look_up = string_list(obj.at("facts_to_look_up"));
    ledger.facts_to_derive = string_list(obj.at("facts_to_derive"));
    ledger.educated_guesses = string_list(obj.at("educated_guesses"));
    transcript.append(Role::assistant, "Orchestrator", "Task ledger initialized.\n" + ledger.summary());
    return ledger;
}

void Orchestrator::devise_plan(TaskLedger& ledger, Transcript& transcript) {
    if (config_.mode == OrchestratorMode::simple) return;  // no planning in the ablation

    std::string prompt = "Devise a step-by-step plan for the task. Assign each step to a team member.\n";
    prompt += ledger.summary();
    prompt += "Team:\n";
    for (const auto& d : team_.roster()) prompt += "  - " + d.name + ": " + d.description + "\n";

    std::vector<ChatMessage> messages{ChatMessage::text(Role::user, "orchestrator", prompt)};
    const auto names = team_.names();
    for (int attempt = 0; attempt < 2; ++attempt) {
        nlohmann::json obj = complete_structured(client_, messages, kPlanSchema, recorder_);
        auto steps = parse_plan_steps(obj.at("steps"));
        const auto bad = std::find_if(steps.begin(), steps.end(), [&](const PlanStep& s) {
            return std::find(names.begin(), names.end(), s.assignee) == names.end();
        });
        if (!steps.empty() && bad == steps.end()) {
            ledger.plan = std::move(steps);
            transcript.append(Role::assistant, "Orchestrator", "Plan devised.\n" + ledger.summary());
            return;
        }
        std::string correction = "The plan was invalid";
        if (bad != steps.end()) correction += ": '" + bad->assignee + "' is not a team member";
        correction += ". Valid team members are: ";
        for (const auto& n : names) correction += n + " ";
        messages.push_back(ChatMessage::text(Role::user, "orchestrator", correction));
        transcript.append(Role::user, "Orchestrator", correction);
    }
    throw SchemaError("plan referenced unknown agents after corrective retry");
}

std::optional<ProgressLedger> Orchestrator::evaluate_progress(const TaskLedger& ledger,
                                                              Transcript& transcript) {
    std::string prompt =
        "Answer the five progress questions: is the request fully satisfied; is the team looping or "
        "repeating itself; is forward progress being made; which agent should speak next; what "
        "instruction or question should be asked of that team member.\n";
    prompt += ledger.summary();
    prompt += "Conversation so far:\n" + transcript.full_text();

    std::vector<ChatMessage> messages{ChatMessage::text(Role::user, "orchestrator", prompt)};
    const auto names = team_.names();

    for (int attempt = 0; attempt < 2; ++attempt) {
        nlohmann::json obj;
        try {
            obj = complete_structured(client_, messages, kProgressSchema, recorder_);
        } catch (const SchemaError&) {
            return std::nullopt;  // the caller treats this as a stall event
        }
        ProgressLedger pl;
        auto satisfied = parse_judgment(obj.at("request_satisfied"));
        auto looping = parse_judgment(obj.at("in_loop"));
        auto progress = parse_judgment(obj.at("forward_progress"));
        if (!satisfied || !looping || !progress) return std::nullopt;
        pl.request_satisfied = *satisfied;
        pl.in_loop = *looping;
        pl.forward_progress = *progress;
        pl.next_speaker = obj.at("next_speaker").get<std::string>();
        pl.instruction = obj.at("instruction").get<std::string>();

        const bool speaker_known =
            std::find(names.begin(), names.end(), pl.next_speaker) != names.end();
        if (pl.request_satisfied.answer || speaker_known) return pl;

        std::string correction = "'" + pl.next_speaker + "' is not a team member. Valid members: ";
        for (const auto& n : names) correction += n + " ";
        messages.push_back(ChatMessage::text(Role::user, "orchestrator", correction));
        transcript.append(Role::user, "Orchestrator", correction);
    }
    return std::nullopt;
}

std::string Orchestrator::dispatch_step(const ProgressLedger& pl, Transcript& transcript) {
    WorkerAgent* agent = team_.find(pl.next_speaker);
    if (!agent) throw std::logic_error("dispatch to unknown agent: " + pl.next_speaker);

    transcript.append(Role::user, "Orchestrator", "To " + pl.next_speaker + ": " + pl.instruction);
    std::string reply;
    try {
        reply = agent->handle(pl.instruction);
    } catch (const std::exception& e) {
        // Failures are observations; the run continues.
        reply = std::string("[agent error] ") + e.what();
    }
    transcript.append(Role::assistant, pl.next_speaker, reply);
    return reply;
}

void Orchestrator::replan_and_reset(TaskLedger& ledger, Transcript& transcript) {
    std::string prompt =
        "Reflect on the work so far: what went wrong, what was learned, and what to do differently. "
        "Provide updated facts, updated educated guesses, and a revised plan.\n";
    prompt += ledger.summary();
    prompt += "Conversation so far:\n" + transcript.full_text();

    nlohmann::json obj = complete_structured(
        client_, {ChatMessage::text(Role::user, "orchestrator", prompt)}, kReflectionSchema, recorder_);

    for (const auto& f : string_list(obj.at("new_facts"))) ledger.given_facts.push_back(f);
    for (const auto& g : string_list(obj.at("new_guesses"))) ledger.educated_guesses.push_back(g);
    auto steps = parse_plan_steps(obj.at("plan"));
    if (!steps.empty()) ledger.plan = std::move(steps);
    ledger.revision += 1;

    team_.reset_all();
    stall_.counter = 0;
    transcript.clear_and_restart("plan revised to revision " + std::to_string(ledger.revision) +
                                 "; all agent contexts and states reset");
    transcript.append(Role::assistant, "Orchestrator", ledger.summary());
    persist_ledger(ledger);
}

std::string Orchestrator::produce_final_answer(const TaskLedger& ledger, Transcript& transcript) {
    std::string prompt = "Produce the final answer. " + config_.final_answer_prompt + "\n";
    prompt += ledger.summary();
    prompt += "Full transcript:\n" + transcript.full_text();

    std::string answer;
    try {
        ModelRequest request;
        request.messages.push_back(ChatMessage::text(Role::user, "orchestrator", prompt));
        ModelResponse resp = complete(client_, request, recorder_);
        if (!resp.refusal) answer = resp.message.joined_text();
    } catch (const std::exception&) {
        // Fall through to the guess list.
    }
    if (answer.empty()) {
        answer = ledger.educated_guesses.empty() ? "UNKNOWN" : ledger.educated_guesses.front();
    }
    transcript.append(Role::assistant, "Orchestrator", "FINAL ANSWER: " + answer);
    return answer;
}

ProgressLedger Orchestrator::select_speaker_only(Transcript& transcript) {
    std::string prompt = "Select the next speaker and the instruction to give them.\nTeam: ";
    for (const auto& n : team_.names()) prompt += n + " ";
    prompt += "\nConversation so far:\n" + transcript.full_text();

    nlohmann::json obj = complete_structured(
        client_, {ChatMessage::text(Role::user, "orchestrator", prompt)}, kSpeakerSchema, recorder_);
    ProgressLedger pl;
    pl.next_speaker = obj.at("next_speaker").get<std::string>();
    pl.instruction = obj.at("instruction").get<std::string>();
    return pl;
}

void Orchestrator::persist_ledger(const TaskLedger& ledger) const {
    if (run_dir_.empty()) return;
    std::filesystem::create_directories(run_dir_);
    std::ofstream out(run_dir_ / ("ledger_rev" + std::to_string(ledger.revision) + ".json"));
    out << ledger.to_json().dump(2) << "\n";
}

RunOutcome Orchestrator::run_task(const TaskSpec& task, Transcript& transcript) {
    RunOutcome outcome;
    outcome.task_id = task.task_id;
    if (team_.names().empty()) {
        outcome.status = RunStatus::error;
        outcome.error = "roster is empty";
        return outcome;
    }

    const auto start = clock_.now();
    stall_ = StallState{0, config_.stall_threshold};

    std::string task_text = task.prompt;
    if (!task.setup_prompt.empty()) task_text = task.setup_prompt + "\n" + task_text;
    transcript.append(Role::user, "user", task_text);

    TaskLedger ledger;
    TerminationCounters counters;
    TerminationReason reason = TerminationReason::none;

    auto finalize = [&](TerminationReason r) {
        outcome.reason = r;
        outcome.final_answer = produce_final_answer(ledger, transcript);
        outcome.status = (r == TerminationReason::time) ? RunStatus::timeout : RunStatus::complete;
        outcome.outer_iterations = counters.outer_iterations;
        outcome.ledger = ledger;
        if (recorder_) {
            outcome.usage = recorder_->total_usage();
            outcome.model_calls = recorder_->call_count();
        }
    };

    try {
        if (config_.mode == OrchestratorMode::full) {
            ledger = initialize_task_ledger(task, transcript);
            persist_ledger(ledger);
        }

        bool first_outer = true;
        while (true) {
            if (config_.mode == OrchestratorMode::full) {
                if (first_outer) {
                    devise_plan(ledger, transcript);
                    persist_ledger(ledger);
                    first_outer = false;
                }
            }

            bool stalled = false;
            for (int round = 0; round < config_.max_inner_rounds_per_outer && !stalled; ++round) {
                reason = should_terminate(config_, clock_.now() - start, counters);
                if (reason != TerminationReason::none) {
                    finalize(reason);
                    return outcome;
                }

                if (config_.mode == OrchestratorMode::full) {
                    auto pl = evaluate_progress(ledger, transcript);
                    if (!pl) {
                        ++stall_.counter;  // schema failure counts as a stall event
                        transcript.append(Role::assistant, "Orchestrator",
                                          "Progress evaluation failed; stall counter is now " +
                                              std::to_string(stall_.counter));
                        if (stall_.counter > stall_.threshold) stalled = true;
                        continue;
                    }
                    if (pl->request_satisfied.answer) {
                        counters.satisfied = true;
                        finalize(TerminationReason::complete);
                        return outcome;
                    }
                    stall_ = update_stall_counter(stall_, *pl);
                    if (stall_.counter > stall_.threshold) {
                        stalled = true;
                        continue;
                    }
                    dispatch_step(*pl, transcript);
                    ++outcome.dispatches;
                } else {
                    ProgressLedger sel = select_speaker_only(transcript);
                    if (team_.find(sel.next_speaker) == nullptr) {
                        transcript.append(Role::assistant, "Orchestrator",
                                          "Selected speaker '" + sel.next_speaker + "' is not on the team.");
                        continue;
                    }
                    dispatch_step(sel, transcript);
                    ++outcome.dispatches;
                }
            }

            counters.outer_iterations += 1;
            reason = should_terminate(config_, clock_.now() - start, counters);
            if (reason != TerminationReason::none) {
                finalize(reason);
                return outcome;
            }
            if (config_.mode == OrchestratorMode::full) {
                replan_and_reset(ledger, transcript);
            }
        }
    } catch (const std::exception& e) {
        outcome.status = RunStatus::error;
        outcome.error = e.what();
        outcome.final_answer = "";
        outcome.outer_iterations = counters.outer_iterations;
        outcome.ledger = ledger;
        if (recorder_) {
            outcome.usage = recorder_->total_usage();
            outcome.model_calls = recorder_->call_count();
        }
        transcript.append(Role::assistant, "Orchestrator", std::string("[run error] ") + e.what());
        return outcome;
    }
}

}  // namespace ledgerone
