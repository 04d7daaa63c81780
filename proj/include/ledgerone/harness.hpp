#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerone/model.hpp"
#include "ledgerone/orchestrator.hpp"

namespace ledgerone {

struct TaskManifestEntry {
    std::string task_id;
    std::string template_id;  // optional; required for the validation/test split
    std::string prompt;
    std::vector<std::string> attachments;
    std::optional<std::string> expected_answer;
    std::string scorer = "exact_match";
    std::string category;
    std::string setup_prompt;
};

/// Line-delimited manifest: one JSON document per line.
std::vector<TaskManifestEntry> load_manifest(const std::filesystem::path& path);
TaskManifestEntry manifest_entry_from_json(const nlohmann::json& j);

using Scorer = std::function<double(const std::string& answer, const TaskManifestEntry& entry)>;

class ScorerRegistry {
public:
    static ScorerRegistry with_defaults();  // registers exact_match
    void register_scorer(const std::string& name, Scorer fn);
    bool has(const std::string& name) const;
    const Scorer& get(const std::string& name) const;

private:
    std::map<std::string, Scorer> scorers_;
};

/// One benchmark execution: written even when the task errors.
struct RunRecord {
    std::string task_id;
    int repetition = 0;
    std::string transcript_path;
    std::string final_answer;
    double score = 0.0;
    std::string status = "complete";  // complete | error | timeout
    double wall_time_s = 0.0;
    Usage usage;
    std::string category;

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
};

struct Aggregate {
    int n = 0;
    int successes = 0;
    double rate = 0.0;
    double wald_half_width = 0.0;
};

Aggregate aggregate_records(const std::vector<RunRecord>& records);

struct BenchmarkResult {
    std::vector<RunRecord> records;
    Aggregate aggregate;
    std::map<std::string, Aggregate> per_category;
};

/// Per-category n/successes/rate plus an overall row keyed "overall".
/// Categories with no records are omitted.
std::map<std::string, Aggregate> aggregate_by_category(const std::vector<RunRecord>& records);

struct BenchConfig {
    std::string benchmark_name = "bench";
    int repetitions = 1;
    int parallelism = 0;  // 0: number of processor cores
    std::filesystem::path run_root = "runs";
};

/// What one isolated task-repetition execution hands back to the runner.
struct TaskResult {
    std::string final_answer;
    std::string status = "complete";
    Usage usage;
    Transcript transcript{""};
};

/// Executes one task inside its freshly initialized run directory. The
/// default runner builds the full orchestrated team; tests may inject
/// their own (including crashing ones).
using TaskRunner = std::function<TaskResult(const TaskManifestEntry& entry,
                                            const std::filesystem::path& run_dir)>;

/// Runs each (task, repetition) in a fresh isolated environment, in
/// parallel, writing per-run logs under
/// `<run_root>/<benchmark>/<task_id>/<rep>/`. A task crash yields a
/// status=error record for that run only; the benchmark never aborts.
BenchmarkResult run_benchmark(const std::vector<TaskManifestEntry>& entries, const BenchConfig& config,
                              const TaskRunner& runner, const ScorerRegistry& scorers);

/// MD5-based validation/test split: an entry goes to validation iff the
/// first hex character of MD5(template_id) is in 0..7. Entries without a
/// template_id are rejected.
std::pair<std::vector<TaskManifestEntry>, std::vector<TaskManifestEntry>> split_validation_test(
    const std::vector<TaskManifestEntry>& entries);

}  // namespace ledgerone
