#include "ledgerone/harness.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ledgerone/md5.hpp"
#include "ledgerone/stats.hpp"

namespace ledgerone {

TaskManifestEntry manifest_entry_from_json(const nlohmann::json& j) {
    TaskManifestEntry e;
    e.task_id = j.at("task_id").get<std::string>();
    e.template_id = j.value("template_id", "");
    e.prompt = j.at("prompt").get<std::string>();
    for (const auto& a : j.value("attachments", nlohmann::json::array())) {
        e.attachments.push_back(a.get<std::string>());
    }
    if (j.contains("expected_answer")) e.expected_answer = j.at("expected_answer").get<std::string>();
    e.scorer = j.value("scorer", "exact_match");
    e.category = j.value("category", "");
    e.setup_prompt = j.value("setup_prompt", "");
    return e;
}

std::vector<TaskManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path.string());

    std::vector<TaskManifestEntry> entries;
    std::map<std::string, bool> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error("manifest line " + std::to_string(line_no) + " does not parse");
        }
        auto e = manifest_entry_from_json(j);
        if (seen[e.task_id]) {
            throw std::runtime_error("duplicate task_id in manifest: " + e.task_id);
        }
        seen[e.task_id] = true;
        entries.push_back(std::move(e));
    }
    return entries;
}

ScorerRegistry ScorerRegistry::with_defaults() {
    ScorerRegistry reg;
    reg.register_scorer("exact_match", [](const std::string& answer, const TaskManifestEntry& entry) {
        if (!entry.expected_answer) {
            throw std::runtime_error("exact_match scorer needs an expected_answer for task " + entry.task_id);
        }
        return static_cast<double>(score_exact_match(answer, *entry.expected_answer));
    });
    return reg;
}

void ScorerRegistry::register_scorer(const std::string& name, Scorer fn) {
    scorers_[name] = std::move(fn);
}

bool ScorerRegistry::has(const std::string& name) const { return scorers_.count(name) > 0; }

const Scorer& ScorerRegistry::get(const std::string& name) const {
    auto it = scorers_.find(name);
    if (it == scorers_.end()) throw std::runtime_error("no scorer registered under '" + name + "'");
    return it->second;
}

nlohmann::json RunRecord::to_json() const {
    return {{"task_id", task_id},
            {"repetition", repetition},
            {"transcript_path", transcript_path},
            {"final_answer", final_answer},
            {"score", score},
            {"status", status},
            {"wall_time_s", wall_time_s},
            {"usage", {{"prompt_units", usage.prompt_units}, {"completion_units", usage.completion_units}}},
            {"category", category}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
    RunRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.repetition = j.value("repetition", 0);
    r.transcript_path = j.value("transcript_path", "");
    r.final_answer = j.value("final_answer", "");
    r.score = j.value("score", 0.0);
    r.status = j.value("status", "complete");
    r.wall_time_s = j.value("wall_time_s", 0.0);
    if (j.contains("usage")) {
        r.usage.prompt_units = j["usage"].value("prompt_units", 0);
        r.usage.completion_units = j["usage"].value("completion_units", 0);
    }
    r.category = j.value("category", "");
    return r;
}

Aggregate aggregate_records(const std::vector<RunRecord>& records) {
    Aggregate agg;
    agg.n = static_cast<int>(records.size());
    for (const auto& r : records) {
        if (r.score >= 1.0) ++agg.successes;
    }
    if (agg.n > 0) {
        agg.rate = static_cast<double>(agg.successes) / agg.n;
        agg.wald_half_width = wald_interval(agg.successes, agg.n);
    }
    return agg;
}

std::map<std::string, Aggregate> aggregate_by_category(const std::vector<RunRecord>& records) {
    std::map<std::string, std::vector<RunRecord>> buckets;
    for (const auto& r : records) {
        buckets[r.category.empty() ? "(uncategorized)" : r.category].push_back(r);
    }
    std::map<std::string, Aggregate> out;
    for (const auto& [cat, recs] : buckets) out[cat] = aggregate_records(recs);
    out["overall"] = aggregate_records(records);
    return out;
}

BenchmarkResult run_benchmark(const std::vector<TaskManifestEntry>& entries, const BenchConfig& config,
                              const TaskRunner& runner, const ScorerRegistry& scorers) {
    namespace fs = std::filesystem;
    for (const auto& e : entries) {
        if (!scorers.has(e.scorer)) {
            throw std::runtime_error("task " + e.task_id + " names unregistered scorer '" + e.scorer + "'");
        }
    }

    struct Unit {
        const TaskManifestEntry* entry;
        int repetition;
    };
    std::vector<Unit> units;
    for (const auto& e : entries) {
        for (int rep = 0; rep < config.repetitions; ++rep) units.push_back({&e, rep});
    }

    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int parallelism = std::max(1, config.parallelism > 0 ? config.parallelism : hw);

    std::vector<RunRecord> records(units.size());
    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;

    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= units.size()) return;
            const Unit& unit = units[i];
            const TaskManifestEntry& entry = *unit.entry;

            const fs::path run_dir = config.run_root / config.benchmark_name / entry.task_id /
                                     std::to_string(unit.repetition);
            // Blank-slate initial conditions for every (task, repetition).
            fs::remove_all(run_dir);
            fs::create_directories(run_dir / "workspace");
            fs::create_directories(run_dir / "artifacts");

            RunRecord record;
            record.task_id = entry.task_id;
            record.repetition = unit.repetition;
            record.category = entry.category;

            const auto start = std::chrono::steady_clock::now();
            try {
                TaskResult result = runner(entry, run_dir);
                record.final_answer = result.final_answer;
                record.status = result.status;
                record.usage = result.usage;
                const fs::path tpath = run_dir / "transcript.jsonl";
                result.transcript.write_jsonl(tpath);
                record.transcript_path = tpath.string();
                if (result.status != "error") {
                    record.score = scorers.get(entry.scorer)(result.final_answer, entry);
                }
            } catch (const std::exception& e) {
                // Crash containment: this record alone reports the failure.
                record.status = "error";
                record.final_answer = "";
                record.score = 0.0;
                std::ofstream(run_dir / "error.txt") << e.what() << "\n";
            }
            record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            {
                std::lock_guard<std::mutex> lock(io_mutex);
                std::ofstream(run_dir / "record.json") << record.to_json().dump(2) << "\n";
            }
            records[i] = std::move(record);
        }
    };

    std::vector<std::thread> threads;
    for (int t = 0; t < parallelism; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();

    BenchmarkResult result;
    result.records = std::move(records);
    result.aggregate = aggregate_records(result.records);
    result.per_category = aggregate_by_category(result.records);
    return result;
}

std::pair<std::vector<TaskManifestEntry>, std::vector<TaskManifestEntry>> split_validation_test(
    const std::vector<TaskManifestEntry>& entries) {
    std::vector<TaskManifestEntry> validation, test;
    for (const auto& e : entries) {
        if (e.template_id.empty()) {
            throw std::runtime_error("entry " + e.task_id + " lacks a template_id; cannot split");
        }
        const char first = md5_hex(e.template_id)[0];
        if (first >= '0' && first <= '7') {
            validation.push_back(e);
        } else {
            test.push_back(e);
        }
    }
    return {std::move(validation), std::move(test)};
}

}  // namespace ledgerone
