#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerone/model.hpp"

namespace ledgerone {

/// Distilled account of one run: root cause of failure plus contributing
/// factors. Produced even for successful runs.
struct Postmortem {
    std::string task_id;
    std::string root_cause;
    std::vector<std::string> contributing_factors;
    std::string outcome;  // success | failure
    std::string benchmark;
    std::string variant;
};

struct ErrorCode {
    std::string label;  // kebab-case
    std::string definition;
    std::vector<std::string> examples;
};

struct CodeBook {
    std::vector<ErrorCode> codes;
    int iteration = 0;
    bool stable = false;
    std::map<std::string, std::string> merge_map;  // original label -> surviving label

    const ErrorCode* find(const std::string& label) const;

    nlohmann::json to_json() const;
    static CodeBook from_json(const nlohmann::json& j);
    static CodeBook load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

std::string kebab_case(const std::string& s);

/// One model call distilling a transcript into a postmortem. A schema
/// failure after retry yields root_cause "UNANALYZED", never a dropped
/// document.
Postmortem distill_postmortem(const std::string& task_id, const std::string& transcript_text,
                              const std::string& run_status, CompletionClient& client,
                              CallRecorder* recorder = nullptr);

/// Open coding: 1-5 descriptive codes per document, labels normalized to
/// kebab-case and deduplicated. Zero codes after a retry yields a single
/// "uncoded" code.
std::vector<ErrorCode> assign_initial_codes(const Postmortem& pm, CompletionClient& client,
                                            CallRecorder* recorder = nullptr);

struct ConsolidationConfig {
    int max_iterations = 5;
    int batch_size = 20;
    unsigned seed = 2024;  // deterministic batch shuffling
};

/// Iterative batch clustering: merges similar codes until a pass yields no
/// merges or max_iterations is reached. Every input code maps to exactly
/// one surviving code via the merge map.
CodeBook consolidate_codes(const std::vector<ErrorCode>& codes, CompletionClient& client,
                           const ConsolidationConfig& config = {}, CallRecorder* recorder = nullptr);

struct CodeAssignment {
    std::string task_id;
    std::string benchmark;
    std::string variant;
    std::vector<std::string> codes;
};

/// Applies a finalized codebook corpus-wide. Out-of-book labels are mapped
/// through the merge map when possible, otherwise "uncoded".
std::vector<CodeAssignment> apply_codebook(const CodeBook& book, const std::vector<Postmortem>& postmortems,
                                           CompletionClient& client, CallRecorder* recorder = nullptr);

struct AnalysisTables {
    std::string distribution;  // CSV: code,count — sorted by occurrence
    std::string heatmap;       // TSV: rows are codes, columns benchmark x variant
    std::map<std::string, int> distribution_counts;
    std::map<std::string, std::map<std::string, int>> heatmap_counts;  // code -> column -> count
};

AnalysisTables emit_analysis_tables(const std::vector<CodeAssignment>& assignments);

}  // namespace ledgerone
