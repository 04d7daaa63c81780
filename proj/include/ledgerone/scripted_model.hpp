#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerone/model.hpp"

namespace ledgerone {

/// One rule of a deterministic scripted model. Rules are evaluated in
/// order; the first match fires. An unmatched call is an error, never a
/// silent default.
struct ScriptedRule {
    std::string match_substring;  // over the last user message; empty matches anything
    std::string match_schema;     // over the request schema name; empty matches anything
    std::string response;
    bool one_shot = false;
    bool refusal = false;
    bool used = false;
};

/// Deterministic stand-in for any LLM. Thread-safe.
class ScriptedModel : public CompletionClient {
public:
    ScriptedModel() = default;
    explicit ScriptedModel(std::vector<ScriptedRule> rules);

    static std::vector<ScriptedRule> rules_from_json(const nlohmann::json& doc);
    static std::vector<ScriptedRule> rules_from_file(const std::filesystem::path& path);

    ModelResponse complete(const ModelRequest& request) override;

    std::size_t call_count() const;
    /// Schema names of calls in order; "" for unconstrained calls.
    std::vector<std::string> call_schemas() const;
    std::size_t calls_with_schema(const std::string& schema_name) const;

private:
    std::vector<ScriptedRule> rules_;
    std::vector<std::string> call_schemas_;
    mutable std::mutex mutex_;
};

}  // namespace ledgerone
