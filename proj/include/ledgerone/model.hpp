#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerone/message.hpp"

namespace ledgerone {

/// Field-level description of the structure a reply must contain. The
/// reply body is expected to carry a JSON object with these fields.
struct SchemaField {
    enum class Type { boolean, integer, number, string, array, object };
    std::string name;
    Type type = Type::string;
};

struct ResponseSchema {
    std::string name;
    std::vector<SchemaField> fields;

    /// Short textual rendering included in prompts so any model knows the
    /// expected shape.
    std::string describe() const;
};

struct ModelRequest {
    std::vector<ChatMessage> messages;
    std::optional<ResponseSchema> schema;
    bool deterministic = true;

    nlohmann::json to_json() const;
};

struct Usage {
    std::uint64_t prompt_units = 0;
    std::uint64_t completion_units = 0;

    Usage& operator+=(const Usage& other) {
        prompt_units += other.prompt_units;
        completion_units += other.completion_units;
        return *this;
    }
};

struct ModelResponse {
    ChatMessage message;
    Usage usage;
    bool refusal = false;
};

/// Contract every model backend implements. Implementations must be safe
/// to call from concurrently running tasks.
class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
};

/// Per-run record of every model exchange. Enables replay and additive
/// usage accounting.
class CallRecorder {
public:
    struct Call {
        ModelRequest request;
        ModelResponse response;
    };

    void record(const ModelRequest& req, const ModelResponse& resp);
    const std::vector<Call>& calls() const { return calls_; }
    std::size_t call_count() const { return calls_.size(); }
    Usage total_usage() const;

private:
    std::vector<Call> calls_;
};

/// Issues one completion, recording the exchange. Throws TransportError /
/// NoRuleMatched on client failure. Refusals are surfaced on the response,
/// not thrown.
ModelResponse complete(CompletionClient& client, const ModelRequest& request,
                       CallRecorder* recorder = nullptr);

/// Extracts the first JSON object embedded in a response body. Returns
/// nullopt when none parses.
std::optional<nlohmann::json> extract_json_object(const std::string& text);

/// Returns an error description when the object does not satisfy the
/// schema, or nullopt when it does.
std::optional<std::string> validate_against(const nlohmann::json& obj, const ResponseSchema& schema);

/// Schema-constrained completion. On a parse failure the call is retried
/// once with an error-explaining message appended; a second failure throws
/// SchemaError.
nlohmann::json complete_structured(CompletionClient& client, std::vector<ChatMessage> messages,
                                   const ResponseSchema& schema, CallRecorder* recorder = nullptr);

}  // namespace ledgerone
