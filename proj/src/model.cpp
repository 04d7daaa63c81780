#include "ledgerone/model.hpp"

#include <stdexcept>

#include "ledgerone/errors.hpp"

namespace ledgerone {

namespace {

std::string type_name(SchemaField::Type t) {
    switch (t) {
        case SchemaField::Type::boolean: return "bool";
        case SchemaField::Type::integer: return "int";
        case SchemaField::Type::number: return "number";
        case SchemaField::Type::string: return "string";
        case SchemaField::Type::array: return "array";
        case SchemaField::Type::object: return "object";
    }
    return "string";
}

bool type_matches(const nlohmann::json& v, SchemaField::Type t) {
    switch (t) {
        case SchemaField::Type::boolean: return v.is_boolean();
        case SchemaField::Type::integer: return v.is_number_integer();
        case SchemaField::Type::number: return v.is_number();
        case SchemaField::Type::string: return v.is_string();
        case SchemaField::Type::array: return v.is_array();
        case SchemaField::Type::object: return v.is_object();
    }
    return false;
}

}  // namespace

std::string ResponseSchema::describe() const {
    std::string out = "Respond with a JSON object named '" + name + "' containing fields: ";
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ", ";
        first = false;
        out += f.name + " (" + type_name(f.type) + ")";
    }
    return out;
}

nlohmann::json ModelRequest::to_json() const {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back(m.to_json(false));
    nlohmann::json j = {{"messages", msgs}, {"deterministic", deterministic}};
    if (schema) {
        nlohmann::json fields = nlohmann::json::array();
        for (const auto& f : schema->fields) fields.push_back({{"name", f.name}, {"type", type_name(f.type)}});
        j["schema"] = {{"name", schema->name}, {"fields", fields}};
    }
    return j;
}

void CallRecorder::record(const ModelRequest& req, const ModelResponse& resp) {
    calls_.push_back(Call{req, resp});
}

Usage CallRecorder::total_usage() const {
    Usage total;
    for (const auto& c : calls_) total += c.response.usage;
    return total;
}

ModelResponse complete(CompletionClient& client, const ModelRequest& request, CallRecorder* recorder) {
    if (request.messages.empty()) {
        throw std::invalid_argument("model request must contain at least one message");
    }
    ModelResponse resp = client.complete(request);
    if (recorder) recorder->record(request, resp);
    return resp;
}

std::optional<nlohmann::json> extract_json_object(const std::string& text) {
    const std::size_t open = text.find('{');
    if (open == std::string::npos) return std::nullopt;
    // Try successively shorter suffixes ending at each closing brace, from
    // the last one backwards.
    for (std::size_t close = text.rfind('}'); close != std::string::npos && close > open;
         close = (close == 0 ? std::string::npos : text.rfind('}', close - 1))) {
        const auto candidate = text.substr(open, close - open + 1);
        auto parsed = nlohmann::json::parse(candidate, nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    return std::nullopt;
}

std::optional<std::string> validate_against(const nlohmann::json& obj, const ResponseSchema& schema) {
    if (!obj.is_object()) return "response body is not a JSON object";
    for (const auto& f : schema.fields) {
        if (!obj.contains(f.name)) {
            return "missing field '" + f.name + "' required by schema '" + schema.name + "'";
        }
        if (!type_matches(obj.at(f.name), f.type)) {
            return "field '" + f.name + "' has wrong type, expected " + type_name(f.type);
        }
    }
    return std::nullopt;
}

nlohmann::json complete_structured(CompletionClient& client, std::vector<ChatMessage> messages,
                                   const ResponseSchema& schema, CallRecorder* recorder) {
    ModelRequest request;
    request.messages = std::move(messages);
    request.schema = schema;

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ModelResponse resp = complete(client, request, recorder);
        if (resp.refusal) {
            last_error = "model refused the request";
        } else {
            auto obj = extract_json_object(resp.message.joined_text());
            if (!obj) {
                last_error = "no JSON object found in response";
            } else if (auto err = validate_against(*obj, schema)) {
                last_error = *err;
            } else {
                return *obj;
            }
        }
        request.messages.push_back(ChatMessage::text(
            Role::user, "schema-check",
            "Your previous reply was invalid: " + last_error + ". " + schema.describe()));
    }
    throw SchemaError("schema '" + schema.name + "' not satisfied after retry: " + last_error);
}

}  // namespace ledgerone
