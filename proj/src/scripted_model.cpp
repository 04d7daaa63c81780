#include "ledgerone/scripted_model.hpp"

#include <algorithm>
#include <fstream>

#include "ledgerone/errors.hpp"

namespace ledgerone {

namespace {

std::string last_user_text(const ModelRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == Role::user) return it->joined_text();
    }
    // Fall back to the last message of any role.
    return request.messages.back().joined_text();
}

std::uint64_t text_units(const std::string& s) { return static_cast<std::uint64_t>(s.size()); }

}  // namespace

ScriptedModel::ScriptedModel(std::vector<ScriptedRule> rules) : rules_(std::move(rules)) {}

std::vector<ScriptedRule> ScriptedModel::rules_from_json(const nlohmann::json& doc) {
    std::vector<ScriptedRule> rules;
    for (const auto& rj : doc.at("rules")) {
        ScriptedRule r;
        r.match_substring = rj.value("match_substring", "");
        r.match_schema = rj.value("match_schema", "");
        if (rj.contains("response") && rj.at("response").is_string()) {
            r.response = rj.at("response").get<std::string>();
        } else if (rj.contains("response")) {
            r.response = rj.at("response").dump();
        }
        r.one_shot = rj.value("one_shot", false);
        r.refusal = rj.value("refusal", false);
        rules.push_back(std::move(r));
    }
    return rules;
}

std::vector<ScriptedRule> ScriptedModel::rules_from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model script: " + path.string());
    nlohmann::json doc;
    in >> doc;
    return rules_from_json(doc);
}

ModelResponse ScriptedModel::complete(const ModelRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::string user_text = last_user_text(request);
    const std::string schema_name = request.schema ? request.schema->name : "";
    call_schemas_.push_back(schema_name);

    for (auto& rule : rules_) {
        if (rule.one_shot && rule.used) continue;
        if (!rule.match_substring.empty() && user_text.find(rule.match_substring) == std::string::npos) continue;
        if (!rule.match_schema.empty() && rule.match_schema != schema_name) continue;
        rule.used = true;

        ModelResponse resp;
        resp.message = ChatMessage::text(Role::assistant, "scripted-model", rule.response);
        resp.refusal = rule.refusal;
        for (const auto& m : request.messages) resp.usage.prompt_units += text_units(m.joined_text());
        resp.usage.completion_units = text_units(rule.response);
        return resp;
    }

    const std::string snippet = user_text.substr(0, std::min<std::size_t>(user_text.size(), 160));
    throw NoRuleMatched("no scripted rule matched call (schema='" + schema_name + "', last user message: '" +
                        snippet + "')");
}

std::size_t ScriptedModel::call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return call_schemas_.size();
}

std::vector<std::string> ScriptedModel::call_schemas() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return call_schemas_;
}

std::size_t ScriptedModel::calls_with_schema(const std::string& schema_name) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<std::size_t>(std::count(call_schemas_.begin(), call_schemas_.end(), schema_name));
}

}  // namespace ledgerone
