#include "ledgerone/live_model.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ledgerone/errors.hpp"

namespace ledgerone {

LiveModelClient::LiveModelClient(std::string endpoint, std::string api_key, std::string model_name)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_name_(std::move(model_name)) {}

LiveModelClient LiveModelClient::from_env() {
    const char* url = std::getenv("LEDGERONE_MODEL_URL");
    if (!url || !*url) {
        throw TransportError("LEDGERONE_MODEL_URL is not set; cannot construct a live client");
    }
    const char* key = std::getenv("LEDGERONE_MODEL_KEY");
    return LiveModelClient(url, key ? key : "");
}

ModelResponse LiveModelClient::complete(const ModelRequest& request) {
    // Split endpoint into host part and path.
    std::string host = endpoint_;
    std::string path = "/v1/chat/completions";
    const auto scheme_end = host.find("://");
    const auto path_start = host.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        path = host.substr(path_start);
        host = host.substr(0, path_start);
    }

    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.joined_text()}});
    }
    if (request.schema) {
        messages.push_back({{"role", "user"}, {"content", request.schema->describe()}});
    }
    nlohmann::json body = {
        {"model", model_name_},
        {"messages", messages},
        {"temperature", request.deterministic ? 0.0 : 1.0},
    };

    httplib::Client cli(host);
    cli.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("model endpoint unreachable: " + host);
    }
    if (res->status != 200) {
        throw TransportError("model endpoint returned status " + std::to_string(res->status));
    }

    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw TransportError("model endpoint returned unparsable body");

    std::string content;
    try {
        content = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw TransportError("model endpoint response missing choices[0].message.content");
    }

    ModelResponse resp;
    resp.message = ChatMessage::text(Role::assistant, "live-model", content);
    if (parsed.contains("usage")) {
        resp.usage.prompt_units = parsed["usage"].value("prompt_tokens", 0);
        resp.usage.completion_units = parsed["usage"].value("completion_tokens", 0);
    }
    return resp;
}

}  // namespace ledgerone
