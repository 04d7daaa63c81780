#pragma once

#include <string>

#include "ledgerone/model.hpp"

namespace ledgerone {

/// HTTP-backed completion client for a chat-completions style endpoint.
/// Endpoint and key come from LEDGERONE_MODEL_URL / LEDGERONE_MODEL_KEY
/// unless given explicitly.
class LiveModelClient : public CompletionClient {
public:
    LiveModelClient(std::string endpoint, std::string api_key, std::string model_name = "default");

    /// Reads configuration from the environment. Throws when the URL is unset.
    static LiveModelClient from_env();

    ModelResponse complete(const ModelRequest& request) override;

private:
    std::string endpoint_;
    std::string api_key_;
    std::string model_name_;
};

}  // namespace ledgerone
