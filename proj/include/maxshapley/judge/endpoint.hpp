#pragma once

#include <chrono>
#include <string>

#include "maxshapley/errors.hpp"

namespace maxshapley::judge {

// The two chat-completion wire shapes the remote adapters speak.
enum class ApiShape {
    OpenAiChat,          // POST {base}/v1/chat/completions, bearer auth
    AnthropicMessages,   // POST {base}/v1/messages, x-api-key auth
};

inline const char* to_string(ApiShape s) {
    return s == ApiShape::OpenAiChat ? "openai-chat" : "anthropic-messages";
}

inline ApiShape api_shape_from_string(const std::string& name) {
    if (name == "openai-chat") return ApiShape::OpenAiChat;
    if (name == "anthropic-messages") return ApiShape::AnthropicMessages;
    throw UsageError("unknown api shape '" + name +
                     "'; valid shapes: openai-chat, anthropic-messages");
}

struct EndpointConfig {
    std::string base_url;
    std::string model_name;
    // Name of the environment variable holding the key; the key itself is
    // never stored in configs or snapshots.
    std::string api_key_env;
    ApiShape shape = ApiShape::OpenAiChat;
    double temperature = 0.0;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{250};
    // Currency per 1000 tokens.
    double price_in = 0.0;
    double price_out = 0.0;

    void validate() const {
        if (temperature < 0.0) throw UsageError("endpoint temperature must be >= 0");
        if (price_in < 0.0 || price_out < 0.0) throw UsageError("endpoint prices must be >= 0");
        if (request_timeout.count() <= 0) throw UsageError("endpoint timeout must be positive");
        if (max_retries < 1) throw UsageError("endpoint max_retries must be >= 1");
    }
};

}  // namespace maxshapley::judge
