#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "maxshapley/errors.hpp"
#include "maxshapley/judge/backend.hpp"
#include "maxshapley/judge/endpoint.hpp"

namespace maxshapley::judge {

// Chat-completion client for the two wire shapes in EndpointConfig. Keys are
// resolved from the environment at call time and never stored. Transient
// failures (transport errors, 429, 5xx) are retried with exponential backoff
// up to max_retries total attempts.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(EndpointConfig config) : config_(std::move(config)) {
        config_.validate();
        if (config_.base_url.empty()) throw UsageError("endpoint base_url must be set");
    }

    ChatResult complete(const ChatRequest& request) override {
        const std::string key = resolve_api_key();
        const std::string path =
            config_.shape == ApiShape::OpenAiChat ? "/v1/chat/completions" : "/v1/messages";
        const std::string body = build_body(request.prompt);

        std::string last_error;
        for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(config_.retry_backoff * (1LL << (attempt - 2)));
            }
            // One client per call; httplib clients are not safe to share
            // across in-flight requests.
            httplib::Client client(config_.base_url);
            client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
                config_.request_timeout));
            client.set_read_timeout(config_.request_timeout);
            client.set_write_timeout(config_.request_timeout);

            httplib::Headers headers;
            if (config_.shape == ApiShape::OpenAiChat) {
                headers.emplace("Authorization", "Bearer " + key);
            } else {
                headers.emplace("x-api-key", key);
                headers.emplace("anthropic-version", "2023-06-01");
            }

            auto res = client.Post(path, headers, body, "application/json");
            if (!res) {
                last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw OracleError("endpoint '" + config_.base_url + "' rejected the request: HTTP " +
                                  std::to_string(res->status) + " " + res->body);
            }
            return parse_response(res->body);
        }
        throw OracleError("endpoint '" + config_.base_url + "' failed after " +
                          std::to_string(config_.max_retries) + " attempts: " + last_error);
    }

    const EndpointConfig& config() const { return config_; }

private:
    std::string resolve_api_key() const {
        if (config_.api_key_env.empty()) return "";
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw OracleError("environment variable " + config_.api_key_env +
                              " is not set; API keys are only read from the environment");
        }
        return key;
    }

    std::string build_body(const std::string& prompt) const {
        nlohmann::json body = {
            {"model", config_.model_name},
            {"temperature", config_.temperature},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        };
        if (config_.shape == ApiShape::AnthropicMessages) {
            body["max_tokens"] = 1024;
        }
        return body.dump();
    }

    ChatResult parse_response(const std::string& body) const {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw OracleError(std::string("endpoint returned unparseable JSON: ") + e.what());
        }
        ChatResult result;
        try {
            if (config_.shape == ApiShape::OpenAiChat) {
                result.completion =
                    doc.at("choices").at(0).at("message").at("content").get<std::string>();
                result.tokens_in = doc.at("usage").at("prompt_tokens").get<long long>();
                result.tokens_out = doc.at("usage").at("completion_tokens").get<long long>();
            } else {
                result.completion = doc.at("content").at(0).at("text").get<std::string>();
                result.tokens_in = doc.at("usage").at("input_tokens").get<long long>();
                result.tokens_out = doc.at("usage").at("output_tokens").get<long long>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw OracleError(std::string("endpoint response is missing required fields: ") +
                              e.what());
        }
        return result;
    }

    EndpointConfig config_;
};

}  // namespace maxshapley::judge
