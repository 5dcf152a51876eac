#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace maxshapley::judge {

// One chat call. `prompt` is the exact text a remote model would receive;
// `payload` carries the structured placeholder values so deterministic mock
// backends can act on them without re-parsing the prompt.
struct ChatRequest {
    std::string stage;
    std::string prompt;
    nlohmann::json payload;
};

struct ChatResult {
    std::string completion;
    long long tokens_in = 0;
    long long tokens_out = 0;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResult complete(const ChatRequest& request) = 0;
};

}  // namespace maxshapley::judge
