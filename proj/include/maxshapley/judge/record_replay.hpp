#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "maxshapley/errors.hpp"
#include "maxshapley/judge/backend.hpp"
#include "maxshapley/rng.hpp"

namespace maxshapley::judge {

inline std::string prompt_hash(const std::string& prompt) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(prompt)));
    return buf;
}

// Wraps another backend and appends every exchange to a JSONL transcript:
// {stage, prompt_hash, prompt, completion, usage}. Transcripts make recorded
// experiments re-runnable offline and let tests inspect exact prompts.
class RecordingBackend : public ChatBackend {
public:
    RecordingBackend(std::shared_ptr<ChatBackend> inner, const std::string& path)
        : inner_(std::move(inner)), out_(path, std::ios::app) {
        if (!out_) throw DataError("cannot open transcript file '" + path + "' for writing");
    }

    ChatResult complete(const ChatRequest& request) override {
        ChatResult result = inner_->complete(request);
        nlohmann::json line = {
            {"stage", request.stage},
            {"prompt_hash", prompt_hash(request.prompt)},
            {"prompt", request.prompt},
            {"completion", result.completion},
            {"usage", {{"tokens_in", result.tokens_in}, {"tokens_out", result.tokens_out}}},
        };
        std::lock_guard<std::mutex> lock(mu_);
        out_ << line.dump() << "\n";
        out_.flush();
        return result;
    }

private:
    std::shared_ptr<ChatBackend> inner_;
    std::ofstream out_;
    std::mutex mu_;
};

// Serves completions from a recorded transcript, keyed by (stage, prompt).
// Any prompt absent from the transcript is an error: replay runs must not
// silently fall back to the network.
class ReplayBackend : public ChatBackend {
public:
    explicit ReplayBackend(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open transcript file '" + path + "'");
        std::string line;
        long long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json entry;
            try {
                entry = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw DataError("transcript '" + path + "' line " + std::to_string(line_no) +
                                ": " + e.what());
            }
            Recorded rec;
            rec.prompt = entry.at("prompt").get<std::string>();
            rec.result.completion = entry.at("completion").get<std::string>();
            rec.result.tokens_in = entry.at("usage").at("tokens_in").get<long long>();
            rec.result.tokens_out = entry.at("usage").at("tokens_out").get<long long>();
            entries_[key(entry.at("stage").get<std::string>(),
                         entry.at("prompt_hash").get<std::string>())] = std::move(rec);
        }
    }

    ChatResult complete(const ChatRequest& request) override {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = entries_.find(key(request.stage, prompt_hash(request.prompt)));
        if (it == entries_.end() || it->second.prompt != request.prompt) {
            throw OracleError("replay transcript has no entry for stage '" + request.stage +
                              "' (prompt hash " + prompt_hash(request.prompt) + ")");
        }
        return it->second.result;
    }

private:
    struct Recorded {
        std::string prompt;
        ChatResult result;
    };

    static std::string key(const std::string& stage, const std::string& hash) {
        return stage + "\x1f" + hash;
    }

    std::mutex mu_;
    std::map<std::string, Recorded> entries_;
};

}  // namespace maxshapley::judge
