#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "maxshapley/errors.hpp"
#include "maxshapley/judge/backend.hpp"
#include "maxshapley/judge/prompts.hpp"
#include "maxshapley/judge/text.hpp"

namespace maxshapley::judge {

// Deterministic offline backend: every stage is a pure function of the
// structured payload, so repeated runs produce identical scores and ledgers.
// Token usage is the word count of the prompt and completion, a documented
// proxy that keeps efficiency comparisons meaningful without a tokenizer.
//
// Stage rules:
//   answer_generate   query and source texts joined with '|'
//   judge_utility     with ground truth: fraction of its sentences whose
//                     terms all appear in the answer (fact overlap);
//                     without: 1.0 iff the configured gold phrase occurs
//   keypoint_decompose  sentence split of the answer
//   keypoint_distill    order-preserving dedup of normalized keypoints
//   relevance_score     per-source term-overlap fraction with the keypoint
class MockBackend : public ChatBackend {
public:
    MockBackend() = default;
    explicit MockBackend(std::string gold_phrase) : gold_phrase_(std::move(gold_phrase)) {}

    ChatResult complete(const ChatRequest& request) override {
        std::string completion;
        if (request.stage == stage::kGenerate) {
            completion = mock_generate(request.payload);
        } else if (request.stage == stage::kJudge) {
            completion = mock_judge(request.payload);
        } else if (request.stage == stage::kDecompose) {
            completion = mock_decompose(request.payload);
        } else if (request.stage == stage::kDistill) {
            completion = mock_distill(request.payload);
        } else if (request.stage == stage::kRelevance) {
            completion = mock_relevance(request.payload);
        } else {
            throw OracleError("mock backend has no rule for stage '" + request.stage + "'");
        }

        ChatResult result;
        result.completion = std::move(completion);
        result.tokens_in = word_count(request.prompt);
        result.tokens_out = word_count(result.completion);
        return result;
    }

private:
    static std::string format_score(double score) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", score);
        return buf;
    }

    static std::string mock_generate(const nlohmann::json& payload) {
        std::string answer = payload.at("query").get<std::string>() + "|";
        const auto& sources = payload.at("sources");
        for (std::size_t i = 0; i < sources.size(); ++i) {
            if (i > 0) answer += "|";
            answer += sources[i].get<std::string>();
        }
        return answer;
    }

    std::string mock_judge(const nlohmann::json& payload) const {
        const std::string answer = payload.at("answer").get<std::string>();
        if (payload.contains("ground_truth")) {
            const std::string truth = payload.at("ground_truth").get<std::string>();
            auto facts = split_sentences(truth);
            if (facts.empty()) return "Score: 0.000000";
            auto answer_terms = term_set(answer);
            std::size_t matched = 0;
            for (const auto& fact : facts) {
                bool all_present = true;
                for (const auto& term : term_set(fact)) {
                    if (!answer_terms.count(term)) {
                        all_present = false;
                        break;
                    }
                }
                if (all_present) ++matched;
            }
            double score = static_cast<double>(matched) / static_cast<double>(facts.size());
            return "Score: " + format_score(score);
        }
        const bool hit = !gold_phrase_.empty() &&
                         lowercase(answer).find(lowercase(gold_phrase_)) != std::string::npos;
        return "Score: " + format_score(hit ? 1.0 : 0.0);
    }

    static std::string mock_decompose(const nlohmann::json& payload) {
        auto sentences = split_sentences(payload.at("answer").get<std::string>());
        std::string out;
        for (const auto& s : sentences) {
            out += "- " + s + "\n";
        }
        return out;
    }

    static std::string mock_distill(const nlohmann::json& payload) {
        std::vector<std::string> seen_normalized;
        std::string out;
        for (const auto& kp : payload.at("keypoints")) {
            const std::string point = kp.get<std::string>();
            std::string normalized;
            for (const auto& w : split_words(point)) {
                if (!normalized.empty()) normalized += " ";
                normalized += w;
            }
            bool duplicate = false;
            for (const auto& prev : seen_normalized) {
                if (prev == normalized) {
                    duplicate = true;
                    break;
                }
            }
            if (!duplicate) {
                seen_normalized.push_back(normalized);
                out += "- " + point + "\n";
            }
        }
        return out;
    }

    static std::string mock_relevance(const nlohmann::json& payload) {
        const std::string keypoint = payload.at("keypoint").get<std::string>();
        std::string out;
        const auto& sources = payload.at("sources");
        for (std::size_t i = 0; i < sources.size(); ++i) {
            double score = term_overlap_fraction(keypoint, sources[i].get<std::string>());
            out += std::to_string(i + 1) + ": " + format_score(score) + "\n";
        }
        return out;
    }

    std::string gold_phrase_;
};

}  // namespace maxshapley::judge
