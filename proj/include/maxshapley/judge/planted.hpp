#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "maxshapley/errors.hpp"
#include "maxshapley/judge/backend.hpp"
#include "maxshapley/judge/prompts.hpp"
#include "maxshapley/judge/text.hpp"
#include "maxshapley/value_matrix.hpp"

namespace maxshapley::judge {

// Synthetic backend wired to a planted value matrix: the judge stage scores
// any coalition with the matrix's sum-max utility, and the pipeline stages
// reproduce the matrix exactly. Useful for harness tests where the true
// utility and the true attribution are both known in closed form.
//
// Source and keypoint texts are identified by exact match, so all texts must
// be distinct.
class PlantedBackend : public ChatBackend {
public:
    PlantedBackend(ValueMatrix matrix, std::vector<std::string> source_texts)
        : matrix_(std::move(matrix)), source_texts_(std::move(source_texts)) {
        if (static_cast<int>(source_texts_.size()) != matrix_.num_sources()) {
            throw DataError("planted backend needs one text per matrix row");
        }
        for (std::size_t i = 0; i < source_texts_.size(); ++i) {
            if (!source_index_.emplace(source_texts_[i], static_cast<int>(i)).second) {
                throw DataError("planted backend source texts must be distinct");
            }
        }
        const auto& points = matrix_.keypoints().points;
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (!keypoint_index_.emplace(points[j], static_cast<int>(j)).second) {
                throw DataError("planted backend keypoints must be distinct");
            }
            answer_ += points[j] + ". ";
        }
    }

    const std::string& planted_answer() const { return answer_; }
    const ValueMatrix& matrix() const { return matrix_; }

    ChatResult complete(const ChatRequest& request) override {
        std::string completion;
        if (request.stage == stage::kGenerate) {
            completion = answer_;
        } else if (request.stage == stage::kJudge) {
            Coalition coalition = coalition_from(request.payload.at("sources"));
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.9f", maxsum_utility(matrix_, coalition));
            completion = buf;
        } else if (request.stage == stage::kDecompose || request.stage == stage::kDistill) {
            for (const auto& p : matrix_.keypoints().points) completion += "- " + p + "\n";
        } else if (request.stage == stage::kRelevance) {
            const int j = keypoint_at(request.payload.at("keypoint").get<std::string>());
            const auto& sources = request.payload.at("sources");
            for (std::size_t k = 0; k < sources.size(); ++k) {
                const int i = source_at(sources[k].get<std::string>());
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.9f", matrix_.at(i, j));
                completion += std::to_string(k + 1) + ": " + buf + "\n";
            }
        } else {
            throw OracleError("planted backend has no rule for stage '" + request.stage + "'");
        }

        ChatResult result;
        result.completion = std::move(completion);
        result.tokens_in = word_count(request.prompt);
        result.tokens_out = word_count(result.completion);
        return result;
    }

private:
    int source_at(const std::string& text) const {
        auto it = source_index_.find(text);
        if (it == source_index_.end()) {
            throw OracleError("planted backend received an unknown source text");
        }
        return it->second;
    }

    int keypoint_at(const std::string& text) const {
        auto it = keypoint_index_.find(text);
        if (it == keypoint_index_.end()) {
            throw OracleError("planted backend received an unknown keypoint");
        }
        return it->second;
    }

    Coalition coalition_from(const nlohmann::json& sources) const {
        std::vector<int> ids;
        for (const auto& s : sources) ids.push_back(source_at(s.get<std::string>()));
        return Coalition(std::move(ids));
    }

    ValueMatrix matrix_;
    std::vector<std::string> source_texts_;
    std::map<std::string, int> source_index_;
    std::map<std::string, int> keypoint_index_;
    std::string answer_;
};

}  // namespace maxshapley::judge
