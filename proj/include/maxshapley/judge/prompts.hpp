#pragma once

#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "maxshapley/errors.hpp"

namespace maxshapley::judge {

// Pipeline stages; also used as ledger buckets and transcript tags.
namespace stage {
inline constexpr const char* kGenerate = "answer_generate";
inline constexpr const char* kJudge = "judge_utility";
inline constexpr const char* kDecompose = "keypoint_decompose";
inline constexpr const char* kDistill = "keypoint_distill";
inline constexpr const char* kRelevance = "relevance_score";
}  // namespace stage

// Editable prompt templates with named placeholders: {query}, {answer},
// {sources}, {ground_truth}, {keypoint}, {keypoints}. The judge template
// embeds {ground_truth_section}, which renders empty when no ground truth is
// supplied, so reference answers never leak into runs that lack one.
class PromptTemplates {
public:
    PromptTemplates() {
        templates_[stage::kGenerate] =
            "Answer the query concisely using only the provided sources.\n"
            "Query: {query}\n"
            "Sources:\n{sources}\n"
            "If the sources do not contain the needed information, say so instead of guessing.\n"
            "Answer:";

        templates_[stage::kJudge] =
            "You are grading an answer to a search query, using only the provided sources.\n"
            "Query: {query}\n"
            "Sources:\n{sources}\n"
            "{ground_truth_section}"
            "Answer to grade: {answer}\n"
            "Score how well the answer addresses the query based strictly on the sources;\n"
            "do not rely on outside knowledge. Reply with a single decimal between 0.0 and\n"
            "1.0, where 1.0 is a complete correct answer and 0.0 is incorrect or\n"
            "unsupported. Respond with the score only.";

        templates_["ground_truth_section"] = "Reference answer: {ground_truth}\n";

        templates_[stage::kDecompose] =
            "Break the answer below into its atomic logical key points.\n"
            "Query: {query}\n"
            "Answer: {answer}\n"
            "Each key point must be a single self-contained claim from the answer.\n"
            "List one key point per line, each line starting with \"- \". Output only the list.";

        templates_[stage::kDistill] =
            "Distill the key point list below by removing repetitive or redundant entries.\n"
            "Key points:\n{keypoints}\n"
            "Keep the first occurrence of each distinct point and drop the rest. Output the\n"
            "distilled key points, one per line, each line starting with \"- \".";

        templates_[stage::kRelevance] =
            "Score how relevant each source is to the key point.\n"
            "Key point: {keypoint}\n"
            "Sources:\n{sources}\n"
            "For every source output one line \"<number>: <score>\" using the numbering\n"
            "shown, where <score> is a decimal in [0.0, 1.0] (one decimal place preferred;\n"
            "1.0 means the source fully supports the key point, 0.0 means it is unrelated).\n"
            "Output only the score lines.";
    }

    const std::string& raw(const std::string& id) const {
        auto it = templates_.find(id);
        if (it == templates_.end()) {
            throw UsageError("unknown prompt template '" + id + "'");
        }
        return it->second;
    }

    void set(const std::string& id, std::string text) { templates_[id] = std::move(text); }

    bool has(const std::string& id) const { return templates_.count(id) > 0; }

    std::string render(const std::string& id,
                       const std::map<std::string, std::string>& values) const {
        return substitute(raw(id), values);
    }

    // Judge prompt with the ground-truth block included only when present.
    std::string render_judge(std::map<std::string, std::string> values,
                             const std::string* ground_truth,
                             const std::string& template_id = stage::kJudge) const {
        if (ground_truth != nullptr) {
            values["ground_truth_section"] =
                substitute(raw("ground_truth_section"), {{"ground_truth", *ground_truth}});
        } else {
            values["ground_truth_section"] = "";
        }
        return substitute(raw(template_id), values);
    }

    // Overrides from a JSON object {template_id: text}; model-specific prompt
    // calibration goes through this hook.
    void load_overrides(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open prompt template file '" + path + "'");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("prompt template file '" + path + "' is not valid JSON: " + e.what());
        }
        if (!doc.is_object()) {
            throw DataError("prompt template file '" + path + "' must hold a JSON object");
        }
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            if (!it.value().is_string()) {
                throw DataError("prompt template '" + it.key() + "' must be a string");
            }
            templates_[it.key()] = it.value().get<std::string>();
        }
    }

private:
    static std::string substitute(const std::string& tpl,
                                  const std::map<std::string, std::string>& values) {
        std::string out;
        out.reserve(tpl.size());
        std::size_t pos = 0;
        while (pos < tpl.size()) {
            if (tpl[pos] == '{') {
                std::size_t close = tpl.find('}', pos);
                if (close != std::string::npos) {
                    std::string name = tpl.substr(pos + 1, close - pos - 1);
                    auto it = values.find(name);
                    if (it != values.end()) {
                        out += it->second;
                        pos = close + 1;
                        continue;
                    }
                }
            }
            out.push_back(tpl[pos]);
            ++pos;
        }
        return out;
    }

    std::map<std::string, std::string> templates_;
};

// Numbered source block shared by the generate / judge / relevance prompts.
inline std::string format_source_block(const std::vector<std::string>& texts) {
    std::string block;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        block += "[" + std::to_string(i + 1) + "] " + texts[i];
        if (i + 1 < texts.size()) block += "\n";
    }
    return block;
}

}  // namespace maxshapley::judge
