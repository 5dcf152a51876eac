#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxshapley/errors.hpp"
#include "maxshapley/source.hpp"

namespace maxshapley::eval {

// One annotated query: ordered sources, binary relevance labels, optional
// graded labels (0-3) and reference answer.
struct AnnotatedSample {
    std::string query_id;
    std::string query;
    SourceList sources;
    std::vector<int> relevance;                       // 0/1 per source
    std::optional<std::vector<int>> graded_relevance; // 0..3 per source
    std::optional<std::string> reference_answer;

    int num_sources() const { return static_cast<int>(sources.size()); }

    int num_relevant() const {
        int k = 0;
        for (int r : relevance) k += r;
        return k;
    }

    void validate(const std::string& context) const {
        if (sources.empty()) throw DataError(context + ": sample has no sources");
        if (relevance.size() != sources.size()) {
            throw DataError(context + ": relevance has " + std::to_string(relevance.size()) +
                            " labels for " + std::to_string(sources.size()) + " sources");
        }
        for (int r : relevance) {
            if (r != 0 && r != 1) throw DataError(context + ": relevance labels must be 0 or 1");
        }
        if (graded_relevance) {
            if (graded_relevance->size() != sources.size()) {
                throw DataError(context + ": graded_relevance length mismatch");
            }
            for (int g : *graded_relevance) {
                if (g < 0 || g > 3) throw DataError(context + ": graded labels must be in 0..3");
            }
        }
        std::set<std::string> ids;
        for (const auto& s : sources) {
            if (!ids.insert(s.id).second) {
                throw DataError(context + ": duplicate source id '" + s.id + "'");
            }
        }
    }
};

// label = 1 iff grade >= threshold (the 0-3 graded scale, default 2).
inline std::vector<int> binarize_graded_relevance(const std::vector<int>& grades,
                                                  int threshold = 2) {
    std::vector<int> labels;
    labels.reserve(grades.size());
    for (int g : grades) {
        if (g < 0 || g > 3) {
            throw DataError("graded relevance value " + std::to_string(g) + " outside 0..3");
        }
        labels.push_back(g >= threshold ? 1 : 0);
    }
    return labels;
}

struct LoadResult {
    std::vector<AnnotatedSample> samples;
    std::vector<std::string> warnings;
};

// JSONL loader: one sample per line, validation errors name the line.
// Schema "standard" is the native layout; "msmarco-graded" derives the
// binary labels from graded_relevance at threshold 2 when relevance is
// absent.
inline LoadResult load_dataset(const std::string& path, const std::string& schema = "standard") {
    if (schema != "standard" && schema != "msmarco-graded") {
        throw UsageError("unknown dataset schema '" + schema +
                         "'; valid schemas: standard, msmarco-graded");
    }
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file '" + path + "'");

    LoadResult out;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string context = path + ":" + std::to_string(line_no);

        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(context + ": invalid JSON: " + e.what());
        }

        AnnotatedSample sample;
        try {
            sample.query_id = doc.at("query_id").get<std::string>();
            sample.query = doc.at("query").get<std::string>();
            for (const auto& s : doc.at("sources")) {
                SourceDoc src;
                src.id = s.at("id").get<std::string>();
                src.title = s.value("title", "");
                src.text = s.at("text").get<std::string>();
                sample.sources.push_back(std::move(src));
            }
            if (doc.contains("graded_relevance")) {
                sample.graded_relevance = doc.at("graded_relevance").get<std::vector<int>>();
            }
            if (doc.contains("relevance")) {
                sample.relevance = doc.at("relevance").get<std::vector<int>>();
            } else if (schema == "msmarco-graded" && sample.graded_relevance) {
                sample.relevance = binarize_graded_relevance(*sample.graded_relevance);
            } else {
                throw DataError(context + ": missing required field 'relevance'");
            }
            if (doc.contains("reference_answer")) {
                sample.reference_answer = doc.at("reference_answer").get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(context + ": " + e.what());
        }
        sample.validate(context);
        out.samples.push_back(std::move(sample));
    }
    if (out.samples.empty()) {
        out.warnings.push_back("dataset '" + path + "' contains no samples");
    }
    return out;
}

}  // namespace maxshapley::eval
