#pragma once

#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxshapley/errors.hpp"
#include "maxshapley/judge/judge_oracle.hpp"
#include "maxshapley/judge/ledger.hpp"
#include "maxshapley/judge/prompts.hpp"
#include "maxshapley/judge/text.hpp"
#include "maxshapley/rng.hpp"
#include "maxshapley/solvers.hpp"
#include "maxshapley/source.hpp"
#include "maxshapley/types.hpp"
#include "maxshapley/value_matrix.hpp"

namespace maxshapley {

struct PipelineConfig {
    std::string query_id = "query";
    bool distillation = true;
    // Clipping is off for MaxShapley by default; baselines clip at 0.05.
    std::optional<double> clipping_threshold;
    int parallelism = 1;       // concurrent relevance-scoring calls
    std::uint64_t shuffle_seed = 0;
    int keypoint_cap = 32;     // extra keypoints beyond the cap are dropped
};

struct AttributionResult {
    std::string query_id;
    std::string answer;
    AttributionVector attribution;
    std::optional<ValueMatrix> value_matrix;
    judge::TokenLedger ledger;
    std::uint64_t shuffle_seed = 0;
    bool answer_was_generated = false;
    bool distillation_fell_back = false;
};

inline nlohmann::json to_json(const AttributionResult& r) {
    nlohmann::json doc = {
        {"query_id", r.query_id},
        {"method", to_string(r.attribution.method)},
        {"phi", r.attribution.phi},
        {"tokens_in", r.ledger.tokens_in()},
        {"tokens_out", r.ledger.tokens_out()},
        {"seed", r.shuffle_seed},
    };
    if (r.value_matrix) {
        doc["value_matrix"] = r.value_matrix->scores();
        doc["keypoints"] = r.value_matrix->keypoints().points;
        doc["weights"] = r.value_matrix->keypoints().weights;
    } else {
        doc["value_matrix"] = nlohmann::json::array();
        doc["keypoints"] = nlohmann::json::array();
        doc["weights"] = nlohmann::json::array();
    }
    return doc;
}

namespace detail {

// Lines like "- point" / "* point" / "3. point" / bare text become points.
inline std::vector<std::string> parse_point_lines(const std::string& completion) {
    std::vector<std::string> points;
    std::string line;
    auto flush = [&]() {
        std::string t = judge::trim(line);
        if (!t.empty()) {
            if (t.size() >= 2 && (t[0] == '-' || t[0] == '*') && t[1] == ' ') {
                t = judge::trim(t.substr(2));
            } else {
                std::size_t d = 0;
                while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
                if (d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')')) {
                    t = judge::trim(t.substr(d + 1));
                }
            }
            if (!t.empty()) points.push_back(t);
        }
        line.clear();
    };
    for (char ch : completion) {
        if (ch == '\n') {
            flush();
        } else {
            line.push_back(ch);
        }
    }
    flush();
    return points;
}

}  // namespace detail

// Splits the answer into atomic keypoints with uniform weights 1/n. A
// dedicated oracle call, separate from answer generation.
inline KeyPointSet decompose_keypoints(const std::string& query, const std::string& answer,
                                       const judge::OracleBundle& oracles,
                                       judge::TokenLedger* ledger = nullptr,
                                       int keypoint_cap = 32) {
    if (answer.empty()) throw DataError("keypoint decomposition requires a non-empty answer");

    judge::ChatRequest request;
    request.stage = judge::stage::kDecompose;
    request.prompt = oracles.templates.render(judge::stage::kDecompose,
                                              {{"query", query}, {"answer", answer}});
    request.payload = {{"query", query}, {"answer", answer}};

    judge::ChatResult raw = oracles.backend->complete(request);
    if (ledger != nullptr) ledger->add(judge::stage::kDecompose, raw.tokens_in, raw.tokens_out);

    auto points = detail::parse_point_lines(raw.completion);
    if (points.empty()) {
        throw OracleError("keypoint decomposition produced no keypoints; raw output: \"" +
                          raw.completion + "\"");
    }
    if (static_cast<int>(points.size()) > keypoint_cap) {
        points.resize(static_cast<std::size_t>(keypoint_cap));
    }
    return KeyPointSet::uniform(std::move(points));
}

// Oracle-side semantic dedup of the keypoint list; weights re-uniformized to
// the surviving count. Disabled means identity.
inline KeyPointSet distill_keypoints(const KeyPointSet& keypoints,
                                     const judge::OracleBundle& oracles,
                                     judge::TokenLedger* ledger = nullptr, bool enabled = true) {
    keypoints.validate();
    if (!enabled) return keypoints;

    std::string listing;
    for (const auto& p : keypoints.points) listing += "- " + p + "\n";

    judge::ChatRequest request;
    request.stage = judge::stage::kDistill;
    request.prompt =
        oracles.templates.render(judge::stage::kDistill, {{"keypoints", listing}});
    request.payload = {{"keypoints", keypoints.points}};

    judge::ChatResult raw = oracles.backend->complete(request);
    if (ledger != nullptr) ledger->add(judge::stage::kDistill, raw.tokens_in, raw.tokens_out);

    auto points = detail::parse_point_lines(raw.completion);
    if (points.empty()) {
        throw DistillationError("distillation removed every keypoint; raw output: \"" +
                                raw.completion + "\"");
    }
    return KeyPointSet::uniform(std::move(points));
}

// Scores every (source, keypoint) pair in [0, 1]. One oracle call per
// keypoint covers all sources; sources are presented in a seed-derived
// shuffled order per call and mapped back to their original indices. Calls
// may run concurrently up to `parallelism`; the assembled matrix is keyed by
// (i, j) and therefore identical to sequential execution.
inline ValueMatrix score_relevance_matrix(const SourceList& sources, const KeyPointSet& keypoints,
                                          const judge::OracleBundle& oracles,
                                          std::uint64_t shuffle_seed,
                                          judge::TokenLedger* ledger = nullptr,
                                          int parallelism = 1) {
    if (sources.empty()) throw DataError("relevance scoring requires at least one source");
    keypoints.validate();

    const int m = static_cast<int>(sources.size());
    const int n = keypoints.size();
    std::vector<std::vector<double>> scores(static_cast<std::size_t>(m),
                                            std::vector<double>(static_cast<std::size_t>(n), 0.0));

    auto score_column = [&](int j) {
        // Seed depends only on (run seed, keypoint index): stable under
        // concurrency and across replays.
        std::vector<int> order(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(combine_seed(shuffle_seed, "relevance:" + std::to_string(j)));
        deterministic_shuffle(order, rng);

        std::vector<std::string> presented;
        presented.reserve(order.size());
        for (int id : order) presented.push_back(sources[static_cast<std::size_t>(id)].text);

        const std::string& keypoint = keypoints.points[static_cast<std::size_t>(j)];
        judge::ChatRequest request;
        request.stage = judge::stage::kRelevance;
        request.prompt = oracles.templates.render(
            judge::stage::kRelevance,
            {{"keypoint", keypoint}, {"sources", judge::format_source_block(presented)}});
        request.payload = {{"keypoint", keypoint}, {"sources", presented}};

        judge::ChatResult raw = oracles.backend->complete(request);
        if (ledger != nullptr) ledger->add(judge::stage::kRelevance, raw.tokens_in, raw.tokens_out);

        std::vector<bool> seen(static_cast<std::size_t>(m), false);
        for (const std::string& line : detail::parse_point_lines(raw.completion)) {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) {
                throw OracleError("relevance scoring for keypoint " + std::to_string(j) +
                                  " returned an unparseable line: \"" + line + "\"");
            }
            int presented_index = 0;
            try {
                presented_index = std::stoi(line.substr(0, colon));
            } catch (const std::exception&) {
                throw OracleError("relevance scoring for keypoint " + std::to_string(j) +
                                  " returned an unparseable source number: \"" + line + "\"");
            }
            if (presented_index < 1 || presented_index > m) {
                throw OracleError("relevance scoring for keypoint " + std::to_string(j) +
                                  " referenced source number " + std::to_string(presented_index) +
                                  " outside 1.." + std::to_string(m));
            }
            const int original = order[static_cast<std::size_t>(presented_index - 1)];
            char* end = nullptr;
            const std::string value_text = judge::trim(line.substr(colon + 1));
            double value = std::strtod(value_text.c_str(), &end);
            if (end == value_text.c_str()) {
                throw OracleError("relevance score for source " + std::to_string(original) +
                                  ", keypoint " + std::to_string(j) + " is not numeric: \"" +
                                  value_text + "\"");
            }
            if (value < -1e-9 || value > 1.0 + 1e-9) {
                throw OracleError("relevance score for source " + std::to_string(original) +
                                  ", keypoint " + std::to_string(j) + " is out of [0,1]: " +
                                  value_text);
            }
            scores[static_cast<std::size_t>(original)][static_cast<std::size_t>(j)] =
                std::min(1.0, std::max(0.0, value));  // round-off clamp only
            seen[static_cast<std::size_t>(original)] = true;
        }
        for (int i = 0; i < m; ++i) {
            if (!seen[static_cast<std::size_t>(i)]) {
                throw OracleError("relevance scoring for keypoint " + std::to_string(j) +
                                  " is missing a score for source " + std::to_string(i));
            }
        }
    };

    const int workers = std::max(1, std::min(parallelism, n));
    if (workers == 1) {
        for (int j = 0; j < n; ++j) score_column(j);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mu;
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    int j = next.fetch_add(1);
                    if (j >= n) return;
                    try {
                        score_column(j);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<std::string> ids;
    ids.reserve(sources.size());
    for (const auto& s : sources) ids.push_back(s.id);
    return ValueMatrix(std::move(ids), keypoints, std::move(scores));
}

// End-to-end attribution: decompose -> (distill) -> score matrix ->
// per-keypoint exact solve -> weighted aggregation -> optional clipping.
// Attribution calls: 1 decompose + 1 distill (if enabled) + n relevance rows
// — linear in the keypoint count, never exponential in the source count.
inline AttributionResult run_maxshapley(const std::string& query, const SourceList& sources,
                                        std::optional<std::string> answer,
                                        const judge::OracleBundle& oracles,
                                        const PipelineConfig& config = {}) {
    if (sources.empty()) throw DataError("attribution requires at least one source");

    AttributionResult result;
    result.query_id = config.query_id;
    result.shuffle_seed = config.shuffle_seed;

    auto stage_guard = [](const char* stage_name, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(e.category(), std::string("stage '") + stage_name + "': " + e.what());
        }
    };

    if (answer.has_value()) {
        result.answer = std::move(*answer);
        if (result.answer.empty()) throw DataError("provided answer must be non-empty");
    } else {
        // Generate once from the full source set, shuffled like any other call.
        result.answer_was_generated = true;
        result.answer = stage_guard("generate", [&] {
            std::vector<int> order(sources.size());
            std::iota(order.begin(), order.end(), 0);
            std::mt19937_64 rng(combine_seed(config.shuffle_seed, "generate"));
            deterministic_shuffle(order, rng);
            std::vector<std::string> texts;
            texts.reserve(sources.size());
            for (int id : order) texts.push_back(sources[static_cast<std::size_t>(id)].text);
            return judge::generate_answer(query, texts, *oracles.backend, oracles.templates,
                                          &result.ledger)
                .answer;
        });
    }

    KeyPointSet keypoints = stage_guard("decompose", [&] {
        return decompose_keypoints(query, result.answer, oracles, &result.ledger,
                                   config.keypoint_cap);
    });

    if (config.distillation) {
        try {
            keypoints = distill_keypoints(keypoints, oracles, &result.ledger, true);
        } catch (const DistillationError&) {
            result.distillation_fell_back = true;  // keep the undistilled set
        }
    }

    ValueMatrix vm = stage_guard("relevance", [&] {
        return score_relevance_matrix(sources, keypoints, oracles, config.shuffle_seed,
                                      &result.ledger, config.parallelism);
    });

    result.attribution = stage_guard("aggregate", [&] { return aggregate_attribution(vm); });
    result.attribution.seed = config.shuffle_seed;
    result.value_matrix = std::move(vm);

    if (config.clipping_threshold.has_value()) {
        result.attribution = clip_and_renormalize(result.attribution, *config.clipping_threshold);
    }
    return result;
}

}  // namespace maxshapley
