#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maxshapley/errors.hpp"
#include "maxshapley/judge/backend.hpp"
#include "maxshapley/judge/ledger.hpp"
#include "maxshapley/judge/prompts.hpp"
#include "maxshapley/judge/score_parse.hpp"
#include "maxshapley/oracle.hpp"
#include "maxshapley/rng.hpp"
#include "maxshapley/source.hpp"

namespace maxshapley::judge {

struct GenerateResult {
    std::string answer;
    TokenUsage usage;
    bool no_context = false;  // generated with zero sources in context
};

// Produces an answer for the query from the given sources (already in the
// order they should be presented). Ledger bucket: answer_generate.
inline GenerateResult generate_answer(const std::string& query,
                                      const std::vector<std::string>& source_texts,
                                      ChatBackend& backend, const PromptTemplates& templates,
                                      TokenLedger* ledger = nullptr) {
    ChatRequest request;
    request.stage = stage::kGenerate;
    request.prompt = templates.render(
        stage::kGenerate, {{"query", query}, {"sources", format_source_block(source_texts)}});
    request.payload = {{"query", query}, {"sources", source_texts}};

    ChatResult raw = backend.complete(request);
    if (raw.completion.empty()) {
        throw OracleError("answer generation returned an empty completion");
    }
    if (ledger != nullptr) ledger->add(stage::kGenerate, raw.tokens_in, raw.tokens_out);

    GenerateResult result;
    result.answer = std::move(raw.completion);
    result.usage = {raw.tokens_in, raw.tokens_out};
    result.no_context = source_texts.empty();
    return result;
}

struct JudgeScore {
    double score = 0.0;
    TokenUsage usage;
};

// Scores answer quality in [0, 1]. The ground truth is included in the
// prompt only when provided; MaxShapley runs never provide one.
inline JudgeScore judge_utility_scored(const std::string& query, const std::string& answer,
                                       const std::optional<std::string>& ground_truth,
                                       const std::vector<std::string>& source_texts,
                                       ChatBackend& backend, const PromptTemplates& templates,
                                       const std::string& template_id = stage::kJudge,
                                       TokenLedger* ledger = nullptr) {
    if (answer.empty()) throw DataError("judge_utility requires a non-empty answer");

    ChatRequest request;
    request.stage = stage::kJudge;
    request.prompt = templates.render_judge(
        {{"query", query}, {"answer", answer}, {"sources", format_source_block(source_texts)}},
        ground_truth ? &*ground_truth : nullptr, template_id);
    request.payload = {{"query", query}, {"answer", answer}, {"sources", source_texts}};
    if (ground_truth) request.payload["ground_truth"] = *ground_truth;

    ChatResult raw = backend.complete(request);
    if (ledger != nullptr) ledger->add(stage::kJudge, raw.tokens_in, raw.tokens_out);
    return {parse_judge_score(raw.completion), {raw.tokens_in, raw.tokens_out}};
}

inline double judge_utility(const std::string& query, const std::string& answer,
                            const std::optional<std::string>& ground_truth,
                            const std::vector<std::string>& source_texts, ChatBackend& backend,
                            const PromptTemplates& templates,
                            const std::string& template_id = stage::kJudge,
                            TokenLedger* ledger = nullptr) {
    return judge_utility_scored(query, answer, ground_truth, source_texts, backend, templates,
                                template_id, ledger)
        .score;
}

enum class EmptyCoalitionPolicy {
    Judge,        // run the answer pipeline with zero sources and judge it
    ConstantZero  // U({}) = 0 without an oracle call
};

struct JudgeOracleOptions {
    std::optional<std::string> ground_truth;
    std::uint64_t shuffle_seed = 0;
    EmptyCoalitionPolicy empty_policy = EmptyCoalitionPolicy::Judge;
    std::string template_id = stage::kJudge;
};

// U(S') = Judge(query, Psi(query, S')): each evaluation generates an answer
// from the coalition's sources and judges it — two backend calls.
//
// Positional-bias mitigation: sources are presented in a shuffled order on
// every call. The shuffle is derived from (seed, canonical member ids), so a
// coalition is always presented the same way regardless of call order; this
// keeps cached and uncached runs identical and replay transcripts stable.
class JudgeUtilityOracle : public UtilityOracle {
public:
    JudgeUtilityOracle(std::string query, SourceList sources,
                       std::shared_ptr<ChatBackend> backend, PromptTemplates templates,
                       std::shared_ptr<TokenLedger> ledger, JudgeOracleOptions options = {})
        : query_(std::move(query)),
          sources_(std::move(sources)),
          backend_(std::move(backend)),
          templates_(std::move(templates)),
          ledger_(std::move(ledger)),
          options_(std::move(options)) {
        if (sources_.empty()) throw DataError("judge oracle requires at least one source");
    }

    const TokenLedger& ledger() const { return *ledger_; }

protected:
    double evaluate_impl(const Coalition& coalition) override {
        coalition.check_bounds(static_cast<int>(sources_.size()));
        if (coalition.empty() && options_.empty_policy == EmptyCoalitionPolicy::ConstantZero) {
            return 0.0;
        }

        std::vector<std::string> texts = shuffled_texts(coalition);
        GenerateResult gen = generate_answer(query_, texts, *backend_, templates_, ledger_.get());
        JudgeScore judged =
            judge_utility_scored(query_, gen.answer, options_.ground_truth, texts, *backend_,
                                 templates_, options_.template_id, ledger_.get());
        add_tokens(gen.usage.input + judged.usage.input, gen.usage.output + judged.usage.output);
        return judged.score;
    }

private:
    std::vector<std::string> shuffled_texts(const Coalition& coalition) const {
        std::vector<int> ids = coalition.sorted_members();
        std::string key = "present:";
        for (int id : ids) key += std::to_string(id) + ",";
        std::mt19937_64 rng(combine_seed(options_.shuffle_seed, key));
        deterministic_shuffle(ids, rng);

        std::vector<std::string> texts;
        texts.reserve(ids.size());
        for (int id : ids) texts.push_back(sources_[static_cast<std::size_t>(id)].text);
        return texts;
    }

    std::string query_;
    SourceList sources_;
    std::shared_ptr<ChatBackend> backend_;
    PromptTemplates templates_;
    std::shared_ptr<TokenLedger> ledger_;
    JudgeOracleOptions options_;
};

// Everything the attribution stages need from the model side.
struct OracleBundle {
    std::shared_ptr<ChatBackend> backend;
    PromptTemplates templates;
};

}  // namespace maxshapley::judge
