#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>

#include "maxshapley/errors.hpp"
#include "maxshapley/types.hpp"

namespace maxshapley {

struct TokenUsage {
    long long input = 0;
    long long output = 0;

    TokenUsage& operator+=(const TokenUsage& o) {
        input += o.input;
        output += o.output;
        return *this;
    }
    long long total() const { return input + output; }
};

// Coalition -> score function with call and token accounting. Solvers only
// see this interface; backends range from pure synthetic games to remote
// judge pipelines.
class UtilityOracle {
public:
    virtual ~UtilityOracle() = default;

    double evaluate(const Coalition& coalition) {
        double score = evaluate_impl(coalition);
        if (!std::isfinite(score)) {
            throw NumericError("utility oracle produced a non-finite score");
        }
        calls_.fetch_add(1, std::memory_order_relaxed);
        return score;
    }

    long long call_count() const { return calls_.load(std::memory_order_relaxed); }

    TokenUsage token_usage() const {
        return {tokens_in_.load(std::memory_order_relaxed),
                tokens_out_.load(std::memory_order_relaxed)};
    }

protected:
    virtual double evaluate_impl(const Coalition& coalition) = 0;

    void add_tokens(long long in, long long out) {
        tokens_in_.fetch_add(in, std::memory_order_relaxed);
        tokens_out_.fetch_add(out, std::memory_order_relaxed);
    }

private:
    std::atomic<long long> calls_{0};
    std::atomic<long long> tokens_in_{0};
    std::atomic<long long> tokens_out_{0};
};

// Synthetic game defined by an arbitrary set function. Zero token cost.
class FunctionOracle : public UtilityOracle {
public:
    explicit FunctionOracle(std::function<double(const Coalition&)> fn)
        : fn_(std::move(fn)) {}

protected:
    double evaluate_impl(const Coalition& c) override { return fn_(c); }

private:
    std::function<double(const Coalition&)> fn_;
};

inline FunctionOracle make_max_game_oracle(Valuation values) {
    return FunctionOracle([values = std::move(values)](const Coalition& c) {
        c.check_bounds(values.size());
        double best = 0.0;  // Max({}) = 0
        for (int i : c.members()) best = std::max(best, values[i]);
        return best;
    });
}

inline FunctionOracle make_additive_oracle(std::vector<double> contributions) {
    return FunctionOracle([contributions = std::move(contributions)](const Coalition& c) {
        c.check_bounds(static_cast<int>(contributions.size()));
        double total = 0.0;
        for (int i : c.members()) total += contributions[static_cast<std::size_t>(i)];
        return total;
    });
}

inline FunctionOracle make_constant_oracle(double value) {
    return FunctionOracle([value](const Coalition&) { return value; });
}

}  // namespace maxshapley
