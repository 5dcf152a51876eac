#pragma once

#include <map>
#include <mutex>
#include <string>

#include "maxshapley/judge/endpoint.hpp"

namespace maxshapley::judge {

struct StageTokens {
    long long tokens_in = 0;
    long long tokens_out = 0;
    long long calls = 0;
};

// Cumulative token and call accounting, bucketed per pipeline stage.
// Updates are atomic per call; totals always equal the sum over stages.
class TokenLedger {
public:
    TokenLedger() = default;

    TokenLedger(const TokenLedger& o) {
        std::lock_guard<std::mutex> lock(o.mu_);
        by_stage_ = o.by_stage_;
    }

    TokenLedger& operator=(const TokenLedger& o) {
        if (this != &o) {
            std::scoped_lock lock(mu_, o.mu_);
            by_stage_ = o.by_stage_;
        }
        return *this;
    }

    void add(const std::string& stage, long long tokens_in, long long tokens_out) {
        std::lock_guard<std::mutex> lock(mu_);
        auto& s = by_stage_[stage];
        s.tokens_in += tokens_in;
        s.tokens_out += tokens_out;
        s.calls += 1;
    }

    long long tokens_in() const { return total(&StageTokens::tokens_in); }
    long long tokens_out() const { return total(&StageTokens::tokens_out); }
    long long calls() const { return total(&StageTokens::calls); }

    std::map<std::string, StageTokens> by_stage() const {
        std::lock_guard<std::mutex> lock(mu_);
        return by_stage_;
    }

private:
    long long total(long long StageTokens::* field) const {
        std::lock_guard<std::mutex> lock(mu_);
        long long sum = 0;
        for (const auto& [_, s] : by_stage_) sum += s.*field;
        return sum;
    }

    mutable std::mutex mu_;
    std::map<std::string, StageTokens> by_stage_;
};

// cost = tokens_in/1000 * price_in + tokens_out/1000 * price_out
inline double estimate_cost(const TokenLedger& ledger, const EndpointConfig& endpoint) {
    return static_cast<double>(ledger.tokens_in()) / 1000.0 * endpoint.price_in +
           static_cast<double>(ledger.tokens_out()) / 1000.0 * endpoint.price_out;
}

}  // namespace maxshapley::judge
