#pragma once

#include <condition_variable>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "maxshapley/errors.hpp"
#include "maxshapley/oracle.hpp"
#include "maxshapley/types.hpp"

namespace maxshapley::judge {

struct CacheValue {
    double score = 0.0;
    long long tokens_in = 0;
    long long tokens_out = 0;
};

// Coalition-score cache keyed by (query scope, method scope, member ids).
// With canonicalization on, member ids are sorted first, so every ordering of
// the same coalition maps to one entry; turning it off keys on the presented
// order, which is how the cost of unsorted caching is measured.
//
// Concurrent lookups of the same key trigger exactly one inner evaluation;
// later arrivals block until it lands. Optional JSONL persistence is
// best-effort: an unusable file degrades to in-memory caching with a warning
// counter instead of failing the run.
class UtilityCache {
public:
    struct Stats {
        long long hits = 0;
        long long misses = 0;
        long long io_warnings = 0;
    };

    explicit UtilityCache(bool canonicalize = true) : canonicalize_(canonicalize) {}

    void attach_file(const std::string& path) {
        std::lock_guard<std::mutex> lock(mu_);
        // Load whatever is already there; the file may not exist yet.
        std::ifstream in(path);
        if (in) {
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                try {
                    auto entry = nlohmann::json::parse(line);
                    CacheValue v;
                    v.score = entry.at("score").get<double>();
                    v.tokens_in = entry.at("tokens_in").get<long long>();
                    v.tokens_out = entry.at("tokens_out").get<long long>();
                    store_[entry.at("key").get<std::string>()] = v;
                } catch (const nlohmann::json::exception&) {
                    ++stats_.io_warnings;  // skip unreadable lines
                }
            }
        }
        out_ = std::make_unique<std::ofstream>(path, std::ios::app);
        if (!*out_) {
            out_.reset();
            ++stats_.io_warnings;
        }
    }

    std::string make_key(const std::string& query_scope, const std::string& method_scope,
                         const Coalition& coalition) const {
        std::string key = query_scope + "\x1f" + method_scope + "\x1f";
        const auto ids = canonicalize_ ? coalition.sorted_members() : coalition.members();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i > 0) key += ",";
            key += std::to_string(ids[i]);
        }
        return key;
    }

    CacheValue get_or_compute(const std::string& query_scope, const std::string& method_scope,
                              const Coalition& coalition,
                              const std::function<CacheValue(const Coalition&)>& inner) {
        const std::string key = make_key(query_scope, method_scope, coalition);

        std::shared_ptr<InFlight> flight;
        {
            std::unique_lock<std::mutex> lock(mu_);
            for (;;) {
                auto hit = store_.find(key);
                if (hit != store_.end()) {
                    ++stats_.hits;
                    return hit->second;
                }
                auto pending = in_flight_.find(key);
                if (pending == in_flight_.end()) break;
                auto waiting = pending->second;
                waiting->cv.wait(lock, [&] { return waiting->done; });
                if (!waiting->failed) {
                    ++stats_.hits;
                    return waiting->value;
                }
                // The computing thread failed; retry from scratch.
            }
            flight = std::make_shared<InFlight>();
            in_flight_[key] = flight;
            ++stats_.misses;
        }

        CacheValue value;
        try {
            value = inner(coalition);
        } catch (...) {
            finish(key, flight, CacheValue{}, /*failed=*/true);
            throw;
        }
        finish(key, flight, value, /*failed=*/false);
        return value;
    }

    Stats stats() const {
        std::lock_guard<std::mutex> lock(mu_);
        return stats_;
    }

    bool canonicalize() const { return canonicalize_; }

private:
    struct InFlight {
        std::condition_variable cv;
        bool done = false;
        bool failed = false;
        CacheValue value;
    };

    void finish(const std::string& key, const std::shared_ptr<InFlight>& flight, CacheValue value,
                bool failed) {
        std::lock_guard<std::mutex> lock(mu_);
        if (!failed) {
            store_[key] = value;
            persist(key, value);
        }
        flight->value = value;
        flight->failed = failed;
        flight->done = true;
        in_flight_.erase(key);
        flight->cv.notify_all();
    }

    void persist(const std::string& key, const CacheValue& value) {
        if (!out_) return;
        nlohmann::json line = {{"key", key},
                               {"score", value.score},
                               {"tokens_in", value.tokens_in},
                               {"tokens_out", value.tokens_out}};
        *out_ << line.dump() << "\n";
        out_->flush();
        if (!*out_) {
            out_.reset();
            ++stats_.io_warnings;
        }
    }

    bool canonicalize_;
    mutable std::mutex mu_;
    std::map<std::string, CacheValue> store_;
    std::map<std::string, std::shared_ptr<InFlight>> in_flight_;
    std::unique_ptr<std::ofstream> out_;
    Stats stats_;
};

// UtilityOracle adapter: check the cache, fall through to the inner oracle on
// a miss. Hits cost zero new tokens; the oracle's own token counters reflect
// only the misses' inner cost.
class CachedOracle : public UtilityOracle {
public:
    CachedOracle(UtilityOracle& inner, UtilityCache& cache, std::string query_scope,
                 std::string method_scope)
        : inner_(inner),
          cache_(cache),
          query_scope_(std::move(query_scope)),
          method_scope_(std::move(method_scope)) {}

protected:
    double evaluate_impl(const Coalition& coalition) override {
        // The lambda only runs on a miss, so hits add zero new tokens here.
        CacheValue v = cache_.get_or_compute(
            query_scope_, method_scope_, coalition, [this](const Coalition& c) {
                TokenUsage before = inner_.token_usage();
                CacheValue fresh;
                fresh.score = inner_.evaluate(c);
                TokenUsage after = inner_.token_usage();
                fresh.tokens_in = after.input - before.input;
                fresh.tokens_out = after.output - before.output;
                add_tokens(fresh.tokens_in, fresh.tokens_out);
                return fresh;
            });
        return v.score;
    }

private:
    UtilityOracle& inner_;
    UtilityCache& cache_;
    std::string query_scope_;
    std::string method_scope_;
};

}  // namespace maxshapley::judge
