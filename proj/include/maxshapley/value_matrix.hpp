#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "maxshapley/errors.hpp"
#include "maxshapley/max_game.hpp"
#include "maxshapley/oracle.hpp"
#include "maxshapley/pair_table.hpp"
#include "maxshapley/types.hpp"

namespace maxshapley {

// Atomic keypoints extracted from an answer, with normalized weights.
struct KeyPointSet {
    std::vector<std::string> points;
    std::vector<double> weights;

    static KeyPointSet uniform(std::vector<std::string> pts) {
        KeyPointSet kps;
        kps.points = std::move(pts);
        kps.weights.assign(kps.points.size(), 1.0 / static_cast<double>(kps.points.size()));
        kps.validate();
        return kps;
    }

    int size() const { return static_cast<int>(points.size()); }

    void validate() const {
        if (points.empty()) throw DataError("keypoint set must contain at least one point");
        if (weights.size() != points.size()) {
            throw DataError("keypoint weights must match the number of points");
        }
        double sum = 0.0;
        for (double w : weights) {
            if (!std::isfinite(w) || w < 0.0) throw DataError("keypoint weights must be non-negative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw DataError("keypoint weights must sum to 1 (got " + std::to_string(sum) + ")");
        }
        for (const auto& p : points) {
            if (p.empty()) throw DataError("keypoints must be non-empty strings");
        }
    }
};

// Per-(source, keypoint) relevance scores v[i][j] in [0, 1].
class ValueMatrix {
public:
    ValueMatrix(std::vector<std::string> source_ids, KeyPointSet keypoints,
                std::vector<std::vector<double>> scores)
        : source_ids_(std::move(source_ids)),
          keypoints_(std::move(keypoints)),
          scores_(std::move(scores)) {
        keypoints_.validate();
        if (source_ids_.empty()) throw DataError("value matrix requires at least one source");
        if (scores_.size() != source_ids_.size()) {
            throw DataError("value matrix row count must match the source list");
        }
        for (std::size_t i = 0; i < scores_.size(); ++i) {
            if (scores_[i].size() != keypoints_.points.size()) {
                throw DataError("value matrix row " + std::to_string(i) +
                                " does not match the keypoint count");
            }
            for (std::size_t j = 0; j < scores_[i].size(); ++j) {
                double v = scores_[i][j];
                if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                    throw DataError("relevance score at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") must lie in [0,1]");
                }
            }
        }
    }

    int num_sources() const { return static_cast<int>(source_ids_.size()); }
    int num_keypoints() const { return keypoints_.size(); }
    double at(int i, int j) const {
        return scores_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    const std::vector<std::string>& source_ids() const { return source_ids_; }
    const KeyPointSet& keypoints() const { return keypoints_; }
    const std::vector<std::vector<double>>& scores() const { return scores_; }

    Valuation column(int j) const {
        std::vector<double> col(source_ids_.size());
        for (std::size_t i = 0; i < source_ids_.size(); ++i) {
            col[i] = scores_[i][static_cast<std::size_t>(j)];
        }
        return Valuation(std::move(col));
    }

private:
    std::vector<std::string> source_ids_;
    KeyPointSet keypoints_;
    std::vector<std::vector<double>> scores_;
};

// U(S') = sum_j w_j * max_{i in S'} v[i][j], with U({}) = 0.
inline double maxsum_utility(const ValueMatrix& vm, const Coalition& coalition) {
    coalition.check_bounds(vm.num_sources());
    if (coalition.empty()) return 0.0;
    double total = 0.0;
    for (int j = 0; j < vm.num_keypoints(); ++j) {
        double best = 0.0;
        for (int i : coalition.members()) best = std::max(best, vm.at(i, j));
        total += vm.keypoints().weights[static_cast<std::size_t>(j)] * best;
    }
    return total;
}

// Adapter so any generic solver can run against the sum-max utility.
inline FunctionOracle make_maxsum_oracle(const ValueMatrix& vm) {
    return FunctionOracle([&vm](const Coalition& c) { return maxsum_utility(vm, c); });
}

// Exact attribution of the sum-max game: every keypoint column is an
// independent maximization game, and Shapley additivity makes the final
// score the weight-combined column solution. O(n * m^2) with a shared table.
inline AttributionVector aggregate_attribution(const ValueMatrix& vm,
                                               const PairProbabilityTable* table = nullptr) {
    const int m = vm.num_sources();

    PairProbabilityTable local;
    if (table == nullptr) {
        local = PairProbabilityTable::build(m);
        table = &local;
    }

    AttributionVector out;
    out.method = Method::MaxShapleyPipeline;
    out.phi.assign(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < vm.num_keypoints(); ++j) {
        AttributionVector col = max_game_shapley(vm.column(j), table);
        const double w = vm.keypoints().weights[static_cast<std::size_t>(j)];
        for (int i = 0; i < m; ++i) {
            out.phi[static_cast<std::size_t>(i)] += w * col.phi[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

}  // namespace maxshapley
