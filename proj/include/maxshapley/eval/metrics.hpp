#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "maxshapley/errors.hpp"

namespace maxshapley::eval {

// Jaccard overlap between the K top-attributed sources and the K ground
// truth relevant sources, K = |R|. Ties in phi break deterministically:
// descending score, then ascending source index. K = 0 is undefined; the
// harness skips and counts those samples.
inline double jaccard_at_k(const std::vector<double>& phi, const std::vector<int>& relevance) {
    if (phi.size() != relevance.size()) {
        throw DataError("jaccard_at_k requires equally sized score and label vectors");
    }
    int k = 0;
    for (int r : relevance) {
        if (r != 0 && r != 1) throw DataError("relevance labels must be 0 or 1");
        k += r;
    }
    if (k == 0) {
        throw UndefinedMetricError("Jaccard@K undefined: sample has no relevant source");
    }

    std::vector<int> order(phi.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (phi[static_cast<std::size_t>(a)] != phi[static_cast<std::size_t>(b)]) {
            return phi[static_cast<std::size_t>(a)] > phi[static_cast<std::size_t>(b)];
        }
        return a < b;
    });

    std::size_t intersection = 0;
    for (int t = 0; t < k; ++t) {
        if (relevance[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] == 1) {
            ++intersection;
        }
    }
    // |T| = |R| = k, so |T u R| = 2k - |T n R|.
    return static_cast<double>(intersection) /
           static_cast<double>(2 * k - static_cast<int>(intersection));
}

// Tie-adjusted Kendall rank correlation:
//   tau_b = (C - D) / sqrt((n0 - n1)(n0 - n2))
// over all index pairs, where n1 and n2 count pairs tied in a and b. A
// constant vector makes the denominator zero; that is reported as undefined
// rather than silently scored.
inline double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("kendall_tau_b requires equally long vectors");
    const std::size_t n = a.size();
    if (n < 2) throw DataError("kendall_tau_b requires at least two entries");

    long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) {
                ++ties_a;
                ++ties_b;
            } else if (da == 0.0) {
                ++ties_a;
            } else if (db == 0.0) {
                ++ties_b;
            } else if ((da > 0.0) == (db > 0.0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }

    const long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
    if (n0 == ties_a || n0 == ties_b) {
        throw UndefinedMetricError("Kendall tau_b undefined: a ranking is constant");
    }
    return static_cast<double>(concordant - discordant) /
           std::sqrt(static_cast<double>(n0 - ties_a) * static_cast<double>(n0 - ties_b));
}

}  // namespace maxshapley::eval
