#pragma once

// Test-only reference computations, kept independent of the library's solver
// implementations so they can act as oracles for them.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace refimpl {

// Shapley via the subset-weighted definition, evaluated with a plain
// set-function callback. Independent of the library's permutation walk.
template <typename SetFn>
std::vector<double> subset_form_shapley(int m, SetFn&& utility) {
    std::vector<double> factorial(static_cast<std::size_t>(m + 1), 1.0);
    for (int i = 1; i <= m; ++i) {
        factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i - 1)] * i;
    }

    const std::uint32_t full = (1u << m) - 1u;
    std::vector<double> utility_by_mask(static_cast<std::size_t>(full) + 1);
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
        std::vector<int> members;
        for (int i = 0; i < m; ++i) {
            if (mask & (1u << i)) members.push_back(i);
        }
        utility_by_mask[mask] = utility(members);
    }

    std::vector<double> phi(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
        for (std::uint32_t mask = 0; mask <= full; ++mask) {
            if (mask & (1u << i)) continue;
            const int size = std::popcount(mask);
            const double weight = factorial[static_cast<std::size_t>(size)] *
                                  factorial[static_cast<std::size_t>(m - size - 1)] /
                                  factorial[static_cast<std::size_t>(m)];
            phi[static_cast<std::size_t>(i)] +=
                weight * (utility_by_mask[mask | (1u << i)] - utility_by_mask[mask]);
        }
    }
    return phi;
}

inline double max_over(const std::vector<int>& members, const std::vector<double>& values) {
    double best = 0.0;
    for (int i : members) best = std::max(best, values[static_cast<std::size_t>(i)]);
    return best;
}

struct PairEventCounts {
    long long permutations = 0;
    // first_count[r]: permutations where the rank-(r+1) player arrives first.
    std::vector<long long> first_count;
    // margin_count[i][j]: permutations where the rank-(i+1) player's running
    // maximum predecessor is the rank-(j+1) player.
    std::vector<std::vector<long long>> margin_count;
};

// Exhaustively enumerates all m! arrival orders of m distinct-valued players
// and counts, for every rank pair, how often the margin event occurs.
inline PairEventCounts enumerate_pair_events(int m) {
    PairEventCounts out;
    out.first_count.assign(static_cast<std::size_t>(m), 0);
    out.margin_count.assign(static_cast<std::size_t>(m),
                            std::vector<long long>(static_cast<std::size_t>(m), 0));

    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);  // entries are ranks 0..m-1 (= distinct values)
    do {
        ++out.permutations;
        int prefix_max = -1;
        for (int pos = 0; pos < m; ++pos) {
            const int rank = perm[static_cast<std::size_t>(pos)];
            if (pos == 0) {
                ++out.first_count[static_cast<std::size_t>(rank)];
            } else if (rank > prefix_max) {
                ++out.margin_count[static_cast<std::size_t>(rank)][static_cast<std::size_t>(prefix_max)];
            }
            prefix_max = std::max(prefix_max, rank);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

}  // namespace refimpl
