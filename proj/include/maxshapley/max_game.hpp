#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "maxshapley/errors.hpp"
#include "maxshapley/pair_table.hpp"
#include "maxshapley/types.hpp"

namespace maxshapley {

// Exact Shapley values of the game Max(S') = max_{i in S'} v_i, Max({}) = 0.
//
// After sorting players ascending, the rank-i player's expected marginal is
//   phi_i = v_i * first_position + sum_{j<i} (v_i - v_j) * margin_prob(i, j).
// Ties are ordered by (value, original index); tied pairs contribute a zero
// margin either way, so equal values receive identical scores.
//
// Passing a prebuilt table drops the cost from the table construction to a
// single O(m^2) accumulation.
inline AttributionVector max_game_shapley(const Valuation& values,
                                          const PairProbabilityTable* table = nullptr) {
    const int m = values.size();
    if (table != nullptr && table->player_count() != m) {
        throw DataError("pair table built for m=" + std::to_string(table->player_count()) +
                        " cannot score a valuation of " + std::to_string(m) + " players");
    }

    PairProbabilityTable local;
    if (table == nullptr) {
        local = PairProbabilityTable::build(m);
        table = &local;
    }

    // Total order: ascending value, ties broken by original index.
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });

    AttributionVector out;
    out.method = Method::MaxGameExact;
    out.phi.assign(static_cast<std::size_t>(m), 0.0);

    const double p_first = table->first_position();
    for (int rank_i = 1; rank_i <= m; ++rank_i) {
        const int player = order[static_cast<std::size_t>(rank_i - 1)];
        double phi = values[player] * p_first;
        for (int rank_j = 1; rank_j < rank_i; ++rank_j) {
            const int lower = order[static_cast<std::size_t>(rank_j - 1)];
            phi += (values[player] - values[lower]) * table->margin_prob(rank_i, rank_j);
        }
        out.phi[static_cast<std::size_t>(player)] = phi;
    }
    return out;
}

}  // namespace maxshapley
