#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "maxshapley/errors.hpp"
#include "maxshapley/oracle.hpp"
#include "maxshapley/rng.hpp"
#include "maxshapley/types.hpp"

namespace maxshapley {

namespace detail {

inline std::string coalition_key(const Coalition& c) {
    std::string key = "{";
    for (std::size_t k = 0; k < c.members().size(); ++k) {
        if (k > 0) key += ",";
        key += std::to_string(c.members()[k]);
    }
    return key + "}";
}

inline double evaluate_annotated(UtilityOracle& oracle, const Coalition& c) {
    try {
        return oracle.evaluate(c);
    } catch (const Error& e) {
        throw Error(e.category(),
                    std::string("oracle failed on coalition ") + coalition_key(c) + ": " + e.what());
    }
}

inline Coalition mask_to_coalition(std::uint32_t mask, int m) {
    std::vector<int> ids;
    for (int i = 0; i < m; ++i) {
        if (mask & (1u << i)) ids.push_back(i);
    }
    return Coalition(std::move(ids));
}

}  // namespace detail

// Exact Shapley by exhaustive enumeration of all m! arrival orders. This is
// the reference the closed-form solvers are verified against, so it stays a
// direct transcription of the permutation definition.
inline AttributionVector brute_force_permutation_shapley(UtilityOracle& oracle, int m,
                                                         int cap = 8) {
    if (m < 1) throw DataError("player count must be >= 1");
    if (m > cap) {
        throw UsageError("brute-force permutation enumeration refused: m=" + std::to_string(m) +
                         " exceeds the cap of " + std::to_string(cap) +
                         " (raise the cap explicitly to override)");
    }

    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);

    const double u_empty = detail::evaluate_annotated(oracle, Coalition{});
    std::vector<double> sums(static_cast<std::size_t>(m), 0.0);
    long long n_perms = 0;
    do {
        Coalition prefix;
        double prev = u_empty;
        for (int player : perm) {
            prefix = prefix.with(player);  // arrival order, not canonical
            double u = detail::evaluate_annotated(oracle, prefix);
            sums[static_cast<std::size_t>(player)] += u - prev;
            prev = u;
        }
        ++n_perms;
    } while (std::next_permutation(perm.begin(), perm.end()));

    AttributionVector out;
    out.method = Method::FullShapley;
    out.phi.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        out.phi[static_cast<std::size_t>(i)] = sums[static_cast<std::size_t>(i)] / n_perms;
    }
    return out;
}

// Exact Shapley via subset enumeration:
//   phi_i = sum_{T subset of S\{i}} |T|!(m-|T|-1)!/m! * (U(T+{i}) - U(T)).
// Coalitions are submitted in canonical sorted form so a sorted-coalition
// cache in front of the oracle collapses repeated subsets.
inline AttributionVector full_shapley(UtilityOracle& oracle, int m, int cap = 12) {
    if (m < 1) throw DataError("player count must be >= 1");
    if (m > cap) {
        throw UsageError("full Shapley subset enumeration refused: m=" + std::to_string(m) +
                         " exceeds the cap of " + std::to_string(cap) +
                         " (raise the cap explicitly to override)");
    }

    // weight[k] = k!(m-k-1)!/m! = 1 / (C(m-1,k) * m)
    std::vector<double> weight(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        double binom = 1.0;
        for (int t = 1; t <= k; ++t) {
            binom *= static_cast<double>(m - t) / static_cast<double>(t);
        }
        weight[static_cast<std::size_t>(k)] = 1.0 / (binom * m);
    }

    AttributionVector out;
    out.method = Method::FullShapley;
    out.phi.assign(static_cast<std::size_t>(m), 0.0);

    const std::uint32_t full = (m == 32) ? 0xffffffffu : ((1u << m) - 1u);
    for (int i = 0; i < m; ++i) {
        const std::uint32_t others = full & ~(1u << i);
        // Enumerate subsets T of the other players.
        std::uint32_t sub = 0;
        while (true) {
            Coalition without = detail::mask_to_coalition(sub, m);
            Coalition with = detail::mask_to_coalition(sub | (1u << i), m);
            double delta = detail::evaluate_annotated(oracle, with) -
                           detail::evaluate_annotated(oracle, without);
            out.phi[static_cast<std::size_t>(i)] += weight[static_cast<std::size_t>(without.size())] * delta;
            if (sub == others) break;
            sub = (sub - others) & others;  // next subset of `others`
        }
    }
    return out;
}

struct McAccumulator {
    std::vector<double> sum;
    std::vector<double> sum_sq;

    explicit McAccumulator(int m)
        : sum(static_cast<std::size_t>(m), 0.0), sum_sq(static_cast<std::size_t>(m), 0.0) {}

    void add(const std::vector<double>& sample) {
        for (std::size_t i = 0; i < sample.size(); ++i) {
            sum[i] += sample[i];
            sum_sq[i] += sample[i] * sample[i];
        }
    }

    // Mean and standard error of the mean over n samples.
    void finish(long long n, std::vector<double>& mean, std::vector<double>& stderr_out) const {
        mean.resize(sum.size());
        stderr_out.resize(sum.size());
        for (std::size_t i = 0; i < sum.size(); ++i) {
            mean[i] = sum[i] / static_cast<double>(n);
            if (n >= 2) {
                double var = (sum_sq[i] - static_cast<double>(n) * mean[i] * mean[i]) /
                             static_cast<double>(n - 1);
                stderr_out[i] = std::sqrt(std::max(0.0, var) / static_cast<double>(n));
            } else {
                stderr_out[i] = 0.0;
            }
        }
    }
};

namespace detail {

// One pass over a permutation, recording each player's marginal contribution.
inline void walk_permutation(UtilityOracle& oracle, const std::vector<int>& perm, double u_empty,
                             std::vector<double>& marginals) {
    Coalition prefix;
    double prev = u_empty;
    for (int player : perm) {
        prefix = prefix.with(player);
        double u = evaluate_annotated(oracle, prefix);
        marginals[static_cast<std::size_t>(player)] = u - prev;
        prev = u;
    }
}

}  // namespace detail

// Monte-Carlo estimate from uniformly sampled arrival orders; one marginal
// per player per permutation. Oracle call count is m * n_permutations + 1
// (the empty coalition is evaluated once and reused).
inline AttributionVector mc_uniform_shapley(UtilityOracle& oracle, int m,
                                            long long n_permutations, std::uint64_t seed) {
    if (m < 1) throw DataError("player count must be >= 1");
    if (n_permutations < 1) throw UsageError("n_permutations must be >= 1");

    std::mt19937_64 rng(seed);
    const double u_empty = detail::evaluate_annotated(oracle, Coalition{});

    McAccumulator acc(m);
    std::vector<double> marginals(static_cast<std::size_t>(m));
    for (long long r = 0; r < n_permutations; ++r) {
        std::vector<int> perm = random_permutation(m, rng);
        detail::walk_permutation(oracle, perm, u_empty, marginals);
        acc.add(marginals);
    }

    AttributionVector out;
    out.method = Method::MCU;
    out.seed = seed;
    std::vector<double> se;
    acc.finish(n_permutations, out.phi, se);
    out.std_error = std::move(se);
    return out;
}

// Antithetic variant: every sampled permutation is paired with its reversal,
// and the pair average is one sample. Oracle call count is 2m * n_pairs + 1.
inline AttributionVector mc_antithetic_shapley(UtilityOracle& oracle, int m, long long n_pairs,
                                               std::uint64_t seed) {
    if (m < 1) throw DataError("player count must be >= 1");
    if (n_pairs < 1) throw UsageError("n_pairs must be >= 1");

    std::mt19937_64 rng(seed);
    const double u_empty = detail::evaluate_annotated(oracle, Coalition{});

    McAccumulator acc(m);
    std::vector<double> fwd(static_cast<std::size_t>(m));
    std::vector<double> rev(static_cast<std::size_t>(m));
    std::vector<double> pair_mean(static_cast<std::size_t>(m));
    for (long long r = 0; r < n_pairs; ++r) {
        std::vector<int> perm = random_permutation(m, rng);
        detail::walk_permutation(oracle, perm, u_empty, fwd);
        std::reverse(perm.begin(), perm.end());
        detail::walk_permutation(oracle, perm, u_empty, rev);
        for (int i = 0; i < m; ++i) {
            std::size_t s = static_cast<std::size_t>(i);
            pair_mean[s] = 0.5 * (fwd[s] + rev[s]);
        }
        acc.add(pair_mean);
    }

    AttributionVector out;
    out.method = Method::MCA;
    out.seed = seed;
    std::vector<double> se;
    acc.finish(n_pairs, out.phi, se);
    out.std_error = std::move(se);
    return out;
}

// phi_i = U(S) - U(S \ {i}). Exactly m+1 oracle calls; violates efficiency
// whenever sources are redundant.
inline AttributionVector leave_one_out(UtilityOracle& oracle, int m) {
    if (m < 1) throw DataError("player count must be >= 1");

    const Coalition full = Coalition::full(m);
    const double u_full = detail::evaluate_annotated(oracle, full);

    AttributionVector out;
    out.method = Method::LOO;
    out.phi.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double u_without = detail::evaluate_annotated(oracle, full.without(i));
        out.phi[static_cast<std::size_t>(i)] = u_full - u_without;
    }
    return out;
}

// Zeroes entries below the threshold, then rescales the survivors to sum to
// exactly 1. When everything is clipped away the result is all zeros with
// the degenerate flag set; no attribution mass is invented.
inline AttributionVector clip_and_renormalize(const AttributionVector& input, double threshold) {
    if (threshold < 0.0 || !std::isfinite(threshold)) {
        throw UsageError("clipping threshold must be a finite non-negative real");
    }
    for (double v : input.phi) {
        if (!std::isfinite(v)) throw NumericError("attribution vector holds a non-finite entry");
    }

    AttributionVector out = input;
    out.clipped = true;
    out.std_error.reset();  // scaling invalidates the recorded standard errors

    double kept = 0.0;
    for (double& v : out.phi) {
        if (v < threshold) v = 0.0;
        kept += v;
    }
    if (kept > 0.0) {
        for (double& v : out.phi) v /= kept;
    } else {
        std::fill(out.phi.begin(), out.phi.end(), 0.0);
        out.degenerate = true;
    }
    return out;
}

}  // namespace maxshapley
