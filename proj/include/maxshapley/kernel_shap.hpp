#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "maxshapley/errors.hpp"
#include "maxshapley/oracle.hpp"
#include "maxshapley/rng.hpp"
#include "maxshapley/solvers.hpp"
#include "maxshapley/types.hpp"

namespace maxshapley {

struct KernelShapOptions {
    // Number of regression coalitions; nullopt enumerates every proper
    // non-empty coalition. The empty and grand coalitions are always
    // evaluated separately as the efficiency anchors.
    std::optional<long long> n_coalitions;
    std::uint64_t seed = 0;
    double l1_penalty = 0.0;
};

namespace detail {

// Standard Shapley kernel weight for a coalition of size k out of m.
inline double shapley_kernel_weight(int m, int k) {
    double binom = 1.0;
    for (int t = 1; t <= k; ++t) {
        binom *= static_cast<double>(m - t + 1) / static_cast<double>(t);
    }
    return static_cast<double>(m - 1) / (binom * k * (m - k));
}

// Equality-constrained weighted least squares via the KKT system:
//   minimize sum_k w_k (y_k - x_k . phi)^2   s.t.  sum(phi) = delta,
// restricted to the given support (other coordinates fixed at zero).
inline std::vector<double> solve_constrained_wls(const std::vector<std::uint32_t>& masks,
                                                 const std::vector<double>& y,
                                                 const std::vector<double>& w, int m,
                                                 const std::vector<int>& support, double delta) {
    const int s = static_cast<int>(support.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);

    for (std::size_t k = 0; k < masks.size(); ++k) {
        for (int a = 0; a < s; ++a) {
            if (!(masks[k] & (1u << support[a]))) continue;
            rhs(a) += 2.0 * w[k] * y[k];
            for (int b = 0; b < s; ++b) {
                if (masks[k] & (1u << support[b])) kkt(a, b) += 2.0 * w[k];
            }
        }
    }
    for (int a = 0; a < s; ++a) {
        kkt(a, s) = 1.0;
        kkt(s, a) = 1.0;
    }
    rhs(s) = delta;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) {
        throw NumericError(
            "kernel SHAP design matrix is singular; sample more coalitions (increase "
            "n_coalitions)");
    }
    Eigen::VectorXd sol = lu.solve(rhs);

    std::vector<double> phi(static_cast<std::size_t>(m), 0.0);
    for (int a = 0; a < s; ++a) {
        phi[static_cast<std::size_t>(support[a])] = sol(a);
    }
    return phi;
}

// Coordinate-descent LASSO on the weighted regression, used only to pick the
// support when l1_penalty > 0; the constrained refit supplies the values.
inline std::vector<int> lasso_support(const std::vector<std::uint32_t>& masks,
                                      const std::vector<double>& y, const std::vector<double>& w,
                                      int m, double lambda) {
    std::vector<double> phi(static_cast<std::size_t>(m), 0.0);
    std::vector<double> col_norm(static_cast<std::size_t>(m), 0.0);
    for (std::size_t k = 0; k < masks.size(); ++k) {
        for (int i = 0; i < m; ++i) {
            if (masks[k] & (1u << i)) col_norm[static_cast<std::size_t>(i)] += w[k];
        }
    }

    std::vector<double> residual = y;  // y - X.phi, with phi = 0
    for (int iter = 0; iter < 10000; ++iter) {
        double max_change = 0.0;
        for (int i = 0; i < m; ++i) {
            const std::size_t si = static_cast<std::size_t>(i);
            if (col_norm[si] <= 0.0) continue;
            double rho = 0.0;
            for (std::size_t k = 0; k < masks.size(); ++k) {
                if (masks[k] & (1u << i)) rho += w[k] * (residual[k] + phi[si]);
            }
            double updated = 0.0;
            const double t = lambda / 2.0;
            if (rho > t) {
                updated = (rho - t) / col_norm[si];
            } else if (rho < -t) {
                updated = (rho + t) / col_norm[si];
            }
            const double change = updated - phi[si];
            if (change != 0.0) {
                for (std::size_t k = 0; k < masks.size(); ++k) {
                    if (masks[k] & (1u << i)) residual[k] -= change;
                }
                phi[si] = updated;
            }
            max_change = std::max(max_change, std::abs(change));
        }
        if (max_change < 1e-12) break;
    }

    std::vector<int> support;
    for (int i = 0; i < m; ++i) {
        if (phi[static_cast<std::size_t>(i)] != 0.0) support.push_back(i);
    }
    if (support.empty()) {
        // Penalty zeroed everything; refit on the full support rather than
        // produce an unconstrained-infeasible answer.
        for (int i = 0; i < m; ++i) support.push_back(i);
    }
    return support;
}

}  // namespace detail

// Shapley approximation as kernel-weighted linear regression over coalition
// indicator vectors, constrained so the estimate distributes U(S) - U({}).
// With every proper coalition included and zero penalty the recovery is
// exact. Coalitions are sampled proportional to the kernel weight without
// replacement; all singleton and leave-one-out coalitions are always kept.
inline AttributionVector kernel_shap(UtilityOracle& oracle, int m, const KernelShapOptions& opts) {
    if (m < 2) throw DataError("kernel SHAP requires at least 2 players");
    if (m > 20) {
        throw UsageError("kernel SHAP coalition enumeration capped at m=20; got m=" +
                         std::to_string(m));
    }
    if (opts.l1_penalty < 0.0) throw UsageError("l1_penalty must be non-negative");

    const std::uint32_t full = (1u << m) - 1u;

    std::vector<std::uint32_t> masks;
    if (!opts.n_coalitions.has_value()) {
        masks.reserve(full - 1);
        for (std::uint32_t z = 1; z < full; ++z) masks.push_back(z);
    } else {
        const long long budget = *opts.n_coalitions;
        if (budget < m) {
            throw UsageError("n_coalitions must be >= m (or ALL); got " + std::to_string(budget));
        }
        std::set<std::uint32_t> chosen;
        for (int i = 0; i < m; ++i) {
            chosen.insert(1u << i);           // singleton
            chosen.insert(full & ~(1u << i));  // leave-one-out
        }
        const long long remaining = budget - static_cast<long long>(chosen.size());
        if (remaining > 0) {
            // Weighted sampling without replacement (Efraimidis-Spirakis):
            // order candidates by log(u)/w and keep the top draw.
            std::mt19937_64 rng(opts.seed);
            std::vector<std::pair<double, std::uint32_t>> keys;
            keys.reserve(full - 1);
            for (std::uint32_t z = 1; z < full; ++z) {
                const double u = (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0;
                if (chosen.count(z)) continue;
                const double w = detail::shapley_kernel_weight(m, std::popcount(z));
                keys.emplace_back(std::log(u) / w, z);
            }
            const std::size_t take = std::min<std::size_t>(keys.size(),
                                                           static_cast<std::size_t>(remaining));
            std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(take),
                              keys.end(), [](const auto& a, const auto& b) {
                                  return a.first > b.first || (a.first == b.first && a.second < b.second);
                              });
            for (std::size_t t = 0; t < take; ++t) chosen.insert(keys[t].second);
        }
        masks.assign(chosen.begin(), chosen.end());
    }

    const double u_empty = detail::evaluate_annotated(oracle, Coalition{});
    const double u_full = detail::evaluate_annotated(oracle, Coalition::full(m));

    std::vector<double> y(masks.size());
    std::vector<double> w(masks.size());
    for (std::size_t k = 0; k < masks.size(); ++k) {
        Coalition c = detail::mask_to_coalition(masks[k], m);
        y[k] = detail::evaluate_annotated(oracle, c) - u_empty;
        w[k] = detail::shapley_kernel_weight(m, c.size());
    }

    std::vector<int> support;
    if (opts.l1_penalty > 0.0) {
        support = detail::lasso_support(masks, y, w, m, opts.l1_penalty);
    } else {
        for (int i = 0; i < m; ++i) support.push_back(i);
    }

    AttributionVector out;
    out.method = Method::KernelSHAP;
    out.seed = opts.seed;
    out.phi = detail::solve_constrained_wls(masks, y, w, m, support, u_full - u_empty);
    return out;
}

}  // namespace maxshapley
