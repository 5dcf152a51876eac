// Acceptance suite: runs each criterion and prints one PASS/FAIL line.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "maxshapley/maxshapley.hpp"
#include "support/reference.hpp"

namespace fs = std::filesystem;
using namespace maxshapley;

namespace {

struct Criterion {
    Criterion(int id_, std::string name_) : id(id_), name(std::move(name_)) {}

    int id;
    std::string name;
    bool passed = false;
    std::string detail;
};

std::vector<double> random_valuation(int m, std::mt19937_64& rng, bool allow_ties) {
    std::vector<double> vals(static_cast<std::size_t>(m));
    for (double& v : vals) {
        if (allow_ties && rng() % 4 == 0) {
            v = (rng() % 5) / 4.0;  // coarse grid forces ties
        } else {
            v = (rng() % 100000) / 100000.0;
        }
    }
    return vals;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// C1: closed form (with and without the lookup table) vs exhaustive
// permutation enumeration, 200 random valuations per m in 1..8, 1e-9.
Criterion criterion_closed_form() {
    Criterion c{1, "closed-form max-game Shapley matches brute force (m<=8, 200 draws/m)"};
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int m = 1; m <= 8; ++m) {
        auto table = PairProbabilityTable::build(m);
        for (int trial = 0; trial < 200; ++trial) {
            Valuation valuation(random_valuation(m, rng, /*allow_ties=*/true));
            auto direct = max_game_shapley(valuation);
            auto via_table = max_game_shapley(valuation, &table);
            auto oracle = make_max_game_oracle(valuation);
            auto brute = brute_force_permutation_shapley(oracle, m);
            worst = std::max(worst, max_abs_diff(direct.phi, brute.phi));
            worst = std::max(worst, max_abs_diff(via_table.phi, brute.phi));
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max |diff| = %.3g, %.1f s", worst, secs);
    c.detail = buf;
    c.passed = worst <= 1e-9 && secs < 60.0;
    return c;
}

// C2: every table entry equals the exhaustive event frequency (m <= 8).
Criterion criterion_table_verification() {
    Criterion c{2, "pair-probability table matches exhaustive event frequencies (m<=8)"};
    double worst = 0.0;
    for (int m = 1; m <= 8; ++m) {
        auto table = PairProbabilityTable::build(m);
        auto counts = refimpl::enumerate_pair_events(m);
        const double total = static_cast<double>(counts.permutations);
        for (int rank = 1; rank <= m; ++rank) {
            const double freq = counts.first_count[static_cast<std::size_t>(rank - 1)] / total;
            worst = std::max(worst, std::abs(table.first_position() - freq));
        }
        for (int i = 2; i <= m; ++i) {
            for (int j = 1; j < i; ++j) {
                const double freq =
                    counts.margin_count[static_cast<std::size_t>(i - 1)]
                                       [static_cast<std::size_t>(j - 1)] /
                    total;
                worst = std::max(worst, std::abs(table.margin_prob(i, j) - freq));
            }
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |diff| = %.3g", worst);
    c.detail = buf;
    c.passed = worst <= 1e-12;
    return c;
}

ValueMatrix random_matrix(std::mt19937_64& rng, int m, int n) {
    std::vector<std::string> ids, pts;
    for (int i = 0; i < m; ++i) ids.push_back("s" + std::to_string(i));
    for (int j = 0; j < n; ++j) pts.push_back("kp " + std::to_string(j));
    std::vector<std::vector<double>> scores(static_cast<std::size_t>(m),
                                            std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& row : scores) {
        for (double& v : row) v = (rng() % 1001) / 1000.0;
    }
    return ValueMatrix(ids, KeyPointSet::uniform(pts), std::move(scores));
}

// C3: efficiency, symmetry under duplicated rows, null player, additivity.
Criterion criterion_axioms() {
    Criterion c{3, "axiom suite on random sum-max games (100 trials)"};
    std::mt19937_64 rng(303);
    bool ok = true;
    std::string why;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const int m = 2 + static_cast<int>(rng() % 5);  // 2..6
        const int n = 1 + static_cast<int>(rng() % 5);  // 1..5
        auto vm = random_matrix(rng, m, n);

        // Efficiency.
        auto phi = aggregate_attribution(vm);
        if (std::abs(phi.sum() - maxsum_utility(vm, Coalition::full(m))) > 1e-9) {
            ok = false;
            why = "efficiency violated";
            break;
        }

        // Symmetry: duplicate a random row into a new source.
        {
            const int dup = static_cast<int>(rng() % m);
            auto scores = vm.scores();
            scores.push_back(scores[static_cast<std::size_t>(dup)]);
            std::vector<std::string> ids = vm.source_ids();
            ids.push_back("dup");
            ValueMatrix with_dup(ids, vm.keypoints(), scores);
            auto phi_dup = aggregate_attribution(with_dup);
            if (std::abs(phi_dup.phi[static_cast<std::size_t>(dup)] - phi_dup.phi.back()) >
                1e-12) {
                ok = false;
                why = "symmetry violated for duplicated rows";
                break;
            }
        }

        // Null player: zero out a random row.
        {
            const int zero = static_cast<int>(rng() % m);
            auto scores = vm.scores();
            for (double& v : scores[static_cast<std::size_t>(zero)]) v = 0.0;
            ValueMatrix with_null(vm.source_ids(), vm.keypoints(), scores);
            auto phi_null = aggregate_attribution(with_null);
            if (phi_null.phi[static_cast<std::size_t>(zero)] != 0.0) {
                ok = false;
                why = "null player received nonzero attribution";
                break;
            }
        }

        // Additivity of full Shapley over summed utilities.
        {
            auto vm2 = random_matrix(rng, m, n);
            FunctionOracle u1 = make_maxsum_oracle(vm);
            FunctionOracle u2 = make_maxsum_oracle(vm2);
            FunctionOracle u_sum([&](const Coalition& s) {
                return maxsum_utility(vm, s) + maxsum_utility(vm2, s);
            });
            auto phi1 = full_shapley(u1, m);
            auto phi2 = full_shapley(u2, m);
            auto phi_sum = full_shapley(u_sum, m);
            for (int i = 0; i < m; ++i) {
                const std::size_t s = static_cast<std::size_t>(i);
                if (std::abs(phi_sum.phi[s] - phi1.phi[s] - phi2.phi[s]) > 1e-9) {
                    ok = false;
                    why = "additivity violated";
                    break;
                }
            }
        }
    }
    c.passed = ok;
    c.detail = ok ? "efficiency, symmetry, null player, additivity all hold" : why;
    return c;
}

// C4: aggregate_attribution equals full_shapley on the maxsum oracle.
Criterion criterion_decomposition() {
    Criterion c{4, "decomposition equals subset-enumeration Shapley (100 instances)"};
    std::mt19937_64 rng(404);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 1 + static_cast<int>(rng() % 6);
        const int n = 1 + static_cast<int>(rng() % 5);
        auto vm = random_matrix(rng, m, n);
        auto oracle = make_maxsum_oracle(vm);
        worst = std::max(
            worst, max_abs_diff(aggregate_attribution(vm).phi, full_shapley(oracle, m).phi));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |diff| = %.3g", worst);
    c.detail = buf;
    c.passed = worst <= 1e-9;
    return c;
}

// C5: MC unbiasedness, antithetic variance reduction, kernel exactness.
Criterion criterion_estimators() {
    Criterion c{5, "estimator quality (MC unbiasedness, antithetic variance, kernel exactness)"};

    // (a) mean of mc_uniform over 500 seeds within 3 standard errors.
    const Valuation fixed{0.2, 0.5, 0.8, 1.0};
    auto exact = max_game_shapley(fixed);
    const int n_seeds = 500;
    const long long n_perms = 50;
    std::vector<std::vector<double>> estimates;
    for (int seed = 0; seed < n_seeds; ++seed) {
        auto oracle = make_max_game_oracle(fixed);
        estimates.push_back(
            mc_uniform_shapley(oracle, 4, n_perms, static_cast<std::uint64_t>(seed)).phi);
    }
    bool unbiased = true;
    for (int i = 0; i < 4 && unbiased; ++i) {
        const std::size_t s = static_cast<std::size_t>(i);
        double mean = 0.0;
        for (const auto& e : estimates) mean += e[s];
        mean /= n_seeds;
        double var = 0.0;
        for (const auto& e : estimates) var += (e[s] - mean) * (e[s] - mean);
        var /= (n_seeds - 1);
        const double se = std::sqrt(var / n_seeds);
        if (std::abs(mean - exact.phi[s]) > 3.0 * se) unbiased = false;
    }

    // (b) antithetic variance <= uniform variance on >= 90% of 50 games.
    std::mt19937_64 rng(505);
    int reduced = 0;
    const int n_games = 50;
    for (int g = 0; g < n_games; ++g) {
        const int m = 3 + static_cast<int>(rng() % 3);  // 3..5
        Valuation game(random_valuation(m, rng, false));
        auto exact_phi = max_game_shapley(game).phi;
        const long long pairs = 8;
        double var_u = 0.0, var_a = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto o1 = make_max_game_oracle(game);
            auto u = mc_uniform_shapley(o1, m, 2 * pairs, seed);
            auto o2 = make_max_game_oracle(game);
            auto a = mc_antithetic_shapley(o2, m, pairs, seed);
            for (int i = 0; i < m; ++i) {
                const std::size_t s = static_cast<std::size_t>(i);
                var_u += (u.phi[s] - exact_phi[s]) * (u.phi[s] - exact_phi[s]);
                var_a += (a.phi[s] - exact_phi[s]) * (a.phi[s] - exact_phi[s]);
            }
        }
        if (var_a <= var_u) ++reduced;
    }
    const bool variance_ok = reduced >= (n_games * 9) / 10;

    // (c) kernel SHAP with ALL coalitions and zero penalty vs exact, m <= 6.
    double worst_kernel = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const int m = 2 + static_cast<int>(rng() % 5);
        Valuation game(random_valuation(m, rng, false));
        auto oracle = make_max_game_oracle(game);
        KernelShapOptions opts;
        auto approx = kernel_shap(oracle, m, opts);
        worst_kernel = std::max(worst_kernel, max_abs_diff(approx.phi, max_game_shapley(game).phi));
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "unbiased=%s, antithetic reduced variance on %d/%d games, kernel |diff|=%.3g",
                  unbiased ? "yes" : "no", reduced, n_games, worst_kernel);
    c.detail = buf;
    c.passed = unbiased && variance_ok && worst_kernel <= 1e-6;
    return c;
}

// C6: LOO assigns zero to duplicated critical sources; exact Shapley splits.
Criterion criterion_loo_witness() {
    Criterion c{6, "LOO efficiency-violation witness on values (3,3)"};
    auto oracle = make_max_game_oracle(Valuation{3.0, 3.0});
    auto loo = leave_one_out(oracle, 2);
    auto exact = max_game_shapley(Valuation{3.0, 3.0});
    c.passed = loo.phi[0] == 0.0 && loo.phi[1] == 0.0 && std::abs(exact.phi[0] - 1.5) < 1e-12 &&
               std::abs(exact.phi[1] - 1.5) < 1e-12;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "LOO = (%g, %g), exact = (%g, %g)", loo.phi[0], loo.phi[1],
                  exact.phi[0], exact.phi[1]);
    c.detail = buf;
    return c;
}

// C7: linear vs exponential oracle-call scaling and token cost on mocks.
Criterion criterion_cost_scaling() {
    Criterion c{7, "cost scaling: 2+n pipeline calls vs 2^m coalitions, token ratio < 10%"};
    const auto t0 = std::chrono::steady_clock::now();

    auto loaded = eval::load_dataset(std::string(MAXSHAPLEY_DATA_DIR) + "/demo_samples.jsonl");
    judge::OracleBundle bundle{std::make_shared<judge::MockBackend>(), judge::PromptTemplates{}};

    bool ok = true;
    std::string why;
    double worst_ratio = 0.0;
    for (const auto& sample : loaded.samples) {
        const int m = sample.num_sources();

        // MaxShapley on the reference answer (n <= 5 keypoints by fixture).
        PipelineConfig cfg;
        cfg.query_id = sample.query_id;
        cfg.shuffle_seed = 1;
        auto result =
            run_maxshapley(sample.query, sample.sources, sample.reference_answer, bundle, cfg);
        const int n = result.value_matrix->num_keypoints();
        if (n > 5) {
            ok = false;
            why = "fixture produced more than 5 keypoints";
            break;
        }
        if (result.ledger.calls() != 2 + n) {
            ok = false;
            why = "pipeline call count != 2+n";
            break;
        }

        // FullShapley over the judge utility with sorted-coalition caching.
        auto ledger = std::make_shared<judge::TokenLedger>();
        judge::JudgeOracleOptions jopts;
        jopts.ground_truth = sample.reference_answer;
        jopts.shuffle_seed = 1;
        judge::JudgeUtilityOracle inner(sample.query, sample.sources, bundle.backend,
                                        bundle.templates, ledger, jopts);
        judge::UtilityCache cache(true);
        judge::CachedOracle cached(inner, cache, sample.query_id, "FullShapley");
        full_shapley(cached, m);
        const long long expected_coalitions = (1LL << m);  // 2^6-1 non-empty plus the empty set
        if (inner.call_count() != expected_coalitions) {
            ok = false;
            why = "FullShapley distinct-coalition count != 2^m";
            break;
        }

        const double ratio = static_cast<double>(result.ledger.tokens_in()) /
                             static_cast<double>(ledger->tokens_in());
        worst_ratio = std::max(worst_ratio, ratio);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && worst_ratio >= 0.10) {
        ok = false;
        why = "token ratio above 10%";
    }
    if (ok && secs >= 10.0) {
        ok = false;
        why = "runtime above 10 s";
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "worst token ratio = %.2f%%, %.1f s%s%s",
                  100.0 * worst_ratio, secs, ok ? "" : " — ", ok ? "" : why.c_str());
    c.detail = buf;
    c.passed = ok;
    return c;
}

// C8: sorted-coalition caching vs disabled canonicalization.
Criterion criterion_cache_accounting() {
    Criterion c{8, "cache accounting: sorted keys collapse to distinct coalitions"};
    const Valuation game{0.1, 0.3, 0.5, 0.7, 0.9};
    const int m = 5;

    auto inner_calls_full = [&](bool canonicalize) {
        auto inner = make_max_game_oracle(game);
        judge::UtilityCache cache(canonicalize);
        judge::CachedOracle cached(inner, cache, "q", "FullShapley");
        full_shapley(cached, m);
        return inner.call_count();
    };
    auto inner_calls_perm = [&](bool canonicalize) {
        auto inner = make_max_game_oracle(game);
        judge::UtilityCache cache(canonicalize);
        judge::CachedOracle cached(inner, cache, "q", "perm");
        brute_force_permutation_shapley(cached, m);
        return inner.call_count();
    };

    const long long full_sorted = inner_calls_full(true);
    const long long perm_sorted = inner_calls_perm(true);
    const long long perm_unsorted = inner_calls_perm(false);

    const bool ok = full_sorted == (1LL << m) && perm_sorted == (1LL << m) &&
                    perm_unsorted >= 3 * perm_sorted;
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "FullShapley sorted=%lld (2^m=%d), permutation sorted=%lld unsorted=%lld",
                  full_sorted, 1 << m, perm_sorted, perm_unsorted);
    c.detail = buf;
    c.passed = ok;
    return c;
}

// C9: metric golden examples, including the tie-adjusted tau_b cases.
Criterion criterion_metric_goldens() {
    Criterion c{9, "metric goldens (Jaccard and tie-adjusted tau_b)"};
    bool ok = true;
    auto expect = [&](double got, double want) {
        if (std::abs(got - want) > 1e-12) ok = false;
    };
    expect(eval::jaccard_at_k({0.9, 0.8, 0.1, 0.0}, {1, 1, 0, 0}), 1.0);
    expect(eval::jaccard_at_k({0.0, 0.1, 0.8, 0.9}, {1, 1, 0, 0}), 0.0);
    expect(eval::jaccard_at_k({0.9, 0.1, 0.8, 0.0}, {1, 1, 0, 0}), 1.0 / 3.0);
    expect(eval::kendall_tau_b({1, 2, 3}, {10, 20, 30}), 1.0);
    expect(eval::kendall_tau_b({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
    expect(eval::kendall_tau_b({3, 1, 2}, {3, 2, 1}), 1.0 / 3.0);
    expect(eval::kendall_tau_b({1, 1, 2}, {1, 2, 2}), 0.5);
    c.passed = ok;
    c.detail = ok ? "all golden values reproduced exactly" : "a golden value diverged";
    return c;
}

// C10: `evaluate` under replay produces byte-identical artifacts.
Criterion criterion_determinism() {
    Criterion c{10, "evaluate --replay twice is byte-identical (records + summary)"};

    const fs::path base = fs::temp_directory_path() / "maxshapley_acceptance_c10";
    fs::remove_all(base);
    fs::create_directories(base);
    const std::string dataset = std::string(MAXSHAPLEY_DATA_DIR) + "/demo_samples.jsonl";
    const std::string cli = MAXSHAPLEY_CLI_PATH;

    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };

    const fs::path rec = base / "recorded";
    int status = run("evaluate --dataset " + dataset +
                     " --method MaxShapley --method FullShapley --method LOO --runs 2 --seed 9 "
                     "--record true --out " +
                     rec.string());
    bool ok = status == 0;
    if (ok) {
        const fs::path r1 = base / "replay1";
        const fs::path r2 = base / "replay2";
        ok = run("replay --snapshot " + rec.string() + " --out " + r1.string()) == 0 &&
             run("replay --snapshot " + rec.string() + " --out " + r2.string()) == 0;
        if (ok) {
            ok = read_file((r1 / "records.jsonl").string()) ==
                     read_file((r2 / "records.jsonl").string()) &&
                 read_file((r1 / "summary.csv").string()) ==
                     read_file((r2 / "summary.csv").string()) &&
                 !read_file((r1 / "records.jsonl").string()).empty();
            c.detail = ok ? "replayed records and summary CSV are byte-identical"
                          : "replayed artifacts differ";
        } else {
            c.detail = "replay command failed";
        }
    } else {
        c.detail = "recorded evaluate run failed";
    }
    fs::remove_all(base);
    c.passed = ok;
    return c;
}

}  // namespace

int main() {
    std::vector<std::function<Criterion()>> criteria = {
        criterion_closed_form,     criterion_table_verification, criterion_axioms,
        criterion_decomposition,   criterion_estimators,         criterion_loo_witness,
        criterion_cost_scaling,    criterion_cache_accounting,   criterion_metric_goldens,
        criterion_determinism,
    };

    int failures = 0;
    for (auto& fn : criteria) {
        Criterion c = fn();
        std::printf("C%-2d %s — %s (%s)\n", c.id, c.passed ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
        std::fflush(stdout);
        if (!c.passed) ++failures;
    }
    if (failures == 0) {
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    } else {
        std::printf("%d acceptance criteria FAILED\n", failures);
    }
    return failures;
}
