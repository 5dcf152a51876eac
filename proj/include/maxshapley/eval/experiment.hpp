#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxshapley/errors.hpp"
#include "maxshapley/eval/dataset.hpp"
#include "maxshapley/eval/metrics.hpp"
#include "maxshapley/judge/cache.hpp"
#include "maxshapley/judge/judge_oracle.hpp"
#include "maxshapley/kernel_shap.hpp"
#include "maxshapley/pipeline.hpp"
#include "maxshapley/solvers.hpp"

namespace maxshapley::eval {

struct ExperimentOptions {
    std::vector<Method> methods = {Method::MaxShapleyPipeline};
    int runs = 3;
    std::uint64_t seed = 0;

    // Clipping applies to every baseline; MaxShapley only when asked.
    double clipping_threshold = 0.05;
    bool clip_maxshapley = false;

    // Pipeline knobs.
    bool distillation = true;
    int parallelism = 1;
    int keypoint_cap = 32;

    // Estimator budgets.
    long long mc_permutations = 20;
    long long mc_pairs = 10;
    std::optional<long long> kernel_coalitions;  // nullopt = ALL
    double kernel_l1_penalty = 0.0;
    int full_shapley_cap = 12;
    int brute_force_cap = 8;

    // Coalition caching for the judge-backed baselines.
    bool cache_enabled = true;
    bool cache_canonicalize = true;

    judge::EmptyCoalitionPolicy empty_policy = judge::EmptyCoalitionPolicy::Judge;
    bool ground_truth_for_baselines = true;

    // Pricing used for the cost columns; zero prices mean zero cost.
    judge::EndpointConfig pricing;
};

struct SampleRecord {
    std::string method;
    std::string query_id;
    int run = 0;
    std::uint64_t seed = 0;
    std::vector<double> phi;
    bool clipped = false;
    bool degenerate = false;
    std::optional<double> jaccard;  // empty when K = 0 (skipped and counted)
    std::optional<double> tau_b;    // vs FullShapley of the same run
    long long tokens_in = 0;
    long long tokens_out = 0;
    long long solver_calls = 0;  // coalition evaluations the solver issued
    long long oracle_evals = 0;  // distinct evaluations reaching the judge
    double cost = 0.0;
    double wall_ms = 0.0;  // never serialized into byte-compared artifacts
};

struct MethodFailure {
    std::string method;
    std::string query_id;
    int run = 0;
    std::string error;
};

struct MethodSummary {
    std::string method;
    std::optional<double> mean_jaccard, stderr_jaccard;
    std::optional<double> mean_tau_b, stderr_tau_b;
    double mean_tokens = 0.0;
    double mean_cost = 0.0;
    double mean_runtime_ms = 0.0;
    long long jaccard_skipped = 0;
    long long tau_skipped = 0;
    long long failures = 0;
};

struct ExperimentReport {
    std::vector<MethodSummary> rows;
    std::vector<SampleRecord> records;  // sorted by (method, query_id, run)
    std::vector<MethodFailure> failures;
    nlohmann::json metadata;
};

namespace detail {

struct MeanStderr {
    std::optional<double> mean, stderr_;
};

// Mean and stderr over per-run values; stderr = sample stddev / sqrt(runs).
inline MeanStderr summarize_runs(const std::vector<double>& per_run) {
    MeanStderr out;
    if (per_run.empty()) return out;
    double mean = 0.0;
    for (double v : per_run) mean += v;
    mean /= static_cast<double>(per_run.size());
    out.mean = mean;
    if (per_run.size() >= 2) {
        double ss = 0.0;
        for (double v : per_run) ss += (v - mean) * (v - mean);
        const double stddev = std::sqrt(ss / static_cast<double>(per_run.size() - 1));
        out.stderr_ = stddev / std::sqrt(static_cast<double>(per_run.size()));
    } else {
        out.stderr_ = 0.0;
    }
    return out;
}

inline std::string csv_number(const std::optional<double>& v) {
    if (!v.has_value()) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", *v);
    return buf;
}

}  // namespace detail

// Runs every method over every sample for the configured number of
// independent runs. Per-method failures (caps, oracle errors) are recorded
// and the experiment continues. Baselines score against a judge-backed
// coalition utility with sorted-coalition caching; Jaccard@K compares to the
// ground-truth labels and tau_b to the FullShapley vector of the same run.
inline ExperimentReport run_experiment(const std::vector<AnnotatedSample>& samples,
                                       const judge::OracleBundle& oracles,
                                       const ExperimentOptions& options) {
    if (options.runs < 1) throw UsageError("runs must be >= 1");
    if (options.methods.empty()) throw UsageError("at least one method is required");

    // FullShapley goes first within each (sample, run) so the others can be
    // rank-compared against it.
    std::vector<Method> ordered = options.methods;
    std::stable_partition(ordered.begin(), ordered.end(),
                          [](Method m) { return m == Method::FullShapley; });

    ExperimentReport report;

    for (const auto& sample : samples) {
        const int m = sample.num_sources();
        for (int run = 0; run < options.runs; ++run) {
            const std::uint64_t run_seed =
                combine_seed(options.seed, sample.query_id + "#run" + std::to_string(run));

            // The answer under attribution is generated once per run from the
            // full shuffled source set; its cost belongs to the search
            // pipeline, not to any attribution method.
            judge::TokenLedger search_ledger;
            std::string answer;
            try {
                std::vector<int> order(sample.sources.size());
                std::iota(order.begin(), order.end(), 0);
                std::mt19937_64 rng(combine_seed(run_seed, "answer"));
                deterministic_shuffle(order, rng);
                std::vector<std::string> texts;
                for (int id : order) texts.push_back(sample.sources[static_cast<std::size_t>(id)].text);
                answer = judge::generate_answer(sample.query, texts, *oracles.backend,
                                                oracles.templates, &search_ledger)
                             .answer;
            } catch (const Error& e) {
                for (Method method : ordered) {
                    report.failures.push_back({std::string(to_string(method)), sample.query_id,
                                               run, std::string("answer generation: ") + e.what()});
                }
                continue;
            }

            std::optional<std::vector<double>> full_shapley_phi;
            for (Method method : ordered) {
                SampleRecord rec;
                rec.method = to_string(method);
                rec.query_id = sample.query_id;
                rec.run = run;
                rec.seed = run_seed;

                const auto t0 = std::chrono::steady_clock::now();
                try {
                    if (method == Method::MaxShapleyPipeline) {
                        PipelineConfig cfg;
                        cfg.query_id = sample.query_id;
                        cfg.distillation = options.distillation;
                        cfg.parallelism = options.parallelism;
                        cfg.keypoint_cap = options.keypoint_cap;
                        cfg.shuffle_seed = combine_seed(run_seed, "pipeline");
                        if (options.clip_maxshapley) {
                            cfg.clipping_threshold = options.clipping_threshold;
                        }
                        AttributionResult res =
                            run_maxshapley(sample.query, sample.sources, answer, oracles, cfg);
                        rec.phi = res.attribution.phi;
                        rec.clipped = res.attribution.clipped;
                        rec.degenerate = res.attribution.degenerate;
                        rec.tokens_in = res.ledger.tokens_in();
                        rec.tokens_out = res.ledger.tokens_out();
                        rec.solver_calls = res.ledger.calls();
                        rec.oracle_evals = res.ledger.calls();
                        rec.cost = judge::estimate_cost(res.ledger, options.pricing);
                    } else if (method == Method::MaxGameExact) {
                        throw UsageError(
                            "MaxGameExact runs on explicit valuations, not judge oracles; use "
                            "MaxShapley for pipeline attribution");
                    } else {
                        auto ledger = std::make_shared<judge::TokenLedger>();
                        judge::JudgeOracleOptions jopts;
                        if (options.ground_truth_for_baselines && sample.reference_answer) {
                            jopts.ground_truth = sample.reference_answer;
                        }
                        jopts.shuffle_seed = combine_seed(run_seed, "judge");
                        jopts.empty_policy = options.empty_policy;
                        judge::JudgeUtilityOracle inner(sample.query, sample.sources,
                                                        oracles.backend, oracles.templates, ledger,
                                                        jopts);

                        judge::UtilityCache cache(options.cache_canonicalize);
                        std::unique_ptr<judge::CachedOracle> cached;
                        UtilityOracle* oracle = &inner;
                        if (options.cache_enabled) {
                            cached = std::make_unique<judge::CachedOracle>(
                                inner, cache, sample.query_id + "#" + std::to_string(run),
                                rec.method);
                            oracle = cached.get();
                        }

                        AttributionVector phi;
                        if (method == Method::FullShapley) {
                            phi = full_shapley(*oracle, m, options.full_shapley_cap);
                        } else if (method == Method::LOO) {
                            phi = leave_one_out(*oracle, m);
                        } else if (method == Method::MCU) {
                            phi = mc_uniform_shapley(*oracle, m, options.mc_permutations,
                                                     combine_seed(run_seed, "mcu"));
                        } else if (method == Method::MCA) {
                            phi = mc_antithetic_shapley(*oracle, m, options.mc_pairs,
                                                        combine_seed(run_seed, "mca"));
                        } else {  // KernelSHAP
                            KernelShapOptions kopts;
                            kopts.n_coalitions = options.kernel_coalitions;
                            kopts.seed = combine_seed(run_seed, "kernel");
                            kopts.l1_penalty = options.kernel_l1_penalty;
                            phi = kernel_shap(*oracle, m, kopts);
                        }
                        phi = clip_and_renormalize(phi, options.clipping_threshold);

                        rec.phi = phi.phi;
                        rec.clipped = phi.clipped;
                        rec.degenerate = phi.degenerate;
                        rec.tokens_in = ledger->tokens_in();
                        rec.tokens_out = ledger->tokens_out();
                        rec.solver_calls = oracle->call_count();
                        rec.oracle_evals = inner.call_count();
                        rec.cost = judge::estimate_cost(*ledger, options.pricing);
                    }
                } catch (const Error& e) {
                    report.failures.push_back({rec.method, sample.query_id, run, e.what()});
                    continue;
                }
                rec.wall_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();

                if (method == Method::FullShapley) full_shapley_phi = rec.phi;
                try {
                    rec.jaccard = jaccard_at_k(rec.phi, sample.relevance);
                } catch (const UndefinedMetricError&) {
                    rec.jaccard.reset();
                }
                if (full_shapley_phi.has_value()) {
                    try {
                        rec.tau_b = kendall_tau_b(rec.phi, *full_shapley_phi);
                    } catch (const UndefinedMetricError&) {
                        rec.tau_b.reset();
                    }
                }
                report.records.push_back(std::move(rec));
            }
        }
    }

    std::sort(report.records.begin(), report.records.end(),
              [](const SampleRecord& a, const SampleRecord& b) {
                  return std::tie(a.method, a.query_id, a.run) <
                         std::tie(b.method, b.query_id, b.run);
              });
    std::sort(report.failures.begin(), report.failures.end(),
              [](const MethodFailure& a, const MethodFailure& b) {
                  return std::tie(a.method, a.query_id, a.run) <
                         std::tie(b.method, b.query_id, b.run);
              });

    // Aggregate: per-run means over samples first, then mean/stderr over runs.
    const double attempts = static_cast<double>(samples.size()) * options.runs;
    for (Method method : options.methods) {
        MethodSummary row;
        row.method = to_string(method);

        std::map<int, std::vector<double>> jaccard_by_run, tau_by_run;
        long long tokens = 0;
        double cost = 0.0, wall = 0.0;
        long long n_records = 0;
        for (const auto& rec : report.records) {
            if (rec.method != row.method) continue;
            ++n_records;
            tokens += rec.tokens_in + rec.tokens_out;
            cost += rec.cost;
            wall += rec.wall_ms;
            if (rec.jaccard) {
                jaccard_by_run[rec.run].push_back(*rec.jaccard);
            } else {
                ++row.jaccard_skipped;
            }
            if (rec.tau_b) {
                tau_by_run[rec.run].push_back(*rec.tau_b);
            } else {
                ++row.tau_skipped;
            }
        }
        for (const auto& f : report.failures) {
            if (f.method == row.method) ++row.failures;
        }

        auto collapse = [](const std::map<int, std::vector<double>>& by_run) {
            std::vector<double> per_run;
            for (const auto& [_, values] : by_run) {
                double mean = 0.0;
                for (double v : values) mean += v;
                per_run.push_back(mean / static_cast<double>(values.size()));
            }
            return detail::summarize_runs(per_run);
        };
        auto j = collapse(jaccard_by_run);
        row.mean_jaccard = j.mean;
        row.stderr_jaccard = j.stderr_;
        auto t = collapse(tau_by_run);
        row.mean_tau_b = t.mean;
        row.stderr_tau_b = t.stderr_;

        row.mean_tokens = attempts > 0 ? static_cast<double>(tokens) / attempts : 0.0;
        row.mean_cost = attempts > 0 ? cost / attempts : 0.0;
        row.mean_runtime_ms = n_records > 0 ? wall / static_cast<double>(n_records) : 0.0;
        report.rows.push_back(std::move(row));
    }

    report.metadata = {
        {"samples", samples.size()},
        {"runs", options.runs},
        {"seed", options.seed},
        {"clipping_threshold", options.clipping_threshold},
        {"clip_maxshapley", options.clip_maxshapley},
        {"distillation", options.distillation},
        {"cache_enabled", options.cache_enabled},
        {"cache_canonicalize", options.cache_canonicalize},
        {"failures", report.failures.size()},
    };
    return report;
}

// --- artifact writers ---

// Summary CSV. Wall-clock means stay out of this file (and of the per-sample
// JSONL) so replayed runs are byte-identical; they are reported in the run
// metadata instead.
inline void write_summary_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write summary CSV '" + path + "'");
    out << "method,mean_jaccard,stderr_jaccard,mean_tau_b,stderr_tau_b,mean_tokens,mean_cost,"
           "jaccard_skipped,tau_skipped,failures\n";
    for (const auto& row : report.rows) {
        out << row.method << ',' << detail::csv_number(row.mean_jaccard) << ','
            << detail::csv_number(row.stderr_jaccard) << ','
            << detail::csv_number(row.mean_tau_b) << ','
            << detail::csv_number(row.stderr_tau_b) << ','
            << detail::csv_number(row.mean_tokens) << ','
            << detail::csv_number(row.mean_cost) << ',' << row.jaccard_skipped << ','
            << row.tau_skipped << ',' << row.failures << "\n";
    }
}

inline nlohmann::json record_to_json(const SampleRecord& rec) {
    nlohmann::json doc = {
        {"method", rec.method},
        {"query_id", rec.query_id},
        {"run", rec.run},
        {"seed", rec.seed},
        {"phi", rec.phi},
        {"clipped", rec.clipped},
        {"degenerate", rec.degenerate},
        {"tokens_in", rec.tokens_in},
        {"tokens_out", rec.tokens_out},
        {"solver_calls", rec.solver_calls},
        {"oracle_evals", rec.oracle_evals},
        {"cost", rec.cost},
    };
    doc["jaccard"] = rec.jaccard ? nlohmann::json(*rec.jaccard) : nlohmann::json(nullptr);
    doc["tau_b"] = rec.tau_b ? nlohmann::json(*rec.tau_b) : nlohmann::json(nullptr);
    return doc;
}

inline void write_per_sample_jsonl(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write per-sample records '" + path + "'");
    for (const auto& rec : report.records) {
        out << record_to_json(rec).dump() << "\n";
    }
}

// (tokens, quality) points per method plus the per-sample Jaccard values in
// CDF-ready sorted order.
inline void write_plot_data(const ExperimentReport& report, const std::string& path) {
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json entry = {
            {"method", row.method},
            {"mean_tokens", row.mean_tokens},
            {"mean_cost", row.mean_cost},
        };
        entry["mean_jaccard"] =
            row.mean_jaccard ? nlohmann::json(*row.mean_jaccard) : nlohmann::json(nullptr);
        entry["mean_tau_b"] =
            row.mean_tau_b ? nlohmann::json(*row.mean_tau_b) : nlohmann::json(nullptr);
        std::vector<double> jaccards;
        for (const auto& rec : report.records) {
            if (rec.method == row.method && rec.jaccard) jaccards.push_back(*rec.jaccard);
        }
        std::sort(jaccards.begin(), jaccards.end());
        entry["jaccard_cdf"] = jaccards;
        methods.push_back(std::move(entry));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write plot data '" + path + "'");
    out << nlohmann::json{{"methods", methods}}.dump(2) << "\n";
}

inline void write_failures(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write failures file '" + path + "'");
    for (const auto& f : report.failures) {
        out << nlohmann::json{{"method", f.method},
                              {"query_id", f.query_id},
                              {"run", f.run},
                              {"error", f.error}}
                   .dump()
            << "\n";
    }
}

}  // namespace maxshapley::eval
