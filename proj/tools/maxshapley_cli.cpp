// Command-line surface: single-query attribution, experiment runs,
// multi-method comparison, pair-table precomputation, and replay of recorded
// runs. Exit codes: 0 success, 1 usage, 2 data, 3 oracle/transport,
// 4 numeric.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maxshapley/maxshapley.hpp"

namespace fs = std::filesystem;
using namespace maxshapley;

namespace {

// Flag values land in optionals so that only flags the user actually passed
// override the config file, which in turn overrides the built-in defaults.
struct Overrides {
    std::optional<std::string> config_file;
    std::vector<std::string> methods;
    std::optional<std::string> dataset;
    std::optional<std::string> schema;
    std::optional<std::string> out_dir;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::optional<double> clipping_threshold;
    std::optional<bool> clip_maxshapley;
    std::optional<std::string> mode;
    std::optional<bool> record;
    std::optional<std::string> transcript;
    std::optional<std::string> gold_phrase;
    std::optional<std::string> prompt_overrides;
    std::optional<bool> distillation;
    std::optional<int> parallelism;
    std::optional<int> keypoint_cap;
    std::optional<long long> mc_permutations;
    std::optional<long long> mc_pairs;
    std::optional<std::string> kernel_coalitions;  // integer or "ALL"
    std::optional<double> kernel_l1;
    std::optional<int> full_cap;
    std::optional<int> brute_cap;
    std::optional<bool> cache_enabled;
    std::optional<bool> cache_canonicalize;
    std::optional<std::string> empty_policy;
    std::optional<bool> ground_truth;
    // endpoint
    std::optional<std::string> base_url, model, api_key_env, shape;
    std::optional<double> temperature, price_in, price_out;
    std::optional<long long> timeout_ms, backoff_ms;
    std::optional<int> max_retries;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_file, "JSON config file (flags override it)");
    cmd->add_option("--method", o.methods, "Attribution method (repeatable)");
    cmd->add_option("--dataset", o.dataset, "Dataset JSONL path");
    cmd->add_option("--schema", o.schema, "Dataset schema: standard | msmarco-graded");
    cmd->add_option("--out", o.out_dir, "Output directory");
    cmd->add_option("--runs", o.runs, "Independent runs");
    cmd->add_option("--seed", o.seed, "Base seed");
    cmd->add_option("--clip-threshold", o.clipping_threshold, "Clipping threshold");
    cmd->add_option("--clip-maxshapley", o.clip_maxshapley,
                    "Apply clipping to MaxShapley output too (true/false)");
    cmd->add_option("--oracle-mode", o.mode, "Oracle mode: mock | remote | replay");
    cmd->add_option("--record", o.record, "Record a transcript of all oracle calls (true/false)");
    cmd->add_option("--transcript", o.transcript, "Transcript path (replay source)");
    cmd->add_option("--gold-phrase", o.gold_phrase, "Mock judge keyword (no-ground-truth rule)");
    cmd->add_option("--prompts", o.prompt_overrides, "Prompt template override JSON");
    cmd->add_option("--distill", o.distillation, "Keypoint distillation on/off (true/false)");
    cmd->add_option("--parallelism", o.parallelism, "Concurrent relevance calls");
    cmd->add_option("--keypoint-cap", o.keypoint_cap, "Maximum keypoints kept");
    cmd->add_option("--mc-permutations", o.mc_permutations, "MCU sampled permutations");
    cmd->add_option("--mc-pairs", o.mc_pairs, "MCA sampled permutation pairs");
    cmd->add_option("--kernel-coalitions", o.kernel_coalitions,
                    "KernelSHAP coalition budget (integer or ALL)");
    cmd->add_option("--kernel-l1", o.kernel_l1, "KernelSHAP L1 penalty");
    cmd->add_option("--full-cap", o.full_cap, "FullShapley player cap");
    cmd->add_option("--brute-cap", o.brute_cap, "Brute-force permutation cap");
    cmd->add_option("--cache", o.cache_enabled, "Coalition caching on/off (true/false)");
    cmd->add_option("--cache-canonicalize", o.cache_canonicalize,
                    "Sort coalition ids in cache keys (true/false)");
    cmd->add_option("--empty-policy", o.empty_policy, "U(empty): judge | zero");
    cmd->add_option("--ground-truth", o.ground_truth,
                    "Give baselines the reference answer (true/false)");
    cmd->add_option("--base-url", o.base_url, "Remote endpoint base URL");
    cmd->add_option("--model", o.model, "Remote model name");
    cmd->add_option("--api-key-env", o.api_key_env, "Env var holding the API key");
    cmd->add_option("--api-shape", o.shape, "Wire shape: openai-chat | anthropic-messages");
    cmd->add_option("--temperature", o.temperature, "Sampling temperature");
    cmd->add_option("--timeout-ms", o.timeout_ms, "Request timeout (ms)");
    cmd->add_option("--max-retries", o.max_retries, "Transport attempts before failing");
    cmd->add_option("--backoff-ms", o.backoff_ms, "Base retry backoff (ms)");
    cmd->add_option("--price-in", o.price_in, "Price per 1K input tokens");
    cmd->add_option("--price-out", o.price_out, "Price per 1K output tokens");
}

RunConfig resolve_config(const Overrides& o) {
    RunConfig c = load_run_config(o.config_file);
    if (!o.methods.empty()) c.methods = o.methods;
    if (o.dataset) c.dataset_path = *o.dataset;
    if (o.schema) c.dataset_schema = *o.schema;
    if (o.out_dir) c.out_dir = *o.out_dir;
    if (o.runs) c.runs = *o.runs;
    if (o.seed) c.seed = *o.seed;
    if (o.clipping_threshold) c.clipping_threshold = *o.clipping_threshold;
    if (o.clip_maxshapley) c.clip_maxshapley = *o.clip_maxshapley;
    if (o.mode) c.mode = oracle_mode_from_string(*o.mode);
    if (o.record) c.record = *o.record;
    if (o.transcript) c.transcript_path = *o.transcript;
    if (o.gold_phrase) c.gold_phrase = *o.gold_phrase;
    if (o.prompt_overrides) c.prompt_overrides = *o.prompt_overrides;
    if (o.distillation) c.distillation = *o.distillation;
    if (o.parallelism) c.parallelism = *o.parallelism;
    if (o.keypoint_cap) c.keypoint_cap = *o.keypoint_cap;
    if (o.mc_permutations) c.mc_permutations = *o.mc_permutations;
    if (o.mc_pairs) c.mc_pairs = *o.mc_pairs;
    if (o.kernel_coalitions) {
        if (*o.kernel_coalitions == "ALL" || *o.kernel_coalitions == "all") {
            c.kernel_coalitions.reset();
        } else {
            try {
                c.kernel_coalitions = std::stoll(*o.kernel_coalitions);
            } catch (const std::exception&) {
                throw UsageError("--kernel-coalitions expects an integer or ALL");
            }
        }
    }
    if (o.kernel_l1) c.kernel_l1_penalty = *o.kernel_l1;
    if (o.full_cap) c.full_shapley_cap = *o.full_cap;
    if (o.brute_cap) c.brute_force_cap = *o.brute_cap;
    if (o.cache_enabled) c.cache_enabled = *o.cache_enabled;
    if (o.cache_canonicalize) c.cache_canonicalize = *o.cache_canonicalize;
    if (o.empty_policy) c.empty_policy = *o.empty_policy;
    if (o.ground_truth) c.ground_truth_for_baselines = *o.ground_truth;
    if (o.base_url) c.endpoint.base_url = *o.base_url;
    if (o.model) c.endpoint.model_name = *o.model;
    if (o.api_key_env) c.endpoint.api_key_env = *o.api_key_env;
    if (o.shape) c.endpoint.shape = judge::api_shape_from_string(*o.shape);
    if (o.temperature) c.endpoint.temperature = *o.temperature;
    if (o.timeout_ms) c.endpoint.request_timeout = std::chrono::milliseconds(*o.timeout_ms);
    if (o.max_retries) c.endpoint.max_retries = *o.max_retries;
    if (o.backoff_ms) c.endpoint.retry_backoff = std::chrono::milliseconds(*o.backoff_ms);
    if (o.price_in) c.endpoint.price_in = *o.price_in;
    if (o.price_out) c.endpoint.price_out = *o.price_out;
    c.validate();
    return c;
}

judge::OracleBundle make_bundle(const RunConfig& config) {
    std::shared_ptr<judge::ChatBackend> backend;
    switch (config.mode) {
        case OracleMode::Mock:
            backend = std::make_shared<judge::MockBackend>(config.gold_phrase);
            break;
        case OracleMode::Remote:
            backend = std::make_shared<judge::HttpChatBackend>(config.endpoint);
            break;
        case OracleMode::Replay:
            backend = std::make_shared<judge::ReplayBackend>(config.transcript_path);
            break;
    }
    if (config.record && config.mode != OracleMode::Replay) {
        fs::create_directories(config.out_dir);
        backend = std::make_shared<judge::RecordingBackend>(
            backend, (fs::path(config.out_dir) / "transcript.jsonl").string());
    }

    judge::OracleBundle bundle{std::move(backend), judge::PromptTemplates{}};
    if (!config.prompt_overrides.empty()) {
        bundle.templates.load_overrides(config.prompt_overrides);
    }
    return bundle;
}

std::vector<eval::AnnotatedSample> load_samples(const RunConfig& config) {
    if (config.dataset_path.empty()) {
        throw UsageError("this command requires a dataset (--dataset or config dataset_path)");
    }
    auto loaded = eval::load_dataset(config.dataset_path, config.dataset_schema);
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
    return std::move(loaded.samples);
}

void print_summary_table(const eval::ExperimentReport& report) {
    std::printf("%-12s %12s %12s %12s %12s %10s\n", "method", "jaccard", "tau_b", "tokens",
                "cost", "failures");
    for (const auto& row : report.rows) {
        auto fmt = [](const std::optional<double>& v) {
            char buf[32];
            if (!v.has_value()) return std::string("-");
            std::snprintf(buf, sizeof(buf), "%.4f", *v);
            return std::string(buf);
        };
        std::printf("%-12s %12s %12s %12.1f %12.6f %10lld\n", row.method.c_str(),
                    fmt(row.mean_jaccard).c_str(), fmt(row.mean_tau_b).c_str(), row.mean_tokens,
                    row.mean_cost, row.failures);
    }
}

int run_evaluate(const RunConfig& config) {
    auto samples = load_samples(config);
    fs::create_directories(config.out_dir);
    write_config_snapshot(config, config.out_dir);

    auto bundle = make_bundle(config);
    auto report = eval::run_experiment(samples, bundle, config.experiment_options());

    const fs::path out(config.out_dir);
    eval::write_summary_csv(report, (out / "summary.csv").string());
    eval::write_per_sample_jsonl(report, (out / "records.jsonl").string());
    eval::write_plot_data(report, (out / "plot_data.json").string());
    eval::write_failures(report, (out / "failures.jsonl").string());

    nlohmann::json metadata = report.metadata;
    for (const auto& row : report.rows) {
        metadata["mean_runtime_ms"][row.method] = row.mean_runtime_ms;
    }
    std::ofstream meta((out / "metadata.json").string(), std::ios::trunc);
    meta << metadata.dump(2) << "\n";

    print_summary_table(report);
    std::printf("artifacts written to %s\n", config.out_dir.c_str());
    return 0;
}

int run_attribute(const RunConfig& config, int sample_index,
                  const std::optional<std::string>& answer_flag, bool to_stdout) {
    auto samples = load_samples(config);
    if (sample_index < 0 || sample_index >= static_cast<int>(samples.size())) {
        throw UsageError("sample index " + std::to_string(sample_index) +
                         " outside the dataset (" + std::to_string(samples.size()) + " samples)");
    }
    const auto& sample = samples[static_cast<std::size_t>(sample_index)];

    fs::create_directories(config.out_dir);
    write_config_snapshot(config, config.out_dir);
    auto bundle = make_bundle(config);

    PipelineConfig cfg;
    cfg.query_id = sample.query_id;
    cfg.distillation = config.distillation;
    cfg.parallelism = config.parallelism;
    cfg.keypoint_cap = config.keypoint_cap;
    cfg.shuffle_seed = config.seed;
    if (config.clip_maxshapley) cfg.clipping_threshold = config.clipping_threshold;

    // Attribute the explicit answer if given, else the dataset's reference
    // answer, else generate one from the sources.
    std::optional<std::string> answer = answer_flag;
    if (!answer && sample.reference_answer) answer = sample.reference_answer;

    AttributionResult result = run_maxshapley(sample.query, sample.sources, answer, bundle, cfg);
    nlohmann::json doc = to_json(result);

    std::ofstream out_file(fs::path(config.out_dir) / "attribution.json", std::ios::trunc);
    out_file << doc.dump(2) << "\n";
    if (to_stdout) std::cout << doc.dump(2) << "\n";
    return 0;
}

int run_precompute(int m, const std::string& out_path) {
    auto table = PairProbabilityTable::build(m);
    table.save(out_path);
    std::printf("pair table for m=%d written to %s\n", m, out_path.c_str());
    return 0;
}

int run_replay(const std::string& snapshot_dir, const std::optional<std::string>& out_dir) {
    const fs::path snap(snapshot_dir);
    if (!fs::exists(snap / "config.json")) {
        throw UsageError("snapshot directory '" + snapshot_dir + "' has no config.json");
    }
    RunConfig config = load_run_config((snap / "config.json").string());
    config.mode = OracleMode::Replay;
    config.record = false;
    if (config.transcript_path.empty() || !fs::exists(config.transcript_path)) {
        config.transcript_path = (snap / "transcript.jsonl").string();
    }
    if (!fs::exists(config.transcript_path)) {
        throw UsageError("snapshot '" + snapshot_dir + "' has no transcript to replay");
    }
    config.out_dir = out_dir.value_or((snap / "replay").string());
    config.validate();
    return run_evaluate(config);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fair attribution of generated answers to retrieved sources via "
                 "sum-max Shapley decomposition, with exact and approximate baselines"};
    app.require_subcommand(1);

    Overrides common;

    auto* attribute = app.add_subcommand(
        "attribute", "Attribute one sample's answer to its sources (MaxShapley pipeline)");
    int sample_index = 0;
    std::optional<std::string> answer_flag;
    bool no_stdout = false;
    add_common_flags(attribute, common);
    attribute->add_option("--index", sample_index, "Sample index within the dataset");
    attribute->add_option("--answer", answer_flag, "Attribute this answer text");
    attribute->add_flag("--quiet", no_stdout, "Do not print the result JSON to stdout");

    auto* evaluate =
        app.add_subcommand("evaluate", "Run the configured methods over a dataset");
    add_common_flags(evaluate, common);

    auto* compare = app.add_subcommand(
        "compare", "Run and compare all methods over a dataset (unless --method is given)");
    add_common_flags(compare, common);

    auto* precompute =
        app.add_subcommand("precompute-table", "Write a pair-probability sidecar file");
    int table_m = 0;
    std::string table_out;
    precompute->add_option("--m", table_m, "Player count")->required();
    precompute->add_option("--out", table_out, "Output file path")->required();

    auto* replay = app.add_subcommand("replay", "Re-run an experiment from a recorded snapshot");
    std::string snapshot_dir;
    std::optional<std::string> replay_out;
    replay->add_option("--snapshot", snapshot_dir, "Directory of a previous recorded run")
        ->required();
    replay->add_option("--out", replay_out, "Output directory for the replayed run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage
    }

    try {
        if (precompute->parsed()) {
            if (table_m < 1) throw UsageError("--m must be >= 1");
            return run_precompute(table_m, table_out);
        }
        if (replay->parsed()) {
            return run_replay(snapshot_dir, replay_out);
        }

        RunConfig config = resolve_config(common);
        if (attribute->parsed()) {
            return run_attribute(config, sample_index, answer_flag, !no_stdout);
        }
        if (compare->parsed() && common.methods.empty()) {
            config.methods = {"MaxShapley", "FullShapley", "LOO", "MCU", "MCA", "KernelSHAP"};
        }
        return run_evaluate(config);
    } catch (const Error& e) {
        std::cerr << nlohmann::json{{"category", to_string(e.category())},
                                    {"message", e.what()}}
                         .dump()
                  << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"category", "numeric"}, {"message", e.what()}}.dump()
                  << "\n";
        return static_cast<int>(ErrorCategory::Numeric);
    }
}
