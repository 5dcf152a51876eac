#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxshapley/errors.hpp"
#include "maxshapley/eval/experiment.hpp"
#include "maxshapley/judge/endpoint.hpp"
#include "maxshapley/types.hpp"

namespace maxshapley {

enum class OracleMode { Mock, Remote, Replay };

inline const char* to_string(OracleMode m) {
    switch (m) {
        case OracleMode::Mock: return "mock";
        case OracleMode::Remote: return "remote";
        case OracleMode::Replay: return "replay";
    }
    return "mock";
}

inline OracleMode oracle_mode_from_string(const std::string& name) {
    if (name == "mock") return OracleMode::Mock;
    if (name == "remote") return OracleMode::Remote;
    if (name == "replay") return OracleMode::Replay;
    throw UsageError("unknown oracle mode '" + name + "'; valid modes: mock, remote, replay");
}

// Fully resolved run configuration. Precedence: built-in defaults, then the
// config file, then command-line flags. The resolved form is echoed into the
// output directory so any run can be reproduced from its snapshot.
struct RunConfig {
    std::vector<std::string> methods = {"MaxShapley"};
    std::string dataset_path;
    std::string dataset_schema = "standard";
    std::string out_dir = "out";
    int runs = 3;
    std::uint64_t seed = 0;

    double clipping_threshold = 0.05;
    bool clip_maxshapley = false;

    OracleMode mode = OracleMode::Mock;
    bool record = false;            // wrap the live backend with a transcript recorder
    std::string transcript_path;    // replay source; record target defaults to out_dir
    std::string gold_phrase;        // keyword rule for the mock judge without ground truth
    std::string prompt_overrides;   // JSON file of prompt template overrides

    bool distillation = true;
    int parallelism = 1;
    int keypoint_cap = 32;

    long long mc_permutations = 20;
    long long mc_pairs = 10;
    std::optional<long long> kernel_coalitions;  // nullopt = ALL
    double kernel_l1_penalty = 0.0;
    int full_shapley_cap = 12;
    int brute_force_cap = 8;

    bool cache_enabled = true;
    bool cache_canonicalize = true;
    std::string empty_policy = "judge";  // or "zero"
    bool ground_truth_for_baselines = true;

    judge::EndpointConfig endpoint;  // remote endpoint; prices feed cost columns

    std::vector<Method> parsed_methods() const {
        std::vector<Method> out;
        out.reserve(methods.size());
        for (const auto& name : methods) out.push_back(method_from_string(name));
        return out;
    }

    void validate() const {
        (void)parsed_methods();
        if (runs < 1) throw UsageError("runs must be >= 1");
        if (clipping_threshold < 0.0) throw UsageError("clipping threshold must be >= 0");
        if (parallelism < 1) throw UsageError("parallelism must be >= 1");
        if (keypoint_cap < 1) throw UsageError("keypoint cap must be >= 1");
        if (empty_policy != "judge" && empty_policy != "zero") {
            throw UsageError("empty_policy must be 'judge' or 'zero'");
        }
        if (mode == OracleMode::Replay && transcript_path.empty()) {
            throw UsageError("replay mode requires a transcript path");
        }
        endpoint.validate();
    }

    eval::ExperimentOptions experiment_options() const {
        eval::ExperimentOptions opts;
        opts.methods = parsed_methods();
        opts.runs = runs;
        opts.seed = seed;
        opts.clipping_threshold = clipping_threshold;
        opts.clip_maxshapley = clip_maxshapley;
        opts.distillation = distillation;
        opts.parallelism = parallelism;
        opts.keypoint_cap = keypoint_cap;
        opts.mc_permutations = mc_permutations;
        opts.mc_pairs = mc_pairs;
        opts.kernel_coalitions = kernel_coalitions;
        opts.kernel_l1_penalty = kernel_l1_penalty;
        opts.full_shapley_cap = full_shapley_cap;
        opts.brute_force_cap = brute_force_cap;
        opts.cache_enabled = cache_enabled;
        opts.cache_canonicalize = cache_canonicalize;
        opts.empty_policy = empty_policy == "zero" ? judge::EmptyCoalitionPolicy::ConstantZero
                                                   : judge::EmptyCoalitionPolicy::Judge;
        opts.ground_truth_for_baselines = ground_truth_for_baselines;
        opts.pricing = endpoint;
        return opts;
    }
};

inline nlohmann::json to_json(const RunConfig& c) {
    return {
        {"methods", c.methods},
        {"dataset_path", c.dataset_path},
        {"dataset_schema", c.dataset_schema},
        {"out_dir", c.out_dir},
        {"runs", c.runs},
        {"seed", c.seed},
        {"clipping_threshold", c.clipping_threshold},
        {"clip_maxshapley", c.clip_maxshapley},
        {"mode", to_string(c.mode)},
        {"record", c.record},
        {"transcript_path", c.transcript_path},
        {"gold_phrase", c.gold_phrase},
        {"prompt_overrides", c.prompt_overrides},
        {"distillation", c.distillation},
        {"parallelism", c.parallelism},
        {"keypoint_cap", c.keypoint_cap},
        {"mc_permutations", c.mc_permutations},
        {"mc_pairs", c.mc_pairs},
        {"kernel_coalitions",
         c.kernel_coalitions ? nlohmann::json(*c.kernel_coalitions) : nlohmann::json(nullptr)},
        {"kernel_l1_penalty", c.kernel_l1_penalty},
        {"full_shapley_cap", c.full_shapley_cap},
        {"brute_force_cap", c.brute_force_cap},
        {"cache_enabled", c.cache_enabled},
        {"cache_canonicalize", c.cache_canonicalize},
        {"empty_policy", c.empty_policy},
        {"ground_truth_for_baselines", c.ground_truth_for_baselines},
        {"endpoint",
         {{"base_url", c.endpoint.base_url},
          {"model_name", c.endpoint.model_name},
          // The environment variable *name*; key material never lands here.
          {"api_key_env", c.endpoint.api_key_env},
          {"shape", judge::to_string(c.endpoint.shape)},
          {"temperature", c.endpoint.temperature},
          {"request_timeout_ms", c.endpoint.request_timeout.count()},
          {"max_retries", c.endpoint.max_retries},
          {"retry_backoff_ms", c.endpoint.retry_backoff.count()},
          {"price_in", c.endpoint.price_in},
          {"price_out", c.endpoint.price_out}}},
    };
}

inline void apply_json(RunConfig& c, const nlohmann::json& doc) {
    c.methods = doc.value("methods", c.methods);
    c.dataset_path = doc.value("dataset_path", c.dataset_path);
    c.dataset_schema = doc.value("dataset_schema", c.dataset_schema);
    c.out_dir = doc.value("out_dir", c.out_dir);
    c.runs = doc.value("runs", c.runs);
    c.seed = doc.value("seed", c.seed);
    c.clipping_threshold = doc.value("clipping_threshold", c.clipping_threshold);
    c.clip_maxshapley = doc.value("clip_maxshapley", c.clip_maxshapley);
    if (doc.contains("mode")) c.mode = oracle_mode_from_string(doc.at("mode").get<std::string>());
    c.record = doc.value("record", c.record);
    c.transcript_path = doc.value("transcript_path", c.transcript_path);
    c.gold_phrase = doc.value("gold_phrase", c.gold_phrase);
    c.prompt_overrides = doc.value("prompt_overrides", c.prompt_overrides);
    c.distillation = doc.value("distillation", c.distillation);
    c.parallelism = doc.value("parallelism", c.parallelism);
    c.keypoint_cap = doc.value("keypoint_cap", c.keypoint_cap);
    c.mc_permutations = doc.value("mc_permutations", c.mc_permutations);
    c.mc_pairs = doc.value("mc_pairs", c.mc_pairs);
    if (doc.contains("kernel_coalitions")) {
        if (doc.at("kernel_coalitions").is_null()) {
            c.kernel_coalitions.reset();
        } else {
            c.kernel_coalitions = doc.at("kernel_coalitions").get<long long>();
        }
    }
    c.kernel_l1_penalty = doc.value("kernel_l1_penalty", c.kernel_l1_penalty);
    c.full_shapley_cap = doc.value("full_shapley_cap", c.full_shapley_cap);
    c.brute_force_cap = doc.value("brute_force_cap", c.brute_force_cap);
    c.cache_enabled = doc.value("cache_enabled", c.cache_enabled);
    c.cache_canonicalize = doc.value("cache_canonicalize", c.cache_canonicalize);
    c.empty_policy = doc.value("empty_policy", c.empty_policy);
    c.ground_truth_for_baselines =
        doc.value("ground_truth_for_baselines", c.ground_truth_for_baselines);
    if (doc.contains("endpoint")) {
        const auto& e = doc.at("endpoint");
        c.endpoint.base_url = e.value("base_url", c.endpoint.base_url);
        c.endpoint.model_name = e.value("model_name", c.endpoint.model_name);
        c.endpoint.api_key_env = e.value("api_key_env", c.endpoint.api_key_env);
        if (e.contains("shape")) {
            c.endpoint.shape = judge::api_shape_from_string(e.at("shape").get<std::string>());
        }
        c.endpoint.temperature = e.value("temperature", c.endpoint.temperature);
        if (e.contains("request_timeout_ms")) {
            c.endpoint.request_timeout =
                std::chrono::milliseconds(e.at("request_timeout_ms").get<long long>());
        }
        c.endpoint.max_retries = e.value("max_retries", c.endpoint.max_retries);
        if (e.contains("retry_backoff_ms")) {
            c.endpoint.retry_backoff =
                std::chrono::milliseconds(e.at("retry_backoff_ms").get<long long>());
        }
        c.endpoint.price_in = e.value("price_in", c.endpoint.price_in);
        c.endpoint.price_out = e.value("price_out", c.endpoint.price_out);
    }
}

// Defaults overlaid with the config file (when given).
inline RunConfig load_run_config(const std::optional<std::string>& file_path) {
    RunConfig config;
    if (file_path) {
        std::ifstream in(*file_path);
        if (!in) throw UsageError("cannot open config file '" + *file_path + "'");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config file '" + *file_path + "' is not valid JSON: " + e.what());
        }
        apply_json(config, doc);
    }
    return config;
}

inline void write_config_snapshot(const RunConfig& config, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / "config.json", std::ios::trunc);
    if (!out) throw DataError("cannot write config snapshot under '" + dir + "'");
    out << to_json(config).dump(2) << "\n";
}

}  // namespace maxshapley
