#pragma once

#include "alphasharpe/evolution.hpp"
#include "alphasharpe/portfolio.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace alphasharpe {

// Resolved run configuration: file values overridden by CLI flags, every
// field defaulted. Parses from a flat `key = value` file.
struct RunConfig {
    // data source: csv path takes precedence when set
    std::string data_csv;
    std::string data_layout = "wide"; // wide|long
    std::string synthetic_spec_path;  // JSON spec; empty = built-in default spec

    double rf = 0.0;
    double frequency = 252.0;
    double missing_threshold = 0.10;

    // fold geometry
    double holdout_frac = 0.2;
    int n_folds = 4;
    int train_len = 0;  // 0 = auto from data length
    int future_len = 0; // 0 = auto
    int stride = 0;     // 0 = auto

    std::vector<std::string> metrics = {"sharpe", "psr", "alpha_s1", "alpha_s2",
                                        "alpha_s3", "alpha_s4"};
    FitnessWeights fitness_weights;
    double ndcg_fraction = 0.25;

    std::vector<double> fractions = {0.10, 0.15, 0.20, 0.25};
    double lambda = 1e-4;
    double epsilon = 1e-8;
    EntropyMode entropy_mode = EntropyMode::Scalar;
    bool rerank_per_fraction = false; // rank once on the full training prefix by default

    // evolution
    int population_size = 24;
    int n_generations = 10;
    int top_k = 6;
    int crossover_count = 12;
    int mutation_count = 6;
    GeneratorKind generator = GeneratorKind::Builtin;
    std::string llm_url;
    std::string prompt_template;
    double llm_timeout = 30.0;

    std::string out_dir = "out";
    std::uint64_t seed = 42;
    int threads = 0; // 0 = logical cores

    void apply_file(const std::string& path);
    void apply_line(const std::string& key, const std::string& value);
    std::string resolved_text() const;
};

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitNumericalError = 4;

int cmd_score(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_backtest(const RunConfig& cfg);
int cmd_evolve(const RunConfig& cfg);
int cmd_synth(const RunConfig& cfg);

// Maps Error subclasses onto exit codes, printing to stderr.
int run_command(const std::string& name, const RunConfig& cfg);

} // namespace alphasharpe
