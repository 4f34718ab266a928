#include "alphasharpe/run_config.hpp"
#include "alphasharpe/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

using alphasharpe::RunConfig;

namespace {

void add_common_flags(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--data", cfg.data_csv, "price CSV path");
    cmd->add_option("--data-layout", cfg.data_layout, "wide|long")
        ->check(CLI::IsMember({"wide", "long"}));
    cmd->add_option("--synthetic", cfg.synthetic_spec_path, "synthetic market spec JSON");
    cmd->add_option("--rf", cfg.rf, "per-period risk-free log rate");
    cmd->add_option("--metrics", cfg.metrics, "metric names")->delimiter(',');
    cmd->add_option("--fractions", cfg.fractions, "top-quantile thresholds")->delimiter(',');
    cmd->add_option("--holdout", cfg.holdout_frac, "holdout fraction");
    cmd->add_option("--folds", cfg.n_folds, "number of CV folds");
    cmd->add_option("--train-len", cfg.train_len, "fold train length (0 = auto)");
    cmd->add_option("--future-len", cfg.future_len, "fold future length (0 = auto)");
    cmd->add_option("--stride", cfg.stride, "fold stride (0 = auto)");
    cmd->add_option("--seed", cfg.seed, "master random seed");
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = logical cores)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--frequency", cfg.frequency, "periods per year");
    cmd->add_option("--lambda", cfg.lambda, "covariance ridge");
    cmd->add_option("--epsilon", cfg.epsilon, "stability constant");
    cmd->add_option("--entropy-mode", cfg.entropy_mode, "scalar|per_asset")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, alphasharpe::EntropyMode>{
                {"scalar", alphasharpe::EntropyMode::Scalar},
                {"per_asset", alphasharpe::EntropyMode::PerAsset}},
            CLI::ignore_case));
    cmd->add_option("--generator", cfg.generator, "builtin|external")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, alphasharpe::GeneratorKind>{
                {"builtin", alphasharpe::GeneratorKind::Builtin},
                {"external", alphasharpe::GeneratorKind::External}},
            CLI::ignore_case));
    cmd->add_option("--llm-url", cfg.llm_url, "completion endpoint URL");
    cmd->add_option("--llm-timeout", cfg.llm_timeout, "endpoint timeout seconds");
    cmd->add_option("--prompt-template", cfg.prompt_template, "prompt template file");
    cmd->add_option("--generations", cfg.n_generations, "evolution generations");
    cmd->add_option("--population", cfg.population_size, "evolution population size");
    cmd->add_option("--top-k", cfg.top_k, "retained candidates per generation");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AlphaSharpe risk-metric and portfolio analytics toolkit"};
    app.require_subcommand(1);

    struct SubState {
        RunConfig cfg;
        std::string config_path;
    };
    std::map<std::string, SubState> states;
    for (const char* name : {"score", "evaluate", "backtest", "evolve", "synth"}) {
        auto* cmd = app.add_subcommand(name);
        add_common_flags(cmd, states[name].cfg, states[name].config_path);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : alphasharpe::kExitConfigError;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    SubState& st = states[name];
    // Config file first, then reapply flags so they win.
    if (!st.config_path.empty()) {
        RunConfig from_file;
        try {
            from_file.apply_file(st.config_path);
        } catch (const alphasharpe::Error& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return alphasharpe::kExitConfigError;
        }
        CLI::App* cmd = app.get_subcommands().front();
        auto keep_if_set = [&](const char* flag, auto member) {
            if (cmd->count(flag) == 0) st.cfg.*member = from_file.*member;
        };
        keep_if_set("--data", &RunConfig::data_csv);
        keep_if_set("--data-layout", &RunConfig::data_layout);
        keep_if_set("--synthetic", &RunConfig::synthetic_spec_path);
        keep_if_set("--rf", &RunConfig::rf);
        keep_if_set("--metrics", &RunConfig::metrics);
        keep_if_set("--fractions", &RunConfig::fractions);
        keep_if_set("--holdout", &RunConfig::holdout_frac);
        keep_if_set("--folds", &RunConfig::n_folds);
        keep_if_set("--train-len", &RunConfig::train_len);
        keep_if_set("--future-len", &RunConfig::future_len);
        keep_if_set("--stride", &RunConfig::stride);
        keep_if_set("--seed", &RunConfig::seed);
        keep_if_set("--threads", &RunConfig::threads);
        keep_if_set("--out", &RunConfig::out_dir);
        keep_if_set("--frequency", &RunConfig::frequency);
        keep_if_set("--lambda", &RunConfig::lambda);
        keep_if_set("--epsilon", &RunConfig::epsilon);
        keep_if_set("--entropy-mode", &RunConfig::entropy_mode);
        keep_if_set("--generator", &RunConfig::generator);
        keep_if_set("--llm-url", &RunConfig::llm_url);
        keep_if_set("--llm-timeout", &RunConfig::llm_timeout);
        keep_if_set("--prompt-template", &RunConfig::prompt_template);
        keep_if_set("--generations", &RunConfig::n_generations);
        keep_if_set("--population", &RunConfig::population_size);
        keep_if_set("--top-k", &RunConfig::top_k);
        // file-only keys
        st.cfg.fitness_weights = from_file.fitness_weights;
        st.cfg.ndcg_fraction = from_file.ndcg_fraction;
        st.cfg.missing_threshold = from_file.missing_threshold;
        st.cfg.rerank_per_fraction = from_file.rerank_per_fraction;
        st.cfg.crossover_count = from_file.crossover_count;
        st.cfg.mutation_count = from_file.mutation_count;
    }
    return alphasharpe::run_command(name, st.cfg);
}
