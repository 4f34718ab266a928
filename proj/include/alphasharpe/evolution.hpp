#pragma once

#include "alphasharpe/evaluation.hpp"
#include "alphasharpe/metrics.hpp"
#include "alphasharpe/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace alphasharpe {

struct Candidate {
    std::string id;
    MetricDescriptor descriptor;
    std::vector<std::string> lineage; // parent ids
    int generation = 0;
    std::optional<double> fitness;
    std::optional<EvalReport> eval;
};

enum class GeneratorMode { Crossover, Mutation };

struct GeneratorRequest {
    GeneratorMode mode = GeneratorMode::Mutation;
    std::vector<std::pair<MetricDescriptor, double>> parents; // descriptor + fitness
    std::string guidance;
};

struct ExternalGeneratorConfig {
    std::string url;                  // http://host:port/path
    std::string prompt_template_path; // placeholders {{parents_json}}, {{mode}}, {{guidance}}
    std::string token_env = "ALPHASHARPE_LLM_TOKEN";
    double timeout_seconds = 30.0;
    int max_retries = 3;
};

enum class GeneratorKind { Builtin, External };

struct EvolutionConfig {
    int population_size = 24;
    int n_generations = 10;
    int top_k = 6;
    int crossover_count = 12;
    int mutation_count = 6;
    FitnessWeights weights;
    std::uint64_t seed = 0;
    GeneratorKind generator = GeneratorKind::Builtin;
    ExternalGeneratorConfig external;
    double rf = 0.0;
    double ndcg_fraction = 0.25;
};

// Deterministic offline stand-in for the LLM generator. Crossover blends
// parent parameters (uniform pick per parameter, kind from the fittest
// parent); mutation rescales one parameter or steps the metric kind.
MetricDescriptor builtin_generate(const GeneratorRequest& req, std::mt19937_64& rng);

// Render the prompt template; {{parents_json}} expands to an array of
// {descriptor, fitness} objects.
std::string render_prompt(const std::string& template_text, const GeneratorRequest& req);

// POST the rendered prompt to the completion endpoint and parse the response
// as a MetricDescriptor JSON. Invalid responses are retried, then rejected.
MetricDescriptor external_generate(const GeneratorRequest& req,
                                   const ExternalGeneratorConfig& cfg);

struct EvolutionLog {
    std::vector<Candidate> candidates;              // creation order
    std::vector<std::vector<std::string>> retained; // ids kept after each generation (index 0 = seeds)
    std::vector<std::string> warnings;

    // Candidates sorted best-first; ties by lower generation then id.
    std::vector<const Candidate*> ranking() const;
    const Candidate& best() const;
    std::string to_jsonl() const;
};

// Iterative crossover -> mutation -> scoring -> selection over metric
// candidates. Seeds with the registered baselines plus extra_seed.
EvolutionLog evolve(const ReturnMatrix& r, const FoldSet& folds, const EvolutionConfig& cfg,
                    const std::vector<MetricDescriptor>& extra_seed = {});

} // namespace alphasharpe
