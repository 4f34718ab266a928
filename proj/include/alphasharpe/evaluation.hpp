#pragma once

#include "alphasharpe/metrics.hpp"
#include "alphasharpe/types.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace alphasharpe {

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// Kendall tau-b via merge-sort inversion counting, O(n log n).
double kendall(std::span<const double> a, std::span<const double> b);

// NDCG over the top ceil(fraction * N) positions. Relevance is the min-max
// normalized relevance_source (all-equal collapses to all-ones). Score ties
// break by ascending asset index.
double ndcg_at(std::span<const double> scores, std::span<const double> relevance_source,
               double fraction);

struct FoldStats {
    int fold_index = 0;
    double spearman = 0.0;
    double kendall = 0.0;
    double ndcg = 0.0;
    int n_assets = 0;
};

struct StatAggregate {
    double mean = 0.0;
    double std = 0.0;
};

struct EvalReport {
    std::string metric_name;
    std::vector<FoldStats> folds;
    StatAggregate spearman_agg, kendall_agg, ndcg_agg;
    std::optional<FoldStats> holdout;

    std::string to_json() const;
    void write_csv(std::ostream& out) const;
};

struct FitnessWeights {
    double w_spearman = 0.4;
    double w_kendall = 0.3;
    double w_ndcg = 0.3;
};

// Cross-validated alignment of metric scores with future Sharpe ratios.
EvalReport evaluate_metric(const MetricDescriptor& m, const ReturnMatrix& r,
                           const FoldSet& folds, double rf = 0.0,
                           double ndcg_fraction = 0.25);

double fitness(const EvalReport& rep, const FitnessWeights& w = {});

} // namespace alphasharpe
