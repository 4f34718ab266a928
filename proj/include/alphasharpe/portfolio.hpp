#pragma once

#include "alphasharpe/types.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace alphasharpe {

// Indices of the ceil(fraction * N_scored) highest-scoring assets.
// Boundary ties break by ascending index; NaN scores are never selected.
std::vector<int> select_top_fraction(std::span<const double> scores, double fraction);

WeightVector equal_weight(const ReturnMatrix& r, std::span<const int> subset);

enum class EntropyMode {
    Scalar,  // w' = softmax(r') * e^{-H}, the factor cancels under normalization
    PerAsset // w'_i = w_i * e^{-H * w_i}, actually penalizes concentration
};

struct AlphaSharpeParams {
    double lambda = 1e-4; // covariance ridge
    double epsilon = 1e-8;
    EntropyMode entropy_mode = EntropyMode::Scalar;
};

// Inverse-covariance risk-return allocation with stability scaling,
// volatility normalization, softmax and entropy regularization.
// Input returns are treated as excess log returns.
WeightVector alphasharpe_weights(const ReturnMatrix& r, const AlphaSharpeParams& params = {});

// Inverse-volatility weights; zero-variance assets are excluded.
WeightVector risk_parity_weights(const ReturnMatrix& r);

// Equal risk contribution by cyclical coordinate descent from equal weights.
WeightVector erc_weights(const ReturnMatrix& r, double tol = 1e-8, int max_iter = 10000,
                         double lambda = 1e-4);

struct PerfReport {
    double sharpe = 0.0;
    double sharpe_annualized = 0.0;
    double calmar = 0.0; // +inf when mdd == 0
    double mdd = 0.0;
    double cumulative_log_return = 0.0;
    int n_periods = 0;
};

// Per-period rebalanced portfolio: log return ln(sum_i w_i * exp(x_it)).
PerfReport backtest(const WeightVector& w, const ReturnMatrix& r_test, double rf = 0.0);

std::vector<double> portfolio_log_returns(const WeightVector& w, const ReturnMatrix& r_test);

struct StrategyDelta {
    std::string name;
    double sharpe = 0.0;
    double calmar = 0.0;
    double delta_sharpe_pct = 0.0; // NaN marks an undefined delta
    double delta_calmar_pct = 0.0;
};

std::vector<StrategyDelta> compare_strategies(
    const std::vector<std::pair<std::string, PerfReport>>& reports,
    const std::string& benchmark_name);

void write_weights_csv(const WeightVector& w, std::ostream& out);
void write_comparison_csv(const std::vector<StrategyDelta>& table, std::ostream& out);
std::string render_comparison_table(const std::vector<StrategyDelta>& table);

} // namespace alphasharpe
