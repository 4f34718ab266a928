#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace alphasharpe {

// Half-open index range [begin, end) on the time axis.
struct Range {
    int begin = 0;
    int end = 0;

    int length() const { return end - begin; }
    bool operator==(const Range&) const = default;
};

// Dense price panel; missing prices are NaN.
struct PriceTable {
    std::vector<std::string> timestamps; // strictly increasing ISO dates
    std::vector<std::string> assets;     // unique identifiers
    Eigen::MatrixXd prices;              // T x N, present entries > 0

    int n_periods() const { return static_cast<int>(prices.rows()); }
    int n_assets() const { return static_cast<int>(prices.cols()); }
};

// Per-period log returns, the universal input downstream.
struct ReturnMatrix {
    std::vector<std::string> timestamps; // length T
    std::vector<std::string> assets;     // length N
    Eigen::MatrixXd returns;             // T x N
    double frequency = 252.0;            // periods per year, display-only

    int n_periods() const { return static_cast<int>(returns.rows()); }
    int n_assets() const { return static_cast<int>(returns.cols()); }
};

struct Fold {
    Range train;
    Range future;
    bool operator==(const Fold&) const = default;
};

// Chronological train/future windows plus an optional terminal holdout.
struct FoldSet {
    std::vector<Fold> folds;
    std::optional<Range> holdout;
};

// One market regime of the synthetic generator.
struct RegimeSpec {
    int duration = 0;
    double drift_mean = 0.0;
    double drift_dispersion = 0.0;
    double vol_mean = 0.0;
    double vol_dispersion = 0.0;
};

struct SyntheticSpec {
    int n_assets = 0;
    int n_periods = 0;
    std::vector<RegimeSpec> regimes;
    double tail_df = 5.0; // Student-t degrees of freedom, > 2
    std::uint64_t seed = 0;
};

// Long-only portfolio weights on the simplex.
struct WeightVector {
    std::vector<std::string> assets;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
};

} // namespace alphasharpe
