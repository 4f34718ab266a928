#pragma once

#include "alphasharpe/types.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace alphasharpe {

struct MomentSet {
    double mean = 0.0;
    double variance = 0.0; // population (divide by n)
    double std = 0.0;
    double skewness = 0.0;        // m3 / m2^1.5, 0 when variance is 0
    double excess_kurtosis = 0.0; // m4 / m2^2 - 3, 0 when variance is 0
    int n = 0;
};

struct RiskComponents {
    double dr = 0.0;  // downside risk
    double v = 0.0;   // forecast volatility
    double mdd = 0.0; // maximum drawdown in [0,1)
    int n_neg = 0;
};

MomentSet moments(std::span<const double> x);

// mean(x - rf) / (std(x) + 1e-12)
double sharpe(std::span<const double> x, double rf = 0.0);

// Probability the true Sharpe exceeds the benchmark, adjusting for sample
// size, skewness and kurtosis. Returns 0.5 when the variance estimate of the
// Sharpe statistic degenerates (radicand <= 0); *degenerate reports that case.
double prob_sharpe(std::span<const double> x, double rf = 0.0, double sr_benchmark = 0.0,
                   bool* degenerate = nullptr);

// DR = (std(neg) + sqrt(count_neg) * std(all)) / (count_neg + eps)
double downside_risk(std::span<const double> x, double eps = 1e-8);

// Dispersion of the last three quarters of the window around the full-sample
// mean, with the full length n as divisor.
double forecast_vol(std::span<const double> x);

// Largest peak-to-trough fractional loss of the compounded wealth curve.
double max_drawdown(std::span<const double> x);

double alpha_s1(std::span<const double> x, double rf = 0.0, double eps = 1e-8);
double alpha_s2(std::span<const double> x, double rf = 0.0, double eps = 1e-8);
double alpha_s3(std::span<const double> x, double rf = 0.0, double eps = 1e-8);
double alpha_s4(std::span<const double> x, double rf = 0.0, double eps = 1e-8, double bonus = 0.1);

enum class MetricKind { Sharpe, Psr, AlphaS1, AlphaS2, AlphaS3, AlphaS4, Custom };

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& s);

// Named, parameterized scoring function; the unit of evaluation and evolution.
struct MetricDescriptor {
    std::string name;
    MetricKind kind = MetricKind::Sharpe;
    std::map<std::string, double> params; // epsilon, bonus, sr_benchmark

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    // Minimum series length the metric accepts.
    int min_length() const;

    // Apply to one return series; Custom kinds are not scalar-evaluable.
    double evaluate(std::span<const double> x, double rf) const;

    std::string to_json() const;
    static MetricDescriptor from_json(const std::string& text);

    bool operator==(const MetricDescriptor&) const = default;
};

// Custom universe scorers, keyed by descriptor name. A scorer sees the full
// matrix and the fold geometry, so test shims can peek at the future window.
using CustomScorer = std::function<std::vector<double>(
    const ReturnMatrix&, Range train, Range future, double rf)>;

void register_custom_scorer(const std::string& name, CustomScorer fn);
const CustomScorer* find_custom_scorer(const std::string& name);

// The six registered baselines: sharpe, psr, alpha_s1..alpha_s4.
std::vector<MetricDescriptor> baseline_descriptors();
MetricDescriptor descriptor_by_name(const std::string& name);

// Per-asset scores over rows [range.begin, range.end); NaN marks assets whose
// column fails the metric's preconditions.
std::vector<double> score_universe(const ReturnMatrix& r, const MetricDescriptor& m,
                                   double rf = 0.0);
std::vector<double> score_universe(const ReturnMatrix& r, const MetricDescriptor& m,
                                   double rf, Range range);

} // namespace alphasharpe
