#include "alphasharpe/metrics.hpp"
#include "alphasharpe/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

namespace alphasharpe {

namespace {

constexpr double kDivGuard = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_length(std::span<const double> x, int min_n, const char* what) {
    if (static_cast<int>(x.size()) < min_n)
        throw SizeError(std::string(what) + " needs at least " + std::to_string(min_n) +
                        " points, got " + std::to_string(x.size()));
}

double population_std(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size()));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace

MomentSet moments(std::span<const double> x) {
    require_length(x, 2, "moments");
    MomentSet m;
    m.n = static_cast<int>(x.size());
    const double n = static_cast<double>(m.n);
    for (double v : x) m.mean += v;
    m.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        double d = v - m.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.variance = m2;
    m.std = std::sqrt(m2);
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

double sharpe(std::span<const double> x, double rf) {
    require_length(x, 2, "sharpe");
    double mean = 0.0;
    for (double v : x) mean += v - rf;
    mean /= static_cast<double>(x.size());
    return mean / (population_std(x) + kDivGuard);
}

double prob_sharpe(std::span<const double> x, double rf, double sr_benchmark, bool* degenerate) {
    require_length(x, 3, "prob_sharpe");
    if (degenerate) *degenerate = false;
    const double sr = sharpe(x, rf);
    const MomentSet m = moments(x);
    const double n = static_cast<double>(x.size());
    const double radicand =
        1.0 - m.skewness * sr + (m.excess_kurtosis + 2.0) / 4.0 * sr * sr;
    if (radicand <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.5;
    }
    return normal_cdf((sr - sr_benchmark) * std::sqrt(n - 1.0) / std::sqrt(radicand));
}

double downside_risk(std::span<const double> x, double eps) {
    require_length(x, 2, "downside_risk");
    std::vector<double> neg;
    for (double v : x)
        if (v < 0.0) neg.push_back(v);
    const double n_neg = static_cast<double>(neg.size());
    const double sigma_neg = neg.size() >= 2 ? population_std(neg) : 0.0;
    const double sigma_all = population_std(x);
    return (sigma_neg + std::sqrt(n_neg) * sigma_all) / (n_neg + eps);
}

double forecast_vol(std::span<const double> x) {
    require_length(x, 4, "forecast_vol");
    const int n = static_cast<int>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (int t = n / 4; t < n; ++t) ss += (x[t] - mean) * (x[t] - mean);
    return std::sqrt(ss / static_cast<double>(n)); // divisor is the full length
}

double max_drawdown(std::span<const double> x) {
    require_length(x, 1, "max_drawdown");
    double log_wealth = 0.0, log_peak = 0.0, mdd = 0.0;
    for (double v : x) {
        log_wealth += v;
        log_peak = std::max(log_peak, log_wealth);
        mdd = std::max(mdd, 1.0 - std::exp(log_wealth - log_peak));
    }
    return mdd;
}

double alpha_s1(std::span<const double> x, double rf, double eps) {
    require_length(x, 2, "alpha_s1");
    double mean = 0.0;
    for (double v : x) mean += v - rf;
    mean /= static_cast<double>(x.size());
    const double sigma = population_std(x);
    return std::exp(mean) / std::sqrt((sigma * sigma + eps) * (sigma + eps));
}

double alpha_s2(std::span<const double> x, double rf, double eps) {
    require_length(x, 4, "alpha_s2");
    double mean = 0.0;
    for (double v : x) mean += v - rf;
    mean /= static_cast<double>(x.size());
    const double sigma = population_std(x);
    return std::exp(mean) /
           (std::sqrt(sigma * sigma + eps) + downside_risk(x, eps) + forecast_vol(x));
}

double alpha_s3(std::span<const double> x, double rf, double eps) {
    const double base = alpha_s2(x, rf, eps);
    const MomentSet m = moments(x);
    const double mdd = max_drawdown(x);
    return base * (1.0 - m.excess_kurtosis / 12.0) * (1.0 + m.skewness / 6.0) / (1.0 + mdd);
}

double alpha_s4(std::span<const double> x, double rf, double eps, double bonus) {
    const double base = alpha_s3(x, rf, eps);
    double mean_excess = 0.0;
    for (double v : x) mean_excess += v - rf;
    mean_excess /= static_cast<double>(x.size());
    return mean_excess > 0.0 ? base * (1.0 + bonus) : base;
}

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::Sharpe: return "sharpe";
        case MetricKind::Psr: return "psr";
        case MetricKind::AlphaS1: return "alpha_s1";
        case MetricKind::AlphaS2: return "alpha_s2";
        case MetricKind::AlphaS3: return "alpha_s3";
        case MetricKind::AlphaS4: return "alpha_s4";
        case MetricKind::Custom: return "custom";
    }
    return "custom";
}

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "sharpe") return MetricKind::Sharpe;
    if (s == "psr") return MetricKind::Psr;
    if (s == "alpha_s1") return MetricKind::AlphaS1;
    if (s == "alpha_s2") return MetricKind::AlphaS2;
    if (s == "alpha_s3") return MetricKind::AlphaS3;
    if (s == "alpha_s4") return MetricKind::AlphaS4;
    if (s == "custom") return MetricKind::Custom;
    throw ValidationError("unknown metric kind '" + s + "'");
}

int MetricDescriptor::min_length() const {
    switch (kind) {
        case MetricKind::Sharpe: return 2;
        case MetricKind::Psr: return 3;
        case MetricKind::AlphaS1: return 2;
        case MetricKind::AlphaS2:
        case MetricKind::AlphaS3:
        case MetricKind::AlphaS4: return 4;
        case MetricKind::Custom: return 2;
    }
    return 2;
}

double MetricDescriptor::evaluate(std::span<const double> x, double rf) const {
    const double eps = param("epsilon", 1e-8);
    switch (kind) {
        case MetricKind::Sharpe: return sharpe(x, rf);
        case MetricKind::Psr: return prob_sharpe(x, rf, param("sr_benchmark", 0.0));
        case MetricKind::AlphaS1: return alpha_s1(x, rf, eps);
        case MetricKind::AlphaS2: return alpha_s2(x, rf, eps);
        case MetricKind::AlphaS3: return alpha_s3(x, rf, eps);
        case MetricKind::AlphaS4: return alpha_s4(x, rf, eps, param("bonus", 0.1));
        case MetricKind::Custom:
            throw ValidationError("custom metric '" + name + "' has no scalar form");
    }
    throw ValidationError("unhandled metric kind");
}

std::string MetricDescriptor::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["kind"] = to_string(kind);
    j["params"] = nlohmann::json::object();
    for (const auto& [k, v] : params) j["params"][k] = v;
    return j.dump();
}

MetricDescriptor MetricDescriptor::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad metric descriptor JSON: ") + e.what());
    }
    MetricDescriptor m;
    try {
        m.name = j.at("name").get<std::string>();
        m.kind = metric_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("params"))
            for (const auto& [k, v] : j.at("params").items()) {
                if (!v.is_number())
                    throw ValidationError("metric param '" + k + "' must be a number");
                m.params[k] = v.get<double>();
            }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad metric descriptor JSON: ") + e.what());
    }
    for (const auto& [k, v] : m.params)
        if (k == "epsilon" && !(v > 0.0))
            throw ValidationError("epsilon must be positive");
    return m;
}

namespace {
std::mutex g_scorer_mutex;
std::unordered_map<std::string, CustomScorer>& scorer_registry() {
    static std::unordered_map<std::string, CustomScorer> reg;
    return reg;
}
} // namespace

void register_custom_scorer(const std::string& name, CustomScorer fn) {
    std::lock_guard lock(g_scorer_mutex);
    scorer_registry()[name] = std::move(fn);
}

const CustomScorer* find_custom_scorer(const std::string& name) {
    std::lock_guard lock(g_scorer_mutex);
    auto& reg = scorer_registry();
    auto it = reg.find(name);
    return it == reg.end() ? nullptr : &it->second;
}

std::vector<MetricDescriptor> baseline_descriptors() {
    std::vector<MetricDescriptor> out;
    out.push_back({"sharpe", MetricKind::Sharpe, {}});
    out.push_back({"psr", MetricKind::Psr, {{"sr_benchmark", 0.0}}});
    out.push_back({"alpha_s1", MetricKind::AlphaS1, {{"epsilon", 1e-8}}});
    out.push_back({"alpha_s2", MetricKind::AlphaS2, {{"epsilon", 1e-8}}});
    out.push_back({"alpha_s3", MetricKind::AlphaS3, {{"epsilon", 1e-8}}});
    out.push_back({"alpha_s4", MetricKind::AlphaS4, {{"epsilon", 1e-8}, {"bonus", 0.1}}});
    return out;
}

MetricDescriptor descriptor_by_name(const std::string& name) {
    for (auto& m : baseline_descriptors())
        if (m.name == name) return m;
    throw ConfigError("unknown metric '" + name + "'");
}

std::vector<double> score_universe(const ReturnMatrix& r, const MetricDescriptor& m, double rf) {
    return score_universe(r, m, rf, Range{0, r.n_periods()});
}

std::vector<double> score_universe(const ReturnMatrix& r, const MetricDescriptor& m,
                                   double rf, Range range) {
    if (range.begin < 0 || range.end > r.n_periods() || range.begin >= range.end)
        throw SizeError("score range out of bounds");
    const int N = r.n_assets();
    const int len = range.length();
    std::vector<double> scores(static_cast<std::size_t>(N), kNaN);

    if (m.kind == MetricKind::Custom) {
        const CustomScorer* fn = find_custom_scorer(m.name);
        if (!fn)
            throw ValidationError("no custom scorer registered under '" + m.name + "'");
        // Custom scorers see no future window through this entry point.
        scores = (*fn)(r, range, Range{range.end, range.end}, rf);
        if (static_cast<int>(scores.size()) != N)
            throw ValidationError("custom scorer '" + m.name + "' returned wrong score count");
    } else if (len >= m.min_length()) {
        std::vector<double> column(static_cast<std::size_t>(len));
        for (int i = 0; i < N; ++i) {
            for (int t = 0; t < len; ++t) column[t] = r.returns(range.begin + t, i);
            scores[i] = m.evaluate(column, rf);
        }
    }

    bool any = false;
    for (double s : scores)
        if (std::isfinite(s)) any = true;
    if (!any)
        throw EmptyUniverseError("metric '" + m.name + "' produced no valid scores");
    return scores;
}

} // namespace alphasharpe
