#include "alphasharpe/portfolio.hpp"
#include "alphasharpe/errors.hpp"
#include "alphasharpe/metrics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace alphasharpe {

namespace {

Eigen::VectorXd column_means(const Eigen::MatrixXd& m) {
    return m.colwise().mean();
}

// Sample covariance (T-1 divisor) plus ridge.
Eigen::MatrixXd ridged_covariance(const Eigen::MatrixXd& returns, double lambda) {
    const auto T = returns.rows();
    if (T < 2)
        throw SizeError("covariance needs at least 2 periods");
    Eigen::MatrixXd centered = returns.rowwise() - returns.colwise().mean();
    Eigen::MatrixXd sigma =
        (centered.transpose() * centered) / static_cast<double>(T - 1);
    sigma.diagonal().array() += lambda;
    return sigma;
}

WeightVector make_weight_vector(const ReturnMatrix& r, const Eigen::VectorXd& w) {
    WeightVector out;
    out.assets = r.assets;
    out.weights.assign(w.data(), w.data() + w.size());
    return out;
}

} // namespace

std::vector<int> select_top_fraction(std::span<const double> scores, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ConfigError("selection fraction must lie in (0,1]");
    std::vector<int> scored;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (std::isfinite(scores[i])) scored.push_back(static_cast<int>(i));
    if (scored.empty())
        throw EmptyUniverseError("no scored assets to select from");
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(scored.size())));
    std::stable_sort(scored.begin(), scored.end(),
                     [&](int i, int j) { return scores[static_cast<std::size_t>(i)] >
                                                scores[static_cast<std::size_t>(j)]; });
    scored.resize(k);
    std::sort(scored.begin(), scored.end());
    return scored;
}

WeightVector equal_weight(const ReturnMatrix& r, std::span<const int> subset) {
    if (subset.empty())
        throw EmptyUniverseError("equal_weight: empty subset");
    WeightVector out;
    const double w = 1.0 / static_cast<double>(subset.size());
    for (int i : subset) {
        if (i < 0 || i >= r.n_assets())
            throw ValidationError("equal_weight: asset index out of range");
        out.assets.push_back(r.assets[static_cast<std::size_t>(i)]);
        out.weights.push_back(w);
    }
    return out;
}

WeightVector alphasharpe_weights(const ReturnMatrix& r, const AlphaSharpeParams& params) {
    const int N = r.n_assets();
    if (N == 0)
        throw EmptyUniverseError("alphasharpe_weights: empty universe");
    if (!(params.lambda > 0.0))
        throw ConfigError("covariance ridge lambda must be positive");

    // Step 1: mean vector, ridged covariance, clipped inverse-covariance score.
    const Eigen::VectorXd mu = column_means(r.returns);
    const Eigen::MatrixXd sigma = ridged_covariance(r.returns, params.lambda);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw NumericalError("covariance factorization failed; increase the ridge lambda (" +
                             std::to_string(params.lambda) + ")");
    Eigen::VectorXd z = llt.solve(mu);
    Eigen::VectorXd score = z.cwiseMax(0.0);

    // Step 2: stability factor and volatility normalization.
    const double mean_score = score.mean();
    const double std_score =
        std::sqrt((score.array() - mean_score).square().sum() / static_cast<double>(N));
    Eigen::VectorXd scaled =
        (1.0 + std_score * score.array()) /
        (sigma.diagonal().array() + params.epsilon).sqrt();

    // Step 3: softmax (max-subtracted) and entropy regularization.
    Eigen::ArrayXd shifted = scaled.array() - scaled.maxCoeff();
    Eigen::ArrayXd w = shifted.exp();
    w /= w.sum();
    const double entropy = -(w * (w + params.epsilon).log()).sum();
    Eigen::ArrayXd w_prime = params.entropy_mode == EntropyMode::Scalar
                                 ? (w * std::exp(-entropy)).eval()
                                 : (w * (-entropy * w).exp()).eval();

    // Step 4: clip and renormalize onto the simplex.
    Eigen::ArrayXd clipped = w_prime.max(0.0);
    const double total = clipped.sum();
    if (!(total > 0.0))
        throw NumericalError("alphasharpe_weights: degenerate weights, all mass clipped");
    Eigen::VectorXd final_w = (clipped / total).matrix();
    return make_weight_vector(r, final_w);
}

WeightVector risk_parity_weights(const ReturnMatrix& r) {
    const int N = r.n_assets();
    if (N == 0)
        throw EmptyUniverseError("risk_parity_weights: empty universe");
    std::vector<double> inv_vol(static_cast<std::size_t>(N), 0.0);
    double total = 0.0;
    std::vector<double> column(static_cast<std::size_t>(r.n_periods()));
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < r.n_periods(); ++t) column[t] = r.returns(t, i);
        MomentSet m = moments(column);
        if (m.std > 0.0) {
            inv_vol[static_cast<std::size_t>(i)] = 1.0 / m.std;
            total += inv_vol[static_cast<std::size_t>(i)];
        }
    }
    if (total == 0.0)
        throw EmptyUniverseError("risk_parity_weights: every asset has zero variance");
    WeightVector out;
    for (int i = 0; i < N; ++i) {
        if (inv_vol[static_cast<std::size_t>(i)] == 0.0) {
            std::fprintf(stderr, "warning: risk_parity_weights: excluding zero-variance asset %s\n",
                         r.assets[static_cast<std::size_t>(i)].c_str());
            continue;
        }
        out.assets.push_back(r.assets[static_cast<std::size_t>(i)]);
        out.weights.push_back(inv_vol[static_cast<std::size_t>(i)] / total);
    }
    return out;
}

WeightVector erc_weights(const ReturnMatrix& r, double tol, int max_iter, double lambda) {
    const int N = r.n_assets();
    if (N == 0)
        throw EmptyUniverseError("erc_weights: empty universe");
    const Eigen::MatrixXd sigma = ridged_covariance(r.returns, lambda);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw NumericalError("erc_weights: covariance not positive definite after ridge");

    // Minimize 1/2 w'Σw − (1/N) Σ ln w_i coordinate-wise; the normalized
    // minimizer has equal risk contributions.
    Eigen::VectorXd w = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
    Eigen::VectorXd sigma_w = sigma * w;
    const double inv_n = 1.0 / static_cast<double>(N);

    auto contribution_spread = [&](const Eigen::VectorXd& weights) {
        Eigen::VectorXd rc = weights.cwiseProduct(sigma * weights);
        double lo = rc.minCoeff(), hi = rc.maxCoeff();
        double scale = rc.cwiseAbs().maxCoeff();
        return scale > 0.0 ? (hi - lo) / scale : 0.0;
    };

    double spread = contribution_spread(w);
    for (int iter = 0; iter < max_iter && spread > tol; ++iter) {
        for (int i = 0; i < N; ++i) {
            const double sii = sigma(i, i);
            const double bi = sigma_w(i) - sii * w(i); // cross term sum_{j!=i} σ_ij w_j
            const double wi_new = (-bi + std::sqrt(bi * bi + 4.0 * sii * inv_n)) / (2.0 * sii);
            const double delta = wi_new - w(i);
            if (delta != 0.0) {
                sigma_w += sigma.col(i) * delta;
                w(i) = wi_new;
            }
        }
        // normalized copy for the convergence check
        Eigen::VectorXd wn = w / w.sum();
        spread = contribution_spread(wn);
    }
    Eigen::VectorXd wn = w / w.sum();
    if (spread > tol) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "erc_weights: no convergence after %d iterations, contribution spread %.3e",
                      max_iter, spread);
        throw NumericalError(buf);
    }
    return make_weight_vector(r, wn);
}

std::vector<double> portfolio_log_returns(const WeightVector& w, const ReturnMatrix& r_test) {
    std::vector<int> index;
    std::vector<std::string> missing;
    for (const auto& asset : w.assets) {
        auto it = std::find(r_test.assets.begin(), r_test.assets.end(), asset);
        if (it == r_test.assets.end())
            missing.push_back(asset);
        else
            index.push_back(static_cast<int>(it - r_test.assets.begin()));
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& a : missing) list += (list.empty() ? "" : ", ") + a;
        throw ValidationError("backtest: assets absent from test data: " + list);
    }
    const int T = r_test.n_periods();
    std::vector<double> out(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        double simple = 0.0;
        for (std::size_t k = 0; k < index.size(); ++k)
            simple += w.weights[k] * std::exp(r_test.returns(t, index[k]));
        out[static_cast<std::size_t>(t)] = std::log(simple);
    }
    return out;
}

PerfReport backtest(const WeightVector& w, const ReturnMatrix& r_test, double rf) {
    if (r_test.n_periods() < 2)
        throw SizeError("backtest needs at least 2 test periods");
    if (w.assets.empty())
        throw EmptyUniverseError("backtest: empty weight vector");
    const auto series = portfolio_log_returns(w, r_test);
    PerfReport rep;
    rep.n_periods = static_cast<int>(series.size());
    rep.sharpe = sharpe(series, rf);
    rep.sharpe_annualized = rep.sharpe * std::sqrt(r_test.frequency);
    rep.mdd = max_drawdown(series);
    for (double v : series) rep.cumulative_log_return += v;
    const double annual_return =
        rep.cumulative_log_return / static_cast<double>(series.size()) * r_test.frequency;
    rep.calmar = rep.mdd > 0.0 ? annual_return / rep.mdd
                               : std::numeric_limits<double>::infinity();
    return rep;
}

std::vector<StrategyDelta> compare_strategies(
    const std::vector<std::pair<std::string, PerfReport>>& reports,
    const std::string& benchmark_name) {
    const PerfReport* bench = nullptr;
    for (const auto& [name, rep] : reports)
        if (name == benchmark_name) bench = &rep;
    if (!bench)
        throw ConfigError("benchmark '" + benchmark_name + "' not in strategy list");

    auto delta = [](double v, double b) {
        if (b == 0.0) return std::numeric_limits<double>::quiet_NaN();
        return 100.0 * (v - b) / std::abs(b);
    };
    std::vector<StrategyDelta> table;
    for (const auto& [name, rep] : reports) {
        StrategyDelta row;
        row.name = name;
        row.sharpe = rep.sharpe;
        row.calmar = rep.calmar;
        row.delta_sharpe_pct = delta(rep.sharpe, bench->sharpe);
        row.delta_calmar_pct = delta(rep.calmar, bench->calmar);
        table.push_back(row);
    }
    return table;
}

void write_weights_csv(const WeightVector& w, std::ostream& out) {
    out << "asset,weight\n";
    char buf[128];
    for (std::size_t i = 0; i < w.weights.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g\n", w.assets[i].c_str(), w.weights[i]);
        out << buf;
    }
}

namespace {
std::string pct_cell(double v) {
    if (std::isnan(v)) return "undefined";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%+.2f%%", v);
    return buf;
}
} // namespace

void write_comparison_csv(const std::vector<StrategyDelta>& table, std::ostream& out) {
    out << "strategy,sharpe,calmar,delta_sharpe_pct,delta_calmar_pct\n";
    char buf[256];
    for (const auto& row : table) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n", row.name.c_str(),
                      row.sharpe, row.calmar, row.delta_sharpe_pct, row.delta_calmar_pct);
        out << buf;
    }
}

std::string render_comparison_table(const std::vector<StrategyDelta>& table) {
    std::size_t name_w = 8;
    for (const auto& row : table) name_w = std::max(name_w, row.name.size());
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s %12s %12s %14s %14s\n", static_cast<int>(name_w),
                  "strategy", "sharpe", "calmar", "d_sharpe", "d_calmar");
    out << buf;
    for (const auto& row : table) {
        std::snprintf(buf, sizeof(buf), "%-*s %12.4f %12.4f %14s %14s\n",
                      static_cast<int>(name_w), row.name.c_str(), row.sharpe, row.calmar,
                      pct_cell(row.delta_sharpe_pct).c_str(),
                      pct_cell(row.delta_calmar_pct).c_str());
        out << buf;
    }
    return out.str();
}

} // namespace alphasharpe
