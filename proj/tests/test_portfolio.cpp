#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "alphasharpe/errors.hpp"
#include "alphasharpe/portfolio.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace alphasharpe;

namespace {

ReturnMatrix seeded_matrix(std::uint64_t seed, int T, int N, double drift = 0.0005,
                           double vol = 0.02) {
    ReturnMatrix r;
    r.returns.resize(T, N);
    for (int i = 0; i < N; ++i) {
        auto x = oracle::random_series(seed * 1000 + i, T, drift, vol);
        r.assets.push_back("a" + std::to_string(i));
        for (int t = 0; t < T; ++t) r.returns(t, i) = x[t];
    }
    for (int t = 0; t < T; ++t) r.timestamps.push_back("t" + std::to_string(t));
    return r;
}

void check_simplex(const WeightVector& w) {
    double total = 0.0;
    for (double v : w.weights) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
}

} // namespace

TEST_CASE("top-fraction selection uses the ceiling") {
    std::vector<double> scores{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    auto sel = select_top_fraction(scores, 0.25);
    REQUIRE(sel.size() == 3); // ceil(2.5)
    CHECK(sel == std::vector<int>{7, 8, 9});
    CHECK(select_top_fraction(scores, 1.0).size() == 10);
}

TEST_CASE("boundary ties go to the lower index") {
    std::vector<double> scores{0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.9, 0.1};
    // k = 3: 0.9 first, then the tied 0.5s at indices 4 and 7 -> both fit
    auto sel = select_top_fraction(scores, 0.3);
    CHECK(sel == std::vector<int>{4, 7, 8});
    // k = 2: only one 0.5 slot remains; index 4 wins the tie against 7
    auto sel2 = select_top_fraction(scores, 0.2);
    CHECK(sel2 == std::vector<int>{4, 8});
}

TEST_CASE("unscored assets are never selected") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> scores{nan, 2.0, nan, 1.0};
    auto sel = select_top_fraction(scores, 1.0); // all scored = 2 assets
    CHECK(sel == std::vector<int>{1, 3});
    std::vector<double> none{nan, nan};
    CHECK_THROWS_AS(select_top_fraction(none, 0.5), EmptyUniverseError);
    CHECK_THROWS_AS(select_top_fraction(scores, 0.0), ConfigError);
}

TEST_CASE("equal weights split the subset uniformly") {
    auto r = seeded_matrix(1, 10, 6);
    std::vector<int> subset{0, 2, 4, 5};
    auto w = equal_weight(r, subset);
    REQUIRE(w.size() == 4);
    for (double v : w.weights) CHECK(v == 0.25);
    CHECK(w.assets == std::vector<std::string>{"a0", "a2", "a4", "a5"});
    check_simplex(w);

    std::vector<int> one{3};
    auto w1 = equal_weight(r, one);
    CHECK(w1.weights == std::vector<double>{1.0});
    CHECK_THROWS_AS(equal_weight(r, std::vector<int>{}), EmptyUniverseError);
}

TEST_CASE("mirrored twin assets get equal allocator weights") {
    // two assets built from exactly the same samples in swapped order:
    // column statistics are identical, so every step is symmetric
    auto base = oracle::random_series(42, 200, 0.001, 0.02);
    ReturnMatrix r;
    r.assets = {"x", "y"};
    r.returns.resize(200, 2);
    for (int t = 0; t < 200; ++t) {
        r.returns(t, 0) = base[t];
        r.returns(t, 1) = base[199 - t];
        r.timestamps.push_back("t" + std::to_string(t));
    }
    auto w = alphasharpe_weights(r);
    check_simplex(w);
    CHECK(std::abs(w.weights[0] - 0.5) < 1e-9);
    CHECK(std::abs(w.weights[1] - 0.5) < 1e-9);
}

TEST_CASE("nonpositive means with equal diagonal variances give equal weights") {
    // mu <= 0 elementwise clips r to zero; with equal variances the
    // volatility normalization leaves identical scores
    ReturnMatrix r;
    r.assets = {"a", "b", "c"};
    r.returns.resize(4, 3);
    // each column: mean -0.01, same deviations, zero cross products
    r.returns.col(0) << -0.03, 0.01, -0.01, -0.01;
    r.returns.col(1) << -0.01, -0.03, 0.01, -0.01;
    r.returns.col(2) << -0.01, -0.01, -0.03, 0.01;
    for (int t = 0; t < 4; ++t) r.timestamps.push_back("t" + std::to_string(t));
    auto w = alphasharpe_weights(r);
    check_simplex(w);
    for (double v : w.weights) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("allocator matches the step-by-step oracle on 5 assets") {
    auto r = seeded_matrix(7, 120, 5);
    AlphaSharpeParams p;
    auto w = alphasharpe_weights(r, p);
    auto want = oracle::alphasharpe_weights(r.returns, p.lambda, p.epsilon);
    REQUIRE(w.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(w.weights[i] - want[i]) < 1e-10);
}

TEST_CASE("scalar entropy factor cancels against plain softmax weights") {
    for (std::uint64_t seed = 60; seed < 66; ++seed) {
        auto r = seeded_matrix(seed, 150, 8);
        auto w = alphasharpe_weights(r);
        // recompute softmax(r') from the oracle's intermediate steps: the
        // published scalar entropy factor must vanish under normalization
        auto oracle_w = oracle::alphasharpe_weights(r.returns, 1e-4, 1e-8);
        for (int i = 0; i < 8; ++i) CHECK(std::abs(w.weights[i] - oracle_w[i]) < 1e-12);
    }
}

TEST_CASE("per-asset entropy mode reduces concentration") {
    auto r = seeded_matrix(71, 150, 8, 0.002, 0.02);
    AlphaSharpeParams scalar;
    AlphaSharpeParams per_asset;
    per_asset.entropy_mode = EntropyMode::PerAsset;
    auto ws = alphasharpe_weights(r, scalar);
    auto wp = alphasharpe_weights(r, per_asset);
    check_simplex(wp);
    double max_s = *std::max_element(ws.weights.begin(), ws.weights.end());
    double max_p = *std::max_element(wp.weights.begin(), wp.weights.end());
    CHECK(max_p <= max_s + 1e-12);
}

TEST_CASE("allocator rejects an empty universe") {
    ReturnMatrix r;
    r.returns.resize(10, 0);
    for (int t = 0; t < 10; ++t) r.timestamps.push_back("t" + std::to_string(t));
    CHECK_THROWS_AS(alphasharpe_weights(r), EmptyUniverseError);
}

TEST_CASE("risk parity is inverse volatility") {
    ReturnMatrix r;
    r.assets = {"lo", "hi"};
    r.returns.resize(4, 2);
    r.returns.col(0) << 0.01, -0.01, 0.01, -0.01; // sigma 0.01
    r.returns.col(1) << 0.02, -0.02, 0.02, -0.02; // sigma 0.02
    r.timestamps = {"t0", "t1", "t2", "t3"};
    auto w = risk_parity_weights(r);
    check_simplex(w);
    CHECK(w.weights[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(w.weights[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("risk parity product w_i * sigma_i is constant") {
    auto r = seeded_matrix(8, 300, 10);
    auto w = risk_parity_weights(r);
    check_simplex(w);
    std::vector<double> products;
    for (int i = 0; i < 10; ++i) {
        std::vector<double> col(r.returns.col(i).data(), r.returns.col(i).data() + 300);
        products.push_back(w.weights[i] * oracle::pop_std(col));
    }
    for (double p : products) CHECK(std::abs(p - products[0]) < 1e-12);
}

TEST_CASE("risk parity excludes zero-variance assets") {
    ReturnMatrix r;
    r.assets = {"live", "flat"};
    r.returns.resize(4, 2);
    r.returns.col(0) << 0.01, -0.01, 0.01, -0.01;
    r.returns.col(1) << 0.0, 0.0, 0.0, 0.0;
    r.timestamps = {"t0", "t1", "t2", "t3"};
    auto w = risk_parity_weights(r);
    REQUIRE(w.size() == 1);
    CHECK(w.assets[0] == "live");
    CHECK(w.weights[0] == 1.0);
}

TEST_CASE("erc equals inverse volatility for a diagonal covariance") {
    // orthogonal columns by construction
    ReturnMatrix r;
    r.assets = {"a", "b", "c"};
    r.returns.resize(4, 3);
    r.returns.col(0) << 0.02, -0.02, 0.02, -0.02;
    r.returns.col(1) << 0.01, 0.01, -0.01, -0.01;
    r.returns.col(2) << 0.03, -0.03, -0.03, 0.03;
    r.timestamps = {"t0", "t1", "t2", "t3"};
    auto erc = erc_weights(r, 1e-10, 10000, 0.0);
    auto rp = risk_parity_weights(r);
    check_simplex(erc);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(erc.weights[i] - rp.weights[i]) < 1e-7);
}

TEST_CASE("erc risk contributions equalize on correlated assets") {
    auto r = seeded_matrix(9, 250, 6);
    // induce correlation
    for (int t = 0; t < 250; ++t) {
        double common = r.returns(t, 0) * 0.5;
        for (int i = 1; i < 6; ++i) r.returns(t, i) += common;
    }
    double lambda = 1e-6;
    auto w = erc_weights(r, 1e-9, 20000, lambda);
    check_simplex(w);

    // recompute contributions w_i (Sigma w)_i from scratch
    const int T = 250, N = 6;
    Eigen::MatrixXd centered = r.returns.rowwise() - r.returns.colwise().mean();
    Eigen::MatrixXd sigma = centered.transpose() * centered / (T - 1);
    sigma += lambda * Eigen::MatrixXd::Identity(N, N);
    Eigen::VectorXd wv(N);
    for (int i = 0; i < N; ++i) wv(i) = w.weights[i];
    Eigen::VectorXd contrib = wv.cwiseProduct(sigma * wv);
    double lo = contrib.minCoeff(), hi = contrib.maxCoeff();
    CHECK((hi - lo) / hi < 1e-8);
}

TEST_CASE("symmetric universe gives equal erc weights") {
    // equal variance, equal pairwise correlation by construction:
    // x_i = common + idiosyncratic_i with identical parameters
    auto common = oracle::random_series(77, 300, 0.0, 0.01);
    ReturnMatrix r;
    r.returns.resize(300, 4);
    for (int i = 0; i < 4; ++i) {
        auto own = oracle::random_series(78 + i, 300, 0.0, 0.01);
        r.assets.push_back("a" + std::to_string(i));
        for (int t = 0; t < 300; ++t) r.returns(t, i) = common[t] + own[t];
    }
    for (int t = 0; t < 300; ++t) r.timestamps.push_back("t" + std::to_string(t));
    auto w = erc_weights(r);
    check_simplex(w);
    // not exactly equal (sample noise), but the optimizer must stay close
    for (double v : w.weights) CHECK(v == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("single-asset backtest reproduces the asset series") {
    auto r = seeded_matrix(10, 60, 3);
    WeightVector w{{"a1"}, {1.0}};
    auto series = portfolio_log_returns(w, r);
    REQUIRE(series.size() == 60);
    for (int t = 0; t < 60; ++t) CHECK(series[t] == doctest::Approx(r.returns(t, 1)).epsilon(1e-14));
}

TEST_CASE("equal weights on identical constant returns pass through") {
    ReturnMatrix r;
    r.assets = {"a", "b"};
    r.returns = Eigen::MatrixXd::Constant(5, 2, 0.007);
    for (int t = 0; t < 5; ++t) r.timestamps.push_back("t" + std::to_string(t));
    WeightVector w{{"a", "b"}, {0.5, 0.5}};
    for (double v : portfolio_log_returns(w, r)) CHECK(v == doctest::Approx(0.007).epsilon(1e-15));
}

TEST_CASE("portfolio series matches the scalar aggregation oracle") {
    auto r = seeded_matrix(11, 80, 5);
    WeightVector w{{"a0", "a1", "a2", "a3", "a4"}, {0.1, 0.3, 0.2, 0.25, 0.15}};
    auto series = portfolio_log_returns(w, r);
    for (int t = 0; t < 80; ++t) {
        double acc = 0.0;
        for (int i = 0; i < 5; ++i) acc += w.weights[i] * std::exp(r.returns(t, i));
        CHECK(std::abs(series[t] - std::log(acc)) < 1e-14);
    }
}

TEST_CASE("backtest reports sharpe, drawdown and calmar consistently") {
    auto r = seeded_matrix(12, 100, 4);
    WeightVector w{{"a0", "a1", "a2", "a3"}, {0.25, 0.25, 0.25, 0.25}};
    auto rep = backtest(w, r, 0.0001);
    auto series = portfolio_log_returns(w, r);
    CHECK(rep.n_periods == 100);
    CHECK(std::abs(rep.sharpe - oracle::sharpe(series, 0.0001)) < 1e-12);
    CHECK(std::abs(rep.mdd - oracle::max_drawdown(series)) < 1e-12);
    CHECK(rep.sharpe_annualized == doctest::Approx(rep.sharpe * std::sqrt(252.0)).epsilon(1e-12));
    double acc = 0.0;
    for (double v : series) acc += v;
    CHECK(rep.cumulative_log_return == doctest::Approx(acc).epsilon(1e-12));
    if (rep.mdd > 0.0)
        CHECK(rep.calmar ==
              doctest::Approx(oracle::mean(series) * 252.0 / rep.mdd).epsilon(1e-12));
}

TEST_CASE("backtest names assets missing from the test matrix") {
    auto r = seeded_matrix(13, 30, 2);
    WeightVector w{{"a0", "ghost"}, {0.5, 0.5}};
    try {
        backtest(w, r);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
}

TEST_CASE("backtest is invariant under asset permutation") {
    auto r = seeded_matrix(14, 90, 4);
    ReturnMatrix p = r;
    std::vector<int> perm{3, 1, 0, 2};
    for (int i = 0; i < 4; ++i) {
        p.assets[i] = r.assets[perm[i]];
        p.returns.col(i) = r.returns.col(perm[i]);
    }
    WeightVector w{{"a0", "a1", "a2", "a3"}, {0.4, 0.3, 0.2, 0.1}};
    auto a = backtest(w, r);
    auto b = backtest(w, p);
    CHECK(a.sharpe == b.sharpe);
    CHECK(a.mdd == b.mdd);
    CHECK(a.cumulative_log_return == b.cumulative_log_return);
}

TEST_CASE("strategy comparison is anchored at the benchmark") {
    PerfReport bench;
    bench.sharpe = 0.2;
    bench.calmar = 1.0;
    PerfReport better = bench;
    better.sharpe = 0.3;
    better.calmar = 1.5;
    auto table = compare_strategies({{"equal_weight", bench}, {"candidate", better}},
                                    "equal_weight");
    REQUIRE(table.size() == 2);
    CHECK(table[0].delta_sharpe_pct == doctest::Approx(0.0));
    CHECK(table[0].delta_calmar_pct == doctest::Approx(0.0));
    CHECK(table[1].delta_sharpe_pct == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(table[1].delta_calmar_pct == doctest::Approx(50.0).epsilon(1e-12));

    CHECK_THROWS_AS(compare_strategies({{"x", bench}}, "missing"), ConfigError);

    PerfReport zero;
    zero.sharpe = 0.0;
    zero.calmar = 1.0;
    auto undef = compare_strategies({{"bench", zero}, {"other", better}}, "bench");
    CHECK(std::isnan(undef[1].delta_sharpe_pct)); // undefined against a zero benchmark
}

TEST_CASE("weight and comparison serialization") {
    WeightVector w{{"a", "b"}, {0.75, 0.25}};
    std::ostringstream out;
    write_weights_csv(w, out);
    CHECK(out.str() == "asset,weight\na,0.75\nb,0.25\n");

    PerfReport bench;
    bench.sharpe = 0.2;
    bench.calmar = 1.0;
    auto table = compare_strategies({{"equal_weight", bench}}, "equal_weight");
    std::ostringstream csv;
    write_comparison_csv(table, csv);
    CHECK(csv.str().find("equal_weight") != std::string::npos);
    auto text = render_comparison_table(table);
    CHECK(text.find("0.00") != std::string::npos);
}
