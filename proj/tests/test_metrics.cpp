#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "alphasharpe/errors.hpp"
#include "alphasharpe/metrics.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace alphasharpe;

namespace {

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

} // namespace

TEST_CASE("moments of a constant series use the zero-variance convention") {
    std::vector<double> x(10, 0.5); // exactly representable so the variance is exactly 0
    auto m = moments(x);
    CHECK(m.mean == 0.5);
    CHECK(m.variance == 0.0);
    CHECK(m.skewness == 0.0);
    CHECK(m.excess_kurtosis == 0.0);
    CHECK(m.n == 10);
}

TEST_CASE("symmetric three-point series has zero skew") {
    std::vector<double> x{-0.03, 0.0, 0.03};
    CHECK(moments(x).skewness == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("moments match the scalar oracle on a 50-point series") {
    auto x = oracle::random_series(101, 50);
    auto got = moments(x);
    auto want = oracle::moments(x);
    CHECK(std::abs(got.mean - want.mean) < 1e-12);
    CHECK(std::abs(got.variance - want.var) < 1e-12);
    CHECK(std::abs(got.skewness - want.skew) < 1e-12);
    CHECK(std::abs(got.excess_kurtosis - want.ex_kurt) < 1e-12);
}

TEST_CASE("moments rejects a single point") {
    std::vector<double> x{0.01};
    CHECK_THROWS_AS(moments(x), SizeError);
}

TEST_CASE("sharpe of zero excess is zero") {
    std::vector<double> x{0.01, 0.01};
    CHECK(sharpe(x, 0.01) == 0.0);
}

TEST_CASE("sharpe equals the mean-over-std ratio") {
    // mean 0.02, population std 0.01 -> ratio 2 up to the 1e-12 divisor guard
    std::vector<double> x{0.01, 0.03};
    CHECK(sharpe(x, 0.0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("sharpe matches the scalar oracle on 100 points") {
    auto x = oracle::random_series(102, 100);
    CHECK(std::abs(sharpe(x, 0.0001) - oracle::sharpe(x, 0.0001)) < 1e-12);
}

TEST_CASE("prob_sharpe is one half at the benchmark") {
    std::vector<double> x{0.01, -0.01, 0.01, -0.01}; // SR = 0
    CHECK(prob_sharpe(x, 0.0, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("positive sharpe maps above one half") {
    auto x = oracle::random_series(103, 200, 0.002, 0.01);
    double p = prob_sharpe(x, 0.0, 0.0);
    CHECK(p > 0.5);
    CHECK(p < 1.0);
}

TEST_CASE("prob_sharpe matches the formula oracle") {
    auto x = oracle::random_series(104, 100);
    CHECK(rel_err(prob_sharpe(x, 0.0, 0.0), oracle::prob_sharpe(x, 0.0, 0.0)) < 1e-10);
    CHECK(rel_err(prob_sharpe(x, 0.0005, 0.1), oracle::prob_sharpe(x, 0.0005, 0.1)) < 1e-10);
}

TEST_CASE("prob_sharpe degenerate flag stays clear on ordinary data") {
    // The radicand 1 - S*SR + (K+2)/4*SR^2 has discriminant S^2 - (K+2),
    // which sample moments keep <= 0 (Pearson bound K >= S^2 - 2), so the
    // degenerate branch is a numerical guard; assert it stays off here.
    auto x = oracle::random_series(111, 50);
    bool degenerate = true;
    prob_sharpe(x, 0.0, 0.0, &degenerate);
    CHECK_FALSE(degenerate);
}

TEST_CASE("prob_sharpe needs three points") {
    std::vector<double> x{0.01, 0.02};
    CHECK_THROWS_AS(prob_sharpe(x), SizeError);
}

TEST_CASE("downside risk vanishes without negatives") {
    std::vector<double> x{0.01, 0.0, 0.02, 0.005};
    CHECK(downside_risk(x) == 0.0);
}

TEST_CASE("downside risk matches the hand formula") {
    std::vector<double> x{-0.01, -0.01, 0.02};
    CHECK(std::abs(downside_risk(x, 1e-8) - oracle::downside_risk(x, 1e-8)) < 1e-12);
    // transcribe once by hand as well: sigma_neg = 0, sigma = pop std, N- = 2
    double sigma = oracle::pop_std(x);
    double want = (0.0 + std::sqrt(2.0) * sigma) / (2.0 + 1e-8);
    CHECK(downside_risk(x, 1e-8) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("downside risk is nearly homogeneous of degree one") {
    auto x = oracle::random_series(105, 60, 0.0, 0.02);
    std::vector<double> x2(x);
    for (auto& v : x2) v *= 2.0;
    // doubling scales both std terms by 2 while N- is unchanged
    CHECK(rel_err(downside_risk(x2), 2.0 * downside_risk(x)) < 1e-10);
}

TEST_CASE("forecast vol of a constant series is zero") {
    std::vector<double> x(16, 0.01);
    CHECK(forecast_vol(x) == 0.0);
}

TEST_CASE("forecast vol keeps the full-length divisor as printed") {
    std::vector<double> x{0.0, 0.0, 0.0, 0.04};
    // window = indices 1..3, full mean = 0.01, divisor n = 4
    double want = std::sqrt((2 * 0.01 * 0.01 + 0.03 * 0.03) / 4.0);
    CHECK(forecast_vol(x) == doctest::Approx(want).epsilon(1e-14));
    CHECK(std::abs(forecast_vol(x) - oracle::forecast_vol(x)) < 1e-15);
}

TEST_CASE("forecast vol needs four points") {
    std::vector<double> x{0.01, 0.02, 0.03};
    CHECK_THROWS_AS(forecast_vol(x), SizeError);
}

TEST_CASE("max drawdown is zero for non-negative returns") {
    std::vector<double> x{0.0, 0.01, 0.0, 0.02};
    CHECK(max_drawdown(x) == 0.0);
}

TEST_CASE("a single halving gives drawdown one half") {
    std::vector<double> x{-std::log(2.0)};
    CHECK(max_drawdown(x) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("max drawdown equals the quadratic brute force") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto x = oracle::random_series(200 + seed, 200, 0.0, 0.03);
        CHECK(std::abs(max_drawdown(x) - oracle::max_drawdown(x)) < 1e-12);
    }
}

TEST_CASE("alpha_s1 at zero variance reduces to the epsilon floor") {
    std::vector<double> x(8, 0.001); // constant, rf = value -> numerator 1
    double eps = 1e-8;
    double want = 1.0 / std::sqrt((0.0 + eps) * (0.0 + eps)); // sigma = 0 in both factors
    CHECK(alpha_s1(x, 0.001, eps) == doctest::Approx(want).epsilon(1e-12));
    CHECK(rel_err(alpha_s1(x, 0.001, eps), oracle::alpha_s1(x, 0.001, eps)) < 1e-12);
}

TEST_CASE("shifting every return by delta multiplies alpha_s1 by exp(delta)") {
    auto x = oracle::random_series(106, 120);
    std::vector<double> shifted(x);
    for (auto& v : shifted) v += 0.003;
    CHECK(rel_err(alpha_s1(shifted), std::exp(0.003) * alpha_s1(x)) < 1e-10);
}

TEST_CASE("alpha family matches the oracle transcriptions") {
    for (std::uint64_t seed = 300; seed < 310; ++seed) {
        auto x = oracle::random_series(seed, 100);
        CHECK(rel_err(alpha_s1(x, 0.0001, 1e-8), oracle::alpha_s1(x, 0.0001, 1e-8)) < 1e-10);
        CHECK(rel_err(alpha_s2(x, 0.0001, 1e-8), oracle::alpha_s2(x, 0.0001, 1e-8)) < 1e-10);
        CHECK(rel_err(alpha_s3(x, 0.0001, 1e-8), oracle::alpha_s3(x, 0.0001, 1e-8)) < 1e-10);
        CHECK(rel_err(alpha_s4(x, 0.0001, 1e-8, 0.1), oracle::alpha_s4(x, 0.0001, 1e-8, 0.1)) < 1e-10);
        CHECK(alpha_s1(x) > 0.0);
        CHECK(alpha_s2(x) > 0.0);
    }
}

TEST_CASE("adding a negative outlier strictly lowers alpha_s2") {
    auto x = oracle::random_series(107, 80, 0.001, 0.01);
    std::vector<double> worse(x);
    worse.push_back(-0.15);
    CHECK(alpha_s2(worse) < alpha_s2(x));
}

TEST_CASE("alpha_s3 equals alpha_s2 when all adjustments are neutral") {
    // skew 0, excess kurtosis 0, and no drawdown is impossible with real
    // variance, so check the ratio identity instead on a seeded series
    auto x = oracle::random_series(108, 150);
    auto m = moments(x);
    double ratio = (1.0 - m.excess_kurtosis / 12.0) * (1.0 + m.skewness / 6.0) /
                   (1.0 + max_drawdown(x));
    CHECK(rel_err(alpha_s3(x), alpha_s2(x) * ratio) < 1e-12);
}

TEST_CASE("alpha_s4 over alpha_s3 is exactly 1 or 1.1") {
    for (std::uint64_t seed = 400; seed < 420; ++seed) {
        auto x = oracle::random_series(seed, 50, (seed % 2) ? 0.002 : -0.002, 0.02);
        double ratio = alpha_s4(x) / alpha_s3(x);
        CHECK((ratio == 1.0 || std::abs(ratio - 1.1) < 1e-15));
    }
    std::vector<double> flat{0.0, 0.01, -0.01, 0.0}; // mean excess exactly 0
    CHECK(alpha_s4(flat) == alpha_s3(flat));
    std::vector<double> up{0.01, 0.02, 0.015, 0.01};
    CHECK(alpha_s4(up) == doctest::Approx(1.1 * alpha_s3(up)).epsilon(1e-15));
    std::vector<double> down{-0.01, -0.02, -0.015, -0.01};
    CHECK(alpha_s4(down) == alpha_s3(down));
}

TEST_CASE("descriptors round trip through JSON") {
    for (const auto& d : baseline_descriptors()) {
        auto back = MetricDescriptor::from_json(d.to_json());
        CHECK(back == d);
    }
    CHECK_THROWS_AS(MetricDescriptor::from_json("{"), InputError);
    CHECK_THROWS_AS(MetricDescriptor::from_json(R"({"name":"x","kind":"alpha_s9","params":{}})"),
                    ValidationError);
}

TEST_CASE("baseline registry holds the six expected metrics") {
    auto ds = baseline_descriptors();
    REQUIRE(ds.size() == 6);
    std::vector<std::string> names;
    for (const auto& d : ds) names.push_back(d.name);
    std::vector<std::string> want{"sharpe", "psr", "alpha_s1", "alpha_s2", "alpha_s3", "alpha_s4"};
    CHECK(names == want);
    CHECK(descriptor_by_name("alpha_s2").kind == MetricKind::AlphaS2);
    CHECK_THROWS_AS(descriptor_by_name("nope"), ConfigError);
}

TEST_CASE("descriptor evaluate dispatches to the scalar ops") {
    auto x = oracle::random_series(109, 64);
    CHECK(descriptor_by_name("sharpe").evaluate(x, 0.0) == sharpe(x, 0.0));
    CHECK(descriptor_by_name("alpha_s3").evaluate(x, 0.0) == alpha_s3(x, 0.0, 1e-8));
    MetricDescriptor tweaked = descriptor_by_name("alpha_s4");
    tweaked.params["bonus"] = 0.25;
    CHECK(tweaked.evaluate(x, 0.0) == alpha_s4(x, 0.0, 1e-8, 0.25));
}

TEST_CASE("single-asset universe scoring matches the scalar op") {
    ReturnMatrix r;
    r.assets = {"only"};
    auto x = oracle::random_series(110, 30);
    r.returns.resize(30, 1);
    for (int t = 0; t < 30; ++t) {
        r.returns(t, 0) = x[t];
        r.timestamps.push_back("t" + std::to_string(t));
    }
    auto scores = score_universe(r, descriptor_by_name("alpha_s2"), 0.0);
    REQUIRE(scores.size() == 1);
    CHECK(scores[0] == alpha_s2(x, 0.0, 1e-8));
}

TEST_CASE("scoring commutes with column permutation") {
    ReturnMatrix r;
    r.assets = {"a", "b", "c", "d"};
    r.returns.resize(50, 4);
    for (int i = 0; i < 4; ++i) {
        auto x = oracle::random_series(500 + i, 50);
        for (int t = 0; t < 50; ++t) r.returns(t, i) = x[t];
    }
    for (int t = 0; t < 50; ++t) r.timestamps.push_back("t" + std::to_string(t));

    ReturnMatrix p = r;
    std::vector<int> perm{2, 0, 3, 1};
    for (int i = 0; i < 4; ++i) {
        p.assets[i] = r.assets[perm[i]];
        p.returns.col(i) = r.returns.col(perm[i]);
    }
    auto s = score_universe(r, descriptor_by_name("alpha_s4"), 0.0);
    auto sp = score_universe(p, descriptor_by_name("alpha_s4"), 0.0);
    for (int i = 0; i < 4; ++i) CHECK(sp[i] == s[perm[i]]);
}

TEST_CASE("50x20 universe matches per-column scalar calls") {
    ReturnMatrix r;
    r.returns.resize(50, 20);
    for (int i = 0; i < 20; ++i) {
        auto x = oracle::random_series(600 + i, 50);
        r.assets.push_back("a" + std::to_string(i));
        for (int t = 0; t < 50; ++t) r.returns(t, i) = x[t];
    }
    for (int t = 0; t < 50; ++t) r.timestamps.push_back("t" + std::to_string(t));
    auto scores = score_universe(r, descriptor_by_name("alpha_s2"), 0.0002);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> col(r.returns.col(i).data(), r.returns.col(i).data() + 50);
        CHECK(std::abs(scores[i] - alpha_s2(col, 0.0002, 1e-8)) < 1e-14);
    }
}

TEST_CASE("short columns get NaN scores, all-short universes error") {
    ReturnMatrix r;
    r.assets = {"a"};
    r.returns.resize(3, 1);
    r.returns << 0.01, 0.02, 0.03;
    r.timestamps = {"t0", "t1", "t2"};
    // alpha_s2 needs 4 points -> sole asset unscorable
    CHECK_THROWS_AS(score_universe(r, descriptor_by_name("alpha_s2"), 0.0), EmptyUniverseError);
    // sharpe needs only 2 -> fine
    auto s = score_universe(r, descriptor_by_name("sharpe"), 0.0);
    CHECK(std::isfinite(s[0]));
}

TEST_CASE("custom scorers register and resolve by name") {
    register_custom_scorer("unit_test_shim", [](const ReturnMatrix& r, Range, Range, double) {
        return std::vector<double>(static_cast<std::size_t>(r.n_assets()), 1.0);
    });
    CHECK(find_custom_scorer("unit_test_shim") != nullptr);
    CHECK(find_custom_scorer("missing_shim") == nullptr);
}
