#include "alphasharpe/data.hpp"
#include "alphasharpe/errors.hpp"
#include "alphasharpe/evaluation.hpp"
#include "alphasharpe/evolution.hpp"
#include "alphasharpe/metrics.hpp"
#include "alphasharpe/portfolio.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace alphasharpe;

namespace {

ReturnMatrix matrix_from_array(const Eigen::MatrixXd& returns, double frequency) {
    ReturnMatrix r;
    r.returns = returns;
    r.frequency = frequency;
    for (int i = 0; i < r.n_assets(); ++i)
        r.assets.push_back("asset_" + std::to_string(i + 1));
    for (int t = 0; t < r.n_periods(); ++t)
        r.timestamps.push_back("t" + std::to_string(t));
    return r;
}

std::vector<double> series(const Eigen::VectorXd& x) {
    return {x.data(), x.data() + x.size()};
}

py::dict report_to_dict(const EvalReport& rep) {
    py::dict d;
    d["metric"] = rep.metric_name;
    py::list folds;
    for (const auto& f : rep.folds) {
        py::dict fd;
        fd["fold"] = f.fold_index;
        fd["spearman"] = f.spearman;
        fd["kendall"] = f.kendall;
        fd["ndcg"] = f.ndcg;
        fd["n_assets"] = f.n_assets;
        folds.append(fd);
    }
    d["folds"] = folds;
    d["spearman_mean"] = rep.spearman_agg.mean;
    d["kendall_mean"] = rep.kendall_agg.mean;
    d["ndcg_mean"] = rep.ndcg_agg.mean;
    if (rep.holdout) {
        py::dict hd;
        hd["spearman"] = rep.holdout->spearman;
        hd["kendall"] = rep.holdout->kendall;
        hd["ndcg"] = rep.holdout->ndcg;
        d["holdout"] = hd;
    }
    return d;
}

} // namespace

PYBIND11_MODULE(_alphasharpe, m) {
    m.doc() = "AlphaSharpe risk metrics, rank evaluation and portfolio allocation";

    py::register_exception<Error>(m, "AlphaSharpeError");

    // scalar metrics
    m.def("sharpe", [](const Eigen::VectorXd& x, double rf) { return sharpe(series(x), rf); },
          py::arg("x"), py::arg("rf") = 0.0);
    m.def("prob_sharpe",
          [](const Eigen::VectorXd& x, double rf, double benchmark) {
              return prob_sharpe(series(x), rf, benchmark);
          },
          py::arg("x"), py::arg("rf") = 0.0, py::arg("sr_benchmark") = 0.0);
    m.def("downside_risk",
          [](const Eigen::VectorXd& x, double eps) { return downside_risk(series(x), eps); },
          py::arg("x"), py::arg("epsilon") = 1e-8);
    m.def("forecast_vol", [](const Eigen::VectorXd& x) { return forecast_vol(series(x)); },
          py::arg("x"));
    m.def("max_drawdown", [](const Eigen::VectorXd& x) { return max_drawdown(series(x)); },
          py::arg("x"));
    m.def("alpha_s1",
          [](const Eigen::VectorXd& x, double rf, double eps) { return alpha_s1(series(x), rf, eps); },
          py::arg("x"), py::arg("rf") = 0.0, py::arg("epsilon") = 1e-8);
    m.def("alpha_s2",
          [](const Eigen::VectorXd& x, double rf, double eps) { return alpha_s2(series(x), rf, eps); },
          py::arg("x"), py::arg("rf") = 0.0, py::arg("epsilon") = 1e-8);
    m.def("alpha_s3",
          [](const Eigen::VectorXd& x, double rf, double eps) { return alpha_s3(series(x), rf, eps); },
          py::arg("x"), py::arg("rf") = 0.0, py::arg("epsilon") = 1e-8);
    m.def("alpha_s4",
          [](const Eigen::VectorXd& x, double rf, double eps, double bonus) {
              return alpha_s4(series(x), rf, eps, bonus);
          },
          py::arg("x"), py::arg("rf") = 0.0, py::arg("epsilon") = 1e-8, py::arg("bonus") = 0.1);

    // rank statistics
    m.def("spearman",
          [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
              return spearman(series(a), series(b));
          },
          py::arg("a"), py::arg("b"));
    m.def("kendall",
          [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
              return kendall(series(a), series(b));
          },
          py::arg("a"), py::arg("b"));
    m.def("ndcg_at",
          [](const Eigen::VectorXd& scores, const Eigen::VectorXd& relevance, double fraction) {
              return ndcg_at(series(scores), series(relevance), fraction);
          },
          py::arg("scores"), py::arg("relevance_source"), py::arg("fraction") = 0.25);

    // universe scoring and cross-validated evaluation
    m.def("score_universe",
          [](const Eigen::MatrixXd& returns, const std::string& metric, double rf) {
              return score_universe(matrix_from_array(returns, 252.0),
                                    descriptor_by_name(metric), rf);
          },
          py::arg("returns"), py::arg("metric"), py::arg("rf") = 0.0);
    m.def("evaluate_metric",
          [](const Eigen::MatrixXd& returns, const std::string& metric, double holdout_frac,
             int n_folds, int train_len, int future_len, int stride, double rf,
             double ndcg_fraction) {
              ReturnMatrix r = matrix_from_array(returns, 252.0);
              FoldSet folds = split_time_series(r, holdout_frac, n_folds, train_len, future_len,
                                                stride);
              return report_to_dict(
                  evaluate_metric(descriptor_by_name(metric), r, folds, rf, ndcg_fraction));
          },
          py::arg("returns"), py::arg("metric"), py::arg("holdout_frac"), py::arg("n_folds"),
          py::arg("train_len"), py::arg("future_len"), py::arg("stride"), py::arg("rf") = 0.0,
          py::arg("ndcg_fraction") = 0.25);

    // portfolio construction
    m.def("select_top_fraction",
          [](const Eigen::VectorXd& scores, double fraction) {
              return select_top_fraction(series(scores), fraction);
          },
          py::arg("scores"), py::arg("fraction"));
    m.def("alphasharpe_weights",
          [](const Eigen::MatrixXd& excess_returns, double lambda, double epsilon,
             const std::string& entropy_mode) {
              AlphaSharpeParams params;
              params.lambda = lambda;
              params.epsilon = epsilon;
              if (entropy_mode == "per_asset")
                  params.entropy_mode = EntropyMode::PerAsset;
              else if (entropy_mode != "scalar")
                  throw ConfigError("entropy_mode must be scalar or per_asset");
              return alphasharpe_weights(matrix_from_array(excess_returns, 252.0), params).weights;
          },
          py::arg("excess_returns"), py::arg("lambda_") = 1e-4, py::arg("epsilon") = 1e-8,
          py::arg("entropy_mode") = "scalar");
    m.def("risk_parity_weights",
          [](const Eigen::MatrixXd& returns) {
              return risk_parity_weights(matrix_from_array(returns, 252.0)).weights;
          },
          py::arg("returns"));
    m.def("erc_weights",
          [](const Eigen::MatrixXd& returns, double tol, int max_iter, double lambda) {
              return erc_weights(matrix_from_array(returns, 252.0), tol, max_iter, lambda).weights;
          },
          py::arg("returns"), py::arg("tol") = 1e-8, py::arg("max_iter") = 10000,
          py::arg("lambda_") = 1e-4);
    m.def("backtest",
          [](const Eigen::VectorXd& weights, const Eigen::MatrixXd& test_returns, double rf,
             double frequency) {
              ReturnMatrix r = matrix_from_array(test_returns, frequency);
              WeightVector w;
              w.assets = r.assets;
              w.weights = series(weights);
              PerfReport rep = backtest(w, r, rf);
              py::dict d;
              d["sharpe"] = rep.sharpe;
              d["sharpe_annualized"] = rep.sharpe_annualized;
              d["calmar"] = rep.calmar;
              d["mdd"] = rep.mdd;
              d["cumulative_log_return"] = rep.cumulative_log_return;
              d["n_periods"] = rep.n_periods;
              return d;
          },
          py::arg("weights"), py::arg("test_returns"), py::arg("rf") = 0.0,
          py::arg("frequency") = 252.0);

    // synthetic markets
    py::class_<RegimeSpec>(m, "RegimeSpec")
        .def(py::init<>())
        .def_readwrite("duration", &RegimeSpec::duration)
        .def_readwrite("drift_mean", &RegimeSpec::drift_mean)
        .def_readwrite("drift_dispersion", &RegimeSpec::drift_dispersion)
        .def_readwrite("vol_mean", &RegimeSpec::vol_mean)
        .def_readwrite("vol_dispersion", &RegimeSpec::vol_dispersion);
    py::class_<SyntheticSpec>(m, "SyntheticSpec")
        .def(py::init<>())
        .def_readwrite("n_assets", &SyntheticSpec::n_assets)
        .def_readwrite("n_periods", &SyntheticSpec::n_periods)
        .def_readwrite("regimes", &SyntheticSpec::regimes)
        .def_readwrite("tail_df", &SyntheticSpec::tail_df)
        .def_readwrite("seed", &SyntheticSpec::seed);
    m.def("default_synthetic_spec", &default_synthetic_spec, py::arg("seed") = 42);
    m.def("generate_synthetic",
          [](const SyntheticSpec& spec) { return generate_synthetic(spec).returns; },
          py::arg("spec"));
}
