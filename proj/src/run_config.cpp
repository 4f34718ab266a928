#include "alphasharpe/run_config.hpp"
#include "alphasharpe/data.hpp"
#include "alphasharpe/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace alphasharpe {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("config key '" + key + "': bad number '" + value + "'");
    return v;
}

int to_int(const std::string& key, const std::string& value) {
    return static_cast<int>(to_double(key, value));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void RunConfig::apply_line(const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "data") data_csv = value;
    else if (key == "data_layout") {
        if (value != "wide" && value != "long")
            throw ConfigError("data_layout must be wide or long");
        data_layout = value;
    }
    else if (key == "synthetic") synthetic_spec_path = value;
    else if (key == "rf") rf = to_double(key, value);
    else if (key == "frequency") frequency = to_double(key, value);
    else if (key == "missing_threshold") missing_threshold = to_double(key, value);
    else if (key == "holdout") holdout_frac = to_double(key, value);
    else if (key == "folds") n_folds = to_int(key, value);
    else if (key == "train_len") train_len = to_int(key, value);
    else if (key == "future_len") future_len = to_int(key, value);
    else if (key == "stride") stride = to_int(key, value);
    else if (key == "metrics") metrics = split_list(value);
    else if (key == "w_spearman") fitness_weights.w_spearman = to_double(key, value);
    else if (key == "w_kendall") fitness_weights.w_kendall = to_double(key, value);
    else if (key == "w_ndcg") fitness_weights.w_ndcg = to_double(key, value);
    else if (key == "ndcg_fraction") ndcg_fraction = to_double(key, value);
    else if (key == "fractions") {
        fractions.clear();
        for (const auto& f : split_list(value)) fractions.push_back(to_double(key, f));
    }
    else if (key == "lambda") lambda = to_double(key, value);
    else if (key == "epsilon") epsilon = to_double(key, value);
    else if (key == "entropy_mode") {
        if (value == "scalar") entropy_mode = EntropyMode::Scalar;
        else if (value == "per_asset") entropy_mode = EntropyMode::PerAsset;
        else throw ConfigError("entropy_mode must be scalar or per_asset");
    }
    else if (key == "threshold_rank_scope") {
        if (value == "prefix") rerank_per_fraction = false;
        else if (value == "folds") rerank_per_fraction = true;
        else throw ConfigError("threshold_rank_scope must be prefix or folds");
    }
    else if (key == "population_size") population_size = to_int(key, value);
    else if (key == "generations") n_generations = to_int(key, value);
    else if (key == "top_k") top_k = to_int(key, value);
    else if (key == "crossover_count") crossover_count = to_int(key, value);
    else if (key == "mutation_count") mutation_count = to_int(key, value);
    else if (key == "generator") {
        if (value == "builtin") generator = GeneratorKind::Builtin;
        else if (value == "external") generator = GeneratorKind::External;
        else throw ConfigError("generator must be builtin or external");
    }
    else if (key == "llm_url") llm_url = value;
    else if (key == "llm_timeout") llm_timeout = to_double(key, value);
    else if (key == "prompt_template") prompt_template = value;
    else if (key == "out") out_dir = value;
    else if (key == "seed") seed = static_cast<std::uint64_t>(to_double(key, value));
    else if (key == "threads") threads = to_int(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        apply_line(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

std::string RunConfig::resolved_text() const {
    std::ostringstream out;
    out << "data = " << data_csv << "\n";
    out << "data_layout = " << data_layout << "\n";
    out << "synthetic = " << synthetic_spec_path << "\n";
    out << "rf = " << fmt(rf) << "\n";
    out << "frequency = " << fmt(frequency) << "\n";
    out << "missing_threshold = " << fmt(missing_threshold) << "\n";
    out << "holdout = " << fmt(holdout_frac) << "\n";
    out << "folds = " << n_folds << "\n";
    out << "train_len = " << train_len << "\n";
    out << "future_len = " << future_len << "\n";
    out << "stride = " << stride << "\n";
    out << "metrics = ";
    for (std::size_t i = 0; i < metrics.size(); ++i) out << (i ? "," : "") << metrics[i];
    out << "\n";
    out << "w_spearman = " << fmt(fitness_weights.w_spearman) << "\n";
    out << "w_kendall = " << fmt(fitness_weights.w_kendall) << "\n";
    out << "w_ndcg = " << fmt(fitness_weights.w_ndcg) << "\n";
    out << "ndcg_fraction = " << fmt(ndcg_fraction) << "\n";
    out << "fractions = ";
    for (std::size_t i = 0; i < fractions.size(); ++i) out << (i ? "," : "") << fmt(fractions[i]);
    out << "\n";
    out << "lambda = " << fmt(lambda) << "\n";
    out << "epsilon = " << fmt(epsilon) << "\n";
    out << "entropy_mode = " << (entropy_mode == EntropyMode::Scalar ? "scalar" : "per_asset")
        << "\n";
    out << "threshold_rank_scope = " << (rerank_per_fraction ? "folds" : "prefix") << "\n";
    out << "population_size = " << population_size << "\n";
    out << "generations = " << n_generations << "\n";
    out << "top_k = " << top_k << "\n";
    out << "crossover_count = " << crossover_count << "\n";
    out << "mutation_count = " << mutation_count << "\n";
    out << "generator = " << (generator == GeneratorKind::Builtin ? "builtin" : "external")
        << "\n";
    out << "llm_url = " << llm_url << "\n";
    out << "llm_timeout = " << fmt(llm_timeout) << "\n";
    out << "prompt_template = " << prompt_template << "\n";
    out << "out = " << out_dir << "\n";
    out << "seed = " << seed << "\n";
    out << "threads = " << threads << "\n";
    return out.str();
}

namespace {

ReturnMatrix load_input(const RunConfig& cfg) {
    ReturnMatrix r;
    if (!cfg.data_csv.empty()) {
        auto table = load_price_csv(cfg.data_csv,
                                    cfg.data_layout == "long" ? CsvLayout::Long : CsvLayout::Wide);
        r = clean(to_log_returns(table), cfg.missing_threshold);
    } else {
        SyntheticSpec spec;
        if (!cfg.synthetic_spec_path.empty()) {
            std::ifstream in(cfg.synthetic_spec_path);
            if (!in)
                throw InputError("cannot open synthetic spec '" + cfg.synthetic_spec_path + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            spec = parse_synthetic_spec_json(buf.str());
        } else {
            spec = default_synthetic_spec(cfg.seed);
        }
        r = generate_synthetic(spec);
    }
    r.frequency = cfg.frequency;
    return r;
}

FoldSet make_folds(const RunConfig& cfg, int T) {
    const int holdout_len = static_cast<int>(std::ceil(cfg.holdout_frac * T));
    const int usable = T - holdout_len;
    int future_len = cfg.future_len > 0 ? cfg.future_len : std::max(2, usable / 8);
    int train_len = cfg.train_len > 0 ? cfg.train_len : std::max(future_len, usable / 2);
    int stride = cfg.stride;
    if (stride <= 0) {
        const int remaining = usable - train_len - future_len;
        stride = cfg.n_folds > 1 ? std::max(1, remaining / (cfg.n_folds - 1)) : 1;
    }
    return split_time_series(T, cfg.holdout_frac, cfg.n_folds, train_len, future_len, stride);
}

struct OutputDirs {
    fs::path reports;
    fs::path logs;
};

OutputDirs prepare_output(const RunConfig& cfg) {
    OutputDirs dirs{fs::path(cfg.out_dir) / "reports", fs::path(cfg.out_dir) / "logs"};
    std::error_code ec;
    fs::create_directories(dirs.reports, ec);
    fs::create_directories(dirs.logs, ec);
    if (ec)
        throw ConfigError("cannot create output directory '" + cfg.out_dir + "'");
    std::ofstream resolved(fs::path(cfg.out_dir) / "config.resolved", std::ios::binary);
    resolved << cfg.resolved_text();
    return dirs;
}

std::vector<MetricDescriptor> resolve_metrics(const RunConfig& cfg) {
    std::vector<MetricDescriptor> out;
    for (const auto& name : cfg.metrics) {
        if (find_custom_scorer(name)) {
            out.push_back({name, MetricKind::Custom, {}});
        } else {
            auto m = descriptor_by_name(name);
            m.params["epsilon"] = cfg.epsilon;
            if (m.kind == MetricKind::Sharpe || m.kind == MetricKind::Psr)
                m.params.erase("epsilon");
            out.push_back(std::move(m));
        }
    }
    if (out.empty())
        throw ConfigError("no metrics configured");
    return out;
}

std::string cell(double v) {
    return std::isfinite(v) ? fmt(v) : std::string("NA");
}

} // namespace

int cmd_score(const RunConfig& cfg) {
    const auto dirs = prepare_output(cfg);
    const ReturnMatrix r = load_input(cfg);
    const auto descriptors = resolve_metrics(cfg);

    std::vector<std::vector<double>> columns;
    for (const auto& m : descriptors) columns.push_back(score_universe(r, m, cfg.rf));

    std::ofstream out(dirs.reports / "scores.csv", std::ios::binary);
    out << "asset";
    for (const auto& m : descriptors) out << "," << m.name;
    out << "\n";
    for (int i = 0; i < r.n_assets(); ++i) {
        out << r.assets[static_cast<std::size_t>(i)];
        for (const auto& col : columns) out << "," << cell(col[static_cast<std::size_t>(i)]);
        out << "\n";
    }
    return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg) {
    const auto dirs = prepare_output(cfg);
    const ReturnMatrix r = load_input(cfg);
    const FoldSet folds = make_folds(cfg, r.n_periods());
    const auto descriptors = resolve_metrics(cfg);

    std::ofstream summary(dirs.reports / "evaluation_summary.csv", std::ios::binary);
    summary << "metric,row,spearman,kendall,ndcg\n";
    int succeeded = 0;
    double sharpe_holdout_spearman = std::numeric_limits<double>::quiet_NaN();
    double s2_holdout_spearman = std::numeric_limits<double>::quiet_NaN();
    for (const auto& m : descriptors) {
        try {
            EvalReport rep = evaluate_metric(m, r, folds, cfg.rf, cfg.ndcg_fraction);
            std::ofstream js(dirs.reports / ("eval_" + m.name + ".json"), std::ios::binary);
            js << rep.to_json() << "\n";
            std::ofstream csv(dirs.reports / ("eval_" + m.name + ".csv"), std::ios::binary);
            rep.write_csv(csv);
            summary << m.name << ",agg," << cell(rep.spearman_agg.mean) << ","
                    << cell(rep.kendall_agg.mean) << "," << cell(rep.ndcg_agg.mean) << "\n";
            if (rep.holdout) {
                summary << m.name << ",holdout," << cell(rep.holdout->spearman) << ","
                        << cell(rep.holdout->kendall) << "," << cell(rep.holdout->ndcg) << "\n";
                if (m.name == "sharpe") sharpe_holdout_spearman = rep.holdout->spearman;
                if (m.name == "alpha_s2") s2_holdout_spearman = rep.holdout->spearman;
            }
            ++succeeded;
        } catch (const Error& e) {
            std::cerr << "metric " << m.name << " failed: " << e.what() << "\n";
            summary << m.name << ",agg,NA,NA,NA\n";
        }
    }
    if (std::isfinite(sharpe_holdout_spearman) && std::isfinite(s2_holdout_spearman)) {
        std::ofstream note(dirs.reports / "summary.txt", std::ios::binary);
        note << "Indicative comparison only (single synthetic/holdout sample, not a claim):\n";
        note << "alpha_s2 holdout spearman = " << fmt(s2_holdout_spearman)
             << ", sharpe holdout spearman = " << fmt(sharpe_holdout_spearman) << "\n";
        note << "alpha_s2 "
             << (s2_holdout_spearman > sharpe_holdout_spearman ? "exceeds" : "does not exceed")
             << " sharpe on this run.\n";
    }
    if (succeeded == 0)
        throw DataError("every metric evaluation failed");
    return kExitOk;
}

int cmd_backtest(const RunConfig& cfg) {
    const auto dirs = prepare_output(cfg);
    const ReturnMatrix r = load_input(cfg);
    if (!(cfg.holdout_frac > 0.0))
        throw ConfigError("backtest requires a holdout (holdout > 0)");
    const FoldSet folds = make_folds(cfg, r.n_periods());
    const Range train_range{0, folds.holdout->begin};
    const ReturnMatrix train = slice_rows(r, train_range);
    const ReturnMatrix test = slice_rows(r, *folds.holdout);
    const auto descriptors = resolve_metrics(cfg);

    // Top-fraction equal-weight portfolios per ranking metric.
    std::ofstream thr(dirs.reports / "threshold_comparison.csv", std::ios::binary);
    thr << "metric,fraction,sharpe,calmar,delta_sharpe_pct_vs_sharpe_metric\n";
    for (double fraction : cfg.fractions) {
        std::vector<std::pair<std::string, PerfReport>> rows;
        for (const auto& m : descriptors) {
            PerfReport rep;
            if (cfg.rerank_per_fraction) {
                // rank within each CV fold, average the fold statistics
                double s = 0.0, c = 0.0, mdd = 0.0, cum = 0.0;
                int n = 0;
                for (const auto& fold : folds.folds) {
                    auto scores = score_universe(r, m, cfg.rf, fold.train);
                    auto subset = select_top_fraction(scores, fraction);
                    auto w = equal_weight(r, subset);
                    PerfReport pr = backtest(w, slice_rows(r, fold.future), cfg.rf);
                    s += pr.sharpe;
                    c += std::isfinite(pr.calmar) ? pr.calmar : 0.0;
                    mdd += pr.mdd;
                    cum += pr.cumulative_log_return;
                    ++n;
                }
                rep.sharpe = s / n;
                rep.calmar = c / n;
                rep.mdd = mdd / n;
                rep.cumulative_log_return = cum / n;
            } else {
                auto scores = score_universe(train, m, cfg.rf);
                auto subset = select_top_fraction(scores, fraction);
                rep = backtest(equal_weight(r, subset), test, cfg.rf);
            }
            rows.emplace_back(m.name, rep);
        }
        const PerfReport* bench = nullptr;
        for (const auto& [name, rep] : rows)
            if (name == "sharpe") bench = &rep;
        for (const auto& [name, rep] : rows) {
            double delta = std::numeric_limits<double>::quiet_NaN();
            if (bench && bench->sharpe != 0.0)
                delta = 100.0 * (rep.sharpe - bench->sharpe) / std::abs(bench->sharpe);
            thr << name << "," << fmt(fraction) << "," << cell(rep.sharpe) << ","
                << cell(rep.calmar) << "," << cell(delta) << "\n";
        }
    }

    // Allocator strategies against the equal-weighted benchmark.
    ReturnMatrix excess_train = train;
    excess_train.returns.array() -= cfg.rf;
    std::vector<int> all(static_cast<std::size_t>(r.n_assets()));
    for (int i = 0; i < r.n_assets(); ++i) all[static_cast<std::size_t>(i)] = i;

    std::vector<std::pair<std::string, PerfReport>> allocator_rows;
    allocator_rows.emplace_back("equal_weighted", backtest(equal_weight(r, all), test, cfg.rf));
    allocator_rows.emplace_back("risk_parity", backtest(risk_parity_weights(train), test, cfg.rf));
    allocator_rows.emplace_back(
        "equal_risk_contribution",
        backtest(erc_weights(train, 1e-8, 10000, cfg.lambda), test, cfg.rf));
    AlphaSharpeParams params{cfg.lambda, cfg.epsilon, cfg.entropy_mode};
    allocator_rows.emplace_back("alphasharpe",
                                backtest(alphasharpe_weights(excess_train, params), test, cfg.rf));

    auto table = compare_strategies(allocator_rows, "equal_weighted");
    std::ofstream alloc_csv(dirs.reports / "allocator_comparison.csv", std::ios::binary);
    write_comparison_csv(table, alloc_csv);
    std::ofstream alloc_txt(dirs.reports / "allocator_comparison.txt", std::ios::binary);
    alloc_txt << render_comparison_table(table);

    // Allocator weights for inspection.
    std::ofstream wcsv(dirs.reports / "alphasharpe_weights.csv", std::ios::binary);
    write_weights_csv(alphasharpe_weights(excess_train, params), wcsv);
    return kExitOk;
}

int cmd_evolve(const RunConfig& cfg) {
    const auto dirs = prepare_output(cfg);
    const ReturnMatrix r = load_input(cfg);
    const FoldSet folds = make_folds(cfg, r.n_periods());

    EvolutionConfig ecfg;
    ecfg.population_size = cfg.population_size;
    ecfg.n_generations = cfg.n_generations;
    ecfg.top_k = cfg.top_k;
    ecfg.crossover_count = cfg.crossover_count;
    ecfg.mutation_count = cfg.mutation_count;
    ecfg.weights = cfg.fitness_weights;
    ecfg.seed = cfg.seed;
    ecfg.generator = cfg.generator;
    ecfg.external.url = cfg.llm_url;
    ecfg.external.prompt_template_path = cfg.prompt_template;
    ecfg.external.timeout_seconds = cfg.llm_timeout;
    ecfg.rf = cfg.rf;
    ecfg.ndcg_fraction = cfg.ndcg_fraction;

    // Extra seeds: any configured metric with a registered custom scorer.
    std::vector<MetricDescriptor> extra;
    for (const auto& name : cfg.metrics)
        if (find_custom_scorer(name)) extra.push_back({name, MetricKind::Custom, {}});

    EvolutionLog log = evolve(r, folds, ecfg, extra);
    for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";

    std::ofstream jsonl(dirs.logs / "evolution.jsonl", std::ios::binary);
    jsonl << log.to_jsonl();

    const Candidate& best = log.best();
    nlohmann::json summary;
    summary["best_id"] = best.id;
    summary["best_descriptor"] = nlohmann::json::parse(best.descriptor.to_json());
    summary["fitness"] = best.fitness.value_or(0.0);
    if (best.eval && best.eval->holdout)
        summary["holdout"] = {{"spearman", best.eval->holdout->spearman},
                              {"kendall", best.eval->holdout->kendall},
                              {"ndcg", best.eval->holdout->ndcg}};
    std::ofstream out(dirs.reports / "evolution_summary.json", std::ios::binary);
    out << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_synth(const RunConfig& cfg) {
    const auto dirs = prepare_output(cfg);
    SyntheticSpec spec;
    if (!cfg.synthetic_spec_path.empty()) {
        std::ifstream in(cfg.synthetic_spec_path);
        if (!in)
            throw InputError("cannot open synthetic spec '" + cfg.synthetic_spec_path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        spec = parse_synthetic_spec_json(buf.str());
    } else {
        spec = default_synthetic_spec(cfg.seed);
    }
    ReturnMatrix r = generate_synthetic(spec);
    r.frequency = cfg.frequency;
    save_returns_csv(r, (fs::path(cfg.out_dir) / "synthetic_returns.csv").string());
    save_returns_cache(r, (fs::path(cfg.out_dir) / "synthetic_returns.asrm").string());
    std::ofstream sj(fs::path(cfg.out_dir) / "synthetic_spec.json", std::ios::binary);
    sj << synthetic_spec_to_json(spec) << "\n";
    return kExitOk;
}

int run_command(const std::string& name, const RunConfig& cfg) {
    try {
        if (name == "score") return cmd_score(cfg);
        if (name == "evaluate") return cmd_evaluate(cfg);
        if (name == "backtest") return cmd_backtest(cfg);
        if (name == "evolve") return cmd_evolve(cfg);
        if (name == "synth") return cmd_synth(cfg);
        throw ConfigError("unknown command '" + name + "'");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    }
}

} // namespace alphasharpe
