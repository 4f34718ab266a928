#include "alphasharpe/evaluation.hpp"
#include "alphasharpe/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace alphasharpe {

namespace {

void require_pair(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size())
        throw SizeError(std::string(what) + ": length mismatch " + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()));
    if (a.size() < 3)
        throw SizeError(std::string(what) + " needs at least 3 points, got " +
                        std::to_string(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
            throw ValidationError(std::string(what) + ": non-finite entry at index " +
                                  std::to_string(i));
}

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

// Merge-sort inversion count; sorts v in place.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch,
                               std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += mid - i;
            scratch[k++] = v[j++];
        } else {
            scratch[k++] = v[i++];
        }
    }
    while (i < mid) scratch[k++] = v[i++];
    while (j < hi) scratch[k++] = v[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

std::uint64_t tie_pair_count(std::vector<double> sorted_values) {
    std::uint64_t pairs = 0;
    std::size_t i = 0;
    const std::size_t n = sorted_values.size();
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted_values[j + 1] == sorted_values[i]) ++j;
        std::uint64_t t = j - i + 1;
        pairs += t * (t - 1) / 2;
        i = j + 1;
    }
    return pairs;
}

} // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    require_pair(a, b, "spearman");
    auto ra = average_ranks(a);
    auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
        sab += (ra[i] - ma) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0)
        throw UndefinedCorrelationError("spearman: zero rank variance");
    return sab / std::sqrt(saa * sbb);
}

double kendall(std::span<const double> a, std::span<const double> b) {
    require_pair(a, b, "kendall");
    const std::size_t n = a.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;

    // Tie counts: within a (n1), within b (n2), joint (n3).
    std::uint64_t n1 = 0, n3 = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && a[order[j + 1]] == a[order[i]]) ++j;
            std::uint64_t t = j - i + 1;
            n1 += t * (t - 1) / 2;
            // joint ties inside this a-block (block is sorted by b)
            std::size_t p = i;
            while (p <= j) {
                std::size_t q = p;
                while (q + 1 <= j && b[order[q + 1]] == b[order[p]]) ++q;
                std::uint64_t u = q - p + 1;
                n3 += u * (u - 1) / 2;
                p = q + 1;
            }
            i = j + 1;
        }
    }
    std::vector<double> b_sorted(b.begin(), b.end());
    std::sort(b_sorted.begin(), b_sorted.end());
    const std::uint64_t n2 = tie_pair_count(std::move(b_sorted));

    if (n0 == n1 || n0 == n2)
        throw UndefinedCorrelationError("kendall: all entries tied in one vector");

    // Discordant swaps: inversions of b after sorting by (a, b).
    std::vector<double> b_seq(n), scratch(n);
    for (std::size_t i = 0; i < n; ++i) b_seq[i] = b[order[i]];
    const std::uint64_t swaps = count_inversions(b_seq, scratch, 0, n);

    const double concordant_minus_discordant =
        static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
        static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
    return concordant_minus_discordant /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

double ndcg_at(std::span<const double> scores, std::span<const double> relevance_source,
               double fraction) {
    require_pair(scores, relevance_source, "ndcg_at");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ConfigError("ndcg fraction must lie in (0,1]");
    const std::size_t n = scores.size();
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n)));

    double lo = relevance_source[0], hi = relevance_source[0];
    for (double v : relevance_source) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> rel(n);
    for (std::size_t i = 0; i < n; ++i)
        rel[i] = (hi > lo) ? (relevance_source[i] - lo) / (hi - lo) : 1.0;

    auto ranked = [n](std::span<const double> key) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
            return key[i] > key[j]; // ties keep ascending index via stable sort
        });
        return order;
    };
    auto dcg = [&](const std::vector<std::size_t>& order) {
        double g = 0.0;
        for (std::size_t p = 0; p < k; ++p)
            g += rel[order[p]] / std::log2(static_cast<double>(p) + 2.0);
        return g;
    };

    const double ideal = dcg(ranked(std::span<const double>(rel)));
    if (ideal == 0.0) return 1.0; // every relevance zero: any ranking is ideal
    return dcg(ranked(scores)) / ideal;
}

namespace {

StatAggregate aggregate(const std::vector<FoldStats>& folds, double FoldStats::* field) {
    StatAggregate agg;
    const double n = static_cast<double>(folds.size());
    for (const auto& f : folds) agg.mean += f.*field;
    agg.mean /= n;
    for (const auto& f : folds) agg.std += (f.*field - agg.mean) * (f.*field - agg.mean);
    agg.std = std::sqrt(agg.std / n);
    return agg;
}

FoldStats evaluate_window(const MetricDescriptor& m, const ReturnMatrix& r, Range train,
                          Range future, double rf, double ndcg_fraction, int fold_index,
                          const char* label) {
    const int N = r.n_assets();
    std::vector<double> scores;
    if (m.kind == MetricKind::Custom) {
        const CustomScorer* fn = find_custom_scorer(m.name);
        if (!fn)
            throw ValidationError("no custom scorer registered under '" + m.name + "'");
        scores = (*fn)(r, train, future, rf);
        if (static_cast<int>(scores.size()) != N)
            throw ValidationError("custom scorer '" + m.name + "' returned wrong score count");
    } else {
        scores.assign(static_cast<std::size_t>(N), std::numeric_limits<double>::quiet_NaN());
        const int len = train.length();
        if (len >= m.min_length()) {
            std::vector<double> column(static_cast<std::size_t>(len));
            for (int i = 0; i < N; ++i) {
                for (int t = 0; t < len; ++t) column[t] = r.returns(train.begin + t, i);
                scores[static_cast<std::size_t>(i)] = m.evaluate(column, rf);
            }
        }
    }

    // Future Sharpe per asset; pairwise deletion of missing values.
    std::vector<double> joint_scores, joint_future;
    const int flen = future.length();
    std::vector<double> column(static_cast<std::size_t>(std::max(flen, 0)));
    for (int i = 0; i < N; ++i) {
        if (!std::isfinite(scores[static_cast<std::size_t>(i)])) continue;
        if (flen < 2) continue;
        for (int t = 0; t < flen; ++t) column[t] = r.returns(future.begin + t, i);
        double fs = sharpe(column, rf);
        if (!std::isfinite(fs)) continue;
        joint_scores.push_back(scores[static_cast<std::size_t>(i)]);
        joint_future.push_back(fs);
    }
    if (joint_scores.size() < 3)
        throw FoldDegenerateError(std::string(label) + " " + std::to_string(fold_index) +
                                  ": only " + std::to_string(joint_scores.size()) +
                                  " jointly-scored assets, need 3");

    FoldStats stats;
    stats.fold_index = fold_index;
    stats.n_assets = static_cast<int>(joint_scores.size());
    stats.spearman = spearman(joint_scores, joint_future);
    stats.kendall = kendall(joint_scores, joint_future);
    stats.ndcg = ndcg_at(joint_scores, joint_future, ndcg_fraction);
    return stats;
}

} // namespace

EvalReport evaluate_metric(const MetricDescriptor& m, const ReturnMatrix& r,
                           const FoldSet& folds, double rf, double ndcg_fraction) {
    if (folds.folds.empty())
        throw ConfigError("evaluate_metric needs at least one fold");
    EvalReport rep;
    rep.metric_name = m.name;
    for (std::size_t k = 0; k < folds.folds.size(); ++k)
        rep.folds.push_back(evaluate_window(m, r, folds.folds[k].train, folds.folds[k].future,
                                            rf, ndcg_fraction, static_cast<int>(k), "fold"));
    rep.spearman_agg = aggregate(rep.folds, &FoldStats::spearman);
    rep.kendall_agg = aggregate(rep.folds, &FoldStats::kendall);
    rep.ndcg_agg = aggregate(rep.folds, &FoldStats::ndcg);
    if (folds.holdout) {
        Range train{0, folds.holdout->begin};
        rep.holdout = evaluate_window(m, r, train, *folds.holdout, rf, ndcg_fraction, -1, "holdout");
    }
    return rep;
}

double fitness(const EvalReport& rep, const FitnessWeights& w) {
    if (rep.folds.empty())
        throw ConfigError("fitness needs a report with at least one fold");
    return w.w_spearman * rep.spearman_agg.mean + w.w_kendall * rep.kendall_agg.mean +
           w.w_ndcg * rep.ndcg_agg.mean;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["metric"] = metric_name;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : folds)
        j["folds"].push_back({{"fold", f.fold_index},
                              {"spearman", f.spearman},
                              {"kendall", f.kendall},
                              {"ndcg", f.ndcg},
                              {"n_assets", f.n_assets}});
    j["aggregate"] = {{"spearman", {{"mean", spearman_agg.mean}, {"std", spearman_agg.std}}},
                      {"kendall", {{"mean", kendall_agg.mean}, {"std", kendall_agg.std}}},
                      {"ndcg", {{"mean", ndcg_agg.mean}, {"std", ndcg_agg.std}}}};
    if (holdout)
        j["holdout"] = {{"spearman", holdout->spearman},
                        {"kendall", holdout->kendall},
                        {"ndcg", holdout->ndcg},
                        {"n_assets", holdout->n_assets}};
    return j.dump(2);
}

void EvalReport::write_csv(std::ostream& out) const {
    auto emit = [&out](const std::string& metric, const std::string& row_kind, int fold,
                       double s, double k, double n, int assets) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.17g,%.17g,%.17g,%d\n", metric.c_str(),
                      row_kind.c_str(), fold, s, k, n, assets);
        out << buf;
    };
    out << "metric,row,fold,spearman,kendall,ndcg,n_assets\n";
    for (const auto& f : folds)
        emit(metric_name, "fold", f.fold_index, f.spearman, f.kendall, f.ndcg, f.n_assets);
    emit(metric_name, "agg", -1, spearman_agg.mean, kendall_agg.mean, ndcg_agg.mean, 0);
    if (holdout)
        emit(metric_name, "holdout", -1, holdout->spearman, holdout->kendall, holdout->ndcg,
             holdout->n_assets);
}

} // namespace alphasharpe
