#pragma once

#include "alphasharpe/types.hpp"

#include <iosfwd>
#include <string>

namespace alphasharpe {

enum class CsvLayout { Wide, Long };

// Parse a price CSV. Wide: first column date, one column per asset.
// Long: columns date,asset,price. Duplicate (date,asset) cells and
// non-positive prices are rejected; empty cells are missing.
PriceTable load_price_csv(const std::string& path, CsvLayout layout);
PriceTable parse_price_csv(std::istream& in, CsvLayout layout, const std::string& origin);

// returns[t][i] = ln(prices[t+1][i] / prices[t][i]); NaN where either price is missing.
ReturnMatrix to_log_returns(const PriceTable& p);

// Drop assets whose missing fraction exceeds max_missing_frac, zero-fill the rest.
ReturnMatrix clean(const ReturnMatrix& r, double max_missing_frac = 0.10);

// Rolling chronological folds within the non-holdout prefix.
FoldSet split_time_series(int n_periods, double holdout_frac, int n_folds,
                          int train_len, int future_len, int stride);

inline FoldSet split_time_series(const ReturnMatrix& r, double holdout_frac, int n_folds,
                                 int train_len, int future_len, int stride) {
    return split_time_series(r.n_periods(), holdout_frac, n_folds, train_len, future_len, stride);
}

// Copy of the rows in [range.begin, range.end).
ReturnMatrix slice_rows(const ReturnMatrix& r, Range range);

// Regime-switching Student-t market generator; pure function of spec.
ReturnMatrix generate_synthetic(const SyntheticSpec& spec);

// Default desk-scale spec: calm / stress / recovery regimes.
SyntheticSpec default_synthetic_spec(std::uint64_t seed);

SyntheticSpec parse_synthetic_spec_json(const std::string& json_text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

// CSV round trip, header `date,<asset...>`, 17 significant digits.
void write_returns_csv(const ReturnMatrix& r, std::ostream& out);
void save_returns_csv(const ReturnMatrix& r, const std::string& path);
ReturnMatrix load_returns_csv(const std::string& path);

// Versioned binary cache, magic "ASRM1".
void save_returns_cache(const ReturnMatrix& r, const std::string& path);
ReturnMatrix load_returns_cache(const std::string& path);

} // namespace alphasharpe
