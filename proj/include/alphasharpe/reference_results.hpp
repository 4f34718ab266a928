#pragma once

// Published results for the AlphaSharpe metric family and allocator on the
// original 3,246-asset, 15-year US equity dataset. That dataset is not
// distributed, so these values are reference documentation only; nothing in
// this repository reproduces or asserts them.
namespace alphasharpe::reference {

// Asset ranking correlation (out-of-sample).
inline constexpr double kSharpeSpearman = 0.130;
inline constexpr double kSharpeKendall = 0.087;
inline constexpr double kSharpeNdcg = 0.393;
inline constexpr double kPsrSpearman = 0.127;
inline constexpr double kAlphaS2Ndcg = 0.636;
inline constexpr double kAlphaS4Spearman = 0.409;
inline constexpr double kAlphaS4Kendall = 0.278;

// Top-quantile portfolio improvement of alpha_s2 over the Sharpe-ranked
// portfolio, percent, at the 10/15/20/25% thresholds.
inline constexpr double kAlphaS2DeltaSharpePct[4] = {76.49, 91.47, 93.39, 93.97};
inline constexpr double kAlphaS2DeltaPsrPct[4] = {82.17, 93.69, 95.61, 101.99};

// Allocator improvement over the equal-weighted benchmark, percent.
inline constexpr double kRiskParityDeltaSharpePct = 38.32;
inline constexpr double kErcDeltaSharpePct = 38.55;
inline constexpr double kAlphaSharpeDeltaSharpePct = 71.04;
inline constexpr double kAlphaSharpeDeltaCalmarPct = 116.31;

} // namespace alphasharpe::reference
