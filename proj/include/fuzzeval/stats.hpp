#pragma once

// Nonparametric statistics: Vargha-Delaney A12, Spearman's rho, the
// Mann-Whitney U test and pairwise comparison tables.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "ranking.hpp"

namespace fuzzeval {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Upper tail 1 - Phi(x), accurate far into the tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Probability that a random draw from x exceeds one from y, ties counting half.
inline double vargha_delaney_a12(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ComputeError("vargha_delaney_a12: empty sample");
  // Rank-sum form: A12 = (R_x - n_x(n_x+1)/2) / (n_x n_y), exact for average ranks.
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  auto ranks = fractional_ranks(pooled);
  double rx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) rx += ranks[i];
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  return (rx - nx * (nx + 1.0) / 2.0) / (nx * ny);
}

enum class EffectMagnitude { Negligible, Small, Medium, Large };
enum class EffectDirection { FirstBetter, SecondBetter, NoDifference };

inline std::string_view to_string(EffectMagnitude m) {
  switch (m) {
    case EffectMagnitude::Negligible: return "negligible";
    case EffectMagnitude::Small: return "small";
    case EffectMagnitude::Medium: return "medium";
    case EffectMagnitude::Large: return "large";
  }
  return "?";
}

struct EffectSize {
  double a12 = 0.5;
  EffectMagnitude magnitude = EffectMagnitude::Negligible;
  EffectDirection direction = EffectDirection::NoDifference;
};

// Conventional Vargha-Delaney thresholds, symmetric around 0.5.
inline EffectSize classify_effect(double a12) {
  EffectSize e;
  e.a12 = a12;
  if (a12 >= 0.71 || a12 <= 0.29) e.magnitude = EffectMagnitude::Large;
  else if (a12 >= 0.64 || a12 <= 0.36) e.magnitude = EffectMagnitude::Medium;
  else if (a12 >= 0.56 || a12 <= 0.44) e.magnitude = EffectMagnitude::Small;
  else e.magnitude = EffectMagnitude::Negligible;
  e.direction = a12 > 0.5   ? EffectDirection::FirstBetter
                : a12 < 0.5 ? EffectDirection::SecondBetter
                            : EffectDirection::NoDifference;
  return e;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ComputeError("pearson: length mismatch");
  if (x.size() < 2) throw ComputeError("pearson: need at least 2 observations");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ComputeError("correlation undefined for a constant sample");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman's rho as the Pearson correlation of fractional ranks (tie-correct).
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ComputeError("spearman_rho: length mismatch");
  if (x.size() < 2) throw ComputeError("spearman_rho: need at least 2 observations");
  auto rx = fractional_ranks(x);
  auto ry = fractional_ranks(y);
  return pearson(rx, ry);
}

enum class Alternative { TwoSided, Greater, Less };
enum class MannWhitneyMethod { Auto, Exact, Normal };

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of the first sample: #(x > y) + ties / 2
  double p = 1.0;
  bool exact = false;
};

namespace detail {

// Null distribution of U for tie-free samples by enumerating every assignment
// of the n1 + n2 ranks to the first sample. Returns counts indexed by U.
inline std::vector<std::uint64_t> exact_u_counts(std::size_t n1, std::size_t n2) {
  const std::size_t n = n1 + n2;
  std::vector<std::uint64_t> counts(n1 * n2 + 1, 0);
  const std::uint64_t base = static_cast<std::uint64_t>(n1) * (n1 + 1) / 2;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != n1) continue;
    std::uint64_t rank_sum = 0;
    for (std::size_t b = 0; b < n; ++b)
      if (mask & (std::uint64_t{1} << b)) rank_sum += b + 1;
    ++counts[rank_sum - base];
  }
  return counts;
}

}  // namespace detail

/// Mann-Whitney U test of x against y.
///
/// Auto uses exact enumeration when n1 + n2 <= 12 and there are no ties, and
/// otherwise the normal approximation with tie-corrected variance and a 0.5
/// continuity correction. `Greater` tests whether x tends to exceed y.
inline MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                        Alternative alt = Alternative::TwoSided,
                                        MannWhitneyMethod method = MannWhitneyMethod::Auto) {
  if (x.empty() || y.empty()) throw ComputeError("mann_whitney_u: empty sample");
  const std::size_t n1 = x.size(), n2 = y.size(), n = n1 + n2;
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  auto ranks = fractional_ranks(pooled);
  double r1 = 0.0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
  MannWhitneyResult res;
  res.u = r1 - static_cast<double>(n1) * (n1 + 1) / 2.0;

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1) ties = true;
    tie_term += t * t * t - t;
    i = j;
  }

  bool use_exact = method == MannWhitneyMethod::Exact || (method == MannWhitneyMethod::Auto && n <= 12 && !ties);
  if (use_exact && (ties || n > 20)) {
    if (method == MannWhitneyMethod::Exact)
      throw ComputeError("exact Mann-Whitney requires tie-free samples with n1 + n2 <= 20");
    use_exact = false;
  }

  if (use_exact) {
    auto counts = detail::exact_u_counts(n1, n2);
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const auto u = static_cast<std::size_t>(std::llround(res.u));
    double le = 0.0, ge = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k <= u) le += static_cast<double>(counts[k]);
      if (k >= u) ge += static_cast<double>(counts[k]);
    }
    le /= total;
    ge /= total;
    switch (alt) {
      case Alternative::TwoSided: res.p = std::min(1.0, 2.0 * std::min(le, ge)); break;
      case Alternative::Greater: res.p = ge; break;
      case Alternative::Less: res.p = le; break;
    }
    res.exact = true;
    return res;
  }

  const double nn1 = static_cast<double>(n1), nn2 = static_cast<double>(n2), nn = static_cast<double>(n);
  const double mean = nn1 * nn2 / 2.0;
  const double var = nn1 * nn2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (!(var > 0.0)) {
    res.p = 1.0;
    return res;
  }
  const double sd = std::sqrt(var);
  switch (alt) {
    case Alternative::TwoSided: {
      const double z = std::max(0.0, std::abs(res.u - mean) - 0.5) / sd;
      res.p = std::min(1.0, 2.0 * normal_sf(z));
      break;
    }
    case Alternative::Greater: res.p = normal_sf((res.u - mean - 0.5) / sd); break;
    case Alternative::Less: res.p = normal_cdf((res.u - mean + 0.5) / sd); break;
  }
  return res;
}

struct NamedSample {
  std::string label;
  std::vector<double> values;
};

/// Pairwise table: a12[i][j] is A12 of row group i against column group j,
/// p[i][j] the two-sided Mann-Whitney p-value.
struct PairwiseTable {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> a12;
  std::vector<std::vector<double>> p;
  std::vector<std::vector<bool>> significant;
  double alpha = 0.05;
};

inline PairwiseTable pairwise_table(const std::vector<NamedSample>& groups, double alpha = 0.05,
                                    Alternative alt = Alternative::TwoSided) {
  if (groups.size() < 2) throw ComputeError("pairwise_table: need at least 2 groups");
  const std::size_t k = groups.size();
  PairwiseTable t;
  t.alpha = alpha;
  t.a12.assign(k, std::vector<double>(k, 0.5));
  t.p.assign(k, std::vector<double>(k, 1.0));
  t.significant.assign(k, std::vector<bool>(k, false));
  for (const auto& g : groups) {
    if (g.values.empty()) throw ComputeError("pairwise_table: group '" + g.label + "' is empty");
    t.labels.push_back(g.label);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double a = vargha_delaney_a12(groups[i].values, groups[j].values);
      t.a12[i][j] = a;
      t.a12[j][i] = 1.0 - a;
      t.p[i][j] = mann_whitney_u(groups[i].values, groups[j].values, alt).p;
      // one-sided: the reverse cell tests the reverse direction
      t.p[j][i] = alt == Alternative::TwoSided ? t.p[i][j] : mann_whitney_u(groups[j].values, groups[i].values, alt).p;
      t.significant[i][j] = t.p[i][j] < alpha;
      t.significant[j][i] = t.p[j][i] < alpha;
    }
  }
  return t;
}

/// Spearman correlation matrix of property ranks, one observation per
/// (program, trial) unit. Each request names a key and the rank scope used;
/// WithinProgram ranks are pooled across programs.
inline std::vector<std::vector<double>> correlation_matrix(const RankedDataset& rd,
                                                           const std::vector<RankRequest>& props) {
  if (props.size() < 2) throw ComputeError("correlation_matrix: need at least 2 properties");
  std::vector<std::vector<double>> cols;
  for (const auto& p : props) {
    cols.push_back(rd.unit_property_rank(p.key, p.scope));
    const auto& c = cols.back();
    if (std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); }))
      throw ComputeError("correlation_matrix: property '" + p.key + "' is constant at scope " +
                         std::string(to_string(p.scope)));
  }
  const std::size_t k = props.size();
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) m[i][j] = m[j][i] = spearman_rho(cols[i], cols[j]);
  return m;
}

inline std::vector<std::vector<double>> correlation_matrix(const RankedDataset& rd,
                                                           const std::vector<PropertyKey>& keys) {
  std::vector<RankRequest> reqs;
  for (const auto& k : keys) reqs.push_back({k, RankScope::WithinProgram});
  return correlation_matrix(rd, reqs);
}

}  // namespace fuzzeval
