#pragma once

// Regression assumption checks: residual independence (Durbin-Watson),
// normality (QQ data), homoscedasticity (scale-location data) and
// multicollinearity (variance inflation).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "ranking.hpp"
#include "regression.hpp"
#include "stats.hpp"

namespace fuzzeval {

/// Standard normal quantile. Acklam's rational approximation (relative error
/// about 1e-9) refined by one Halley step against erfc.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ComputeError("inverse_normal_cdf: probability outside [0, 1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425, p_high = 1.0 - p_low;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= p_high) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

struct DurbinWatson {
  double statistic = 2.0;
  double p_value = 1.0;  // two-sided, normal approximation
};

/// Durbin-Watson statistic of residuals in observation order.
///
/// The p-value is approximate: it uses the exact null mean and variance of
/// the statistic for i.i.d. normal errors without regressors,
/// E = 2(n-1)/n and Var = 4(n^2-2)/(n^2(n+2)), and a normal reference.
inline DurbinWatson durbin_watson(std::span<const double> residuals) {
  const std::size_t n = residuals.size();
  if (n < 3) throw ComputeError("durbin_watson: need at least 3 residuals");
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    den += residuals[t] * residuals[t];
    if (t > 0) {
      const double d = residuals[t] - residuals[t - 1];
      num += d * d;
    }
  }
  if (den == 0.0) throw ComputeError("durbin_watson: residuals are all zero");
  DurbinWatson dw;
  dw.statistic = num / den;
  const double nn = static_cast<double>(n);
  const double mean = 2.0 * (nn - 1.0) / nn;
  const double var = 4.0 * (nn * nn - 2.0) / (nn * nn * (nn + 2.0));
  const double z = (dw.statistic - mean) / std::sqrt(var);
  dw.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
  return dw;
}

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Normal QQ data: point i is (Phi^-1((i - 0.5)/n), i-th smallest standardized
/// residual), with residuals standardized by their sample mean and standard
/// deviation.
inline std::vector<PlotPoint> qq_normal(std::span<const double> residuals) {
  const std::size_t n = residuals.size();
  if (n < 3) throw ComputeError("qq_normal: need at least 3 residuals");
  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double r : residuals) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw ComputeError("qq_normal: residuals have zero variance");
  std::vector<double> z(residuals.begin(), residuals.end());
  for (double& v : z) v = (v - mean) / sd;
  std::sort(z.begin(), z.end());
  std::vector<PlotPoint> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = {inverse_normal_cdf((static_cast<double>(i) + 0.5) / static_cast<double>(n)), z[i]};
  return out;
}

/// Scale-location data: (fitted, sqrt(|residual / sigma|)) sorted by fitted
/// value, sigma being the fit's residual standard error.
inline std::vector<PlotPoint> scale_location(const RegressionFit& fit) {
  if (!(fit.sigma > 0.0)) throw ComputeError("scale_location: residual variance is zero");
  std::vector<PlotPoint> out(fit.fitted.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {fit.fitted[i], std::sqrt(std::abs(fit.residuals[i] / fit.sigma))};
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  return out;
}

/// Variance inflation factor of each column against all others (with an
/// intercept). Perfectly collinear or constant columns yield +infinity.
inline std::vector<double> variance_inflation(const std::vector<std::vector<double>>& columns) {
  const std::size_t k = columns.size();
  if (k < 2) throw ComputeError("variance_inflation: need at least 2 predictors");
  const std::size_t n = columns.front().size();
  if (n < k + 2) throw ComputeError("variance_inflation: need at least |keys| + 2 observations");
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    Matrix x(n, k, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = 1;
      for (std::size_t o = 0; o < k; ++o)
        if (o != j) x(i, c++) = columns[o][i];
    }
    const auto& y = columns[j];
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss_tot = 0.0;
    for (double v : y) ss_tot += (v - mean) * (v - mean);
    if (ss_tot == 0.0) {
      out[j] = std::numeric_limits<double>::infinity();
      continue;
    }
    std::vector<double> coef;
    try {
      coef = QrLeastSquares(x).solve(y);
    } catch (const RankDeficientError&) {
      // The remaining predictors are dependent among themselves.
      out[j] = std::numeric_limits<double>::infinity();
      continue;
    }
    const auto fitted = x.multiply(coef);
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss_res += (y[i] - fitted[i]) * (y[i] - fitted[i]);
    const double r2 = 1.0 - ss_res / ss_tot;
    out[j] = (ss_res <= 1e-12 * ss_tot) ? std::numeric_limits<double>::infinity() : std::max(1.0, 1.0 / (1.0 - r2));
  }
  return out;
}

/// VIF of property ranks, one observation per (program, trial) unit.
inline std::map<PropertyKey, double> variance_inflation(const RankedDataset& rd,
                                                        const std::vector<RankRequest>& props) {
  std::vector<std::vector<double>> cols;
  for (const auto& p : props) cols.push_back(rd.unit_property_rank(p.key, p.scope));
  auto v = variance_inflation(cols);
  std::map<PropertyKey, double> out;
  for (std::size_t i = 0; i < props.size(); ++i) out[props[i].key] = v[i];
  return out;
}

inline constexpr double kVifFlagThreshold = 5.0;

enum class ResidualOrder {
  FuzzerProgramTrial,  // one fuzzer's trials are contiguous
  ProgramTrialFuzzer,  // the fuzzers of one trial are contiguous
  Input,               // dataset row order
};

inline std::string_view to_string(ResidualOrder o) {
  switch (o) {
    case ResidualOrder::FuzzerProgramTrial: return "fuzzer-program-trial";
    case ResidualOrder::ProgramTrialFuzzer: return "program-trial-fuzzer";
    case ResidualOrder::Input: return "input";
  }
  return "?";
}

inline ResidualOrder parse_residual_order(std::string_view s) {
  if (s == "fuzzer-program-trial") return ResidualOrder::FuzzerProgramTrial;
  if (s == "program-trial-fuzzer") return ResidualOrder::ProgramTrialFuzzer;
  if (s == "input") return ResidualOrder::Input;
  throw Error("unknown residual order '" + std::string(s) + "'");
}

// Residuals of the model reordered for the Durbin-Watson test. Programs and
// fuzzers sort by first appearance, trials numerically.
inline std::vector<double> ordered_residuals(const RankedDataset& rd, const ExplainableModel& m, ResidualOrder order) {
  std::vector<std::size_t> idx(m.rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (order != ResidualOrder::Input) {
    auto key = [&](std::size_t i) {
      const auto r = m.rows[i];
      const auto p = rd.program_of_row()[r];
      const auto f = rd.fuzzer_of_row()[r];
      const auto t = rd.base().trials()[r].trial;
      return order == ResidualOrder::FuzzerProgramTrial ? std::make_tuple(f, p, std::size_t{t})
                                                        : std::make_tuple(p, std::size_t{t}, f);
    };
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return key(a) < key(b); });
  }
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = m.fit.residuals[idx[i]];
  return out;
}

struct DiagnosticsReport {
  DurbinWatson durbin_watson;
  ResidualOrder order = ResidualOrder::FuzzerProgramTrial;
  std::vector<PlotPoint> qq_points;
  std::vector<PlotPoint> scale_location;
  std::map<PropertyKey, double> vif;
  double r2 = 0.0;
  double r2_adjusted = 0.0;
  double median_abs_residual = 0.0;
};

inline DiagnosticsReport diagnose(const RankedDataset& rd, const ExplainableModel& m,
                                  ResidualOrder order = ResidualOrder::FuzzerProgramTrial) {
  DiagnosticsReport rep;
  rep.order = order;
  rep.durbin_watson = durbin_watson(ordered_residuals(rd, m, order));
  rep.qq_points = qq_normal(m.fit.residuals);
  rep.scale_location = scale_location(m.fit);
  if (m.design.properties.size() >= 2) rep.vif = variance_inflation(rd, rank_requests(m.design));
  rep.r2 = m.fit.r2;
  rep.r2_adjusted = m.fit.r2_adjusted;
  rep.median_abs_residual = m.fit.median_abs_residual;
  return rep;
}

}  // namespace fuzzeval
