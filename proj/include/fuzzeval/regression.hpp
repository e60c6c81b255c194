#pragma once

// Design matrices with reference levels, dummy coding and interactions;
// OLS fits; per-fuzzer slopes; the explainable fuzzer-by-property model
//
//   rank = alpha + sum_p beta_p X_p + sum_f gamma_f Y_f + sum_p sum_f omega_pf X_p Y_f
//
// where X_p is a property rank minus its reference level and Y_f indicates a
// non-reference fuzzer.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/fisher_f.hpp>

#include "bootstrap.hpp"
#include "data_model.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "ranking.hpp"

namespace fuzzeval {

struct Predictor {
  PropertyKey key;
  RankScope scope = RankScope::WithinProgram;
  double reference_level = 1.0;  // rank subtracted before fitting
};

struct DesignSpec {
  std::vector<Predictor> properties;
  std::vector<std::string> fuzzers;  // empty: dataset order
  std::string reference_fuzzer;
  bool include_interactions = true;
  // Replicate the whole design per program (benchmark x fuzzer x properties).
  // Program-scope predictors are constant within a program and are dropped.
  bool per_benchmark = false;
};

namespace terms {
inline std::string intercept() { return "intercept"; }
inline std::string prop(const PropertyKey& k) { return "prop:" + k; }
inline std::string fuzzer(const std::string& f) { return "fuzzer:" + f; }
inline std::string inter(const PropertyKey& k, const std::string& f) { return "inter:" + k + ":" + f; }
inline std::string bench(const std::string& program, const std::string& term) { return "bench:" + program + ":" + term; }
}  // namespace terms

inline std::vector<RankRequest> rank_requests(const DesignSpec& spec) {
  std::vector<RankRequest> out;
  for (const auto& p : spec.properties) out.push_back({p.key, p.scope});
  return out;
}

namespace detail {
inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}
}  // namespace detail

/// The default model: initial coverage, mean execution time and mean seed
/// size ranked within each program with the lowest rank as reference level,
/// plus program size ranked across programs with the median rank as
/// reference level. Seed count is left out because it is nearly collinear
/// with initial coverage; instruction-mix proportions are left out for
/// parsimony. Keys missing from the dataset are skipped.
///
/// The reference fuzzer defaults to one named "libfuzzer" (any case) and
/// otherwise to the first fuzzer in the dataset.
inline DesignSpec default_design_spec(const Dataset& d, std::string reference_fuzzer = {}) {
  DesignSpec s;
  s.fuzzers = d.fuzzers();
  if (reference_fuzzer.empty()) {
    reference_fuzzer = d.fuzzers().empty() ? std::string{} : d.fuzzers().front();
    for (const auto& f : d.fuzzers())
      if (detail::lower(f) == "libfuzzer") reference_fuzzer = f;
  }
  s.reference_fuzzer = reference_fuzzer;
  for (const auto& k : {keys::init_coverage, keys::mean_exec_ns, keys::mean_seed_bytes})
    if (d.has_property(k)) s.properties.push_back({k, RankScope::WithinProgram, 1.0});
  if (d.has_property(keys::program_text_bytes)) {
    const double median = (static_cast<double>(d.programs().size()) + 1.0) / 2.0;
    s.properties.push_back({keys::program_text_bytes, RankScope::Program, median});
  }
  return s;
}

struct Design {
  Matrix x;
  std::vector<double> y;            // fuzzer rank per observation
  std::vector<std::string> labels;  // one per column
  std::vector<std::size_t> rows;    // dataset row of each observation
};

inline std::vector<std::string> design_fuzzers(const RankedDataset& rd, const DesignSpec& spec) {
  return spec.fuzzers.empty() ? rd.base().fuzzers() : spec.fuzzers;
}

/// Builds the model matrix; one observation per dataset row, response = fuzzer rank.
inline Design build_design_matrix(const RankedDataset& rd, const DesignSpec& spec) {
  const auto fuzzers = design_fuzzers(rd, spec);
  if (std::find(fuzzers.begin(), fuzzers.end(), spec.reference_fuzzer) == fuzzers.end())
    throw DataError("reference fuzzer '" + spec.reference_fuzzer + "' is not among the design fuzzers");
  std::vector<std::string> others;
  for (const auto& f : fuzzers)
    if (f != spec.reference_fuzzer) others.push_back(f);

  std::vector<const std::vector<double>*> rank_cols;
  for (const auto& p : spec.properties) rank_cols.push_back(&rd.property_rank(p.key, p.scope));

  const auto& trials = rd.base().trials();
  Design d;
  for (std::size_t r = 0; r < trials.size(); ++r)
    if (std::find(fuzzers.begin(), fuzzers.end(), trials[r].fuzzer) != fuzzers.end()) d.rows.push_back(r);

  // Column builders produce a value for row r given the block's program filter.
  struct Column {
    std::string label;
    int program = -1;  // -1: pooled; otherwise only rows of this program are nonzero
    int prop = -1;     // predictor index or -1
    int fuzzer = -1;   // index into `others` or -1
  };
  std::vector<Column> cols;
  auto add_block = [&](int program, const std::string& prefix_program) {
    auto name = [&](const std::string& t) { return program < 0 ? t : terms::bench(prefix_program, t); };
    cols.push_back({name(terms::intercept()), program, -1, -1});
    for (std::size_t p = 0; p < spec.properties.size(); ++p) {
      if (program >= 0 && spec.properties[p].scope == RankScope::Program) continue;
      cols.push_back({name(terms::prop(spec.properties[p].key)), program, static_cast<int>(p), -1});
    }
    for (std::size_t f = 0; f < others.size(); ++f)
      cols.push_back({name(terms::fuzzer(others[f])), program, -1, static_cast<int>(f)});
    if (spec.include_interactions) {
      for (std::size_t p = 0; p < spec.properties.size(); ++p) {
        if (program >= 0 && spec.properties[p].scope == RankScope::Program) continue;
        for (std::size_t f = 0; f < others.size(); ++f)
          cols.push_back({name(terms::inter(spec.properties[p].key, others[f])), program, static_cast<int>(p),
                          static_cast<int>(f)});
      }
    }
  };
  if (spec.per_benchmark) {
    for (std::size_t p = 0; p < rd.base().programs().size(); ++p) add_block(static_cast<int>(p), rd.base().programs()[p]);
  } else {
    add_block(-1, {});
  }

  d.x = Matrix(d.rows.size(), cols.size());
  d.y.resize(d.rows.size());
  for (const auto& c : cols) d.labels.push_back(c.label);
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    const auto r = d.rows[i];
    d.y[i] = rd.fuzzer_rank()[r];
    const auto& fz = trials[r].fuzzer;
    const int fidx = static_cast<int>(std::find(others.begin(), others.end(), fz) - others.begin());
    const int prog = static_cast<int>(rd.program_of_row()[r]);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& col = cols[c];
      if (col.program >= 0 && col.program != prog) continue;
      double v = 1.0;
      if (col.prop >= 0) v *= (*rank_cols[col.prop])[r] - spec.properties[col.prop].reference_level;
      if (col.fuzzer >= 0) v *= (col.fuzzer == fidx) ? 1.0 : 0.0;
      d.x(i, c) = v;
    }
  }
  return d;
}

struct RegressionFit {
  std::vector<std::string> labels;
  std::vector<double> coefficients;
  std::vector<double> observed;
  std::vector<double> fitted;
  std::vector<double> residuals;
  double r2 = 0.0;
  double r2_adjusted = 0.0;
  double f_statistic = 0.0;
  double f_p_value = 1.0;
  double sigma = 0.0;  // residual standard error, sqrt(SS_res / (n - p))
  double median_residual = 0.0;
  double median_abs_residual = 0.0;
  std::size_t observations = 0;
  std::size_t parameters = 0;

  // Decoded terms of an explainable model (empty for generic fits).
  double intercept = 0.0;
  std::map<PropertyKey, double> beta;
  std::map<std::string, double> gamma;
  std::map<std::pair<PropertyKey, std::string>, double> omega;

  double coefficient(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return coefficients[i];
    throw Error("no coefficient '" + std::string(label) + "'");
  }
};

namespace detail {
inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

/// Least squares via Householder QR. Statistics assume the first column is an
/// intercept when `labels` is empty or labels.front() names one.
inline RegressionFit ols_fit(const Matrix& x, std::span<const double> y, std::vector<std::string> labels = {}) {
  if (labels.empty())
    for (std::size_t c = 0; c < x.cols(); ++c) labels.push_back(c == 0 ? "intercept" : "x" + std::to_string(c));
  if (labels.size() != x.cols()) throw ComputeError("ols_fit: label count does not match columns");
  QrLeastSquares qr(x, labels);

  RegressionFit fit;
  fit.labels = labels;
  fit.coefficients = qr.solve(y);
  fit.observed.assign(y.begin(), y.end());
  fit.fitted = x.multiply(fit.coefficients);
  fit.residuals.resize(y.size());
  const std::size_t n = y.size(), p = x.cols();
  fit.observations = n;
  fit.parameters = p;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double ss_res = 0.0, ss_tot = 0.0;
  std::vector<double> abs_res(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.residuals[i] = y[i] - fit.fitted[i];
    ss_res += fit.residuals[i] * fit.residuals[i];
    ss_tot += (y[i] - mean) * (y[i] - mean);
    abs_res[i] = std::abs(fit.residuals[i]);
  }
  fit.r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 0.0;
  const double dfr = static_cast<double>(n) - static_cast<double>(p);
  fit.sigma = dfr > 0 ? std::sqrt(ss_res / dfr) : 0.0;
  fit.r2_adjusted = dfr > 0 ? 1.0 - (1.0 - fit.r2) * (static_cast<double>(n) - 1.0) / dfr : fit.r2;
  if (p > 1 && dfr > 0 && ss_tot > 0.0) {
    if (fit.r2 >= 1.0) {
      fit.f_statistic = std::numeric_limits<double>::infinity();
      fit.f_p_value = 0.0;
    } else {
      fit.f_statistic = (fit.r2 / static_cast<double>(p - 1)) / ((1.0 - fit.r2) / dfr);
      boost::math::fisher_f dist(static_cast<double>(p - 1), dfr);
      fit.f_p_value = boost::math::cdf(boost::math::complement(dist, fit.f_statistic));
    }
  }
  fit.median_residual = detail::median(fit.residuals);
  fit.median_abs_residual = detail::median(abs_res);
  return fit;
}

struct SlopeEstimate {
  std::string fuzzer;
  PropertyKey property;
  double intercept = 0.0;
  double slope = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool significant = false;  // CI excludes 0
  std::size_t observations = 0;
};

namespace detail {
inline std::optional<std::pair<double, double>> simple_ols(std::span<const double> x, std::span<const double> y,
                                                           std::span<const std::size_t> idx) {
  const double n = static_cast<double>(idx.size());
  double mx = 0, my = 0;
  for (auto i : idx) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (auto i : idx) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double b = sxy / sxx;
  return std::make_pair(my - b * mx, b);
}
}  // namespace detail

/// For each fuzzer separately, the OLS slope of its per-trial rank on the
/// property rank, with a bootstrap CI. Fuzzer i uses stream i of boot.seed.
inline std::vector<SlopeEstimate> per_fuzzer_slopes(const RankedDataset& rd, const PropertyKey& key, RankScope scope,
                                                    const BootstrapSpec& boot) {
  const auto& xr = rd.property_rank(key, scope);
  const auto& yr = rd.fuzzer_rank();
  std::vector<SlopeEstimate> out;
  const auto& fuzzers = rd.base().fuzzers();
  for (std::size_t f = 0; f < fuzzers.size(); ++f) {
    std::vector<double> x, y;
    for (std::size_t r = 0; r < rd.rows(); ++r)
      if (rd.fuzzer_of_row()[r] == f) {
        x.push_back(xr[r]);
        y.push_back(yr[r]);
      }
    if (x.size() < 3)
      throw ComputeError("per_fuzzer_slopes: fuzzer '" + fuzzers[f] + "' has fewer than 3 observations");
    std::vector<std::size_t> all(x.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto est = detail::simple_ols(x, y, all);
    if (!est)
      throw ComputeError("per_fuzzer_slopes: property '" + key + "' is constant for fuzzer '" + fuzzers[f] + "'");

    BootstrapSpec bs = boot;
    bs.seed = derive_seed(boot.seed, f);
    CiTable ci;
    if (boot.method == BootstrapMethod::Pairs) {
      ci = pairs_bootstrap(
          x.size(), {"slope"},
          [&](std::span<const std::size_t> idx) -> std::optional<std::vector<double>> {
            auto r = detail::simple_ols(x, y, idx);
            if (!r) return std::nullopt;
            return std::vector<double>{r->second};
          },
          bs);
    } else {
      Matrix m(x.size(), 2, 1.0);
      for (std::size_t i = 0; i < x.size(); ++i) m(i, 1) = x[i];
      auto full = wild_bootstrap(m, y, {"intercept", "slope"}, bs);
      ci.entries = {full.entries[1]};
      ci.replicates = full.replicates;
      ci.skipped = full.skipped;
    }
    SlopeEstimate s;
    s.fuzzer = fuzzers[f];
    s.property = key;
    s.intercept = est->first;
    s.slope = est->second;
    s.ci_low = ci.entries[0].ci_low;
    s.ci_high = ci.entries[0].ci_high;
    s.significant = ci.entries[0].significant;
    s.observations = x.size();
    out.push_back(std::move(s));
  }
  return out;
}

struct ExplainableModel {
  DesignSpec design;
  std::vector<std::string> fuzzers;  // design fuzzers, reference included
  RegressionFit fit;
  CiTable ci;
  std::vector<std::size_t> rows;  // dataset row of each observation
};

namespace detail {
inline void decode_terms(const DesignSpec& spec, const std::vector<std::string>& fuzzers, RegressionFit& fit) {
  if (spec.per_benchmark) return;
  fit.intercept = fit.coefficient(terms::intercept());
  for (const auto& p : spec.properties) fit.beta[p.key] = fit.coefficient(terms::prop(p.key));
  for (const auto& f : fuzzers) {
    if (f == spec.reference_fuzzer) continue;
    fit.gamma[f] = fit.coefficient(terms::fuzzer(f));
    if (spec.include_interactions)
      for (const auto& p : spec.properties) fit.omega[{p.key, f}] = fit.coefficient(terms::inter(p.key, f));
  }
}
}  // namespace detail

/// OLS fit of the explainable model with a bootstrap CI per coefficient
/// (wild by default, pairs when boot.method == Pairs). Resampling is by
/// (program, trial) unit unless boot.cluster is off.
inline ExplainableModel fit_explainable_model(const RankedDataset& rd, const DesignSpec& spec,
                                              const BootstrapSpec& boot) {
  auto design = build_design_matrix(rd, spec);
  ExplainableModel m;
  m.design = spec;
  m.fuzzers = design_fuzzers(rd, spec);
  m.rows = design.rows;
  m.fit = ols_fit(design.x, design.y, design.labels);
  detail::decode_terms(spec, m.fuzzers, m.fit);
  // one cluster per (program, trial): its fuzzer ranks sum to a constant
  std::vector<std::size_t> unit(design.rows.size());
  for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = rd.unit_of_row()[design.rows[i]];
  if (boot.method == BootstrapMethod::Wild) {
    m.ci = wild_bootstrap(design.x, design.y, design.labels, boot, unit);
  } else {
    std::size_t k = 0;
    const auto cl = detail::dense_clusters(boot.cluster ? std::span<const std::size_t>(unit)
                                                        : std::span<const std::size_t>{},
                                           unit.size(), k);
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < cl.size(); ++i) members[cl[i]].push_back(i);
    m.ci = pairs_bootstrap(
        k, design.labels,
        [&](std::span<const std::size_t> picked) -> std::optional<std::vector<double>> {
          std::vector<std::size_t> idx;
          for (auto c : picked) idx.insert(idx.end(), members[c].begin(), members[c].end());
          auto xs = design.x.select_rows(idx);
          std::vector<double> ys(idx.size());
          for (std::size_t i = 0; i < idx.size(); ++i) ys[i] = design.y[idx[i]];
          try {
            return QrLeastSquares(xs, design.labels).solve(ys);
          } catch (const ComputeError&) {
            return std::nullopt;
          }
        },
        boot);
  }
  return m;
}

inline ExplainableModel fit_explainable_model(const Dataset& d, const DesignSpec& spec, const BootstrapSpec& boot) {
  return fit_explainable_model(rank_dataset(d, rank_requests(spec)), spec, boot);
}

/// Predicted rank of `fuzzer` at the given property ranks (raw ranks; the
/// model's reference levels are subtracted here). Properties not given are
/// held at their reference level.
inline double predict_rank(const ExplainableModel& m, const std::string& fuzzer,
                           const std::map<PropertyKey, double>& property_ranks = {}) {
  if (m.design.per_benchmark) throw Error("predict_rank: per-benchmark models are not supported");
  if (std::find(m.fuzzers.begin(), m.fuzzers.end(), fuzzer) == m.fuzzers.end())
    throw Error("predict_rank: unknown fuzzer '" + fuzzer + "'");
  for (const auto& [k, v] : property_ranks) {
    if (std::none_of(m.design.properties.begin(), m.design.properties.end(), [&](const auto& p) { return p.key == k; }))
      throw Error("predict_rank: unknown property '" + k + "'");
  }
  const auto& fit = m.fit;
  const bool is_ref = fuzzer == m.design.reference_fuzzer;
  double r = fit.intercept;
  if (!is_ref) r += fit.gamma.at(fuzzer);
  for (const auto& p : m.design.properties) {
    auto it = property_ranks.find(p.key);
    const double dx = it == property_ranks.end() ? 0.0 : it->second - p.reference_level;
    r += fit.beta.at(p.key) * dx;
    if (!is_ref && m.design.include_interactions) r += fit.omega.at({p.key, fuzzer}) * dx;
  }
  return r;
}

struct Crossover {
  // Change in the varied property's rank (from the given base ranks) at which
  // both predictions are equal; empty when the two lines are parallel.
  std::optional<double> delta;
  // Whether `challenger` is predicted ahead of `incumbent` beyond the crossing.
  bool challenger_ahead_above = false;
};

/// Solves rank(challenger) == rank(incumbent) along property `key`.
inline Crossover crossover(const ExplainableModel& m, const std::string& incumbent, const std::string& challenger,
                           const PropertyKey& key, std::map<PropertyKey, double> base_ranks = {}) {
  auto ref = std::find_if(m.design.properties.begin(), m.design.properties.end(),
                          [&](const auto& p) { return p.key == key; });
  if (ref == m.design.properties.end()) throw Error("crossover: unknown property '" + key + "'");
  if (!base_ranks.count(key)) base_ranks[key] = ref->reference_level;
  const double a1 = predict_rank(m, incumbent, base_ranks);
  const double a2 = predict_rank(m, challenger, base_ranks);
  auto shifted = base_ranks;
  shifted[key] += 1.0;
  const double s1 = predict_rank(m, incumbent, shifted) - a1;
  const double s2 = predict_rank(m, challenger, shifted) - a2;
  Crossover c;
  if (s2 == s1) return c;
  c.delta = (a1 - a2) / (s2 - s1);
  c.challenger_ahead_above = s2 > s1;
  return c;
}

}  // namespace fuzzeval
