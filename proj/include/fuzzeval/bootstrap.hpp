#pragma once

// Resampling engine: pairs and wild bootstrap with percentile intervals.
//
// Replicate b draws from its own generator seeded by
// derive_replicate_seed(seed, b), and results are stored by replicate index
// before any quantile is taken, so output is independent of thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "data_model.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "random.hpp"

namespace fuzzeval {

enum class BootstrapMethod { Pairs, Wild };
enum class WildWeights { Rademacher, Mammen };

inline std::string_view to_string(BootstrapMethod m) { return m == BootstrapMethod::Pairs ? "pairs" : "wild"; }
inline std::string_view to_string(WildWeights w) { return w == WildWeights::Rademacher ? "rademacher" : "mammen"; }

struct BootstrapSpec {
  std::size_t replicates = 2000;
  std::uint64_t seed = 0;
  BootstrapMethod method = BootstrapMethod::Wild;
  WildWeights wild_weights = WildWeights::Rademacher;
  double ci_level = 0.95;
  // Worker threads for replicates; 0 means hardware concurrency.
  unsigned threads = 1;
  // Resample whole clusters when the caller supplies them (the explainable
  // model clusters by (program, trial), whose fuzzer ranks are dependent).
  bool cluster = true;
};

inline void check_spec(const BootstrapSpec& s) {
  if (s.replicates < 100) throw ComputeError("bootstrap: at least 100 replicates are required");
  if (!(s.ci_level > 0.5 && s.ci_level < 1.0)) throw ComputeError("bootstrap: ci_level must lie in (0.5, 1)");
}

struct CiEntry {
  std::string term;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool significant = false;  // interval excludes 0
};

struct CiTable {
  std::vector<CiEntry> entries;
  std::size_t replicates = 0;
  std::size_t skipped = 0;
  double ci_level = 0.95;
  BootstrapMethod method = BootstrapMethod::Pairs;

  const CiEntry& at(std::string_view term) const {
    for (const auto& e : entries)
      if (e.term == term) return e;
    throw Error("no CI entry for term '" + std::string(term) + "'");
  }
  bool contains(std::string_view term) const {
    return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.term == term; });
  }
};

// Coefficient table CSV: term,estimate,ci_low,ci_high,significant
inline void write_csv(const CiTable& t, std::ostream& out) {
  out << "term,estimate,ci_low,ci_high,significant\n";
  for (const auto& e : t.entries)
    out << e.term << ',' << format_double(e.estimate) << ',' << format_double(e.ci_low) << ','
        << format_double(e.ci_high) << ',' << (e.significant ? "true" : "false") << '\n';
}

inline std::uint64_t derive_replicate_seed(std::uint64_t seed, std::uint64_t replicate_index) {
  return derive_seed(seed, replicate_index);
}

// Linear-interpolation sample quantile (Hyndman-Fan type 7) of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ComputeError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double rademacher_weight(Rng& rng) { return (rng.next() >> 63) ? 1.0 : -1.0; }

// Mammen's two-point distribution: mean 0, variance 1, third moment 1.
inline double mammen_weight(Rng& rng) {
  static const double s5 = std::sqrt(5.0);
  const double p_low = (s5 + 1.0) / (2.0 * s5);
  return rng.uniform() < p_low ? -(s5 - 1.0) / 2.0 : (s5 + 1.0) / 2.0;
}

inline double wild_weight(Rng& rng, WildWeights w) {
  return w == WildWeights::Rademacher ? rademacher_weight(rng) : mammen_weight(rng);
}

namespace detail {

constexpr int kMaxRetries = 10;

// Runs `replicate(rng)` for every replicate index. A replicate whose
// statistic fails is retried with a fresh derived seed up to kMaxRetries
// times and then left empty.
template <typename Replicate>
std::vector<std::optional<std::vector<double>>> run_replicates(const BootstrapSpec& spec, Replicate&& replicate) {
  std::vector<std::optional<std::vector<double>>> out(spec.replicates);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= spec.replicates) return;
      const std::uint64_t base = derive_replicate_seed(spec.seed, b);
      try {
        for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
          Rng rng(attempt == 0 ? base : derive_seed(base, static_cast<std::uint64_t>(attempt)));
          std::optional<std::vector<double>> r;
          try {
            r = replicate(rng);
          } catch (const ComputeError&) {
            r.reset();
          }
          if (r) {
            out[b] = std::move(r);
            break;
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(spec.replicates);
        return;
      }
    }
  };

  unsigned threads = spec.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : spec.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, spec.replicates));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline CiTable percentile_table(const std::vector<std::string>& labels, const std::vector<double>& estimate,
                                const std::vector<std::optional<std::vector<double>>>& reps,
                                const BootstrapSpec& spec) {
  CiTable t;
  t.replicates = spec.replicates;
  t.ci_level = spec.ci_level;
  t.method = spec.method;
  std::size_t ok = 0;
  for (const auto& r : reps) ok += r.has_value();
  t.skipped = reps.size() - ok;
  if (static_cast<double>(t.skipped) > 0.01 * static_cast<double>(reps.size()))
    throw ComputeError("bootstrap: " + std::to_string(t.skipped) + " of " + std::to_string(reps.size()) +
                       " replicates failed (more than 1%)");
  const double lo_q = (1.0 - spec.ci_level) / 2.0, hi_q = 1.0 - lo_q;
  std::vector<double> col;
  col.reserve(ok);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    col.clear();
    for (const auto& r : reps)
      if (r) col.push_back((*r)[j]);
    std::sort(col.begin(), col.end());
    CiEntry e;
    e.term = labels[j];
    e.estimate = estimate[j];
    e.ci_low = quantile_sorted(col, lo_q);
    e.ci_high = quantile_sorted(col, hi_q);
    e.significant = e.ci_low > 0.0 || e.ci_high < 0.0;
    t.entries.push_back(std::move(e));
  }
  return t;
}

}  // namespace detail

/// Nonparametric pairs bootstrap.
///
/// `statistic` receives the row indices of a resample (with replacement, same
/// size as the data) and returns one value per label, or std::nullopt when the
/// statistic is undefined on that resample. The point estimate is the statistic
/// on the original rows.
template <typename Statistic>
CiTable pairs_bootstrap(std::size_t observations, const std::vector<std::string>& labels, Statistic&& statistic,
                        const BootstrapSpec& spec) {
  check_spec(spec);
  if (observations < 3) throw ComputeError("pairs_bootstrap: need at least 3 observations");
  std::vector<std::size_t> identity(observations);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  std::optional<std::vector<double>> est = statistic(std::span<const std::size_t>(identity));
  if (!est) throw ComputeError("pairs_bootstrap: statistic undefined on the original sample");
  if (est->size() != labels.size()) throw ComputeError("pairs_bootstrap: statistic size does not match labels");

  auto reps = detail::run_replicates(spec, [&](Rng& rng) -> std::optional<std::vector<double>> {
    std::vector<std::size_t> idx(observations);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(observations));
    auto r = statistic(std::span<const std::size_t>(idx));
    if (r && r->size() != labels.size()) throw ComputeError("pairs_bootstrap: statistic size changed");
    return r;
  });
  BootstrapSpec s = spec;
  s.method = BootstrapMethod::Pairs;
  return detail::percentile_table(labels, *est, reps, s);
}

namespace detail {
// Dense 0..k-1 relabelling in first-appearance order; identity when empty.
inline std::vector<std::size_t> dense_clusters(std::span<const std::size_t> clusters, std::size_t n, std::size_t& k) {
  std::vector<std::size_t> out(n);
  if (clusters.empty()) {
    std::iota(out.begin(), out.end(), std::size_t{0});
    k = n;
    return out;
  }
  if (clusters.size() != n) throw ComputeError("bootstrap: cluster labels do not match the observations");
  std::map<std::size_t, std::size_t> ids;
  for (std::size_t i = 0; i < n; ++i) out[i] = ids.emplace(clusters[i], ids.size()).first->second;
  k = ids.size();
  return out;
}
}  // namespace detail

/// Wild bootstrap of OLS coefficients: y* = fitted + residual * w with
/// mean-zero unit-variance weights, refit on the fixed design. Residuals are
/// leverage-adjusted (HC2 style). With cluster
/// labels (and spec.cluster set) all observations of a cluster share one
/// weight; otherwise every observation draws its own.
inline CiTable wild_bootstrap(const Matrix& x, std::span<const double> y, const std::vector<std::string>& labels,
                              const BootstrapSpec& spec, std::span<const std::size_t> clusters = {}) {
  check_spec(spec);
  QrLeastSquares qr(x, labels);
  const auto coef = qr.solve(y);
  const auto fitted = x.multiply(coef);
  // residuals rescaled by 1/sqrt(1 - h_ii); raw residuals are too small where leverage is high
  const auto h = qr.leverage();
  std::vector<double> resid(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    resid[i] = y[i] - fitted[i];
    if (h[i] < 1.0 - 1e-12) resid[i] /= std::sqrt(1.0 - h[i]);
  }
  std::size_t k = 0;
  const auto cl = detail::dense_clusters(spec.cluster ? clusters : std::span<const std::size_t>{}, y.size(), k);

  auto reps = detail::run_replicates(spec, [&](Rng& rng) -> std::optional<std::vector<double>> {
    std::vector<double> w(k);
    for (auto& v : w) v = wild_weight(rng, spec.wild_weights);
    std::vector<double> ystar(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) ystar[i] = fitted[i] + resid[i] * w[cl[i]];
    return qr.solve(ystar);
  });
  BootstrapSpec s = spec;
  s.method = BootstrapMethod::Wild;
  return detail::percentile_table(labels.empty() ? std::vector<std::string>(coef.size()) : labels, coef, reps, s);
}

}  // namespace fuzzeval
