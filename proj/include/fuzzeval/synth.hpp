#pragma once

// Synthetic fuzzing campaigns with known ground truth.
//
// Properties are drawn per program (text size, instruction mix) and per trial
// (a corpus sampled from a per-program pool). Each trial then orders the
// fuzzers according to one of three modes:
//
//  ExpectedRank    the expected fuzzer rank is exactly linear in the property
//                  ranks, so the explainable model is correctly specified and
//                  the injected coefficients are the population values. Ranks
//                  are sampled as random permutations with those expectations.
//  LatentLinear    latent score linear in property ranks plus Gaussian noise;
//                  the fuzzer order is the latent order.
//  LatentMonotone  as LatentLinear, but performance is a steep exponential of
//                  the latent score: a monotone non-linearity that leaves every
//                  rank, and hence every rank statistic, unchanged.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bench_props.hpp"
#include "data_model.hpp"
#include "error.hpp"
#include "random.hpp"
#include "ranking.hpp"
#include "regression.hpp"

namespace fuzzeval {

enum class SynthMode { ExpectedRank, LatentLinear, LatentMonotone };

inline std::string_view to_string(SynthMode m) {
  switch (m) {
    case SynthMode::ExpectedRank: return "expected-rank";
    case SynthMode::LatentLinear: return "latent-linear";
    case SynthMode::LatentMonotone: return "latent-monotone";
  }
  return "?";
}

inline SynthMode parse_synth_mode(std::string_view s) {
  if (s == "expected-rank") return SynthMode::ExpectedRank;
  if (s == "latent-linear") return SynthMode::LatentLinear;
  if (s == "latent-monotone") return SynthMode::LatentMonotone;
  throw Error("unknown synth mode '" + std::string(s) + "'");
}

struct SynthFuzzer {
  std::string id;
  // Skill at the reference levels and change per property rank step. In
  // ExpectedRank mode both are in rank units and are centered across fuzzers
  // before use, since the ranks of a trial always sum to n(n+1)/2.
  double base = 0.0;
  std::map<PropertyKey, double> sensitivity;
};

// Distribution parameters of the generated properties.
struct PropertyModel {
  double text_bytes_min = 2.0e4;
  double text_bytes_max = 2.0e6;
  double eq_proportion_min = 0.3;
  double eq_proportion_max = 0.7;
  double extern_min = 0.05;
  double extern_max = 0.4;
  double pool_min = 200;
  double pool_max = 5000;
  double sample_mean_fraction = 0.2;
  double seed_bytes_log_mean = 7.5;  // natural-log scale
  double seed_bytes_log_sd = 1.0;
  double exec_ns_log_mean = 10.5;
  double exec_ns_log_sd = 0.8;
  double exec_bytes_coupling = 0.3;  // correlation of log exec time with log seed size
  double coverage_noise_log_sd = 0.05;
};

struct SynthSpec {
  std::size_t programs = 11;
  std::size_t trials_per_program = 24;
  std::vector<SynthFuzzer> fuzzers;
  std::string reference_fuzzer;  // empty: first fuzzer
  PropertyModel property_model;
  SynthMode mode = SynthMode::ExpectedRank;
  double noise_sd = 1.0;  // latent modes only
  std::uint64_t seed = 1;
};

struct GroundTruth {
  SynthMode mode = SynthMode::ExpectedRank;
  std::string reference_fuzzer;
  // Coefficients of the default explainable model, keyed by term label.
  std::map<std::string, double> mlr;
  // Per-fuzzer marginal slope of rank on each property rank ("<fuzzer>|<key>").
  std::map<std::string, double> slopes;
};

struct SynthResult {
  Dataset dataset;
  GroundTruth truth;
};

// Scope and reference level under which a property enters the generator's
// linear form; identical to the default explainable design.
inline Predictor synth_predictor(const PropertyKey& key, std::size_t programs) {
  if (is_program_key(key)) return {key, RankScope::Program, (static_cast<double>(programs) + 1.0) / 2.0};
  return {key, RankScope::WithinProgram, 1.0};
}

namespace detail {

// Is x (any order) in the permutohedron of (1..n)?
inline bool in_permutohedron(std::vector<double> x, double tol = 1e-9) {
  std::sort(x.begin(), x.end());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += x[i];
    const double need = static_cast<double>((i + 1) * (i + 2)) / 2.0;
    if (s < need - tol) return false;
  }
  const double n = static_cast<double>(x.size());
  return std::abs(s - n * (n + 1) / 2) <= tol * n;
}

/// Draws a permutation of ranks 1..n whose expectation is exactly `mu`.
///
/// With positions sorted by descending mu, mu is majorized by (n, ..., 1) and
/// is reached from it by a finite chain of T-transforms
/// T = lambda I + (1 - lambda) Q_jk. Applying each transposition Q_jk with
/// probability 1 - lambda to a random rank vector applies T to its mean.
inline std::vector<double> sample_permutation_with_mean(const std::vector<double>& mu, Rng& rng) {
  const std::size_t n = mu.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mu[a] > mu[b]; });
  std::vector<double> x(n), y(n), r(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = mu[order[i]];
    y[i] = static_cast<double>(n - i);
    r[i] = y[i];
  }
  constexpr double tol = 1e-12;
  for (std::size_t step = 0; step < 2 * n; ++step) {
    std::size_t j = n;
    for (std::size_t i = n; i-- > 0;)
      if (y[i] > x[i] + tol) {
        j = i;
        break;
      }
    if (j == n) break;
    std::size_t k = n;
    for (std::size_t i = j + 1; i < n; ++i)
      if (y[i] < x[i] - tol) {
        k = i;
        break;
      }
    if (k == n) break;
    const double delta = std::min(y[j] - x[j], x[k] - y[k]);
    const double swap_p = delta / (y[j] - y[k]);
    y[j] -= delta;
    y[k] += delta;
    if (rng.uniform() < swap_p) std::swap(r[j], r[k]);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[order[i]] = r[i];
  return out;
}

}  // namespace detail

/// Generates a balanced dataset and the coefficients it was generated from.
inline SynthResult generate(const SynthSpec& spec) {
  if (spec.programs < 1 || spec.trials_per_program < 1 || spec.fuzzers.empty())
    throw Error("synth: programs, trials and fuzzers must all be non-empty");
  if (!std::isfinite(spec.noise_sd) || spec.noise_sd < 0) throw Error("synth: noise_sd must be finite and >= 0");
  const auto& pm = spec.property_model;
  if (!(pm.text_bytes_min > 0 && pm.text_bytes_min <= pm.text_bytes_max && pm.pool_min >= 1 &&
        pm.pool_min <= pm.pool_max && pm.sample_mean_fraction > 0 && std::abs(pm.exec_bytes_coupling) <= 1 &&
        pm.eq_proportion_min >= 0 && pm.eq_proportion_max <= 1 && pm.extern_min >= 0 && pm.extern_max <= 1))
    throw Error("synth: invalid property model parameters");
  const std::size_t nf = spec.fuzzers.size();
  const std::string ref = spec.reference_fuzzer.empty() ? spec.fuzzers.front().id : spec.reference_fuzzer;
  std::size_t ref_idx = nf;
  for (std::size_t f = 0; f < nf; ++f)
    if (spec.fuzzers[f].id == ref) ref_idx = f;
  if (ref_idx == nf) throw Error("synth: reference fuzzer '" + ref + "' not among fuzzers");

  // Properties that carry a coefficient, in first-mention order.
  std::vector<PropertyKey> active;
  for (const auto& fz : spec.fuzzers)
    for (const auto& [k, v] : fz.sensitivity)
      if (std::find(active.begin(), active.end(), k) == active.end()) active.push_back(k);
  for (const auto& k : active)
    if (!is_known_key(k) || k == keys::init_coverage_fraction)
      throw Error("synth: cannot generate property '" + k + "'");

  // Effective coefficients (centered across fuzzers in ExpectedRank mode).
  std::vector<double> base(nf);
  std::vector<std::map<PropertyKey, double>> sens(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    base[f] = spec.fuzzers[f].base;
    for (const auto& k : active) {
      auto it = spec.fuzzers[f].sensitivity.find(k);
      sens[f][k] = it == spec.fuzzers[f].sensitivity.end() ? 0.0 : it->second;
    }
  }
  if (spec.mode == SynthMode::ExpectedRank) {
    const double mb = std::accumulate(base.begin(), base.end(), 0.0) / static_cast<double>(nf);
    for (auto& b : base) b -= mb;
    for (const auto& k : active) {
      double m = 0.0;
      for (std::size_t f = 0; f < nf; ++f) m += sens[f][k];
      m /= static_cast<double>(nf);
      for (std::size_t f = 0; f < nf; ++f) sens[f][k] -= m;
    }
  }
  const double offset = spec.mode == SynthMode::ExpectedRank ? (static_cast<double>(nf) + 1.0) / 2.0 : 0.0;

  Rng rng(spec.seed);
  struct Unit {
    std::size_t program;
    std::uint32_t trial;
    std::map<PropertyKey, double> props;
    double perf_base;
  };
  std::vector<Unit> units;
  std::vector<std::string> program_ids;
  for (std::size_t p = 0; p < spec.programs; ++p) {
    program_ids.push_back("prog" + std::string(p < 9 ? "0" : "") + std::to_string(p + 1));
    const double text = std::round(std::exp(rng.uniform(std::log(pm.text_bytes_min), std::log(pm.text_bytes_max))));
    const double eq = rng.uniform(pm.eq_proportion_min, pm.eq_proportion_max);
    const double ext = rng.uniform(pm.extern_min, pm.extern_max);
    const auto pool =
        static_cast<std::size_t>(std::round(std::exp(rng.uniform(std::log(pm.pool_min), std::log(pm.pool_max)))));
    const double reachable = text / 16.0;
    for (std::size_t t = 0; t < spec.trials_per_program; ++t) {
      Unit u;
      u.program = p;
      u.trial = static_cast<std::uint32_t>(t);
      const double raw = draw_sample_size(rng, pool, pm.sample_mean_fraction);
      const double k = static_cast<double>(std::clamp<long long>(std::llround(raw), 1, static_cast<long long>(pool)));
      const double cov = std::round(reachable * 0.6 * (1.0 - std::exp(-k / (0.05 * static_cast<double>(pool)))) *
                                    std::exp(rng.normal(0.0, pm.coverage_noise_log_sd)));
      const double zb = rng.normal();
      const double c = pm.exec_bytes_coupling;
      const double ze = c * zb + std::sqrt(1.0 - c * c) * rng.normal();
      const double bytes = std::round(std::exp(pm.seed_bytes_log_mean + pm.seed_bytes_log_sd * zb));
      const double exec = std::round(std::exp(pm.exec_ns_log_mean + pm.exec_ns_log_sd * ze));
      u.props = {{keys::seed_count, k},
                 {keys::init_coverage, cov},
                 {keys::mean_seed_bytes, bytes},
                 {keys::mean_exec_ns, exec},
                 {keys::corpus_total_bytes, k * bytes},
                 {keys::program_text_bytes, text},
                 {keys::eq_proportion, eq},
                 {keys::ineq_proportion, 1.0 - eq},
                 {keys::extern_call_proportion, ext}};
      u.perf_base = 1.5 * cov + 0.2 * reachable;
      units.push_back(std::move(u));
    }
  }

  // Property ranks under the generator's scopes.
  std::map<PropertyKey, std::vector<double>> centered;
  for (const auto& k : active) {
    const auto pred = synth_predictor(k, spec.programs);
    std::vector<double> ranks(units.size());
    if (pred.scope == RankScope::Program) {
      std::vector<double> vals(spec.programs);
      for (const auto& u : units) vals[u.program] = u.props.at(k);
      auto r = fractional_ranks(vals);
      for (std::size_t i = 0; i < units.size(); ++i) ranks[i] = r[units[i].program];
    } else {
      for (std::size_t p = 0; p < spec.programs; ++p) {
        std::vector<std::size_t> members;
        std::vector<double> vals;
        for (std::size_t i = 0; i < units.size(); ++i)
          if (units[i].program == p) {
            members.push_back(i);
            vals.push_back(units[i].props.at(k));
          }
        auto r = fractional_ranks(vals);
        for (std::size_t i = 0; i < members.size(); ++i) ranks[members[i]] = r[i];
      }
    }
    for (auto& v : ranks) v -= pred.reference_level;
    centered[k] = std::move(ranks);
  }

  std::vector<TrialRecord> rows;
  rows.reserve(units.size() * nf);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    std::vector<double> lin(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      lin[f] = offset + base[f];
      for (const auto& k : active) lin[f] += sens[f].at(k) * centered[k][i];
    }
    std::vector<double> perf(nf);
    if (spec.mode == SynthMode::ExpectedRank) {
      if (!detail::in_permutohedron(lin))
        throw ComputeError("synth: expected ranks of program '" + program_ids[u.program] + "' trial " +
                           std::to_string(u.trial) + " are infeasible; reduce the coefficient magnitudes");
      auto r = detail::sample_permutation_with_mean(lin, rng);
      for (std::size_t f = 0; f < nf; ++f) perf[f] = std::round(u.perf_base * (1.0 + 0.03 * r[f]));
    } else {
      for (std::size_t f = 0; f < nf; ++f) {
        const double latent = lin[f] + rng.normal(0.0, spec.noise_sd);
        perf[f] = spec.mode == SynthMode::LatentLinear ? u.perf_base * std::exp(0.01 * latent)
                                                       : u.perf_base * std::exp(2.0 * latent);
      }
    }
    for (std::size_t f = 0; f < nf; ++f) {
      TrialRecord t;
      t.program = program_ids[u.program];
      t.fuzzer = spec.fuzzers[f].id;
      t.trial = u.trial;
      t.properties = u.props;
      t.performance = perf[f];
      rows.push_back(std::move(t));
    }
  }

  SynthResult res{Dataset(std::move(rows)), {}};
  auto& gt = res.truth;
  gt.mode = spec.mode;
  gt.reference_fuzzer = ref;
  gt.mlr[terms::intercept()] = offset + base[ref_idx];
  for (const auto& k : active) gt.mlr[terms::prop(k)] = sens[ref_idx].at(k);
  for (std::size_t f = 0; f < nf; ++f) {
    for (const auto& k : active) gt.slopes[spec.fuzzers[f].id + "|" + k] = sens[f].at(k);
    if (f == ref_idx) continue;
    gt.mlr[terms::fuzzer(spec.fuzzers[f].id)] = base[f] - base[ref_idx];
    for (const auto& k : active) gt.mlr[terms::inter(k, spec.fuzzers[f].id)] = sens[f].at(k) - sens[ref_idx].at(k);
  }
  return res;
}

/// Four fuzzers on 11 programs x 24 trials. The reference fuzzer loses rank
/// with higher initial coverage, slower seeds and larger programs; one fuzzer
/// starts behind; another gains with program size; mean seed size has no
/// effect.
inline SynthSpec fixture_spec(std::uint64_t seed = 20220505) {
  SynthSpec s;
  s.programs = 11;
  s.trials_per_program = 24;
  s.mode = SynthMode::ExpectedRank;
  s.seed = seed;
  s.reference_fuzzer = "libfuzzer";
  s.fuzzers = {
      {"libfuzzer", 1.0,
       {{keys::init_coverage, -0.030}, {keys::mean_exec_ns, -0.015}, {keys::mean_seed_bytes, 0.0},
        {keys::program_text_bytes, -0.080}}},
      {"afl", -1.1,
       {{keys::init_coverage, -0.005}, {keys::mean_exec_ns, 0.010}, {keys::mean_seed_bytes, 0.0},
        {keys::program_text_bytes, 0.0}}},
      {"aflplusplus", 0.7,
       {{keys::init_coverage, 0.015}, {keys::mean_exec_ns, 0.005}, {keys::mean_seed_bytes, 0.0},
        {keys::program_text_bytes, 0.050}}},
      {"entropic", -0.6,
       {{keys::init_coverage, 0.020}, {keys::mean_exec_ns, 0.0}, {keys::mean_seed_bytes, 0.0},
        {keys::program_text_bytes, 0.030}}},
  };
  return s;
}

inline SynthResult fixture_result() { return generate(fixture_spec()); }

inline Dataset fixture_dataset() { return fixture_result().dataset; }

inline nlohmann::json to_json(const GroundTruth& t) {
  return {{"mode", to_string(t.mode)}, {"reference_fuzzer", t.reference_fuzzer}, {"mlr", t.mlr}, {"slopes", t.slopes}};
}

/// Reads a generator spec. Omitted fields keep their defaults; `fuzzers` is
/// required.
inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  try {
    SynthSpec s;
    s.programs = j.value("programs", s.programs);
    s.trials_per_program = j.value("trials_per_program", s.trials_per_program);
    s.reference_fuzzer = j.value("reference_fuzzer", s.reference_fuzzer);
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.seed = j.value("seed", s.seed);
    if (j.contains("mode")) s.mode = parse_synth_mode(j.at("mode").get<std::string>());
    for (const auto& f : j.at("fuzzers")) {
      SynthFuzzer fz;
      fz.id = f.at("id").get<std::string>();
      fz.base = f.value("base", 0.0);
      if (f.contains("sensitivity")) fz.sensitivity = f.at("sensitivity").get<std::map<PropertyKey, double>>();
      s.fuzzers.push_back(std::move(fz));
    }
    if (j.contains("property_model")) {
      const auto& m = j.at("property_model");
      auto& pm = s.property_model;
      pm.text_bytes_min = m.value("text_bytes_min", pm.text_bytes_min);
      pm.text_bytes_max = m.value("text_bytes_max", pm.text_bytes_max);
      pm.eq_proportion_min = m.value("eq_proportion_min", pm.eq_proportion_min);
      pm.eq_proportion_max = m.value("eq_proportion_max", pm.eq_proportion_max);
      pm.extern_min = m.value("extern_min", pm.extern_min);
      pm.extern_max = m.value("extern_max", pm.extern_max);
      pm.pool_min = m.value("pool_min", pm.pool_min);
      pm.pool_max = m.value("pool_max", pm.pool_max);
      pm.sample_mean_fraction = m.value("sample_mean_fraction", pm.sample_mean_fraction);
      pm.seed_bytes_log_mean = m.value("seed_bytes_log_mean", pm.seed_bytes_log_mean);
      pm.seed_bytes_log_sd = m.value("seed_bytes_log_sd", pm.seed_bytes_log_sd);
      pm.exec_ns_log_mean = m.value("exec_ns_log_mean", pm.exec_ns_log_mean);
      pm.exec_ns_log_sd = m.value("exec_ns_log_sd", pm.exec_ns_log_sd);
      pm.exec_bytes_coupling = m.value("exec_bytes_coupling", pm.exec_bytes_coupling);
      pm.coverage_noise_log_sd = m.value("coverage_noise_log_sd", pm.coverage_noise_log_sd);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid synth spec: ") + e.what());
  }
}

}  // namespace fuzzeval
