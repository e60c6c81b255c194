#pragma once

// Rank transformation with average-rank ties.
//
// Orientation: ascending everywhere (smallest value -> rank 1). For fuzzer
// ranks this means rank |fuzzers| is the fuzzer with the most coverage in the
// trial, so a negative regression coefficient reads as "ranking worsens".

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "data_model.hpp"
#include "error.hpp"

namespace fuzzeval {

enum class RankScope {
  WithinProgram,  // over the trials of one program
  Global,         // over all (program, trial) pairs in the dataset
  Program,        // one value per program, ranked across programs
};

inline std::string_view to_string(RankScope s) {
  switch (s) {
    case RankScope::WithinProgram: return "within";
    case RankScope::Global: return "global";
    case RankScope::Program: return "program";
  }
  return "?";
}

inline RankScope parse_rank_scope(std::string_view s) {
  if (s == "within") return RankScope::WithinProgram;
  if (s == "global") return RankScope::Global;
  if (s == "program") return RankScope::Program;
  throw Error("unknown rank scope '" + std::string(s) + "' (expected within, global or program)");
}

/// Fractional ranks: rank_i = #{v_j < v_i} + (1 + #{v_j == v_i}) / 2.
template <typename T>
std::vector<double> fractional_ranks(std::span<const T> values) {
  if (values.empty()) throw ComputeError("fractional_ranks: empty input");
  for (const auto& v : values)
    if (!std::isfinite(static_cast<double>(v))) throw ComputeError("fractional_ranks: non-finite value");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });

  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = static_cast<double>(i + j + 2) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline std::vector<double> fractional_ranks(const std::vector<double>& values) {
  return fractional_ranks(std::span<const double>(values));
}

struct RankRequest {
  PropertyKey key;
  RankScope scope = RankScope::WithinProgram;
};

/// Dataset rows augmented with property, performance and fuzzer ranks.
///
/// Every rank vector is indexed like base().trials(). Property ranks are
/// computed once per (program, trial) unit and broadcast to the unit's rows.
class RankedDataset {
 public:
  const Dataset& base() const noexcept { return base_; }
  std::size_t rows() const noexcept { return base_.size(); }

  // (program, trial) units in first-appearance order, and each row's unit.
  const std::vector<TrialKey>& units() const noexcept { return units_; }
  const std::vector<std::size_t>& unit_of_row() const noexcept { return unit_of_row_; }
  const std::vector<std::size_t>& program_of_row() const noexcept { return program_of_row_; }
  const std::vector<std::size_t>& fuzzer_of_row() const noexcept { return fuzzer_of_row_; }

  bool has_property_rank(const PropertyKey& key, RankScope scope) const {
    return property_ranks_.count({key, scope}) > 0;
  }

  const std::vector<double>& property_rank(const PropertyKey& key, RankScope scope) const {
    auto it = property_ranks_.find({key, scope});
    if (it == property_ranks_.end())
      throw ComputeError("property '" + key + "' not ranked at scope " + std::string(to_string(scope)));
    return it->second;
  }

  // Rank of each row's performance among all rows of its program (WithinProgram)
  // or of the whole dataset (Global and Program).
  const std::vector<double>& perf_rank(RankScope scope) const {
    return scope == RankScope::WithinProgram ? perf_within_ : perf_global_;
  }

  // Rank of the row's fuzzer among the fuzzers of the same trial, in [1, |fuzzers|].
  const std::vector<double>& fuzzer_rank() const noexcept { return fuzzer_rank_; }

  // Per-unit property ranks (one value per unit) for the requested scope.
  std::vector<double> unit_property_rank(const PropertyKey& key, RankScope scope) const {
    const auto& per_row = property_rank(key, scope);
    std::vector<double> out(units_.size());
    for (std::size_t r = 0; r < per_row.size(); ++r) out[unit_of_row_[r]] = per_row[r];
    return out;
  }

 private:
  friend RankedDataset rank_dataset(const Dataset&, std::span<const RankRequest>);

  Dataset base_;
  std::vector<TrialKey> units_;
  std::vector<std::size_t> unit_of_row_;
  std::vector<std::size_t> program_of_row_;
  std::vector<std::size_t> fuzzer_of_row_;
  std::map<std::pair<PropertyKey, RankScope>, std::vector<double>> property_ranks_;
  std::vector<double> perf_within_;
  std::vector<double> perf_global_;
  std::vector<double> fuzzer_rank_;
};

/// Ranks the requested properties (each at its own scope), performance at
/// both row scopes, and every fuzzer within its trial.
inline RankedDataset rank_dataset(const Dataset& d, std::span<const RankRequest> requests) {
  if (d.empty()) throw DataError("cannot rank an empty dataset");
  RankedDataset rd;
  rd.base_ = d;
  const auto& trials = d.trials();
  const std::size_t n = trials.size();

  std::map<TrialKey, std::size_t> unit_index;
  rd.unit_of_row_.resize(n);
  rd.program_of_row_.resize(n);
  rd.fuzzer_of_row_.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    TrialKey tk{trials[r].program, trials[r].trial};
    auto [it, inserted] = unit_index.emplace(tk, rd.units_.size());
    if (inserted) rd.units_.push_back(tk);
    rd.unit_of_row_[r] = it->second;
    rd.program_of_row_[r] = d.program_index(trials[r].program);
    rd.fuzzer_of_row_[r] = d.fuzzer_index(trials[r].fuzzer);
  }
  const std::size_t n_units = rd.units_.size();
  std::vector<std::size_t> unit_first_row(n_units, n);
  for (std::size_t r = 0; r < n; ++r)
    if (unit_first_row[rd.unit_of_row_[r]] == n) unit_first_row[rd.unit_of_row_[r]] = r;
  std::vector<std::size_t> unit_program(n_units);
  for (std::size_t u = 0; u < n_units; ++u) unit_program[u] = d.program_index(rd.units_[u].program);

  for (const auto& req : requests) {
    if (rd.property_ranks_.count({req.key, req.scope})) continue;
    std::vector<double> unit_values(n_units);
    for (std::size_t r = 0; r < n; ++r) {
      auto it = trials[r].properties.find(req.key);
      if (it == trials[r].properties.end())
        throw DataError("property '" + req.key + "' missing for program '" + trials[r].program + "' trial " +
                        std::to_string(trials[r].trial) + " fuzzer '" + trials[r].fuzzer + "'");
    }
    for (std::size_t u = 0; u < n_units; ++u)
      unit_values[u] = trials[unit_first_row[u]].properties.at(req.key);

    std::vector<double> unit_ranks(n_units);
    switch (req.scope) {
      case RankScope::Global:
        unit_ranks = fractional_ranks(unit_values);
        break;
      case RankScope::WithinProgram:
        for (std::size_t p = 0; p < d.programs().size(); ++p) {
          std::vector<std::size_t> members;
          std::vector<double> vals;
          for (std::size_t u = 0; u < n_units; ++u)
            if (unit_program[u] == p) {
              members.push_back(u);
              vals.push_back(unit_values[u]);
            }
          auto rk = fractional_ranks(vals);
          for (std::size_t i = 0; i < members.size(); ++i) unit_ranks[members[i]] = rk[i];
        }
        break;
      case RankScope::Program: {
        const std::size_t n_prog = d.programs().size();
        std::vector<double> prog_value(n_prog, std::nan(""));
        for (std::size_t u = 0; u < n_units; ++u) {
          auto p = unit_program[u];
          if (std::isnan(prog_value[p])) {
            prog_value[p] = unit_values[u];
          } else if (prog_value[p] != unit_values[u]) {
            throw DataError("property '" + req.key + "' varies across trials of program '" + d.programs()[p] +
                            "'; program-level ranking needs one value per program");
          }
        }
        auto rk = fractional_ranks(prog_value);
        for (std::size_t u = 0; u < n_units; ++u) unit_ranks[u] = rk[unit_program[u]];
        break;
      }
    }
    std::vector<double> row_ranks(n);
    for (std::size_t r = 0; r < n; ++r) row_ranks[r] = unit_ranks[rd.unit_of_row_[r]];
    rd.property_ranks_.emplace(std::make_pair(req.key, req.scope), std::move(row_ranks));
  }

  std::vector<double> perf(n);
  for (std::size_t r = 0; r < n; ++r) perf[r] = trials[r].performance;
  rd.perf_global_ = fractional_ranks(perf);
  rd.perf_within_.resize(n);
  for (std::size_t p = 0; p < d.programs().size(); ++p) {
    std::vector<std::size_t> members;
    std::vector<double> vals;
    for (std::size_t r = 0; r < n; ++r)
      if (rd.program_of_row_[r] == p) {
        members.push_back(r);
        vals.push_back(perf[r]);
      }
    auto rk = fractional_ranks(vals);
    for (std::size_t i = 0; i < members.size(); ++i) rd.perf_within_[members[i]] = rk[i];
  }

  std::vector<std::vector<std::size_t>> rows_of_unit(n_units);
  for (std::size_t r = 0; r < n; ++r) rows_of_unit[rd.unit_of_row_[r]].push_back(r);
  rd.fuzzer_rank_.resize(n);
  for (const auto& rows : rows_of_unit) {
    std::vector<double> vals;
    for (auto r : rows) vals.push_back(perf[r]);
    auto rk = fractional_ranks(vals);
    for (std::size_t i = 0; i < rows.size(); ++i) rd.fuzzer_rank_[rows[i]] = rk[i];
  }
  return rd;
}

inline RankedDataset rank_dataset(const Dataset& d, const std::vector<PropertyKey>& keys, RankScope scope) {
  std::vector<RankRequest> reqs;
  for (const auto& k : keys) reqs.push_back({k, scope});
  return rank_dataset(d, std::span<const RankRequest>(reqs));
}

inline RankedDataset rank_dataset(const Dataset& d, const std::vector<RankRequest>& requests) {
  return rank_dataset(d, std::span<const RankRequest>(requests));
}

/// Rank of each fuzzer among the fuzzers of its (program, trial), keyed by
/// (program, trial, fuzzer). Rank |fuzzers| is the most coverage.
inline std::map<std::tuple<std::string, std::uint32_t, std::string>, double> fuzzer_ranks_per_trial(
    const Dataset& d) {
  std::map<TrialKey, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < d.size(); ++r) groups[TrialKey{d.trials()[r].program, d.trials()[r].trial}].push_back(r);
  std::map<std::tuple<std::string, std::uint32_t, std::string>, double> out;
  for (const auto& [tk, rows] : groups) {
    std::vector<double> vals;
    for (auto r : rows) vals.push_back(d.trials()[r].performance);
    auto rk = fractional_ranks(vals);
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.emplace(std::make_tuple(tk.program, tk.trial, d.trials()[rows[i]].fuzzer), rk[i]);
  }
  return out;
}

}  // namespace fuzzeval
