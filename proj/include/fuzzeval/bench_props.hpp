#pragma once

// Benchmark properties from raw artifacts: corpus manifests, objdump-style
// section-header and disassembly dumps; and the exponential corpus sampler.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "data_model.hpp"
#include "error.hpp"
#include "random.hpp"

namespace fuzzeval {

struct SeedEntry {
  std::string id;
  double size_bytes = 0.0;
  double exec_ns = 0.0;
  std::vector<std::uint64_t> covered;  // branch ids
};

struct CorpusManifest {
  std::vector<SeedEntry> entries;
  std::optional<std::uint64_t> universe;  // total branch count, if known
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s, int base = 10) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads `seed_id,size_bytes,exec_ns,covered` rows; `covered` is a
/// ';'-separated list of branch ids. An optional first line `#universe=<N>`
/// gives the total branch count.
inline CorpusManifest parse_corpus_manifest(std::istream& in) {
  CorpusManifest m;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    auto s = detail::trim(line);
    if (s.empty()) continue;
    if (!header_seen && s.starts_with("#universe=")) {
      auto n = detail::parse_u64(s.substr(10));
      if (!n) throw DataError("invalid universe pragma", line_no);
      m.universe = *n;
      continue;
    }
    if (s.front() == '#') continue;
    auto f = detail::split_csv_line(s, line_no);
    if (!header_seen) {
      if (f.size() != 4 || f[0] != "seed_id" || f[1] != "size_bytes" || f[2] != "exec_ns" || f[3] != "covered")
        throw DataError("manifest header must be seed_id,size_bytes,exec_ns,covered", line_no);
      header_seen = true;
      continue;
    }
    if (f.size() != 4) throw DataError("expected 4 fields", line_no);
    SeedEntry e;
    e.id = std::string(detail::trim(f[0]));
    if (e.id.empty()) throw DataError("empty seed id", line_no);
    if (!ids.insert(e.id).second) throw DataError("duplicate seed id '" + e.id + "'", line_no);
    auto size = parse_double(f[1]);
    auto exec = parse_double(f[2]);
    if (!size || !std::isfinite(*size) || *size < 0) throw DataError("invalid size_bytes", line_no);
    if (!exec || !std::isfinite(*exec) || *exec < 0) throw DataError("invalid exec_ns", line_no);
    e.size_bytes = *size;
    e.exec_ns = *exec;
    std::string_view cov = detail::trim(f[3]);
    while (!cov.empty()) {
      auto pos = cov.find(';');
      auto tok = cov.substr(0, pos);
      auto id = detail::parse_u64(tok);
      if (!id) throw DataError("invalid branch id '" + std::string(tok) + "'", line_no);
      if (m.universe && *id >= *m.universe) throw DataError("branch id outside universe", line_no);
      e.covered.push_back(*id);
      if (pos == std::string_view::npos) break;
      cov.remove_prefix(pos + 1);
    }
    m.entries.push_back(std::move(e));
  }
  if (!header_seen) throw DataError("missing manifest header");
  return m;
}

/// Corpus properties: seed count, mean seed size, mean execution time, total
/// size, and initial coverage as the size of the union of covered branches
/// (plus the covered fraction when the universe is known).
inline std::map<PropertyKey, double> corpus_properties(const CorpusManifest& m) {
  if (m.entries.empty()) throw DataError("corpus manifest is empty");
  std::set<std::uint64_t> uni;
  double total = 0.0, exec = 0.0;
  for (const auto& e : m.entries) {
    total += e.size_bytes;
    exec += e.exec_ns;
    uni.insert(e.covered.begin(), e.covered.end());
  }
  const double n = static_cast<double>(m.entries.size());
  std::map<PropertyKey, double> out{
      {keys::seed_count, n},
      {keys::mean_seed_bytes, total / n},
      {keys::mean_exec_ns, exec / n},
      {keys::corpus_total_bytes, total},
      {keys::init_coverage, static_cast<double>(uni.size())},
  };
  if (m.universe && *m.universe > 0)
    out[keys::init_coverage_fraction] = static_cast<double>(uni.size()) / static_cast<double>(*m.universe);
  return out;
}

/// Size in bytes of the `.text` section from an `objdump -h` listing.
inline std::uint64_t parse_section_headers(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string idx, name, size;
    if (!(ls >> idx >> name)) continue;
    if (name != ".text" || !detail::parse_u64(idx)) continue;
    if (!(ls >> size)) throw DataError(".text section has no size field");
    auto v = detail::parse_u64(size, 16);
    if (!v) throw DataError("unparseable .text size '" + size + "'");
    return *v;
  }
  throw DataError("no .text section in section-header dump");
}

struct DisasmSummary {
  std::uint64_t text_bytes = 0;
  std::uint64_t cond_branches_eq = 0;
  std::uint64_t cond_branches_ineq = 0;
  std::uint64_t calls_total = 0;
  std::uint64_t calls_extern = 0;

  DisasmSummary& operator+=(const DisasmSummary& o) {
    text_bytes += o.text_bytes;
    cond_branches_eq += o.cond_branches_eq;
    cond_branches_ineq += o.cond_branches_ineq;
    calls_total += o.calls_total;
    calls_extern += o.calls_extern;
    return *this;
  }
  bool operator==(const DisasmSummary&) const = default;
};

enum class ComparisonClass { None, Equality, Inequality };

// x86-64 conditional forms. Equality: zero-flag tests. Inequality: signed,
// unsigned and sign-flag orderings. Parity and overflow forms are neither.
inline ComparisonClass classify_mnemonic(std::string_view m) {
  static const std::set<std::string_view> eq = {"je",   "jne",   "jz",     "jnz",   "sete",  "setne",
                                                "setz", "setnz", "cmove",  "cmovne", "cmovz", "cmovnz"};
  static const std::set<std::string_view> ineq_cc = {"l", "le", "g", "ge", "a", "ae", "b", "be", "s", "ns"};
  if (eq.count(m)) return ComparisonClass::Equality;
  for (std::string_view prefix : {"cmov", "set", "j"}) {
    if (m.starts_with(prefix) && ineq_cc.count(m.substr(prefix.size()))) return ComparisonClass::Inequality;
  }
  return ComparisonClass::None;
}

/// Counts comparison branches and calls in an `objdump -d` listing.
/// Instruction lines have the form `addr:\tbytes\tmnemonic operands`; other
/// lines and unknown mnemonics are ignored. A call is external when its
/// target symbol carries the `@plt` marker.
inline DisasmSummary parse_disassembly(std::string_view text) {
  static const std::set<std::string_view> prefixes = {"bnd", "notrack", "rep", "repz", "repe",
                                                      "repnz", "repne", "lock", "cs", "ds", "data16"};
  DisasmSummary s;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;

    auto t1 = line.find('\t');
    if (t1 == std::string_view::npos || t1 == 0 || line[t1 - 1] != ':') continue;
    auto t2 = line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) continue;
    auto insn = detail::trim(line.substr(t2 + 1));
    if (insn.empty()) continue;

    std::string_view mnemonic;
    std::string_view rest = insn;
    for (;;) {
      auto sp = rest.find_first_of(" \t");
      mnemonic = rest.substr(0, sp);
      rest = sp == std::string_view::npos ? std::string_view{} : detail::trim(rest.substr(sp));
      if (!prefixes.count(mnemonic) || rest.empty()) break;
    }

    switch (classify_mnemonic(mnemonic)) {
      case ComparisonClass::Equality: ++s.cond_branches_eq; break;
      case ComparisonClass::Inequality: ++s.cond_branches_ineq; break;
      case ComparisonClass::None: break;
    }
    if (mnemonic == "call" || mnemonic == "callq") {
      ++s.calls_total;
      if (rest.find("@plt") != std::string_view::npos) ++s.calls_extern;
    }
  }
  return s;
}

/// Program properties; proportions with a zero denominator are omitted.
inline std::map<PropertyKey, double> program_properties(const DisasmSummary& s) {
  std::map<PropertyKey, double> out{{keys::program_text_bytes, static_cast<double>(s.text_bytes)}};
  const auto cmp = s.cond_branches_eq + s.cond_branches_ineq;
  if (cmp > 0) {
    out[keys::eq_proportion] = static_cast<double>(s.cond_branches_eq) / static_cast<double>(cmp);
    out[keys::ineq_proportion] = static_cast<double>(s.cond_branches_ineq) / static_cast<double>(cmp);
  }
  if (s.calls_total > 0)
    out[keys::extern_call_proportion] = static_cast<double>(s.calls_extern) / static_cast<double>(s.calls_total);
  return out;
}

// Pre-clamp sample size: exponential with mean mean_fraction * pool_size.
inline double draw_sample_size(Rng& rng, std::size_t pool_size, double mean_fraction) {
  return rng.exponential(mean_fraction * static_cast<double>(pool_size));
}

/// Samples an initial corpus from a (saturated) pool. The size is drawn from
/// an exponential distribution with mean mean_fraction * |pool|, rounded and
/// clamped to [1, |pool|]; the seeds are drawn uniformly without replacement
/// and returned in pool order.
inline std::vector<std::string> sample_corpus(const std::vector<std::string>& pool, double mean_fraction,
                                              std::uint64_t seed) {
  if (pool.empty()) throw DataError("sample_corpus: empty pool");
  if (!(mean_fraction > 0.0 && mean_fraction <= 1.0)) throw Error("sample_corpus: mean_fraction must lie in (0, 1]");
  Rng rng(seed);
  const double raw = draw_sample_size(rng, pool.size(), mean_fraction);
  const auto k = static_cast<std::size_t>(
      std::clamp(std::llround(raw), 1LL, static_cast<long long>(pool.size())));
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> out;
  out.reserve(k);
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

}  // namespace fuzzeval
