#pragma once

// Trial records, the benchmark-property vocabulary, and dataset loading.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace fuzzeval {

// Property names are open-ended: the built-in vocabulary below is recognized
// for validation and defaults, any other numeric column is carried through.
using PropertyKey = std::string;

namespace keys {
inline const PropertyKey seed_count = "seed_count";
inline const PropertyKey init_coverage = "init_coverage";
inline const PropertyKey mean_exec_ns = "mean_exec_ns";
inline const PropertyKey mean_seed_bytes = "mean_seed_bytes";
inline const PropertyKey corpus_total_bytes = "corpus_total_bytes";
inline const PropertyKey program_text_bytes = "program_text_bytes";
inline const PropertyKey eq_proportion = "eq_proportion";
inline const PropertyKey ineq_proportion = "ineq_proportion";
inline const PropertyKey extern_call_proportion = "extern_call_proportion";
// Emitted by corpus_properties when the branch universe is known.
inline const PropertyKey init_coverage_fraction = "init_coverage_fraction";
}  // namespace keys

inline bool is_corpus_key(std::string_view k) {
  return k == keys::seed_count || k == keys::init_coverage || k == keys::mean_exec_ns ||
         k == keys::mean_seed_bytes || k == keys::corpus_total_bytes ||
         k == keys::init_coverage_fraction;
}

inline bool is_program_key(std::string_view k) {
  return k == keys::program_text_bytes || k == keys::eq_proportion || k == keys::ineq_proportion ||
         k == keys::extern_call_proportion;
}

inline bool is_known_key(std::string_view k) { return is_corpus_key(k) || is_program_key(k); }

inline bool is_proportion_key(std::string_view k) {
  return k == keys::eq_proportion || k == keys::ineq_proportion ||
         k == keys::extern_call_proportion || k == keys::init_coverage_fraction;
}

// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct TrialRecord {
  std::string program;
  std::string fuzzer;
  std::uint32_t trial = 0;
  std::map<PropertyKey, double> properties;
  double performance = 0.0;  // branches covered at campaign end
};

// Identifies one (program, trial) pair; all fuzzers of a trial share the corpus.
struct TrialKey {
  std::string program;
  std::uint32_t trial = 0;
  auto operator<=>(const TrialKey&) const = default;
};

/// A collection of trial records with first-appearance ordering of fuzzers,
/// programs and property columns.
///
/// Construction does not validate; use validate_dataset() or load_dataset(),
/// which refuses data that violates any invariant.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<TrialRecord> trials) : trials_(std::move(trials)) {
    for (const auto& t : trials_) {
      add_unique(fuzzers_, t.fuzzer);
      add_unique(programs_, t.program);
      for (const auto& [k, v] : t.properties) add_unique(property_keys_, k);
    }
  }

  const std::vector<TrialRecord>& trials() const noexcept { return trials_; }
  const std::vector<std::string>& fuzzers() const noexcept { return fuzzers_; }
  const std::vector<std::string>& programs() const noexcept { return programs_; }
  const std::vector<PropertyKey>& property_keys() const noexcept { return property_keys_; }

  std::size_t size() const noexcept { return trials_.size(); }
  bool empty() const noexcept { return trials_.empty(); }

  bool has_property(std::string_view key) const {
    return std::find(property_keys_.begin(), property_keys_.end(), key) != property_keys_.end();
  }

  std::size_t fuzzer_index(std::string_view f) const { return index_of(fuzzers_, f, "fuzzer"); }
  std::size_t program_index(std::string_view p) const { return index_of(programs_, p, "program"); }

 private:
  static void add_unique(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  }
  static std::size_t index_of(const std::vector<std::string>& v, std::string_view s, const char* what) {
    auto it = std::find(v.begin(), v.end(), s);
    if (it == v.end()) throw DataError(std::string("unknown ") + what + " '" + std::string(s) + "'");
    return static_cast<std::size_t>(it - v.begin());
  }

  std::vector<TrialRecord> trials_;
  std::vector<std::string> fuzzers_;
  std::vector<std::string> programs_;
  std::vector<PropertyKey> property_keys_;
};

enum class DiagnosticKind {
  NonFinite,
  NegativePerformance,
  ProportionOutOfRange,
  DuplicateRecord,
  UnbalancedPanel,
  PropertyMismatch,
};

inline std::string_view to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::NonFinite: return "non-finite";
    case DiagnosticKind::NegativePerformance: return "negative-performance";
    case DiagnosticKind::ProportionOutOfRange: return "proportion-out-of-range";
    case DiagnosticKind::DuplicateRecord: return "duplicate-record";
    case DiagnosticKind::UnbalancedPanel: return "unbalanced-panel";
    case DiagnosticKind::PropertyMismatch: return "property-mismatch";
  }
  return "unknown";
}

struct Diagnostic {
  DiagnosticKind kind;
  std::string program;
  std::uint32_t trial = 0;
  std::string key;  // property key, "performance", or fuzzer id for panel issues
  std::string message;
};

/// Checks every dataset invariant and returns one diagnostic per violation.
///
/// Checked: finite values, non-negative performance, proportion keys in
/// [0, 1], unique (program, fuzzer, trial), a balanced fuzzer panel for every
/// (program, trial), and identical property values across the fuzzers of a
/// trial (they start from the same corpus).
inline std::vector<Diagnostic> validate_dataset(const Dataset& d) {
  std::vector<Diagnostic> out;
  const auto& trials = d.trials();

  for (const auto& t : trials) {
    if (!std::isfinite(t.performance)) {
      out.push_back({DiagnosticKind::NonFinite, t.program, t.trial, "performance",
                     "performance of fuzzer '" + t.fuzzer + "' is not finite"});
    } else if (t.performance < 0.0) {
      out.push_back({DiagnosticKind::NegativePerformance, t.program, t.trial, "performance",
                     "performance of fuzzer '" + t.fuzzer + "' is negative"});
    }
    for (const auto& [k, v] : t.properties) {
      if (!std::isfinite(v)) {
        out.push_back({DiagnosticKind::NonFinite, t.program, t.trial, k,
                       "property '" + k + "' of fuzzer '" + t.fuzzer + "' is not finite"});
      } else if (is_proportion_key(k) && (v < 0.0 || v > 1.0)) {
        out.push_back({DiagnosticKind::ProportionOutOfRange, t.program, t.trial, k,
                       "proportion '" + k + "' = " + format_double(v) + " outside [0, 1]"});
      }
    }
  }

  std::map<std::tuple<std::string, std::string, std::uint32_t>, std::size_t> seen;
  std::map<TrialKey, std::vector<std::size_t>> by_trial;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    auto [it, inserted] = seen.emplace(std::make_tuple(t.program, t.fuzzer, t.trial), i);
    if (!inserted) {
      out.push_back({DiagnosticKind::DuplicateRecord, t.program, t.trial, t.fuzzer,
                     "duplicate record for fuzzer '" + t.fuzzer + "'"});
      continue;
    }
    by_trial[TrialKey{t.program, t.trial}].push_back(i);
  }

  for (const auto& [tk, rows] : by_trial) {
    std::set<std::string> present;
    for (auto r : rows) present.insert(trials[r].fuzzer);
    for (const auto& f : d.fuzzers()) {
      if (!present.count(f)) {
        out.push_back({DiagnosticKind::UnbalancedPanel, tk.program, tk.trial, f,
                       "fuzzer '" + f + "' missing from trial"});
      }
    }

    std::set<PropertyKey> trial_keys;
    for (auto r : rows)
      for (const auto& [k, v] : trials[r].properties) trial_keys.insert(k);
    const auto& first = trials[rows.front()].properties;
    for (const auto& k : trial_keys) {
      auto f_it = first.find(k);
      bool consistent = f_it != first.end();
      for (auto r : rows) {
        if (!consistent) break;
        auto it = trials[r].properties.find(k);
        // Bitwise-equal values only; NaN is reported separately.
        consistent = it != trials[r].properties.end() &&
                     (it->second == f_it->second || (std::isnan(it->second) && std::isnan(f_it->second)));
      }
      if (!consistent) {
        out.push_back({DiagnosticKind::PropertyMismatch, tk.program, tk.trial, k,
                       "property '" + k + "' differs across fuzzers of the same trial"});
      }
    }
  }
  return out;
}

inline std::string format_diagnostic(const Diagnostic& diag) {
  return std::string(to_string(diag.kind)) + " [program=" + diag.program +
         " trial=" + std::to_string(diag.trial) + " key=" + diag.key + "]: " + diag.message;
}

enum class DataFormat { Csv, Json };

namespace detail {

// Splits one CSV record. Supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quoted field", line_no);
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string quote_csv(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::uint32_t parse_trial_index(std::string_view s, std::size_t line_no) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("trial '" + std::string(s) + "' is not a non-negative integer", line_no);
  return v;
}

inline void throw_on_diagnostics(const Dataset& d) {
  auto diags = validate_dataset(d);
  if (diags.empty()) return;
  std::string msg = "dataset failed validation (" + std::to_string(diags.size()) + " problem(s)): " +
                    format_diagnostic(diags.front());
  throw DataError(msg);
}

}  // namespace detail

/// Parses the long CSV format `program,fuzzer,trial,performance,<properties...>`.
/// An empty property cell means the property is absent for that row.
/// Throws DataError naming the offending line; unless `validate` is false the
/// result must also pass validate_dataset.
inline Dataset parse_csv_dataset(std::istream& in, bool validate = true) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    header = detail::split_csv_line(line, line_no);
    break;
  }
  if (header.empty()) throw DataError("missing CSV header");

  int col_program = -1, col_fuzzer = -1, col_trial = -1, col_perf = -1;
  std::vector<std::pair<int, PropertyKey>> prop_cols;
  std::set<std::string> names;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const auto& h = header[i];
    if (h.empty()) throw DataError("empty column name in header", line_no);
    if (!names.insert(h).second) throw DataError("duplicate column '" + h + "'", line_no);
    if (h == "program") col_program = i;
    else if (h == "fuzzer") col_fuzzer = i;
    else if (h == "trial") col_trial = i;
    else if (h == "performance") col_perf = i;
    else prop_cols.emplace_back(i, h);
  }
  if (col_program < 0 || col_fuzzer < 0 || col_trial < 0 || col_perf < 0)
    throw DataError("header must contain program, fuzzer, trial and performance columns", line_no);

  std::vector<TrialRecord> trials;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line, line_no);
    if (f.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()),
                      line_no);
    TrialRecord t;
    t.program = f[col_program];
    t.fuzzer = f[col_fuzzer];
    if (t.program.empty() || t.fuzzer.empty()) throw DataError("empty program or fuzzer id", line_no);
    t.trial = detail::parse_trial_index(f[col_trial], line_no);
    auto perf = parse_double(f[col_perf]);
    if (!perf) throw DataError("performance '" + f[col_perf] + "' is not a number", line_no);
    if (!std::isfinite(*perf)) throw DataError("performance is not finite", line_no);
    t.performance = *perf;
    for (const auto& [col, key] : prop_cols) {
      if (f[col].empty()) continue;
      auto v = parse_double(f[col]);
      if (!v) throw DataError("property '" + key + "' value '" + f[col] + "' is not a number", line_no);
      if (!std::isfinite(*v)) throw DataError("property '" + key + "' is not finite", line_no);
      t.properties.emplace(key, *v);
    }
    trials.push_back(std::move(t));
  }
  Dataset d(std::move(trials));
  if (validate) detail::throw_on_diagnostics(d);
  return d;
}

/// Parses a JSON array of objects carrying the CSV field names.
inline Dataset parse_json_dataset(std::istream& in, bool validate = true) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw DataError("JSON dataset must be an array of objects");
  std::vector<TrialRecord> trials;
  std::size_t idx = 0;
  for (const auto& obj : doc) {
    ++idx;
    auto fail = [&](const std::string& m) {
      throw DataError("record " + std::to_string(idx) + ": " + m);
    };
    if (!obj.is_object()) fail("not an object");
    TrialRecord t;
    for (const auto& [k, v] : obj.items()) {
      if (k == "program" || k == "fuzzer") {
        if (!v.is_string()) fail(k + " must be a string");
        (k == "program" ? t.program : t.fuzzer) = v.get<std::string>();
      } else if (k == "trial") {
        if (!v.is_number_unsigned()) fail("trial must be a non-negative integer");
        auto n = v.get<std::uint64_t>();
        if (n > UINT32_MAX) fail("trial index out of range");
        t.trial = static_cast<std::uint32_t>(n);
      } else if (k == "performance") {
        if (!v.is_number()) fail("performance must be a number");
        t.performance = v.get<double>();
      } else if (v.is_null()) {
        continue;
      } else {
        if (!v.is_number()) fail("property '" + k + "' must be a number");
        t.properties.emplace(k, v.get<double>());
      }
    }
    if (!obj.contains("program") || !obj.contains("fuzzer") || !obj.contains("trial") ||
        !obj.contains("performance"))
      fail("missing one of program, fuzzer, trial, performance");
    trials.push_back(std::move(t));
  }
  Dataset d(std::move(trials));
  if (validate) detail::throw_on_diagnostics(d);
  return d;
}

inline DataFormat format_from_path(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".json" ? DataFormat::Json : DataFormat::Csv;
}

inline Dataset load_dataset(const std::filesystem::path& path, DataFormat format, bool validate = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return format == DataFormat::Json ? parse_json_dataset(in, validate) : parse_csv_dataset(in, validate);
}

inline Dataset load_dataset(const std::filesystem::path& path, bool validate = true) {
  return load_dataset(path, format_from_path(path), validate);
}

/// Writes the canonical long CSV. Numbers use the shortest round-trip form,
/// so parse_csv_dataset(write_csv(d)) reproduces every value bit for bit.
inline void write_csv(const Dataset& d, std::ostream& out) {
  out << "program,fuzzer,trial,performance";
  for (const auto& k : d.property_keys()) out << ',' << detail::quote_csv(k);
  out << '\n';
  for (const auto& t : d.trials()) {
    out << detail::quote_csv(t.program) << ',' << detail::quote_csv(t.fuzzer) << ',' << t.trial << ','
        << format_double(t.performance);
    for (const auto& k : d.property_keys()) {
      out << ',';
      if (auto it = t.properties.find(k); it != t.properties.end()) out << format_double(it->second);
    }
    out << '\n';
  }
}

inline std::string to_csv_string(const Dataset& d) {
  std::ostringstream os;
  write_csv(d, os);
  return os.str();
}

inline nlohmann::json to_json(const Dataset& d) {
  auto arr = nlohmann::json::array();
  for (const auto& t : d.trials()) {
    nlohmann::json o;
    o["program"] = t.program;
    o["fuzzer"] = t.fuzzer;
    o["trial"] = t.trial;
    o["performance"] = t.performance;
    for (const auto& [k, v] : t.properties) o[k] = v;
    arr.push_back(std::move(o));
  }
  return arr;
}

}  // namespace fuzzeval
