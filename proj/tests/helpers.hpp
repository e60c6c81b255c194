#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "fuzzeval/fuzzeval.hpp"

namespace testutil {

inline fuzzeval::TrialRecord rec(std::string program, std::string fuzzer, std::uint32_t trial, double perf,
                                 std::map<fuzzeval::PropertyKey, double> props = {}) {
  fuzzeval::TrialRecord t;
  t.program = std::move(program);
  t.fuzzer = std::move(fuzzer);
  t.trial = trial;
  t.performance = perf;
  t.properties = std::move(props);
  return t;
}

inline fuzzeval::Dataset parse_csv(const std::string& text, bool validate = true) {
  std::istringstream in(text);
  return fuzzeval::parse_csv_dataset(in, validate);
}

// Rank oracle straight from the definition: #smaller + (1 + #equal) / 2,
// where #equal counts the other elements equal to this one plus itself.
inline std::vector<double> counting_ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    out[i] = less + (1.0 + equal) / 2.0;
  }
  return out;
}

inline std::string data_path(const std::string& rel) { return std::string(FUZZEVAL_DATA_DIR) + "/" + rel; }

}  // namespace testutil
