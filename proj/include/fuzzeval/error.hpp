#pragma once

#include <stdexcept>
#include <string>

namespace fuzzeval {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data is malformed or violates a dataset invariant.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  // 1-based line number in the source file, 0 when not file-related.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A numerical procedure could not produce a result.
class ComputeError : public Error {
 public:
  using Error::Error;
};

// Least-squares design has (numerically) dependent columns.
class RankDeficientError : public ComputeError {
 public:
  explicit RankDeficientError(std::string column)
      : ComputeError("rank-deficient design: column '" + column + "' is linearly dependent on earlier columns"),
        column_(std::move(column)) {}

  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

}  // namespace fuzzeval
