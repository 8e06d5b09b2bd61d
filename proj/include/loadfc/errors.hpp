#pragma once

#include <stdexcept>
#include <string>

namespace loadfc {

// Failure categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { Config = 2, Data = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

// Data-side specialisations.
struct OutOfRangeError : DataError {
  using DataError::DataError;
};
struct InvalidSplitError : DataError {
  using DataError::DataError;
};
struct InsufficientDataError : DataError {
  using DataError::DataError;
};
struct UndefinedMetricError : DataError {
  using DataError::DataError;
};
struct ShapeError : DataError {
  using DataError::DataError;
};

// Calendar / plan problems are configuration problems.
struct MissingCalendarError : ConfigError {
  using ConfigError::ConfigError;
};

// Numerical failures.
struct DegenerateDesignError : NumericalError {
  DegenerateDesignError(const std::string& group, const std::string& what)
      : NumericalError(what), group_(group) {}
  const std::string& group() const noexcept { return group_; }

 private:
  std::string group_;
};
struct DivergenceError : NumericalError {
  using NumericalError::NumericalError;
};
struct InvalidStateError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace loadfc
