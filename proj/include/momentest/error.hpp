#ifndef MOMENTEST_ERROR_HPP
#define MOMENTEST_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace momentest {

enum class ErrorKind {
  SyntaxError,
  UndefinedVariable,
  DuplicateInit,
  ValidationError,
  DesugarUnsupported,
  NumericOverflow,
  UnknownVariable,
  ClosureExceeded,
  SchemaError,
  EvalError,
  DegenerateVariance,
  FitDiverged,
  SingularSystem,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base of every exception thrown by the library. The kind is stable and is
/// what the CLI reports in its machine-readable error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct SourcePos {
  int line = 0;
  int column = 0;

  friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

class SyntaxError : public Error {
 public:
  SyntaxError(SourcePos pos, std::vector<std::string> expected,
              const std::string& found);

  SourcePos position() const noexcept { return pos_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  SourcePos pos_;
  std::vector<std::string> expected_;
};

class NumericOverflow : public Error {
 public:
  NumericOverflow(const std::string& message, std::ptrdiff_t row = -1)
      : Error(ErrorKind::NumericOverflow, message), row_(row) {}

  /// Offending sample row, or -1 when raised outside of `sample`.
  std::ptrdiff_t row() const noexcept { return row_; }

 private:
  std::ptrdiff_t row_;
};

}  // namespace momentest

#endif
