#include "momentest/error.hpp"

namespace momentest {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UndefinedVariable: return "UndefinedVariable";
    case ErrorKind::DuplicateInit: return "DuplicateInit";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::DesugarUnsupported: return "DesugarUnsupported";
    case ErrorKind::NumericOverflow: return "NumericOverflow";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::ClosureExceeded: return "ClosureExceeded";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::EvalError: return "EvalError";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::FitDiverged: return "FitDiverged";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string syntax_message(SourcePos pos, const std::vector<std::string>& expected,
                           const std::string& found) {
  std::string msg = std::to_string(pos.line) + ":" + std::to_string(pos.column) +
                    ": unexpected " + found;
  if (!expected.empty()) {
    msg += ", expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i != 0) msg += i + 1 == expected.size() ? " or " : ", ";
      msg += expected[i];
    }
  }
  return msg;
}

}  // namespace

SyntaxError::SyntaxError(SourcePos pos, std::vector<std::string> expected,
                         const std::string& found)
    : Error(ErrorKind::SyntaxError, syntax_message(pos, expected, found)),
      pos_(pos),
      expected_(std::move(expected)) {}

}  // namespace momentest
