#ifndef MOMENTEST_DSL_HPP
#define MOMENTEST_DSL_HPP

// Probabilistic-loop language: AST, parser, pretty-printer, validation and
// desugaring into polynomial normal form.
//
//   program   := pragma* init* "while" "true" "{" stmt* "}"
//   pragma    := "@binary" ident
//   init      := ident ":=" (number | dist)
//   stmt      := ident ":=" expr ( "[" number "]" expr )?
//              | ident ":=" dist
//              | "if" ident "=" ("0"|"1") "{" stmt "}" "else" "{" stmt "}"
//   dist      := ("Normal"|"Uniform"|"Bernoulli") "(" number ("," number)? ")"
//
// Numbers are exact rationals. Wherever a number is expected a constant
// expression is accepted ("1/2", "-1", "2^-3" is not: exponents are integers).

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "momentest/error.hpp"
#include "momentest/polynomial.hpp"
#include "momentest/rational.hpp"

namespace momentest::dsl {

enum class DistKind { Normal, Uniform, Bernoulli };

/// Normal(mean, variance), Uniform(lo, hi), Bernoulli(p). For Bernoulli only
/// `first` is meaningful.
struct Distribution {
  DistKind kind = DistKind::Bernoulli;
  Rational first = 0;
  Rational second = 0;

  static Distribution normal(Rational mean, Rational variance) {
    return {DistKind::Normal, std::move(mean), std::move(variance)};
  }
  static Distribution uniform(Rational lo, Rational hi) {
    return {DistKind::Uniform, std::move(lo), std::move(hi)};
  }
  static Distribution bernoulli(Rational p) { return {DistKind::Bernoulli, std::move(p), 0}; }

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

std::string_view to_string(DistKind kind);
std::string to_string(const Distribution& dist);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Op { Number, Var, Add, Sub, Mul, Div, Neg, Pow };

  Op op = Op::Number;
  Rational value;        // Number
  std::string name;      // Var
  ExprPtr lhs, rhs;      // binary ops; Neg and Pow use lhs only
  int exponent = 0;      // Pow
  SourcePos pos;

  static ExprPtr number(Rational v, SourcePos pos = {});
  static ExprPtr var(std::string name, SourcePos pos = {});
  static ExprPtr binary(Op op, ExprPtr lhs, ExprPtr rhs, SourcePos pos = {});
  static ExprPtr neg(ExprPtr operand, SourcePos pos = {});
  static ExprPtr power(ExprPtr base, int exponent, SourcePos pos = {});
};

/// Structural equality; source positions are ignored.
bool equal(const Expr& a, const Expr& b);

struct DetAssign {
  std::string target;
  ExprPtr rhs;
};

/// `target := first [prob] second`
struct ProbChoice {
  std::string target;
  ExprPtr first;
  Rational prob;
  ExprPtr second;
};

struct DistDraw {
  std::string target;
  Distribution dist;
};

struct Statement;

/// `if guard = value { then } else { otherwise }`
struct BinaryGuard {
  std::string guard;
  int value = 0;
  std::shared_ptr<const Statement> then_branch;
  std::shared_ptr<const Statement> else_branch;
};

struct Statement {
  std::variant<DetAssign, ProbChoice, DistDraw, BinaryGuard> node;
  SourcePos pos;
};

/// Name of the variable a statement assigns. For a guard this is the common
/// target of both branches, or empty if they differ.
std::string target_of(const Statement& stmt);

struct Init {
  std::string target;
  std::variant<Rational, Distribution> value;
  SourcePos pos;
};

struct Program {
  std::vector<std::string> binary;  // in declaration order
  std::vector<Init> inits;
  std::vector<Statement> body;

  bool is_binary(std::string_view name) const;
  const Init* find_init(std::string_view name) const;
};

bool equal(const Statement& a, const Statement& b);
bool equal(const Program& a, const Program& b);

/// Throws SyntaxError, or Error{UndefinedVariable | DuplicateInit}.
Program parse_program(std::string_view text);

/// Canonical source text; parse_program(pretty_print(p)) is structurally
/// equal to p.
std::string pretty_print(const Program& program);
std::string pretty_print(const Expr& expr);

// ---------------------------------------------------------------------------

enum class Severity { Warning, Error };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourcePos pos;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;
  /// Every body-assigned variable admits a closed monomial basis for its
  /// first two moments.
  bool propagation_eligible = false;

  bool ok() const;
  std::vector<std::string> errors() const;
};

ValidationReport validate(const Program& program);

namespace detail {
/// validate() without the eligibility probe (which itself desugars).
ValidationReport validate_structure(const Program& program);
}  // namespace detail

// ---------------------------------------------------------------------------

/// A draw that is fresh in every iteration: one per probabilistic choice and
/// per distribution statement, named "#d<k>" in statement order.
struct FreshDraw {
  std::string name;
  Distribution dist;
};

struct CoreUpdate {
  std::size_t target = 0;     // index into state
  Polynomial<Rational> rhs;   // over state symbols followed by fresh symbols
};

/// Deterministic initial value or an initial draw.
using InitValue = std::variant<Rational, Distribution>;

/// Desugared loop: every statement is `state[target] := polynomial`.
/// Symbol layout for polynomials: [0, state.size()) are state variables,
/// [state.size(), symbol_count()) are the fresh draws.
struct CoreProgram {
  std::vector<std::string> state;
  std::vector<InitValue> inits;      // parallel to state
  std::vector<bool> binary;          // parallel to state
  std::vector<FreshDraw> fresh;
  std::vector<CoreUpdate> updates;   // program order
  /// Init-only variables with a numeric value, folded into the updates.
  std::map<std::string, Rational> constants;

  std::size_t symbol_count() const { return state.size() + fresh.size(); }
  std::vector<std::string> symbol_names() const;
  std::optional<std::size_t> state_index(std::string_view name) const;
  /// Idempotent flags over all symbols: binary state vars and Bernoulli draws.
  std::vector<bool> idempotent_symbols() const;
  /// State variables assigned by some update, in state order.
  std::vector<std::string> body_variables() const;
};

/// Throws Error{ValidationError} if validate() reports errors,
/// Error{DesugarUnsupported} for guard shapes outside the supported form.
CoreProgram desugar(const Program& program);

/// Number of fresh draws a statement consumes; the same walk order is used by
/// desugar and by the direct AST interpreter.
std::size_t draw_slots(const Statement& stmt);

std::string pretty_print(const CoreProgram& core);

}  // namespace momentest::dsl

#endif
