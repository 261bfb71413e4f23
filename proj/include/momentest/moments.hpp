#ifndef MOMENTEST_MOMENTS_HPP
#define MOMENTEST_MOMENTS_HPP

// Raw moments of loop variables: exact propagation over a closed monomial
// basis, external ingestion, and validity checks.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "momentest/dsl.hpp"
#include "momentest/rational.hpp"

namespace momentest::moments {

enum class Provenance { Propagated, Empirical, External };

std::string_view to_string(Provenance p);

/// E(x^1) .. E(x^m) of one variable at iteration n.
struct MomentSet {
  std::string var;
  std::int64_t n = 0;
  std::vector<double> values;                  // values[i] = E(x^(i+1))
  std::optional<std::vector<Rational>> exact;  // present when propagation stayed rational
  Provenance provenance = Provenance::External;

  std::size_t order() const noexcept { return values.size(); }
  /// E(x^i) for i >= 0 (i = 0 gives 1).
  double raw(std::size_t i) const { return i == 0 ? 1.0 : values.at(i - 1); }
  /// The first m moments.
  MomentSet prefix(std::size_t m) const;
};

nlohmann::json to_json(const MomentSet& ms);

/// E[X^k] for one draw.
Rational raw_moment(const dsl::Distribution& dist, int k);

/// Monomials over the state variables of a CoreProgram (exponent vectors of
/// length core.state.size()), closed under one loop iteration.
struct MonomialBasis {
  std::string var;
  int order = 0;
  std::vector<Exponents> monomials;  // sorted; includes the unit monomial

  std::size_t size() const noexcept { return monomials.size(); }
  std::optional<std::size_t> index_of(const Exponents& e) const;
};

inline constexpr std::size_t kDefaultBasisCap = 512;

/// Expectation of a state monomial after one iteration, expressed as a
/// polynomial over state symbols (length core.state.size()).
Polynomial<Rational> pullback(const dsl::CoreProgram& core, const Exponents& monomial);

/// Throws Error{UnknownVariable} or Error{ClosureExceeded}. The closure also
/// fails when a monomial's degree exceeds max(64, 4m), which bounds the work
/// spent on programs whose degree grows without limit.
MonomialBasis closure_basis(const dsl::CoreProgram& core, std::string_view var, int m,
                            std::size_t cap = kDefaultBasisCap);

enum class Arithmetic { Auto, Exact, Binary64 };

/// Auto picks exact rational arithmetic when the basis has at most this many
/// monomials.
inline constexpr std::size_t kExactBasisLimit = 128;

/// E(var^1..var^m) at iteration n. Throws NumericOverflow when a binary64
/// expectation leaves the finite range.
MomentSet propagate(const dsl::CoreProgram& core, const MonomialBasis& basis, std::int64_t n,
                    Arithmetic mode = Arithmetic::Auto);

/// Closed-form moment expression in n: integers, decimals, n, e, exp(),
/// + - * / ^ and parentheses. Throws Error{EvalError}.
double evaluate_closed_form(std::string_view expr, std::int64_t n);
/// Exact value when the expression stays rational, nullopt otherwise.
std::optional<Rational> evaluate_closed_form_exact(std::string_view expr, std::int64_t n);

/// Parses `{"var", "n"?, "values"}` or `{"var", "n", "closed_form"}`.
/// `n_override` replaces the document's n. Throws SchemaError / EvalError.
MomentSet load_moments(const nlohmann::json& doc, std::optional<std::int64_t> n_override = {});

struct ValidityReport {
  bool ok = true;
  double variance = 0;
  /// Order k of the first Hankel matrix [E x^(i+j)], 0<=i,j<=k, that is not
  /// positive semidefinite; 0 when none fails.
  int failed_minor = 0;
  double min_eigenvalue = 0;
  std::string message;
};

ValidityReport moment_validity(const MomentSet& ms);

}  // namespace momentest::moments

#endif
