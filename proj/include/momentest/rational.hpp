#ifndef MOMENTEST_RATIONAL_HPP
#define MOMENTEST_RATIONAL_HPP

#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace momentest {

using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

/// Exact value of a decimal literal such as "0.2", "17", "1.5e-3".
/// Returns false if `text` is not a well-formed unsigned decimal literal.
bool parse_decimal(std::string_view text, Rational& out);

/// "p/q" or "p" (q == 1).
std::string to_string(const Rational& value);

/// Correctly rounded (nearest) binary64 value.
double to_double(const Rational& value);

/// Exact binary64 → rational conversion (every finite double is dyadic).
inline Rational exact_rational(double value) { return Rational(value); }

Rational pow(const Rational& base, int exponent);

}  // namespace momentest

#endif
