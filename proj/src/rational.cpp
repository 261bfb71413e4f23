#include "momentest/rational.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "momentest/error.hpp"

namespace momentest {

namespace {

BigInt pow10(unsigned exponent) {
  BigInt result = 1;
  for (unsigned i = 0; i < exponent; ++i) result *= 10;
  return result;
}

}  // namespace

bool parse_decimal(std::string_view text, Rational& out) {
  std::size_t i = 0;
  std::string digits;
  unsigned fraction_digits = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
    digits.push_back(text[i++]);
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      digits.push_back(text[i++]);
      ++fraction_digits;
    }
  }
  if (digits.empty()) return false;
  long exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
    std::string exp_digits;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
      exp_digits.push_back(text[i++]);
    if (exp_digits.empty() || exp_digits.size() > 6) return false;
    exponent = std::strtol(exp_digits.c_str(), nullptr, 10);
    if (negative) exponent = -exponent;
  }
  if (i != text.size()) return false;
  // A leading zero would make GMP read the digits as octal.
  const auto first = digits.find_first_not_of('0');
  BigInt numerator(first == std::string::npos ? std::string("0") : digits.substr(first));
  long scale = exponent - static_cast<long>(fraction_digits);
  if (scale >= 0) {
    out = Rational(numerator * pow10(static_cast<unsigned>(scale)));
  } else {
    out = Rational(numerator, pow10(static_cast<unsigned>(-scale)));
  }
  return true;
}

std::string to_string(const Rational& value) {
  BigInt num = boost::multiprecision::numerator(value);
  BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& value) {
  // mpq_get_d truncates; step to whichever neighbour is nearer.
  double d = value.convert_to<double>();
  if (!std::isfinite(d) || Rational(d) == value) return d;
  double up = std::nextafter(d, std::numeric_limits<double>::infinity());
  double down = std::nextafter(d, -std::numeric_limits<double>::infinity());
  double best = d;
  Rational best_err = abs(Rational(d) - value);
  for (double c : {up, down}) {
    if (!std::isfinite(c)) continue;
    Rational err = abs(Rational(c) - value);
    if (err < best_err) {
      best = c;
      best_err = err;
    }
  }
  return best;
}

Rational pow(const Rational& base, int exponent) {
  if (exponent < 0) {
    if (base == 0) throw Error(ErrorKind::EvalError, "zero raised to a negative power");
    return pow(Rational(1) / base, -exponent);
  }
  Rational result = 1;
  Rational factor = base;
  auto e = static_cast<unsigned>(exponent);
  while (e != 0) {
    if (e & 1u) result *= factor;
    e >>= 1u;
    if (e != 0) factor *= factor;
  }
  return result;
}

}  // namespace momentest
