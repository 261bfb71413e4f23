#include "momentest/polynomial.hpp"

namespace momentest {

std::string to_string(const Polynomial<Rational>& p, std::span<const std::string> names) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  // Highest degree first reads more naturally.
  std::vector<std::pair<Exponents, Rational>> terms(p.terms().rbegin(), p.terms().rend());
  for (const auto& [e, c] : terms) {
    Rational mag = c < 0 ? Rational(-c) : c;
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    std::string factors;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (!factors.empty()) factors += "*";
      factors += names[i];
      if (e[i] > 1) factors += "^" + std::to_string(e[i]);
    }
    if (factors.empty()) {
      out += to_string(mag);
    } else if (mag == 1) {
      out += factors;
    } else {
      out += to_string(mag) + "*" + factors;
    }
  }
  return out;
}

}  // namespace momentest
