#include <cctype>
#include <cmath>
#include <optional>

#include "momentest/moments.hpp"

namespace momentest::moments {

namespace {

struct Value {
  std::optional<Rational> exact;
  double approx = 0;

  static Value of(Rational q) {
    double d = to_double(q);
    return {std::move(q), d};
  }
  static Value inexact(double d) { return {std::nullopt, d}; }
};

class Evaluator {
 public:
  Evaluator(std::string_view text, std::int64_t n) : text_(text), n_(n) {}

  Value run() {
    Value v = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::EvalError, "closed form \"" + std::string(text_) + "\" at offset " +
                                          std::to_string(pos_) + ": " + msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Value expression() {
    Value v = term();
    for (;;) {
      if (accept('+')) {
        v = combine(v, term(), '+');
      } else if (accept('-')) {
        v = combine(v, term(), '-');
      } else {
        return v;
      }
    }
  }

  Value term() {
    Value v = unary();
    for (;;) {
      if (accept('*')) {
        v = combine(v, unary(), '*');
      } else if (accept('/')) {
        v = combine(v, unary(), '/');
      } else {
        return v;
      }
    }
  }

  Value unary() {
    if (accept('-')) return combine(Value::of(0), unary(), '-');
    if (accept('+')) return unary();
    return power();
  }

  Value power() {
    Value base = primary();
    if (accept('^')) return raise(base, unary());
    return base;
  }

  Value primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (accept('(')) {
      Value v = expression();
      if (!accept(')')) fail("expected ')'");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string_view id = text_.substr(start, pos_ - start);
      if (id == "n") return Value::of(Rational(n_));
      if (id == "e") return Value::inexact(std::exp(1.0));
      if (id == "exp") {
        if (!accept('(')) fail("expected '(' after exp");
        Value arg = expression();
        if (!accept(')')) fail("expected ')'");
        if (arg.exact && *arg.exact == 0) return Value::of(1);
        return Value::inexact(std::exp(arg.approx));
      }
      pos_ = start;
      fail("unknown identifier '" + std::string(id) + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Value number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      // Exponent only when followed by digits; otherwise `e` is the constant.
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    Rational q;
    if (!parse_decimal(text_.substr(start, pos_ - start), q)) {
      pos_ = start;
      fail("malformed number");
    }
    return Value::of(q);
  }

  Value combine(const Value& a, const Value& b, char op) {
    if (a.exact && b.exact) {
      switch (op) {
        case '+': return Value::of(*a.exact + *b.exact);
        case '-': return Value::of(*a.exact - *b.exact);
        case '*': return Value::of(*a.exact * *b.exact);
        default:
          if (*b.exact == 0) fail("division by zero");
          return Value::of(*a.exact / *b.exact);
      }
    }
    switch (op) {
      case '+': return Value::inexact(a.approx + b.approx);
      case '-': return Value::inexact(a.approx - b.approx);
      case '*': return Value::inexact(a.approx * b.approx);
      default:
        if (b.approx == 0) fail("division by zero");
        return Value::inexact(a.approx / b.approx);
    }
  }

  Value raise(const Value& base, const Value& exponent) {
    constexpr int kMaxExactExponent = 100000;
    if (base.exact && exponent.exact && denominator(*exponent.exact) == 1) {
      const BigInt k = numerator(*exponent.exact);
      if (abs(k) <= kMaxExactExponent) {
        const int e = k.convert_to<int>();
        if (e < 0 && *base.exact == 0) fail("zero raised to a negative power");
        Rational p = pow(*base.exact, e < 0 ? -e : e);
        return Value::of(e < 0 ? Rational(1) / p : p);
      }
    }
    return Value::inexact(std::pow(base.approx, exponent.approx));
  }

  std::string_view text_;
  std::int64_t n_;
  std::size_t pos_ = 0;
};

}  // namespace

double evaluate_closed_form(std::string_view expr, std::int64_t n) {
  Value v = Evaluator(expr, n).run();
  if (!std::isfinite(v.approx))
    throw Error(ErrorKind::EvalError, "closed form \"" + std::string(expr) + "\" is not finite");
  return v.approx;
}

std::optional<Rational> evaluate_closed_form_exact(std::string_view expr, std::int64_t n) {
  return Evaluator(expr, n).run().exact;
}

}  // namespace momentest::moments
