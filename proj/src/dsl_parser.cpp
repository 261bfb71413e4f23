#include <cctype>
#include <set>
#include <sstream>

#include "momentest/dsl.hpp"

namespace momentest::dsl {

// ---------------------------------------------------------------------------
// AST helpers

ExprPtr Expr::number(Rational v, SourcePos pos) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Number;
  e->value = std::move(v);
  e->pos = pos;
  return e;
}

ExprPtr Expr::var(std::string name, SourcePos pos) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Var;
  e->name = std::move(name);
  e->pos = pos;
  return e;
}

ExprPtr Expr::binary(Op op, ExprPtr lhs, ExprPtr rhs, SourcePos pos) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  e->pos = pos;
  return e;
}

ExprPtr Expr::neg(ExprPtr operand, SourcePos pos) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Neg;
  e->lhs = std::move(operand);
  e->pos = pos;
  return e;
}

ExprPtr Expr::power(ExprPtr base, int exponent, SourcePos pos) {
  auto e = std::make_shared<Expr>();
  e->op = Op::Pow;
  e->lhs = std::move(base);
  e->exponent = exponent;
  e->pos = pos;
  return e;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Expr::Op::Number: return a.value == b.value;
    case Expr::Op::Var: return a.name == b.name;
    case Expr::Op::Neg: return equal(*a.lhs, *b.lhs);
    case Expr::Op::Pow: return a.exponent == b.exponent && equal(*a.lhs, *b.lhs);
    default: return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
}

bool equal(const Statement& a, const Statement& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, DetAssign>) {
          return x.target == y.target && equal(*x.rhs, *y.rhs);
        } else if constexpr (std::is_same_v<T, ProbChoice>) {
          return x.target == y.target && x.prob == y.prob && equal(*x.first, *y.first) &&
                 equal(*x.second, *y.second);
        } else if constexpr (std::is_same_v<T, DistDraw>) {
          return x.target == y.target && x.dist == y.dist;
        } else {
          return x.guard == y.guard && x.value == y.value &&
                 equal(*x.then_branch, *y.then_branch) && equal(*x.else_branch, *y.else_branch);
        }
      },
      a.node);
}

bool equal(const Program& a, const Program& b) {
  if (a.binary != b.binary || a.inits.size() != b.inits.size() ||
      a.body.size() != b.body.size())
    return false;
  for (std::size_t i = 0; i < a.inits.size(); ++i) {
    if (a.inits[i].target != b.inits[i].target || a.inits[i].value != b.inits[i].value)
      return false;
  }
  for (std::size_t i = 0; i < a.body.size(); ++i)
    if (!equal(a.body[i], b.body[i])) return false;
  return true;
}

std::string target_of(const Statement& stmt) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BinaryGuard>) {
          auto a = target_of(*s.then_branch);
          auto b = target_of(*s.else_branch);
          return a == b ? a : std::string{};
        } else {
          return s.target;
        }
      },
      stmt.node);
}

bool Program::is_binary(std::string_view name) const {
  for (const auto& b : binary)
    if (b == name) return true;
  return false;
}

const Init* Program::find_init(std::string_view name) const {
  for (const auto& i : inits)
    if (i.target == name) return &i;
  return nullptr;
}

std::string_view to_string(DistKind kind) {
  switch (kind) {
    case DistKind::Normal: return "Normal";
    case DistKind::Uniform: return "Uniform";
    case DistKind::Bernoulli: return "Bernoulli";
  }
  return "?";
}

std::string to_string(const Distribution& dist) {
  std::string out(to_string(dist.kind));
  out += "(" + momentest::to_string(dist.first);
  if (dist.kind != DistKind::Bernoulli) out += ", " + momentest::to_string(dist.second);
  return out + ")";
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
  Ident, Number, Assign, LBracket, RBracket, LBrace, RBrace, LParen, RParen, Comma,
  Plus, Minus, Star, Slash, Caret, Equals, At, End
};

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier '" + t.text + "'";
    case Tok::Number: return "number '" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    SourcePos pos{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), pos});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      out.push_back({Tok::Number, std::string(src.substr(i, j - i)), pos});
      advance(j - i);
      continue;
    }
    if (c == ':' && i + 1 < src.size() && src[i + 1] == '=') {
      out.push_back({Tok::Assign, ":=", pos});
      advance(2);
      continue;
    }
    Tok kind;
    switch (c) {
      case '[': kind = Tok::LBracket; break;
      case ']': kind = Tok::RBracket; break;
      case '{': kind = Tok::LBrace; break;
      case '}': kind = Tok::RBrace; break;
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case ',': kind = Tok::Comma; break;
      case '+': kind = Tok::Plus; break;
      case '-': kind = Tok::Minus; break;
      case '*': kind = Tok::Star; break;
      case '/': kind = Tok::Slash; break;
      case '^': kind = Tok::Caret; break;
      case '=': kind = Tok::Equals; break;
      case '@': kind = Tok::At; break;
      default:
        throw SyntaxError(pos, {}, "character '" + std::string(1, c) + "'");
    }
    out.push_back({kind, std::string(1, c), pos});
    advance(1);
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

bool is_keyword(std::string_view s) {
  static const std::set<std::string_view> kw{"while", "true", "if", "else",
                                             "Normal", "Uniform", "Bernoulli"};
  return kw.count(s) != 0;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program program() {
    Program p;
    while (peek().kind == Tok::At) pragma(p);
    while (!(peek().kind == Tok::Ident && peek().text == "while")) {
      if (peek().kind != Tok::Ident || is_keyword(peek().text))
        fail({"identifier", "'while'"});
      p.inits.push_back(init());
      for (std::size_t i = 0; i + 1 < p.inits.size(); ++i) {
        if (p.inits[i].target == p.inits.back().target)
          throw Error(ErrorKind::DuplicateInit,
                      position(p.inits.back().pos) + "variable '" + p.inits.back().target +
                          "' is initialized twice");
      }
    }
    keyword("while");
    keyword("true");
    expect(Tok::LBrace, "'{'");
    while (peek().kind != Tok::RBrace) p.body.push_back(statement());
    expect(Tok::RBrace, "'}'");
    if (peek().kind != Tok::End) fail({"end of input"});
    check_definitions(p);
    return p;
  }

 private:
  static std::string position(SourcePos pos) {
    return std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": ";
  }

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(peek().pos, std::move(expected), describe(peek()));
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail({what});
    return next();
  }

  void keyword(const char* word) {
    if (peek().kind != Tok::Ident || peek().text != word) fail({std::string("'") + word + "'"});
    next();
  }

  std::string identifier() {
    if (peek().kind != Tok::Ident || is_keyword(peek().text)) fail({"identifier"});
    return next().text;
  }

  void pragma(Program& p) {
    next();  // '@'
    if (peek().kind != Tok::Ident || peek().text != "binary") fail({"'binary'"});
    next();
    auto name = identifier();
    if (!p.is_binary(name)) p.binary.push_back(name);
  }

  Init init() {
    Init out;
    out.pos = peek().pos;
    out.target = identifier();
    expect(Tok::Assign, "':='");
    if (at_distribution()) {
      out.value = distribution();
    } else {
      out.value = constant("number or distribution");
    }
    return out;
  }

  bool at_distribution() const {
    return peek().kind == Tok::Ident &&
           (peek().text == "Normal" || peek().text == "Uniform" || peek().text == "Bernoulli");
  }

  Distribution distribution() {
    const auto& name = next().text;
    expect(Tok::LParen, "'('");
    Rational a = constant("number");
    Rational b = 0;
    bool two = false;
    if (peek().kind == Tok::Comma) {
      next();
      b = constant("number");
      two = true;
    }
    expect(Tok::RParen, two ? "')'" : "',' or ')'");
    if (name == "Bernoulli") {
      if (two) throw SyntaxError(peek().pos, {"one parameter"}, "two parameters to Bernoulli");
      return Distribution::bernoulli(a);
    }
    if (!two) throw SyntaxError(peek().pos, {"','"}, "one parameter to " + name);
    return name == "Normal" ? Distribution::normal(a, b) : Distribution::uniform(a, b);
  }

  /// A constant expression folded to an exact rational.
  Rational constant(const char* what) {
    SourcePos at = peek().pos;
    auto e = expression();
    Rational v;
    if (!fold(*e, v)) throw SyntaxError(at, {what}, "non-constant expression");
    return v;
  }

  static bool fold(const Expr& e, Rational& out) {
    Rational a, b;
    switch (e.op) {
      case Expr::Op::Number: out = e.value; return true;
      case Expr::Op::Var: return false;
      case Expr::Op::Neg:
        if (!fold(*e.lhs, a)) return false;
        out = -a;
        return true;
      case Expr::Op::Pow:
        if (!fold(*e.lhs, a)) return false;
        out = pow(a, e.exponent);
        return true;
      default:
        if (!fold(*e.lhs, a) || !fold(*e.rhs, b)) return false;
        switch (e.op) {
          case Expr::Op::Add: out = a + b; return true;
          case Expr::Op::Sub: out = a - b; return true;
          case Expr::Op::Mul: out = a * b; return true;
          case Expr::Op::Div:
            if (b == 0) return false;
            out = a / b;
            return true;
          default: return false;
        }
    }
  }

  Statement statement() {
    Statement s;
    s.pos = peek().pos;
    if (peek().kind == Tok::Ident && peek().text == "if") {
      next();
      BinaryGuard g;
      g.guard = identifier();
      expect(Tok::Equals, "'='");
      const auto& v = expect(Tok::Number, "'0' or '1'");
      if (v.text != "0" && v.text != "1") throw SyntaxError(v.pos, {"'0'", "'1'"}, describe(v));
      g.value = v.text == "1" ? 1 : 0;
      expect(Tok::LBrace, "'{'");
      g.then_branch = std::make_shared<Statement>(statement());
      expect(Tok::RBrace, "'}'");
      keyword("else");
      expect(Tok::LBrace, "'{'");
      g.else_branch = std::make_shared<Statement>(statement());
      expect(Tok::RBrace, "'}'");
      s.node = std::move(g);
      return s;
    }
    auto target = identifier();
    expect(Tok::Assign, "':='");
    if (at_distribution()) {
      s.node = DistDraw{target, distribution()};
      return s;
    }
    auto first = expression();
    if (peek().kind == Tok::LBracket) {
      next();
      Rational p = constant("probability");
      expect(Tok::RBracket, "']'");
      auto second = expression();
      s.node = ProbChoice{target, first, p, second};
    } else {
      s.node = DetAssign{target, first};
    }
    return s;
  }

  // expr := term (('+'|'-') term)*
  ExprPtr expression() {
    auto lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const auto& op = next();
      auto rhs = term();
      lhs = Expr::binary(op.kind == Tok::Plus ? Expr::Op::Add : Expr::Op::Sub, lhs, rhs, op.pos);
    }
    return lhs;
  }

  // term := unary (('*'|'/') unary)*
  ExprPtr term() {
    auto lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const auto& op = next();
      SourcePos rhs_pos = peek().pos;
      auto rhs = unary();
      if (op.kind == Tok::Star) {
        lhs = Expr::binary(Expr::Op::Mul, lhs, rhs, op.pos);
        continue;
      }
      if (rhs->op != Expr::Op::Number)
        throw SyntaxError(rhs_pos, {"numeric divisor"}, "non-constant divisor");
      if (rhs->value == 0) throw SyntaxError(rhs_pos, {"non-zero divisor"}, "division by zero");
      if (lhs->op == Expr::Op::Number) {
        lhs = Expr::number(lhs->value / rhs->value, lhs->pos);
      } else {
        lhs = Expr::binary(Expr::Op::Div, lhs, rhs, op.pos);
      }
    }
    return lhs;
  }

  // unary := '-' unary | power
  ExprPtr unary() {
    if (peek().kind == Tok::Minus) {
      SourcePos at = next().pos;
      auto operand = unary();
      if (operand->op == Expr::Op::Number) return Expr::number(-operand->value, at);
      return Expr::neg(operand, at);
    }
    return power();
  }

  // power := primary ('^' integer)?
  ExprPtr power() {
    auto base = primary();
    if (peek().kind == Tok::Caret) {
      SourcePos at = next().pos;
      const auto& t = expect(Tok::Number, "integer exponent");
      Rational e;
      if (!parse_decimal(t.text, e) || boost::multiprecision::denominator(e) != 1 || e > 64)
        throw SyntaxError(t.pos, {"integer exponent"}, describe(t));
      base = Expr::power(base, static_cast<int>(e.convert_to<long>()), at);
    }
    return base;
  }

  ExprPtr primary() {
    const auto& t = peek();
    if (t.kind == Tok::Number) {
      Rational v;
      if (!parse_decimal(t.text, v)) throw SyntaxError(t.pos, {"number"}, describe(t));
      next();
      return Expr::number(v, t.pos);
    }
    if (t.kind == Tok::Ident && !is_keyword(t.text)) {
      next();
      return Expr::var(t.text, t.pos);
    }
    if (t.kind == Tok::LParen) {
      next();
      auto e = expression();
      expect(Tok::RParen, "')'");
      return e;
    }
    fail({"number", "identifier", "'('"});
  }

  // Every read refers to an init-assigned variable or one assigned earlier in
  // the body.
  static void check_definitions(const Program& p) {
    std::set<std::string> defined;
    for (const auto& i : p.inits) defined.insert(i.target);
    for (const auto& s : p.body) check_statement(s, defined);
  }

  static void check_expr(const Expr& e, const std::set<std::string>& defined) {
    if (e.op == Expr::Op::Var) {
      if (!defined.count(e.name))
        throw Error(ErrorKind::UndefinedVariable,
                    position(e.pos) + "variable '" + e.name + "' is read before it is assigned");
      return;
    }
    if (e.lhs) check_expr(*e.lhs, defined);
    if (e.rhs) check_expr(*e.rhs, defined);
  }

  static void check_statement(const Statement& s, std::set<std::string>& defined) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, DetAssign>) {
            check_expr(*n.rhs, defined);
            defined.insert(n.target);
          } else if constexpr (std::is_same_v<T, ProbChoice>) {
            check_expr(*n.first, defined);
            check_expr(*n.second, defined);
            defined.insert(n.target);
          } else if constexpr (std::is_same_v<T, DistDraw>) {
            defined.insert(n.target);
          } else {
            if (!defined.count(n.guard))
              throw Error(ErrorKind::UndefinedVariable,
                          position(s.pos) + "guard variable '" + n.guard +
                              "' is read before it is assigned");
            auto a = defined, b = defined;
            check_statement(*n.then_branch, a);
            check_statement(*n.else_branch, b);
            for (const auto& v : a)
              if (b.count(v)) defined.insert(v);
          }
        },
        s.node);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Pretty printer

int precedence(const Expr& e) {
  switch (e.op) {
    case Expr::Op::Add:
    case Expr::Op::Sub: return 1;
    case Expr::Op::Mul:
    case Expr::Op::Div: return 2;
    case Expr::Op::Neg: return 3;
    case Expr::Op::Pow: return 4;
    case Expr::Op::Number:
      return (e.value < 0 || boost::multiprecision::denominator(e.value) != 1) ? 0 : 5;
    case Expr::Op::Var: return 5;
  }
  return 5;
}

void print_expr(std::ostream& os, const Expr& e);

void print_operand(std::ostream& os, const Expr& child, int min_prec) {
  if (precedence(child) < min_prec) {
    os << '(';
    print_expr(os, child);
    os << ')';
  } else {
    print_expr(os, child);
  }
}

void print_expr(std::ostream& os, const Expr& e) {
  switch (e.op) {
    case Expr::Op::Number: os << momentest::to_string(e.value); return;
    case Expr::Op::Var: os << e.name; return;
    case Expr::Op::Neg:
      os << '-';
      print_operand(os, *e.lhs, 3);
      return;
    case Expr::Op::Pow:
      print_operand(os, *e.lhs, 5);
      os << '^' << e.exponent;
      return;
    default: {
      const int p = precedence(e);
      const char* sym = e.op == Expr::Op::Add   ? " + "
                        : e.op == Expr::Op::Sub ? " - "
                        : e.op == Expr::Op::Mul ? " * "
                                                : " / ";
      print_operand(os, *e.lhs, p);
      os << sym;
      print_operand(os, *e.rhs, p + 1);
    }
  }
}

void print_statement(std::ostream& os, const Statement& s, int indent) {
  std::string pad(static_cast<std::size_t>(indent), ' ');
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DetAssign>) {
          os << pad << n.target << " := ";
          print_expr(os, *n.rhs);
          os << '\n';
        } else if constexpr (std::is_same_v<T, ProbChoice>) {
          os << pad << n.target << " := ";
          print_expr(os, *n.first);
          os << " [" << momentest::to_string(n.prob) << "] ";
          print_expr(os, *n.second);
          os << '\n';
        } else if constexpr (std::is_same_v<T, DistDraw>) {
          os << pad << n.target << " := " << to_string(n.dist) << '\n';
        } else {
          os << pad << "if " << n.guard << " = " << n.value << " {\n";
          print_statement(os, *n.then_branch, indent + 2);
          os << pad << "} else {\n";
          print_statement(os, *n.else_branch, indent + 2);
          os << pad << "}\n";
        }
      },
      s.node);
}

}  // namespace

Program parse_program(std::string_view text) {
  Parser parser(lex(text));
  return parser.program();
}

std::string pretty_print(const Expr& expr) {
  std::ostringstream os;
  print_expr(os, expr);
  return os.str();
}

std::string pretty_print(const Program& program) {
  std::ostringstream os;
  for (const auto& b : program.binary) os << "@binary " << b << '\n';
  for (const auto& i : program.inits) {
    os << i.target << " := ";
    if (const auto* r = std::get_if<Rational>(&i.value)) {
      os << momentest::to_string(*r);
    } else {
      os << to_string(std::get<Distribution>(i.value));
    }
    os << '\n';
  }
  os << "while true {\n";
  for (const auto& s : program.body) print_statement(os, s, 2);
  os << "}\n";
  return os.str();
}

}  // namespace momentest::dsl
