#include <sstream>

#include "momentest/dsl.hpp"

namespace momentest::dsl {

std::vector<std::string> CoreProgram::symbol_names() const {
  std::vector<std::string> names = state;
  for (const auto& f : fresh) names.push_back(f.name);
  return names;
}

std::optional<std::size_t> CoreProgram::state_index(std::string_view name) const {
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state[i] == name) return i;
  return std::nullopt;
}

std::vector<bool> CoreProgram::idempotent_symbols() const {
  std::vector<bool> flags(binary);
  for (const auto& f : fresh) flags.push_back(f.dist.kind == DistKind::Bernoulli);
  return flags;
}

std::vector<std::string> CoreProgram::body_variables() const {
  std::vector<bool> assigned(state.size(), false);
  for (const auto& u : updates) assigned[u.target] = true;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < state.size(); ++i)
    if (assigned[i]) out.push_back(state[i]);
  return out;
}

std::size_t draw_slots(const Statement& stmt) {
  return std::visit(
      [](const auto& n) -> std::size_t {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DetAssign>) {
          return 0;
        } else if constexpr (std::is_same_v<T, BinaryGuard>) {
          return draw_slots(*n.then_branch) + draw_slots(*n.else_branch);
        } else {
          return 1;
        }
      },
      stmt.node);
}

namespace {

void collect_targets(const Statement& s, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BinaryGuard>) {
          collect_targets(*n.then_branch, out);
          collect_targets(*n.else_branch, out);
        } else {
          for (const auto& t : out)
            if (t == n.target) return;
          out.push_back(n.target);
        }
      },
      s.node);
}

class Desugarer {
 public:
  explicit Desugarer(const Program& p) : program_(p) {}

  CoreProgram run() {
    std::vector<std::string> body_targets;
    for (const auto& s : program_.body) collect_targets(s, body_targets);
    auto assigned_in_body = [&](const std::string& v) {
      for (const auto& t : body_targets)
        if (t == v) return true;
      return false;
    };

    for (const auto& i : program_.inits) {
      const auto* r = std::get_if<Rational>(&i.value);
      if (r && !assigned_in_body(i.target)) {
        core_.constants.emplace(i.target, *r);
        continue;
      }
      core_.state.push_back(i.target);
      core_.inits.push_back(i.value);
    }
    for (const auto& t : body_targets) {
      if (program_.find_init(t)) continue;
      // Variables first assigned in the body start at zero; they are always
      // written before being read.
      core_.state.push_back(t);
      core_.inits.emplace_back(Rational(0));
    }
    for (const auto& v : core_.state) core_.binary.push_back(program_.is_binary(v));

    // Fresh draws are allocated in statement order before polynomials are
    // built, so the symbol count is known up front.
    for (const auto& s : program_.body) allocate_draws(s);
    symbols_ = core_.symbol_count();

    std::size_t slot = 0;
    for (const auto& s : program_.body) {
      auto [target, rhs] = lower(s, slot);
      core_.updates.push_back({target, reduce_idempotent(rhs, core_.idempotent_symbols())});
    }
    return std::move(core_);
  }

 private:
  void allocate_draws(const Statement& s) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ProbChoice>) {
            add_draw(Distribution::bernoulli(n.prob));
          } else if constexpr (std::is_same_v<T, DistDraw>) {
            add_draw(n.dist);
          } else if constexpr (std::is_same_v<T, BinaryGuard>) {
            allocate_draws(*n.then_branch);
            allocate_draws(*n.else_branch);
          }
        },
        s.node);
  }

  void add_draw(const Distribution& d) {
    core_.fresh.push_back({"#d" + std::to_string(core_.fresh.size()), d});
  }

  std::size_t state_symbol(const std::string& name) const {
    auto idx = core_.state_index(name);
    if (!idx) throw Error(ErrorKind::UndefinedVariable, "unknown variable '" + name + "'");
    return *idx;
  }

  Polynomial<Rational> poly(const Expr& e) const {
    using Op = Expr::Op;
    using P = Polynomial<Rational>;
    switch (e.op) {
      case Op::Number: return P::constant(symbols_, e.value);
      case Op::Var: {
        auto c = core_.constants.find(e.name);
        if (c != core_.constants.end()) return P::constant(symbols_, c->second);
        return P::variable(symbols_, state_symbol(e.name));
      }
      case Op::Add: return poly(*e.lhs) + poly(*e.rhs);
      case Op::Sub: return poly(*e.lhs) - poly(*e.rhs);
      case Op::Mul: return poly(*e.lhs) * poly(*e.rhs);
      case Op::Div: return poly(*e.lhs) * (Rational(1) / e.rhs->value);
      case Op::Neg: return -poly(*e.lhs);
      case Op::Pow: return pow(poly(*e.lhs), e.exponent);
    }
    return P(symbols_);
  }

  Polynomial<Rational> fresh_symbol(std::size_t slot) const {
    return Polynomial<Rational>::variable(symbols_, core_.state.size() + slot);
  }

  std::pair<std::size_t, Polynomial<Rational>> lower(const Statement& s, std::size_t& slot) {
    using P = Polynomial<Rational>;
    return std::visit(
        [&](const auto& n) -> std::pair<std::size_t, P> {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, DetAssign>) {
            return {state_symbol(n.target), poly(*n.rhs)};
          } else if constexpr (std::is_same_v<T, ProbChoice>) {
            auto c = fresh_symbol(slot++);
            auto one = P::constant(symbols_, 1);
            return {state_symbol(n.target), c * poly(*n.first) + (one - c) * poly(*n.second)};
          } else if constexpr (std::is_same_v<T, DistDraw>) {
            return {state_symbol(n.target), fresh_symbol(slot++)};
          } else {
            const auto* a = n.then_branch.get();
            const auto* b = n.else_branch.get();
            if (std::holds_alternative<BinaryGuard>(a->node) ||
                std::holds_alternative<BinaryGuard>(b->node))
              throw Error(ErrorKind::DesugarUnsupported, "nested guards cannot be desugared");
            auto [ta, pa] = lower(*a, slot);
            auto [tb, pb] = lower(*b, slot);
            if (ta != tb)
              throw Error(ErrorKind::DesugarUnsupported,
                          "guard on '" + n.guard + "' assigns different variables in its branches");
            auto g = poly(*Expr::var(n.guard));
            auto one = P::constant(symbols_, 1);
            auto taken = n.value == 0 ? one - g : g;
            return {ta, taken * pa + (one - taken) * pb};
          }
        },
        s.node);
  }

  const Program& program_;
  CoreProgram core_;
  std::size_t symbols_ = 0;
};

}  // namespace

CoreProgram desugar(const Program& program) {
  auto report = detail::validate_structure(program);
  if (!report.ok()) {
    std::string msg = "program failed validation";
    for (const auto& e : report.errors()) msg += "; " + e;
    throw Error(ErrorKind::ValidationError, msg);
  }
  return Desugarer(program).run();
}

std::string pretty_print(const CoreProgram& core) {
  std::ostringstream os;
  const auto names = core.symbol_names();
  for (const auto& [name, value] : core.constants)
    os << "const " << name << " = " << momentest::to_string(value) << '\n';
  for (std::size_t i = 0; i < core.state.size(); ++i) {
    os << (core.binary[i] ? "binary " : "") << core.state[i] << " := ";
    if (const auto* r = std::get_if<Rational>(&core.inits[i])) {
      os << momentest::to_string(*r);
    } else {
      os << to_string(std::get<Distribution>(core.inits[i]));
    }
    os << '\n';
  }
  for (const auto& f : core.fresh) os << "fresh " << f.name << " ~ " << to_string(f.dist) << '\n';
  os << "loop {\n";
  for (const auto& u : core.updates)
    os << "  " << core.state[u.target] << " := " << to_string(u.rhs, names) << '\n';
  os << "}\n";
  return os.str();
}

}  // namespace momentest::dsl
