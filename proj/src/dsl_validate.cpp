#include <set>

#include "momentest/dsl.hpp"
#include "momentest/moments.hpp"

namespace momentest::dsl {

namespace {

std::string at(SourcePos pos) {
  return std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": ";
}

void collect_reads(const Expr& e, std::set<std::string>& out) {
  if (e.op == Expr::Op::Var) out.insert(e.name);
  if (e.lhs) collect_reads(*e.lhs, out);
  if (e.rhs) collect_reads(*e.rhs, out);
}

void collect_reads(const Statement& s, std::set<std::string>& reads,
                   std::set<std::string>& writes) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DetAssign>) {
          collect_reads(*n.rhs, reads);
          writes.insert(n.target);
        } else if constexpr (std::is_same_v<T, ProbChoice>) {
          collect_reads(*n.first, reads);
          collect_reads(*n.second, reads);
          writes.insert(n.target);
        } else if constexpr (std::is_same_v<T, DistDraw>) {
          writes.insert(n.target);
        } else {
          reads.insert(n.guard);
          collect_reads(*n.then_branch, reads, writes);
          collect_reads(*n.else_branch, reads, writes);
        }
      },
      s.node);
}

class Validator {
 public:
  Validator(const Program& p, bool eligibility) : program_(p), eligibility_(eligibility) {}

  ValidationReport run() {
    for (const auto& i : program_.inits) check_init(i);
    for (const auto& s : program_.body) check_statement(s);
    check_binary_declarations();
    check_unused();
    if (eligibility_ && report_.ok()) check_eligibility();
    return std::move(report_);
  }

 private:
  void error(SourcePos pos, const std::string& msg) {
    report_.diagnostics.push_back({Severity::Error, at(pos) + msg, pos});
  }
  void warning(SourcePos pos, const std::string& msg) {
    report_.diagnostics.push_back({Severity::Warning, at(pos) + msg, pos});
  }

  void check_distribution(const Distribution& d, SourcePos pos) {
    switch (d.kind) {
      case DistKind::Normal:
        if (d.second < 0) error(pos, "variance >= 0 violated in " + to_string(d));
        break;
      case DistKind::Uniform:
        if (!(d.first < d.second)) error(pos, "lo < hi violated in " + to_string(d));
        break;
      case DistKind::Bernoulli:
        if (d.first < 0 || d.first > 1) error(pos, "p in [0,1] violated in " + to_string(d));
        break;
    }
  }

  bool binary_valued(const Expr& e) const {
    switch (e.op) {
      case Expr::Op::Number: return e.value == 0 || e.value == 1;
      case Expr::Op::Var: return program_.is_binary(e.name);
      case Expr::Op::Mul: return binary_valued(*e.lhs) && binary_valued(*e.rhs);
      case Expr::Op::Pow: return binary_valued(*e.lhs);
      case Expr::Op::Sub:
        return e.lhs->op == Expr::Op::Number && e.lhs->value == 1 && binary_valued(*e.rhs);
      default: return false;
    }
  }

  bool binary_valued(const Statement& s) const {
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, DetAssign>) {
            return binary_valued(*n.rhs);
          } else if constexpr (std::is_same_v<T, ProbChoice>) {
            return binary_valued(*n.first) && binary_valued(*n.second);
          } else if constexpr (std::is_same_v<T, DistDraw>) {
            return n.dist.kind == DistKind::Bernoulli;
          } else {
            return binary_valued(*n.then_branch) && binary_valued(*n.else_branch);
          }
        },
        s.node);
  }

  void check_init(const Init& i) {
    if (const auto* d = std::get_if<Distribution>(&i.value)) {
      check_distribution(*d, i.pos);
      if (program_.is_binary(i.target) && d->kind != DistKind::Bernoulli)
        error(i.pos, "binary variable '" + i.target + "' must start in {0,1}");
    } else if (program_.is_binary(i.target)) {
      const auto& r = std::get<Rational>(i.value);
      if (r != 0 && r != 1) error(i.pos, "binary variable '" + i.target + "' must start in {0,1}");
    }
  }

  void check_statement(const Statement& s) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BinaryGuard>) {
            if (!program_.is_binary(n.guard))
              error(s.pos, "guard variable must be binary: '" + n.guard +
                               "' is not declared with @binary");
            for (const auto* branch : {n.then_branch.get(), n.else_branch.get()}) {
              auto t = target_of(*branch);
              if (!t.empty() && !program_.is_binary(t))
                error(branch->pos, "guarded assignment to non-binary variable '" + t + "'");
              check_statement(*branch);
            }
          } else {
            if constexpr (std::is_same_v<T, ProbChoice>) {
              if (n.prob < 0 || n.prob > 1)
                error(s.pos, "probability " + momentest::to_string(n.prob) + " outside [0,1]");
            }
            if constexpr (std::is_same_v<T, DistDraw>) check_distribution(n.dist, s.pos);
            if (program_.is_binary(n.target) && !binary_valued(s))
              error(s.pos, "assignment may leave binary variable '" + n.target + "' outside {0,1}");
          }
        },
        s.node);
  }

  void check_binary_declarations() {
    std::set<std::string> reads, writes;
    for (const auto& s : program_.body) collect_reads(s, reads, writes);
    for (const auto& b : program_.binary) {
      if (!program_.find_init(b) && !writes.count(b))
        error({1, 1}, "binary variable '" + b + "' is never assigned");
    }
  }

  void check_unused() {
    std::set<std::string> reads, writes;
    for (const auto& s : program_.body) collect_reads(s, reads, writes);
    for (const auto& i : program_.inits) {
      if (!reads.count(i.target) && !writes.count(i.target))
        warning(i.pos, "variable '" + i.target + "' is never used");
    }
  }

  void check_eligibility() {
    try {
      auto core = desugar(program_);
      for (const auto& v : core.body_variables()) {
        try {
          (void)moments::closure_basis(core, v, 2);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ClosureExceeded) throw;
          warning({1, 1}, "not propagation-eligible: " + std::string(e.what()));
          report_.propagation_eligible = false;
          return;
        }
      }
      report_.propagation_eligible = true;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ClosureExceeded) return;
      error({1, 1}, e.what());
    }
  }

  const Program& program_;
  bool eligibility_;
  ValidationReport report_;
};

}  // namespace

bool ValidationReport::ok() const {
  for (const auto& d : diagnostics)
    if (d.severity == Severity::Error) return false;
  return true;
}

std::vector<std::string> ValidationReport::errors() const {
  std::vector<std::string> out;
  for (const auto& d : diagnostics)
    if (d.severity == Severity::Error) out.push_back(d.message);
  return out;
}

ValidationReport validate(const Program& program) { return Validator(program, true).run(); }

namespace detail {

ValidationReport validate_structure(const Program& program) {
  return Validator(program, false).run();
}

}  // namespace detail

}  // namespace momentest::dsl
