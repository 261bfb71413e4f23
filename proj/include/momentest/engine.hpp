#ifndef MOMENTEST_ENGINE_HPP
#define MOMENTEST_ENGINE_HPP

// Seeded Monte-Carlo execution of probabilistic loops.
//
// Draw addressing: the k-th distribution init (in init order) uses counter k;
// fresh draw slot s in body iteration t (0-based) uses counter
// (t + 1) * stride + s, with stride = max(1, #fresh draws, #init draws).
// Row i of `sample` runs with key rng::derive(master_seed, i).

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "momentest/dsl.hpp"
#include "momentest/moments.hpp"
#include "momentest/rng.hpp"

namespace momentest::engine {

/// Counter of a draw; iteration -1 addresses the init block.
std::uint64_t draw_counter(const dsl::CoreProgram& core, std::int64_t iteration, std::size_t slot);

/// One binary64 realization of `dist` from a uniform in (0, 1).
double transform(const dsl::Distribution& dist, double u);

/// The binary64 draw the engine uses for (key, iteration, slot).
struct KeyedDraws {
  std::uint64_t key;
  std::uint64_t stride;

  double operator()(std::int64_t iteration, std::size_t slot, const dsl::Distribution& d) const {
    const auto counter = static_cast<std::uint64_t>(iteration + 1) * stride + slot;
    return transform(d, rng::uniform(key, counter));
  }
};

KeyedDraws keyed_draws(const dsl::CoreProgram& core, std::uint64_t key);

// ---------------------------------------------------------------------------
// Interpreters, generic in the scalar type so that the AST and the desugared
// form can be compared in exact arithmetic. `draw(iteration, slot, dist)`
// returns the value of a draw as a Scalar.

namespace detail {

template <typename Scalar>
void check_finite(const Scalar& v, const std::string& var) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    if (!std::isfinite(v)) throw NumericOverflow("variable '" + var + "' left the binary64 range");
  }
}

template <typename Scalar>
Scalar from_rational(const Rational& q) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return to_double(q);
  } else {
    return Scalar(q);
  }
}

template <typename Scalar>
Scalar ipow(const Scalar& base, int k) {
  Scalar r(1);
  for (int i = 0; i < k; ++i) r *= base;
  return r;
}

template <typename Scalar>
Scalar eval_expr(const dsl::Expr& e, const std::map<std::string, Scalar>& env) {
  using Op = dsl::Expr::Op;
  switch (e.op) {
    case Op::Number: return from_rational<Scalar>(e.value);
    case Op::Var: return env.at(e.name);
    case Op::Add: return eval_expr(*e.lhs, env) + eval_expr(*e.rhs, env);
    case Op::Sub: return eval_expr(*e.lhs, env) - eval_expr(*e.rhs, env);
    case Op::Mul: return eval_expr(*e.lhs, env) * eval_expr(*e.rhs, env);
    case Op::Div: return eval_expr(*e.lhs, env) / eval_expr(*e.rhs, env);
    case Op::Neg: return -eval_expr(*e.lhs, env);
    case Op::Pow: return ipow(eval_expr(*e.lhs, env), e.exponent);
  }
  return Scalar(0);
}

template <typename Scalar, typename Draw>
void exec_statement(const dsl::Statement& s, std::map<std::string, Scalar>& env,
                    std::int64_t iteration, std::size_t& slot, Draw& draw) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, dsl::DetAssign>) {
          env[n.target] = eval_expr<Scalar>(*n.rhs, env);
          check_finite(env[n.target], n.target);
        } else if constexpr (std::is_same_v<T, dsl::ProbChoice>) {
          const Scalar c = draw(iteration, slot++, dsl::Distribution::bernoulli(n.prob));
          env[n.target] = eval_expr<Scalar>(c == Scalar(1) ? *n.first : *n.second, env);
          check_finite(env[n.target], n.target);
        } else if constexpr (std::is_same_v<T, dsl::DistDraw>) {
          env[n.target] = draw(iteration, slot++, n.dist);
          check_finite(env[n.target], n.target);
        } else {
          const bool taken = env.at(n.guard) == Scalar(n.value);
          // Slots of the branch not taken are skipped, not reassigned.
          std::size_t then_slot = slot;
          std::size_t else_slot = slot + dsl::draw_slots(*n.then_branch);
          if (taken) {
            exec_statement(*n.then_branch, env, iteration, then_slot, draw);
          } else {
            exec_statement(*n.else_branch, env, iteration, else_slot, draw);
          }
          slot += dsl::draw_slots(*n.then_branch) + dsl::draw_slots(*n.else_branch);
        }
      },
      s.node);
}

}  // namespace detail

/// Runs the source program directly. Returns every variable, constants
/// included.
template <typename Scalar, typename Draw>
std::map<std::string, Scalar> run_program(const dsl::Program& program, std::int64_t n,
                                          Draw&& draw) {
  std::map<std::string, Scalar> env;
  std::size_t init_slot = 0;
  for (const auto& i : program.inits) {
    if (const auto* r = std::get_if<Rational>(&i.value)) {
      env[i.target] = detail::from_rational<Scalar>(*r);
    } else {
      env[i.target] = draw(-1, init_slot++, std::get<dsl::Distribution>(i.value));
    }
  }
  for (const auto& s : program.body) {
    auto t = dsl::target_of(s);
    if (!t.empty() && !env.count(t)) env[t] = Scalar(0);
  }
  for (std::int64_t it = 0; it < n; ++it) {
    std::size_t slot = 0;
    for (const auto& s : program.body) detail::exec_statement(s, env, it, slot, draw);
  }
  return env;
}

/// Runs the desugared program. Returns the state vector (core.state order).
template <typename Scalar, typename Draw>
std::vector<Scalar> run_core(const dsl::CoreProgram& core, std::int64_t n, Draw&& draw) {
  const std::size_t state = core.state.size();
  std::vector<Scalar> sym(core.symbol_count(), Scalar(0));
  std::size_t init_slot = 0;
  for (std::size_t i = 0; i < state; ++i) {
    if (const auto* r = std::get_if<Rational>(&core.inits[i])) {
      sym[i] = detail::from_rational<Scalar>(*r);
    } else {
      sym[i] = draw(-1, init_slot++, std::get<dsl::Distribution>(core.inits[i]));
    }
  }
  std::vector<Polynomial<Scalar>> rhs;
  for (const auto& u : core.updates)
    rhs.push_back(u.rhs.template cast<Scalar>(
        [](const Rational& q) { return detail::from_rational<Scalar>(q); }));
  for (std::int64_t it = 0; it < n; ++it) {
    for (std::size_t f = 0; f < core.fresh.size(); ++f)
      sym[state + f] = draw(it, f, core.fresh[f].dist);
    for (std::size_t k = 0; k < core.updates.size(); ++k) {
      const auto target = core.updates[k].target;
      sym[target] = rhs[k].evaluate(std::span<const Scalar>(sym));
      detail::check_finite(sym[target], core.state[target]);
    }
  }
  sym.resize(state);
  return sym;
}

// ---------------------------------------------------------------------------

/// e executions of a program, one row per execution, one column per state
/// variable.
struct SampleData {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // e x names.size()
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  std::int64_t e = 0;

  /// Throws Error{UnknownVariable}.
  Eigen::Index column_index(std::string_view name) const;
  Eigen::VectorXd column(std::string_view name) const { return values.col(column_index(name)); }
};

/// Final state after n iterations with stream key `seed`.
std::map<std::string, double> run_once(const dsl::CoreProgram& core, std::int64_t n,
                                       std::uint64_t seed);

/// threads = 0 picks the hardware concurrency. The result does not depend on
/// the thread count. NumericOverflow carries the smallest failing row.
SampleData sample(const dsl::CoreProgram& core, std::int64_t n, std::int64_t e,
                  std::uint64_t master_seed, unsigned threads = 0);

/// (1/e) sum_j x_j^i for i = 1..m. Throws Error{UnknownVariable}.
moments::MomentSet empirical_moments(const SampleData& data, std::string_view var, int m);

void write_csv(std::ostream& os, const SampleData& data);
/// Throws Error{SchemaError} on malformed input.
SampleData read_csv(std::istream& is);

}  // namespace momentest::engine

#endif
