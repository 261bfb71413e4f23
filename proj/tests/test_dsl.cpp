#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <regex>

#include "momentest/dsl.hpp"
#include "momentest/engine.hpp"
#include "support.hpp"

using namespace momentest;
using namespace momentest::dsl;

namespace {

std::string slurp(const std::string& path) { return pipeline::read_file(path); }

bool has_message(const ValidationReport& r, const std::string& needle) {
  for (const auto& d : r.diagnostics)
    if (d.message.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("parse: Vasicek listing has five inits and two statements") {
  const auto p = parse_program(slurp(testing::corpus_path("vasicek")));
  CHECK(p.inits.size() == 5);
  REQUIRE(p.body.size() == 2);
  CHECK(std::holds_alternative<DistDraw>(p.body[0].node));
  CHECK(std::holds_alternative<DetAssign>(p.body[1].node));
}

TEST_CASE("parse: one-line probabilistic choice") {
  const auto p = parse_program("x:=0 while true { x := x+1 [0.5] x }");
  REQUIRE(p.body.size() == 1);
  const auto* choice = std::get_if<ProbChoice>(&p.body[0].node);
  REQUIRE(choice != nullptr);
  CHECK(choice->prob == Rational(1, 2));
}

TEST_CASE("parse: decimals are exact") {
  const auto p = parse_program("x := 0.10\ny := 0.9\nz := 1.5e-3\nwhile true { x := x + y + z }");
  CHECK(std::get<Rational>(p.inits[0].value) == Rational(1, 10));
  CHECK(std::get<Rational>(p.inits[1].value) == Rational(9, 10));
  CHECK(std::get<Rational>(p.inits[2].value) == Rational(3, 2000));
}

TEST_CASE("parse: errors") {
  SUBCASE("missing loop") {
    CHECK_THROWS_AS(parse_program("x := x+1"), SyntaxError);
  }
  SUBCASE("position is reported") {
    try {
      parse_program("x := 0\nwhile true {\n  x := x +* 1\n}");
      FAIL("expected a syntax error");
    } catch (const SyntaxError& e) {
      CHECK(e.position().line == 3);
      CHECK(e.kind() == ErrorKind::SyntaxError);
    }
  }
  SUBCASE("undefined variable") {
    try {
      parse_program("x := 0 while true { x := y }");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UndefinedVariable);
    }
  }
  SUBCASE("duplicate init") {
    try {
      parse_program("x := 0 x := 1 while true { x := x }");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DuplicateInit);
    }
  }
  SUBCASE("identifier as probability") {
    CHECK_THROWS_AS(parse_program("p := 0.5 x := 0 while true { x := 1 [p] 0 }"), SyntaxError);
  }
}

TEST_CASE("round trip: parse(pretty_print(P)) == P on the corpus") {
  for (const auto& name : testing::corpus_names()) {
    CAPTURE(name);
    const auto p = parse_program(slurp(testing::corpus_path(name)));
    const auto text = pretty_print(p);
    const auto q = parse_program(text);
    CHECK(equal(p, q));
    CHECK(pretty_print(q) == text);
  }
}

TEST_CASE("validate") {
  SUBCASE("Vasicek is eligible without errors") {
    const auto r = validate(parse_program(slurp(testing::corpus_path("vasicek"))));
    CHECK(r.ok());
    CHECK(r.propagation_eligible);
  }
  SUBCASE("every corpus program is valid and eligible") {
    for (const auto& name : testing::corpus_names()) {
      CAPTURE(name);
      const auto r = validate(parse_program(slurp(testing::corpus_path(name))));
      CHECK(r.ok());
      CHECK(r.propagation_eligible);
    }
  }
  SUBCASE("guard on a non-binary variable") {
    auto text = slurp(testing::corpus_path("pdp"));
    text = std::regex_replace(text, std::regex("@binary s\n"), "");
    const auto r = validate(parse_program(text));
    CHECK_FALSE(r.ok());
    CHECK(has_message(r, "guard variable must be binary"));
  }
  SUBCASE("Uniform(2,1)") {
    const auto r = validate(parse_program("x := 0 while true { x := Uniform(2, 1) }"));
    CHECK_FALSE(r.ok());
    CHECK(has_message(r, "lo < hi violated"));
  }
  SUBCASE("negative variance") {
    const auto r = validate(parse_program("x := 0 while true { x := Normal(0, -1) }"));
    CHECK(has_message(r, "variance >= 0 violated"));
  }
  SUBCASE("unused variable is a warning") {
    const auto r = validate(parse_program("x := 0 q := 3 while true { x := x + 1 }"));
    CHECK(r.ok());
    CHECK(has_message(r, "never used"));
  }
  SUBCASE("cubic update is not eligible") {
    const auto r = validate(parse_program(slurp(testing::corpus_path("extra/sde"))));
    CHECK(r.ok());
    CHECK_FALSE(r.propagation_eligible);
  }
}

TEST_CASE("desugar: choice becomes a Bernoulli mixture") {
  const auto core = testing::core_of("x:=0 while true { x := x+1 [0.5] x }");
  REQUIRE(core.fresh.size() == 1);
  CHECK(core.fresh[0].name == "#d0");
  CHECK(core.fresh[0].dist == Distribution::bernoulli(Rational(1, 2)));
  REQUIRE(core.updates.size() == 1);
  // x + c
  auto want = Polynomial<Rational>::variable(2, 0) + Polynomial<Rational>::variable(2, 1);
  CHECK(core.updates[0].rhs == want);
}

TEST_CASE("desugar: binary guard agrees with branch semantics on every outcome") {
  const auto program = parse_program(
      "@binary s\ns := 0\nwhile true { if s = 0 { s := 1 [0.1] 0 } else { s := 0 [0.6] 1 } }");
  const auto core = desugar(program);
  REQUIRE(core.fresh.size() == 2);
  REQUIRE(core.updates.size() == 1);
  const auto& rhs = core.updates[0].rhs;
  for (int s : {0, 1})
    for (int cf : {0, 1})
      for (int ch : {0, 1}) {
        const std::vector<Rational> v{s, cf, ch};
        const Rational got = rhs.evaluate(std::span<const Rational>(v));
        const int want = s == 0 ? (cf ? 1 : 0) : (ch ? 0 : 1);
        CHECK(got == want);
        // (1-s)*cf + s*(1-ch)
        CHECK(got == (1 - s) * cf + s * (1 - ch));
      }
}

TEST_CASE("desugar: deterministic program has no fresh symbols") {
  const auto core = testing::core_of("x := 1 while true { x := 2*x + 1 }");
  CHECK(core.fresh.empty());
}

TEST_CASE("desugar: constants are folded") {
  const auto core = testing::load("vasicek").core;
  CHECK(core.constants.count("a") == 1);
  CHECK_FALSE(core.state_index("a").has_value());
  CHECK(core.state_index("r").has_value());
}

TEST_CASE("coupling: Program and CoreProgram trajectories agree exactly") {
  for (const auto& name : testing::corpus_names()) {
    CAPTURE(name);
    const auto lp = testing::load(name);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto kd = engine::keyed_draws(lp.core, rng::derive(12345, seed));
      auto draw = [&](std::int64_t it, std::size_t slot, const Distribution& d) {
        return exact_rational(kd(it, slot, d));
      };
      const auto direct = engine::run_program<Rational>(lp.program, 50, draw);
      const auto core = engine::run_core<Rational>(lp.core, 50, draw);
      for (std::size_t i = 0; i < lp.core.state.size(); ++i) {
        const auto& var = lp.core.state[i];
        if (direct.at(var) != core[i]) {
          CAPTURE(var);
          CAPTURE(seed);
          FAIL("trajectories differ");
        }
      }
    }
  }
}

TEST_CASE("binary variables stay in {0,1}") {
  for (const auto& name : testing::corpus_names()) {
    const auto lp = testing::load(name);
    for (std::size_t i = 0; i < lp.core.state.size(); ++i) {
      if (!lp.core.binary[i]) continue;
      CAPTURE(name);
      for (std::int64_t n : {1, 2, 7, 100}) {
        const auto data = engine::sample(lp.core, n, 10000, 99);
        const auto col = data.column(lp.core.state[i]);
        bool ok = true;
        for (Eigen::Index r = 0; r < col.size(); ++r) ok = ok && (col(r) == 0.0 || col(r) == 1.0);
        CHECK(ok);
      }
    }
  }
}
