#ifndef MOMENTEST_TESTS_SUPPORT_HPP
#define MOMENTEST_TESTS_SUPPORT_HPP

#include <cmath>
#include <string>
#include <vector>

#include "momentest/pipeline.hpp"

namespace testing {

inline const std::vector<std::string>& corpus_names() {
  static const std::vector<std::string> names{"stutteringp", "square", "binomial", "randomwalk1d",
                                              "uniform",     "vasicek", "pdp"};
  return names;
}

/// The variable each benchmark studies.
inline std::string target_of(const std::string& name) {
  if (name == "stutteringp") return "s";
  if (name == "square") return "y";
  if (name == "uniform") return "u";
  if (name == "vasicek") return "r";
  return "x";
}

inline std::string corpus_path(const std::string& name) {
  return std::string(MOMENTEST_CORPUS) + "/" + name + ".pp";
}

inline momentest::pipeline::LoadedProgram load(const std::string& name) {
  return momentest::pipeline::load_program(corpus_path(name));
}

inline momentest::dsl::CoreProgram core_of(const std::string& source) {
  return momentest::dsl::desugar(momentest::dsl::parse_program(source));
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace testing

#endif
