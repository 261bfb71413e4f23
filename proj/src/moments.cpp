#include "momentest/moments.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include <Eigen/Dense>

namespace momentest::moments {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Propagated: return "propagated";
    case Provenance::Empirical: return "empirical";
    case Provenance::External: return "external";
  }
  return "external";
}

MomentSet MomentSet::prefix(std::size_t m) const {
  if (m > order())
    throw Error(ErrorKind::InvalidArgument, "requested " + std::to_string(m) +
                                                " moments but only " + std::to_string(order()) +
                                                " are available");
  MomentSet out = *this;
  out.values.resize(m);
  if (out.exact) out.exact->resize(m);
  return out;
}

nlohmann::json to_json(const MomentSet& ms) {
  nlohmann::json j;
  j["var"] = ms.var;
  j["n"] = ms.n;
  j["provenance"] = std::string(to_string(ms.provenance));
  j["values"] = ms.values;
  if (ms.exact) {
    auto& ex = j["exact"] = nlohmann::json::array();
    for (const auto& q : *ms.exact) ex.push_back(momentest::to_string(q));
  }
  return j;
}

Rational raw_moment(const dsl::Distribution& dist, int k) {
  if (k <= 0) return 1;
  switch (dist.kind) {
    case dsl::DistKind::Bernoulli: return dist.first;
    case dsl::DistKind::Uniform: {
      const auto& a = dist.first;
      const auto& b = dist.second;
      return (pow(b, k + 1) - pow(a, k + 1)) / (Rational(k + 1) * (b - a));
    }
    case dsl::DistKind::Normal: {
      // Central moments of N(0, v): v^(j/2) (j-1)!! for even j, zero otherwise.
      const auto& mu = dist.first;
      const auto& v = dist.second;
      Rational sum = 0;
      Rational central = 1;  // E[Z^j] for the current even j
      BigInt binom = 1;      // C(k, j)
      for (int j = 0; j <= k; ++j) {
        if (j > 0) binom = binom * (k - j + 1) / j;
        if (j % 2 == 1) continue;
        if (j > 0) central *= v * (j - 1);
        sum += Rational(binom) * central * pow(mu, k - j);
      }
      return sum;
    }
  }
  return 0;
}

std::optional<std::size_t> MonomialBasis::index_of(const Exponents& e) const {
  auto it = std::lower_bound(monomials.begin(), monomials.end(), e);
  if (it == monomials.end() || *it != e) return std::nullopt;
  return static_cast<std::size_t>(it - monomials.begin());
}

namespace {

class Puller {
 public:
  explicit Puller(const dsl::CoreProgram& core)
      : core_(core), idempotent_(core.idempotent_symbols()), moments_(core.fresh.size()) {}

  Polynomial<Rational> operator()(const Exponents& monomial) {
    const std::size_t state = core_.state.size();
    Exponents full(core_.symbol_count(), 0);
    std::copy(monomial.begin(), monomial.end(), full.begin());
    auto p = Polynomial<Rational>::monomial(full);
    for (auto it = core_.updates.rbegin(); it != core_.updates.rend(); ++it) {
      if (!p.depends_on(it->target)) continue;
      p = reduce_idempotent(substitute(p, it->target, it->rhs), idempotent_);
    }
    Polynomial<Rational> out(state);
    for (const auto& [e, c] : p.terms()) {
      Rational coeff = c;
      for (std::size_t f = 0; f < core_.fresh.size() && coeff != 0; ++f)
        if (e[state + f] != 0) coeff *= fresh_moment(f, e[state + f]);
      out.add_term(Exponents(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(state)), coeff);
    }
    return out;
  }

 private:
  const Rational& fresh_moment(std::size_t f, int k) {
    auto& cache = moments_[f];
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, raw_moment(core_.fresh[f].dist, k)).first;
    return it->second;
  }

  const dsl::CoreProgram& core_;
  std::vector<bool> idempotent_;
  std::vector<std::map<int, Rational>> moments_;
};

std::size_t target_index(const dsl::CoreProgram& core, std::string_view var) {
  auto idx = core.state_index(var);
  if (!idx) {
    if (core.constants.count(std::string(var)))
      throw Error(ErrorKind::UnknownVariable,
                  "'" + std::string(var) + "' is a constant, not a loop variable");
    throw Error(ErrorKind::UnknownVariable, "unknown variable '" + std::string(var) + "'");
  }
  return *idx;
}

}  // namespace

Polynomial<Rational> pullback(const dsl::CoreProgram& core, const Exponents& monomial) {
  return Puller(core)(monomial);
}

MonomialBasis closure_basis(const dsl::CoreProgram& core, std::string_view var, int m,
                            std::size_t cap) {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "moment order must be >= 1");
  const std::size_t target = target_index(core, var);
  const std::size_t state = core.state.size();
  const int degree_limit = std::max(64, 4 * m);

  Puller pull(core);
  std::set<Exponents> seen;
  std::deque<Exponents> work;
  auto add = [&](const Exponents& e) {
    if (!seen.insert(e).second) return;
    if (seen.size() > cap)
      throw Error(ErrorKind::ClosureExceeded,
                  "monomial basis for '" + std::string(var) + "' exceeds " + std::to_string(cap) +
                      " monomials");
    if (total_degree(e) > degree_limit)
      throw Error(ErrorKind::ClosureExceeded,
                  "monomial degree for '" + std::string(var) + "' exceeds " +
                      std::to_string(degree_limit));
    work.push_back(e);
  };

  add(Exponents(state, 0));
  const bool binary = core.binary[target];
  for (int k = 1; k <= (binary ? 1 : m); ++k) {
    Exponents e(state, 0);
    e[target] = static_cast<std::uint16_t>(k);
    add(e);
  }
  while (!work.empty()) {
    Exponents e = std::move(work.front());
    work.pop_front();
    const auto image = pull(e);
    for (const auto& [t, c] : image.terms()) add(t);
  }

  MonomialBasis basis;
  basis.var = std::string(var);
  basis.order = m;
  basis.monomials.assign(seen.begin(), seen.end());
  return basis;
}

namespace {

template <typename Scalar>
struct SparseRow {
  std::vector<std::pair<std::size_t, Scalar>> entries;
};

Rational initial_expectation(const dsl::CoreProgram& core, const Exponents& e) {
  Rational v = 1;
  for (std::size_t i = 0; i < e.size() && v != 0; ++i) {
    if (e[i] == 0) continue;
    if (const auto* r = std::get_if<Rational>(&core.inits[i])) {
      v *= pow(*r, e[i]);
    } else {
      v *= raw_moment(std::get<dsl::Distribution>(core.inits[i]), e[i]);
    }
  }
  return v;
}

template <typename Scalar, typename Convert>
std::vector<Scalar> iterate(const std::vector<SparseRow<Rational>>& rows,
                            const std::vector<Rational>& init, std::int64_t n, Convert convert,
                            const std::string& var) {
  std::vector<SparseRow<Scalar>> t(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [j, c] : rows[i].entries) t[i].entries.emplace_back(j, convert(c));
  std::vector<Scalar> cur(init.size()), next(init.size());
  for (std::size_t i = 0; i < init.size(); ++i) cur[i] = convert(init[i]);
  for (std::int64_t step = 0; step < n; ++step) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      Scalar s(0);
      for (const auto& [j, c] : t[i].entries) s += c * cur[j];
      if constexpr (std::is_same_v<Scalar, double>) {
        if (!std::isfinite(s))
          throw NumericOverflow("moment propagation for '" + var +
                                "' left the binary64 range at iteration " +
                                std::to_string(step + 1));
      }
      next[i] = std::move(s);
    }
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace

MomentSet propagate(const dsl::CoreProgram& core, const MonomialBasis& basis, std::int64_t n,
                    Arithmetic mode) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be >= 0");
  const std::size_t target = target_index(core, basis.var);

  Puller pull(core);
  std::vector<SparseRow<Rational>> rows(basis.size());
  std::vector<Rational> init(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    init[i] = initial_expectation(core, basis.monomials[i]);
    const auto image = pull(basis.monomials[i]);
    for (const auto& [e, c] : image.terms()) {
      auto j = basis.index_of(e);
      if (!j)
        throw Error(ErrorKind::ClosureExceeded, "basis is not closed under the loop update");
      rows[i].entries.emplace_back(*j, c);
    }
  }

  auto moment_index = [&](int k) {
    Exponents e(core.state.size(), 0);
    e[target] = static_cast<std::uint16_t>(core.binary[target] ? 1 : k);
    auto idx = basis.index_of(e);
    if (!idx) throw Error(ErrorKind::InvalidArgument, "basis does not contain the requested moment");
    return *idx;
  };

  MomentSet out;
  out.var = basis.var;
  out.n = n;
  out.provenance = Provenance::Propagated;
  const bool exact = mode == Arithmetic::Exact ||
                     (mode == Arithmetic::Auto && basis.size() <= kExactBasisLimit);
  if (exact) {
    auto v = iterate<Rational>(rows, init, n, [](const Rational& q) { return q; }, basis.var);
    std::vector<Rational> ex;
    for (int k = 1; k <= basis.order; ++k) {
      ex.push_back(v[moment_index(k)]);
      double d = to_double(ex.back());
      if (!std::isfinite(d))
        throw NumericOverflow("moment E(" + basis.var + "^" + std::to_string(k) +
                              ") exceeds the binary64 range");
      out.values.push_back(d);
    }
    out.exact = std::move(ex);
  } else {
    auto v = iterate<double>(rows, init, n, [](const Rational& q) { return to_double(q); },
                             basis.var);
    for (int k = 1; k <= basis.order; ++k) out.values.push_back(v[moment_index(k)]);
  }
  return out;
}

MomentSet load_moments(const nlohmann::json& doc, std::optional<std::int64_t> n_override) {
  auto schema = [](const std::string& msg) { return Error(ErrorKind::SchemaError, msg); };
  if (!doc.is_object()) throw schema("moments document must be a JSON object");
  if (!doc.contains("var") || !doc["var"].is_string())
    throw schema("moments document requires a string field \"var\"");
  const bool has_values = doc.contains("values");
  const bool has_closed = doc.contains("closed_form");
  if (has_values == has_closed)
    throw schema("moments document requires exactly one of \"values\" or \"closed_form\"");
  std::optional<std::int64_t> n = n_override;
  if (!n && doc.contains("n")) {
    if (!doc["n"].is_number_integer() || doc["n"].get<std::int64_t>() < 0)
      throw schema("\"n\" must be a non-negative integer");
    n = doc["n"].get<std::int64_t>();
  }

  MomentSet ms;
  ms.var = doc["var"].get<std::string>();
  ms.provenance = Provenance::External;
  if (has_values) {
    const auto& vals = doc["values"];
    if (!vals.is_array() || vals.empty())
      throw schema("\"values\" must be a non-empty array of numbers");
    for (const auto& v : vals) {
      if (!v.is_number()) throw schema("\"values\" must contain only numbers");
      ms.values.push_back(v.get<double>());
    }
    ms.n = n.value_or(0);
    return ms;
  }
  if (!n) throw schema("\"closed_form\" requires \"n\"");
  const auto& forms = doc["closed_form"];
  if (!forms.is_array() || forms.empty())
    throw schema("\"closed_form\" must be a non-empty array of strings");
  std::vector<Rational> exact;
  bool all_exact = true;
  for (const auto& f : forms) {
    if (!f.is_string()) throw schema("\"closed_form\" must contain only strings");
    const auto text = f.get<std::string>();
    if (auto q = evaluate_closed_form_exact(text, *n)) {
      exact.push_back(*q);
      ms.values.push_back(to_double(*q));
    } else {
      all_exact = false;
      ms.values.push_back(evaluate_closed_form(text, *n));
    }
  }
  ms.n = *n;
  if (all_exact) ms.exact = std::move(exact);
  return ms;
}

ValidityReport moment_validity(const MomentSet& ms) {
  ValidityReport r;
  if (ms.order() == 0) {
    r.ok = false;
    r.message = "no moments supplied";
    return r;
  }
  for (double v : ms.values) {
    if (!std::isfinite(v)) {
      r.ok = false;
      r.message = "non-finite moment";
      return r;
    }
  }
  if (ms.order() >= 2) {
    const double m1 = ms.raw(1), m2 = ms.raw(2);
    r.variance = m2 - m1 * m1;
    if (r.variance < -1e-12 * std::max(1.0, m2)) {
      r.ok = false;
      r.failed_minor = 1;
      r.message = "variance " + std::to_string(r.variance) + " is negative";
      return r;
    }
  }
  for (int k = 1; 2 * k <= static_cast<int>(ms.order()); ++k) {
    Eigen::MatrixXd h(k + 1, k + 1);
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) h(i, j) = ms.raw(static_cast<std::size_t>(i + j));
    Eigen::VectorXd scale(k + 1);
    for (int i = 0; i <= k; ++i) {
      if (h(i, i) < 0) {
        r.ok = false;
        r.failed_minor = k;
        r.min_eigenvalue = h(i, i);
        r.message = "even moment E(x^" + std::to_string(2 * i) + ") is negative";
        return r;
      }
      scale(i) = h(i, i) > 0 ? 1.0 / std::sqrt(h(i, i)) : 1.0;
    }
    Eigen::MatrixXd s = scale.asDiagonal() * h * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (lo < -1e-9) {
      r.ok = false;
      r.failed_minor = k;
      r.min_eigenvalue = lo;
      r.message = "Hankel matrix of order " + std::to_string(k) + " is not positive semidefinite";
      return r;
    }
    r.min_eigenvalue = k == 1 ? lo : std::min(r.min_eigenvalue, lo);
  }
  return r;
}

}  // namespace momentest::moments
