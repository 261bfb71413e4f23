#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "momentest/specfun.hpp"
#include "support.hpp"

using namespace momentest;
using namespace momentest::specfun;

namespace {

// B_m(x_1..x_m) = m! [t^m] exp(sum_j x_j t^j / j!), by power-series exponentiation.
std::vector<double> bell_by_series(const std::vector<double>& x, int m) {
  std::vector<double> a(m + 1, 0.0);  // exponent series
  double fact = 1;
  for (int j = 1; j <= m; ++j) {
    fact *= j;
    a[j] = j - 1 < static_cast<int>(x.size()) ? x[j - 1] / fact : 0.0;
  }
  // e = exp(a): e' = a' e  =>  k e_k = sum_{j=1}^{k} j a_j e_{k-j}
  std::vector<double> e(m + 1, 0.0);
  e[0] = 1;
  for (int k = 1; k <= m; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += j * a[j] * e[k - j];
    e[k] = s / k;
  }
  std::vector<double> out(m + 1);
  fact = 1;
  for (int k = 0; k <= m; ++k) {
    if (k > 0) fact *= k;
    out[k] = e[k] * fact;
  }
  return out;
}

double binom(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// The determinant formula for the m-th cumulant.
double cumulant_by_determinant(const std::vector<double>& raw, int m) {
  auto mom = [&](int i) { return i == 0 ? 1.0 : raw[i - 1]; };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i <= m; ++i) {
    a(i - 1, 0) = mom(i);
    for (int j = 2; j <= std::min(m, i + 1); ++j) a(i - 1, j - 1) = binom(i - 1, j - 2) * mom(i - j + 1);
  }
  return (m % 2 == 1 ? 1.0 : -1.0) * a.determinant();
}

// Raw moments 1..m of a random Gaussian mixture.
std::vector<double> mixture_moments(std::mt19937_64& gen, int m) {
  std::uniform_real_distribution<double> mean(-1, 1), var(0.2, 1.5), weight(0.1, 1);
  const int parts = 1 + static_cast<int>(gen() % 3);
  std::vector<double> w(parts), out(m, 0.0);
  double total = 0;
  for (auto& x : w) total += (x = weight(gen));
  for (int c = 0; c < parts; ++c) {
    const auto d = dsl::Distribution::normal(exact_rational(mean(gen)), exact_rational(var(gen)));
    for (int k = 1; k <= m; ++k) out[k - 1] += w[c] / total * to_double(moments::raw_moment(d, k));
  }
  return out;
}

moments::MomentSet as_set(std::vector<double> v) {
  moments::MomentSet ms;
  ms.var = "x";
  ms.values = std::move(v);
  return ms;
}

}  // namespace

TEST_CASE("hermite_prob") {
  for (double x : {-2.5, 0.0, 0.7, 3.0}) CHECK(hermite_prob(0, x) == 1.0);
  CHECK(hermite_prob(2, 3) == 8);
  CHECK(hermite_prob(3, 2) == 2);
  CHECK(hermite_prob(4, 1.5) == doctest::Approx(std::pow(1.5, 4) - 6 * 1.5 * 1.5 + 3));
  const auto all = hermite_prob_all(6, 0.3);
  for (int m = 0; m <= 6; ++m) CHECK(all(m) == hermite_prob(m, 0.3));
}

TEST_CASE("hermite orthogonality under the Gaussian weight") {
  const auto q = gauss_legendre(-12, 12, 64);
  for (int i = 0; i <= 8; ++i)
    for (int j = 0; j <= 8; ++j) {
      const double v = q.integrate([&](double x) {
        return hermite_prob(i, x) * hermite_prob(j, x) * std::exp(-x * x / 2) /
               std::sqrt(2 * std::numbers::pi);
      });
      const double want = i == j ? std::tgamma(i + 1.0) : 0.0;
      CHECK(std::abs(v - want) < 1e-8 * std::max(1.0, want));
    }
}

TEST_CASE("bell_reduced") {
  const std::vector<double> k{0.4, 1.7, 0.3, -0.2, 0.15, 0.05, -0.01, 0.02};
  CHECK(bell_reduced(0, k) == 1);
  CHECK(bell_reduced(1, k) == 0);
  CHECK(bell_reduced(2, k) == 0);
  CHECK(bell_reduced(3, k) == doctest::Approx(0.3));
  CHECK(bell_reduced(6, k) == doctest::Approx(0.05 + 10 * 0.3 * 0.3));
  auto x = k;
  x[0] = x[1] = 0;
  const auto oracle = bell_by_series(x, 8);
  for (int m = 0; m <= 8; ++m) {
    CAPTURE(m);
    CHECK(bell_reduced(m, k) == doctest::Approx(oracle[m]).epsilon(1e-13));
  }
}

TEST_CASE("cumulants_from_moments") {
  SUBCASE("Vasicek") {
    const auto cv = cumulants_from_moments(as_set({0.2, 0.2 * 0.2 + 0.16 / 3}));
    CHECK(cv.mean() == doctest::Approx(0.2));
    CHECK(cv.variance() == doctest::Approx(0.16 / 3));
  }
  SUBCASE("symmetric law has zero third cumulant") {
    CHECK(cumulants_from_moments(as_set({0, 1, 0})).kappa[2] == 0);
  }
  SUBCASE("Gaussian cumulants vanish above order 2") {
    const auto d = dsl::Distribution::normal(Rational(3, 2), Rational(7, 10));
    std::vector<double> raw;
    for (int k = 1; k <= 4; ++k) raw.push_back(to_double(moments::raw_moment(d, k)));
    const auto cv = cumulants_from_moments(as_set(raw));
    CHECK(std::abs(cv.kappa[2]) < 1e-10);
    CHECK(std::abs(cv.kappa[3]) < 1e-10);
  }
  SUBCASE("exact moments give exact cumulants") {
    auto ms = as_set({0, 0});
    ms.exact = std::vector<Rational>{Rational(1, 2), Rational(1, 3), Rational(1, 4), Rational(1, 5)};
    ms.values = {0.5, 1.0 / 3, 0.25, 0.2};
    const auto cv = cumulants_from_moments(ms);
    // Uniform(0,1): k2 = 1/12, k3 = 0, k4 = -1/120
    CHECK(cv.kappa[1] == 1.0 / 12);
    CHECK(cv.kappa[2] == 0.0);
    CHECK(cv.kappa[3] == -1.0 / 120);
  }
  SUBCASE("degenerate variance") {
    try {
      cumulants_from_moments(as_set({1, 1}));
      FAIL("expected DegenerateVariance");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateVariance);
    }
  }
}

TEST_CASE("moments_from_cumulants") {
  const auto g = moments_from_cumulants({{0.5, 2, 0, 0}});
  CHECK(g.values[0] == 0.5);
  CHECK(g.values[1] == doctest::Approx(2.25));
  CHECK(g.values[2] == doctest::Approx(0.125 + 3 * 0.5 * 2));
  CHECK(moments_from_cumulants({{0, 1, 1}}).values[2] == doctest::Approx(1));
  const auto v = as_set({0.2, 0.2 * 0.2 + 0.16 / 3});
  const auto back = moments_from_cumulants(cumulants_from_moments(v));
  CHECK(back.values[0] == doctest::Approx(v.values[0]).epsilon(1e-14));
  CHECK(back.values[1] == doctest::Approx(v.values[1]).epsilon(1e-14));
}

TEST_CASE("cumulant round trip and determinant agreement on random mixtures") {
  std::mt19937_64 gen(2024);
  double worst_round = 0, worst_det = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto raw = mixture_moments(gen, 8);
    const auto cv = cumulants_from_moments(as_set(raw));
    const auto back = moments_from_cumulants(cv);
    for (int i = 0; i < 8; ++i)
      worst_round = std::max(worst_round, std::abs(back.values[i] - raw[i]) / std::abs(raw[i]));
    const double scale = std::pow(cv.variance(), 0.5);
    for (int m = 1; m <= 8; ++m) {
      const double det = cumulant_by_determinant(raw, m);
      // Relative to the cumulant, or to the natural scale sigma^m when the
      // cumulant itself is near zero.
      const double denom = std::max(std::abs(cv.kappa[m - 1]), std::pow(scale, m));
      worst_det = std::max(worst_det, std::abs(det - cv.kappa[m - 1]) / denom);
    }
  }
  CHECK(worst_round < 1e-10);
  CHECK(worst_det < 1e-9);
}

TEST_CASE("gauss_legendre") {
  SUBCASE("two-point rule") {
    const auto q = gauss_legendre(-1, 1, 2);
    CHECK(q.nodes(0) == doctest::Approx(-1 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(q.nodes(1) == doctest::Approx(1 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(q.weights(0) == doctest::Approx(1).epsilon(1e-15));
    CHECK(q.weights(1) == doctest::Approx(1).epsilon(1e-15));
    CHECK(gauss_legendre(0, 1, 2).integrate([](double x) { return x * x; }) ==
          doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  SUBCASE("sine") {
    const double v = gauss_legendre(0, std::numbers::pi, 20).integrate([](double x) { return std::sin(x); });
    CHECK(std::abs(v - 2) < 1e-12);
  }
  SUBCASE("weights are positive and sum to the length") {
    for (int order : {1, 3, 16, 64, 100}) {
      const auto q = gauss_legendre(-0.5, 2.5, order);
      CHECK(q.weights.minCoeff() > 0);
      CHECK(q.weights.sum() == doctest::Approx(3).epsilon(1e-13));
      for (Eigen::Index i = 1; i < q.nodes.size(); ++i) CHECK(q.nodes(i) > q.nodes(i - 1));
    }
  }
  SUBCASE("degree exactness on random polynomials") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> lo(0, 0.5), hi(1, 2), coef(0, 1);
    std::uniform_int_distribution<int> ord(1, 64);
    double worst = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const int order = ord(gen);
      const double l = lo(gen), u = hi(gen);
      std::vector<double> c(2 * order);
      for (auto& x : c) x = coef(gen);
      long double exact = 0;
      for (std::size_t k = 0; k < c.size(); ++k)
        exact += c[k] * (std::pow(static_cast<long double>(u), k + 1) -
                         std::pow(static_cast<long double>(l), k + 1)) /
                 (k + 1);
      const double got = gauss_legendre(l, u, order).integrate([&](double x) {
        long double s = 0;
        for (std::size_t k = c.size(); k-- > 0;) s = s * x + c[k];
        return static_cast<double>(s);
      });
      worst = std::max(worst, static_cast<double>(std::abs(got - exact) / exact));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("gamma_p") {
  for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 40.0}) {
    CAPTURE(x);
    CHECK(gamma_p(1, x) == doctest::Approx(1 - std::exp(-x)).epsilon(1e-13));
    CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-13));
  }
  CHECK(gamma_p(3, 0) == 0);
}

TEST_CASE("chi2_inv_cdf") {
  CHECK(std::abs(chi2_inv_cdf(0.95, 14) - 23.685) < 5e-3);
  CHECK(std::abs(chi2_inv_cdf(0.95, 49) - 66.339) < 5e-3);
  CHECK(std::abs(chi2_inv_cdf(0.5, 2) - 2 * std::log(2.0)) < 1e-6);
  // Reference quantiles.
  CHECK(std::abs(chi2_inv_cdf(0.95, 1) - 3.841458820694124) < 1e-6);
  CHECK(std::abs(chi2_inv_cdf(0.99, 10) - 23.209251158954356) < 1e-6);
  CHECK(std::abs(chi2_inv_cdf(0.05, 30) - 18.49266098195347) < 1e-6);
  for (double p : {0.01, 0.3, 0.9, 0.999})
    for (double df : {1.0, 4.0, 25.0, 120.0}) CHECK(gamma_p(df / 2, chi2_inv_cdf(p, df) / 2) == doctest::Approx(p).epsilon(1e-9));
}
