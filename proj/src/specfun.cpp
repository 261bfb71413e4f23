#include "momentest/specfun.hpp"

#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>

namespace momentest::specfun {

double hermite_prob(int m, double x) {
  if (m < 0) throw Error(ErrorKind::InvalidArgument, "Hermite degree must be >= 0");
  if (m == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < m; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

Eigen::VectorXd hermite_prob_all(int m, double x) {
  Eigen::VectorXd he(m + 1);
  he(0) = 1.0;
  if (m >= 1) he(1) = x;
  for (int k = 1; k < m; ++k) he(k + 1) = x * he(k) - k * he(k - 1);
  return he;
}

namespace {

// Row n of Pascal's triangle; exact in binary64 for the small n used here.
std::vector<double> binomial_row(int n) {
  std::vector<double> row(static_cast<std::size_t>(n) + 1, 1.0);
  for (int k = 1; k < n; ++k) row[k] = row[k - 1] * (n - k + 1) / k;
  return row;
}

}  // namespace

double bell_reduced(int m, const std::vector<double>& kappa) {
  if (m < 0) throw Error(ErrorKind::InvalidArgument, "Bell index must be >= 0");
  if (m >= 3 && static_cast<int>(kappa.size()) < m)
    throw Error(ErrorKind::InvalidArgument, "Bell polynomial needs cumulants up to order " +
                                                std::to_string(m));
  auto x = [&](int j) { return j <= 2 ? 0.0 : kappa[static_cast<std::size_t>(j - 1)]; };
  std::vector<double> b(static_cast<std::size_t>(m) + 1, 0.0);
  b[0] = 1.0;
  for (int n = 0; n < m; ++n) {
    const auto c = binomial_row(n);
    double s = 0;
    for (int i = 0; i <= n; ++i) s += c[i] * b[n - i] * x(i + 1);
    b[n + 1] = s;
  }
  return b[m];
}

namespace {

template <typename Scalar>
std::vector<Scalar> cumulant_recursion(const std::vector<Scalar>& raw) {
  const int m = static_cast<int>(raw.size());
  auto mom = [&](int i) { return i == 0 ? Scalar(1) : raw[static_cast<std::size_t>(i - 1)]; };
  std::vector<Scalar> k(raw.size());
  for (int n = 1; n <= m; ++n) {
    Scalar binom(1);  // C(n-1, i-1)
    Scalar s = mom(n);
    for (int i = 1; i < n; ++i) {
      s -= binom * k[i - 1] * mom(n - i);
      binom = binom * Scalar(n - i) / Scalar(i);
    }
    k[n - 1] = s;
  }
  return k;
}

}  // namespace

std::vector<double> cumulants_from_raw(const std::vector<double>& raw) {
  return cumulant_recursion(raw);
}

std::vector<double> raw_from_cumulants(const std::vector<double>& kappa) {
  const int m = static_cast<int>(kappa.size());
  std::vector<double> raw(kappa.size());
  auto mom = [&](int i) { return i == 0 ? 1.0 : raw[static_cast<std::size_t>(i - 1)]; };
  for (int n = 1; n <= m; ++n) {
    const auto c = binomial_row(n - 1);
    double s = 0;
    for (int i = 1; i <= n; ++i) s += c[i - 1] * kappa[i - 1] * mom(n - i);
    raw[n - 1] = s;
  }
  return raw;
}

CumulantVector cumulants_from_moments(const moments::MomentSet& ms) {
  if (ms.order() < 2) throw Error(ErrorKind::InvalidArgument, "cumulants need at least 2 moments");
  CumulantVector cv;
  if (ms.exact && ms.exact->size() == ms.order()) {
    // Exact recursion avoids the cancellation of large raw moments.
    for (const auto& q : cumulant_recursion(*ms.exact)) cv.kappa.push_back(to_double(q));
  } else {
    cv.kappa = cumulants_from_raw(ms.values);
  }
  if (!(cv.kappa[1] > 0))
    throw Error(ErrorKind::DegenerateVariance,
                "variance of '" + ms.var + "' is " + std::to_string(cv.kappa[1]) + ", must be > 0");
  return cv;
}

moments::MomentSet moments_from_cumulants(const CumulantVector& cv) {
  moments::MomentSet ms;
  ms.values = raw_from_cumulants(cv.kappa);
  ms.provenance = moments::Provenance::External;
  return ms;
}

Quadrature<double> gauss_legendre(double l, double u, int order) {
  if (!(l < u)) throw Error(ErrorKind::InvalidArgument, "quadrature needs l < u");
  if (order < 1) throw Error(ErrorKind::InvalidArgument, "quadrature order must be >= 1");
  const double pi = boost::math::constants::pi<double>();
  Quadrature<double> q;
  q.order = order;
  q.nodes.resize(order);
  q.weights.resize(order);
  const double mid = 0.5 * (u + l), half = 0.5 * (u - l);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (order + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) <= 1e-16) break;
    }
    // Derivative at the converged node.
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Newton from cos(...) converges to the descending nodes; store ascending.
    q.nodes(i) = mid - half * x;
    q.nodes(order - 1 - i) = mid + half * x;
    q.weights(i) = q.weights(order - 1 - i) = half * w;
  }
  if (order % 2 == 1) q.nodes(order / 2) = mid;
  return q;
}

double gamma_p(double a, double x) {
  if (!(a > 0)) throw Error(ErrorKind::InvalidArgument, "gamma_p needs a > 0");
  if (x <= 0) return 0.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
  }
  // Continued fraction for Q(a, x), modified Lentz.
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

double chi2_inv_cdf(double p, double df) {
  if (!(p > 0 && p < 1)) throw Error(ErrorKind::InvalidArgument, "chi2_inv_cdf needs 0 < p < 1");
  if (!(df > 0)) throw Error(ErrorKind::InvalidArgument, "chi2_inv_cdf needs df > 0");
  auto cdf = [&](double x) { return gamma_p(0.5 * df, 0.5 * x); };
  double lo = 0.0, hi = std::max(1.0, df);
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace momentest::specfun
