#ifndef MOMENTEST_SPECFUN_HPP
#define MOMENTEST_SPECFUN_HPP

// Polynomial families, moment/cumulant maps, quadrature and the chi-square
// quantile.

#include <vector>

#include <Eigen/Core>

#include "momentest/moments.hpp"

namespace momentest::specfun {

/// Probabilists' Hermite polynomial He_m(x).
double hermite_prob(int m, double x);

/// He_0(x) .. He_m(x).
Eigen::VectorXd hermite_prob_all(int m, double x);

/// Complete exponential Bell polynomial B_m(0, 0, k3, .., km).
/// `kappa` holds k1..kK (k1 and k2 are ignored); K >= m is required.
double bell_reduced(int m, const std::vector<double>& kappa);

struct CumulantVector {
  std::vector<double> kappa;  // kappa[i] = k_(i+1)

  std::size_t order() const noexcept { return kappa.size(); }
  double mean() const { return kappa.at(0); }
  double variance() const { return kappa.at(1); }
};

/// Recursive moment-to-cumulant map. Throws Error{DegenerateVariance} when
/// k2 <= 0.
CumulantVector cumulants_from_moments(const moments::MomentSet& ms);

/// Inverse of cumulants_from_moments; the result has provenance External.
moments::MomentSet moments_from_cumulants(const CumulantVector& cv);

/// Raw moments m_1..m_K from cumulants k_1..k_K (no checks).
std::vector<double> raw_from_cumulants(const std::vector<double>& kappa);
/// Cumulants k_1..k_K from raw moments m_1..m_K (no checks).
std::vector<double> cumulants_from_raw(const std::vector<double>& raw);

template <typename Scalar>
struct Quadrature {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
  int order = 0;

  /// sum_i w_i f(x_i)
  template <typename Fn>
  Scalar integrate(Fn&& f) const {
    Scalar s(0);
    for (Eigen::Index i = 0; i < nodes.size(); ++i) s += weights(i) * f(nodes(i));
    return s;
  }
};

inline constexpr int kDefaultQuadratureOrder = 64;

/// Gauss-Legendre rule of the given order on [l, u].
Quadrature<double> gauss_legendre(double l, double u, int order = kDefaultQuadratureOrder);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Quantile of the chi-square law with `df` degrees of freedom.
double chi2_inv_cdf(double p, double df);

}  // namespace momentest::specfun

#endif
