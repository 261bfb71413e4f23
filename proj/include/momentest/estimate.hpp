#ifndef MOMENTEST_ESTIMATE_HPP
#define MOMENTEST_ESTIMATE_HPP

// Maximum-entropy and Gram-Charlier density estimates from raw moments.

#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "momentest/levenberg_marquardt.hpp"
#include "momentest/moments.hpp"
#include "momentest/specfun.hpp"

namespace momentest::estimate {

enum class Kind { ME, GC };

std::string_view to_string(Kind kind);

/// A pdf on [lower, upper].
///
/// ME: pdf(x) = exp(-sum_j xi_j x^j). It is evaluated through the
/// standardized form exp(-sum_j zeta_j z^j) / scale with z = (x - shift) /
/// scale, which is what the fit solves for; `xi` is the same polynomial
/// expanded in x.
///
/// GC: pdf(x) = psi(x) sum_{j=0}^{m} B_j(0,0,k3..kj) / (j! s^j) He_j((x-mu)/s)
/// with psi the N(mu, s^2) density, mu = k1, s^2 = k2, m = order. Not
/// normalized.
class DensityEstimate {
 public:
  static DensityEstimate max_entropy(double lower, double upper, double shift, double scale,
                                     std::vector<double> zeta);
  static DensityEstimate gram_charlier(double lower, double upper, specfun::CumulantVector cv,
                                       int order);

  Kind kind() const noexcept { return kind_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

  const std::vector<double>& xi() const noexcept { return xi_; }
  const std::vector<double>& zeta() const noexcept { return zeta_; }
  double shift() const noexcept { return shift_; }
  double scale() const noexcept { return scale_; }

  const specfun::CumulantVector& cumulants() const noexcept { return cumulants_; }
  int order() const noexcept { return order_; }
  double mean() const noexcept { return mu_; }
  double stddev() const noexcept { return sigma_; }

  /// Unclamped density formula (GC may be negative).
  double pdf(double x) const;
  /// Integral of pdf over [lower, x]; clamps x into the support.
  double cdf(double x) const;
  /// Integral of pdf over the support.
  double mass() const noexcept { return cache_->total; }

 private:
  struct Cache {
    std::vector<double> edges;        // panel boundaries, size panels + 1
    std::vector<double> cumulative;   // mass up to each edge
    double total = 0;
    specfun::Quadrature<double> unit;  // reference rule on [0, 1]
  };

  DensityEstimate() = default;
  void build_cache();

  Kind kind_ = Kind::ME;
  double lower_ = 0, upper_ = 1;
  std::vector<double> xi_, zeta_;
  double shift_ = 0, scale_ = 1;
  specfun::CumulantVector cumulants_;
  std::vector<double> gc_coeff_;
  int order_ = 0;
  double mu_ = 0, sigma_ = 1;
  std::shared_ptr<const Cache> cache_;

  friend DensityEstimate from_json(const nlohmann::json&);
};

/// Number of panels the support is split into for cdf and moment integrals.
inline constexpr int kPanels = 64;

/// Integral of x^i pdf / integral of pdf.
double moment_of_estimate(const DensityEstimate& est, int i);

/// -integral of pdf ln pdf; points where pdf <= 1e-300 contribute 0.
double entropy_of_estimate(const DensityEstimate& est);

struct FitDiagnostics {
  int iterations = 0;
  double residual_norm = 0;
  bool converged = false;
  /// Relative constraint residuals for orders 0..m, in standardized
  /// coordinates.
  std::vector<double> constraint_residuals;
  double entropy = 0;
  /// 1 - mass; reported for GC, near zero for ME.
  double mass_defect = 0;
};

class FitDivergedError : public Error {
 public:
  FitDivergedError(const std::string& msg, FitDiagnostics diag)
      : Error(ErrorKind::FitDiverged, msg), diagnostics_(std::move(diag)) {}
  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  FitDiagnostics diagnostics_;
};

struct MeOptions {
  LmOptions lm;
  /// Composite Gauss-Legendre panels used inside the fit.
  int panels = 16;
  int quadrature_order = specfun::kDefaultQuadratureOrder;
};

/// Standardized ME constraint system, exposed for Jacobian checks.
/// Unknowns are zeta_0..zeta_m over z in [zl, zu]; residual i is
/// (integral z^i exp(-sum zeta_j z^j) dz - target_i) / max(1, |target_i|).
class MeSystem {
 public:
  MeSystem(double zl, double zu, std::vector<double> targets, int panels, int order);

  Eigen::VectorXd residual(const Eigen::VectorXd& zeta) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& zeta) const;
  std::size_t size() const noexcept { return targets_.size(); }

 private:
  std::vector<double> targets_;
  Eigen::VectorXd nodes_, weights_;
};

/// Throws Error{DegenerateVariance}, Error{InvalidArgument} (l >= u or
/// invalid moments), FitDivergedError.
std::pair<DensityEstimate, FitDiagnostics> fit_max_entropy(const moments::MomentSet& ms,
                                                           double lower, double upper,
                                                           const MeOptions& opts = {});

/// The support only bounds later integrals; the formula does not depend on
/// it. Throws Error{DegenerateVariance}.
DensityEstimate fit_gram_charlier(const moments::MomentSet& ms, double lower, double upper);

/// Support rule when none is given: [min - 3 IQR, max + 3 IQR] of a sample,
/// else mu +- 8 sigma from the first two moments.
std::pair<double, double> default_support(const moments::MomentSet& ms,
                                          const Eigen::VectorXd* sample = nullptr);

nlohmann::json to_json(const DensityEstimate& est);
/// Throws Error{SchemaError}.
DensityEstimate from_json(const nlohmann::json& doc);
nlohmann::json to_json(const FitDiagnostics& diag);

}  // namespace momentest::estimate

#endif
