#include "momentest/estimate.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/constants/constants.hpp>

namespace momentest::estimate {

namespace {

constexpr double kExpLimit = 700.0;

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

double horner(const std::vector<double>& c, double z) {
  double s = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * z + *it;
  return s;
}

const specfun::Quadrature<double>& unit_rule() {
  static const auto rule = specfun::gauss_legendre(0.0, 1.0, specfun::kDefaultQuadratureOrder);
  return rule;
}

}  // namespace

std::string_view to_string(Kind kind) { return kind == Kind::ME ? "ME" : "GC"; }

DensityEstimate DensityEstimate::max_entropy(double lower, double upper, double shift,
                                             double scale, std::vector<double> zeta) {
  if (!(lower < upper)) throw Error(ErrorKind::InvalidArgument, "support needs lower < upper");
  if (!(scale > 0)) throw Error(ErrorKind::InvalidArgument, "ME scale must be positive");
  DensityEstimate d;
  d.kind_ = Kind::ME;
  d.lower_ = lower;
  d.upper_ = upper;
  d.shift_ = shift;
  d.scale_ = scale;
  d.zeta_ = std::move(zeta);
  d.order_ = static_cast<int>(d.zeta_.size()) - 1;
  // Expand exp(-sum zeta_j z^j) / scale, z = a x + b, into powers of x.
  const double a = 1.0 / scale, b = -shift / scale;
  d.xi_.assign(d.zeta_.size(), 0.0);
  for (std::size_t j = 0; j < d.zeta_.size(); ++j)
    for (std::size_t k = 0; k <= j; ++k)
      d.xi_[k] += d.zeta_[j] * binomial(static_cast<int>(j), static_cast<int>(k)) *
                  std::pow(a, static_cast<double>(k)) * std::pow(b, static_cast<double>(j - k));
  d.xi_[0] += std::log(scale);
  d.build_cache();
  return d;
}

DensityEstimate DensityEstimate::gram_charlier(double lower, double upper,
                                               specfun::CumulantVector cv, int order) {
  if (!(lower < upper)) throw Error(ErrorKind::InvalidArgument, "support needs lower < upper");
  if (cv.order() < 2 || static_cast<int>(cv.order()) < order)
    throw Error(ErrorKind::InvalidArgument, "GC needs cumulants up to the truncation order");
  if (!(cv.variance() > 0))
    throw Error(ErrorKind::DegenerateVariance, "GC needs a positive variance");
  DensityEstimate d;
  d.kind_ = Kind::GC;
  d.lower_ = lower;
  d.upper_ = upper;
  d.order_ = order;
  d.mu_ = cv.mean();
  d.sigma_ = std::sqrt(cv.variance());
  d.cumulants_ = std::move(cv);
  double factorial = 1.0;
  for (int j = 0; j <= order; ++j) {
    if (j > 0) factorial *= j;
    d.gc_coeff_.push_back(specfun::bell_reduced(j, d.cumulants_.kappa) /
                          (factorial * std::pow(d.sigma_, j)));
  }
  d.build_cache();
  return d;
}

double DensityEstimate::pdf(double x) const {
  if (kind_ == Kind::ME) {
    const double e = horner(zeta_, (x - shift_) / scale_);
    if (e < -kExpLimit) return INFINITY;
    return std::exp(-e) / scale_;
  }
  const double z = (x - mu_) / sigma_;
  const double psi = std::exp(-0.5 * z * z) /
                     (sigma_ * boost::math::constants::root_two_pi<double>());
  const auto he = specfun::hermite_prob_all(order_, z);
  double s = 0;
  for (int j = 0; j <= order_; ++j) s += gc_coeff_[j] * he(j);
  return psi * s;
}

void DensityEstimate::build_cache() {
  auto c = std::make_shared<Cache>();
  c->unit = unit_rule();
  const double h = (upper_ - lower_) / kPanels;
  c->edges.resize(kPanels + 1);
  c->cumulative.resize(kPanels + 1);
  c->cumulative[0] = 0;
  for (int k = 0; k <= kPanels; ++k) c->edges[k] = k == kPanels ? upper_ : lower_ + k * h;
  for (int k = 0; k < kPanels; ++k) {
    const double a = c->edges[k], w = c->edges[k + 1] - a;
    double s = 0;
    for (Eigen::Index i = 0; i < c->unit.nodes.size(); ++i)
      s += c->unit.weights(i) * pdf(a + w * c->unit.nodes(i));
    c->cumulative[k + 1] = c->cumulative[k] + w * s;
  }
  c->total = c->cumulative[kPanels];
  cache_ = std::move(c);
}

double DensityEstimate::cdf(double x) const {
  if (!(x > lower_)) return 0.0;
  if (x >= upper_) return cache_->total;
  const double h = (upper_ - lower_) / kPanels;
  int k = static_cast<int>((x - lower_) / h);
  k = std::clamp(k, 0, kPanels - 1);
  while (k > 0 && x < cache_->edges[k]) --k;
  while (k < kPanels - 1 && x >= cache_->edges[k + 1]) ++k;
  const double a = cache_->edges[k], w = x - a;
  double s = 0;
  if (w > 0) {
    for (Eigen::Index i = 0; i < cache_->unit.nodes.size(); ++i)
      s += cache_->unit.weights(i) * pdf(a + w * cache_->unit.nodes(i));
  }
  return cache_->cumulative[k] + w * s;
}

namespace {

template <typename Fn>
double integrate_support(const DensityEstimate& est, Fn&& f) {
  const auto& rule = unit_rule();
  const double h = (est.upper() - est.lower()) / kPanels;
  double total = 0;
  for (int k = 0; k < kPanels; ++k) {
    const double a = est.lower() + k * h;
    const double w = k == kPanels - 1 ? est.upper() - a : h;
    double s = 0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) s += rule.weights(i) * f(a + w * rule.nodes(i));
    total += w * s;
  }
  return total;
}

}  // namespace

double moment_of_estimate(const DensityEstimate& est, int i) {
  if (i < 0) throw Error(ErrorKind::InvalidArgument, "moment order must be >= 0");
  const double num = integrate_support(est, [&](double x) { return std::pow(x, i) * est.pdf(x); });
  return num / est.mass();
}

double entropy_of_estimate(const DensityEstimate& est) {
  return -integrate_support(est, [&](double x) {
    const double p = est.pdf(x);
    return p > 1e-300 ? p * std::log(p) : 0.0;
  });
}

// ---------------------------------------------------------------------------

MeSystem::MeSystem(double zl, double zu, std::vector<double> targets, int panels, int order)
    : targets_(std::move(targets)) {
  const auto rule = specfun::gauss_legendre(0.0, 1.0, order);
  const double h = (zu - zl) / panels;
  nodes_.resize(static_cast<Eigen::Index>(panels) * order);
  weights_.resize(nodes_.size());
  for (int k = 0; k < panels; ++k)
    for (int i = 0; i < order; ++i) {
      nodes_(k * order + i) = zl + h * (k + rule.nodes(i));
      weights_(k * order + i) = h * rule.weights(i);
    }
}

namespace {

// Weighted density values w_i exp(-p(z_i)); infinite when the exponent
// overflows.
Eigen::VectorXd weighted_density(const Eigen::VectorXd& nodes, const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& zeta) {
  std::vector<double> c(zeta.data(), zeta.data() + zeta.size());
  Eigen::VectorXd out(nodes.size());
  for (Eigen::Index i = 0; i < nodes.size(); ++i) {
    const double e = horner(c, nodes(i));
    out(i) = e < -kExpLimit ? INFINITY : weights(i) * std::exp(-e);
  }
  return out;
}

}  // namespace

Eigen::VectorXd MeSystem::residual(const Eigen::VectorXd& zeta) const {
  const Eigen::VectorXd wd = weighted_density(nodes_, weights_, zeta);
  const auto m = static_cast<Eigen::Index>(targets_.size());
  Eigen::VectorXd r(m);
  Eigen::VectorXd power = Eigen::VectorXd::Ones(nodes_.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = targets_[static_cast<std::size_t>(i)];
    r(i) = (power.dot(wd) - t) / std::max(1.0, std::fabs(t));
    power = power.cwiseProduct(nodes_);
  }
  return r;
}

Eigen::MatrixXd MeSystem::jacobian(const Eigen::VectorXd& zeta) const {
  const Eigen::VectorXd wd = weighted_density(nodes_, weights_, zeta);
  const auto m = static_cast<Eigen::Index>(targets_.size());
  // Hankel of integrals of z^k pdf, k = 0..2(m-1).
  std::vector<double> mom(static_cast<std::size_t>(2 * m - 1));
  Eigen::VectorXd power = Eigen::VectorXd::Ones(nodes_.size());
  for (auto& v : mom) {
    v = power.dot(wd);
    power = power.cwiseProduct(nodes_);
  }
  Eigen::MatrixXd j(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double s = std::max(1.0, std::fabs(targets_[static_cast<std::size_t>(r)]));
    for (Eigen::Index c = 0; c < m; ++c) j(r, c) = -mom[static_cast<std::size_t>(r + c)] / s;
  }
  return j;
}

namespace {

struct Standardized {
  double shift = 0, scale = 1;
  std::vector<double> targets;  // E z^0 .. E z^m
};

Standardized standardize(const moments::MomentSet& ms, double lower, double upper) {
  const int m = static_cast<int>(ms.order());
  Standardized s;
  s.targets.assign(static_cast<std::size_t>(m) + 1, 1.0);
  if (m == 1) {
    s.shift = 0.5 * (lower + upper);
    s.scale = 0.5 * (upper - lower);
    s.targets[1] = (ms.values[0] - s.shift) / s.scale;
    return s;
  }
  std::vector<double> central(static_cast<std::size_t>(m) + 1, 0.0);
  if (ms.exact && static_cast<int>(ms.exact->size()) == m) {
    const auto& q = *ms.exact;
    auto raw = [&](int i) { return i == 0 ? Rational(1) : q[static_cast<std::size_t>(i - 1)]; };
    const Rational mu = q[0];
    for (int k = 0; k <= m; ++k) {
      Rational c = 0;
      BigInt binom = 1;
      for (int j = 0; j <= k; ++j) {
        if (j > 0) binom = binom * (k - j + 1) / j;
        c += Rational(binom) * raw(j) * pow(-mu, k - j);
      }
      central[static_cast<std::size_t>(k)] = to_double(c);
    }
    s.shift = to_double(mu);
  } else {
    const long double mu = ms.values[0];
    for (int k = 0; k <= m; ++k) {
      long double c = 0, binom = 1;
      for (int j = 0; j <= k; ++j) {
        if (j > 0) binom = binom * (k - j + 1) / j;
        c += binom * static_cast<long double>(ms.raw(static_cast<std::size_t>(j))) *
             std::pow(-mu, static_cast<long double>(k - j));
      }
      central[static_cast<std::size_t>(k)] = static_cast<double>(c);
    }
    s.shift = ms.values[0];
  }
  if (!(central[2] > 0))
    throw Error(ErrorKind::DegenerateVariance,
                "variance of '" + ms.var + "' is " + std::to_string(central[2]) + ", must be > 0");
  s.scale = std::sqrt(central[2]);
  for (int k = 1; k <= m; ++k)
    s.targets[static_cast<std::size_t>(k)] = central[static_cast<std::size_t>(k)] / std::pow(s.scale, k);
  s.targets[1] = 0.0;
  s.targets[2] = 1.0;
  return s;
}

}  // namespace

std::pair<DensityEstimate, FitDiagnostics> fit_max_entropy(const moments::MomentSet& ms,
                                                           double lower, double upper,
                                                           const MeOptions& opts) {
  if (!(lower < upper)) throw Error(ErrorKind::InvalidArgument, "support needs lower < upper");
  if (ms.order() < 1) throw Error(ErrorKind::InvalidArgument, "ME fit needs at least one moment");
  if (ms.order() >= 2) {
    const auto v = moments::moment_validity(ms);
    if (!v.ok) {
      if (v.failed_minor == 1 && v.variance <= 0)
        throw Error(ErrorKind::DegenerateVariance, "moments of '" + ms.var + "': " + v.message);
      throw Error(ErrorKind::InvalidArgument, "moments of '" + ms.var + "' are not valid: " + v.message);
    }
  }
  const int m = static_cast<int>(ms.order());
  const auto st = standardize(ms, lower, upper);
  const double zl = (lower - st.shift) / st.scale, zu = (upper - st.shift) / st.scale;
  if (m >= 2 && (zl > -1.0 || zu < 1.0))
    throw Error(ErrorKind::InvalidArgument,
                "support [" + std::to_string(lower) + ", " + std::to_string(upper) +
                    "] does not cover one standard deviation around the mean");
  const MeSystem system(zl, zu, st.targets, opts.panels, opts.quadrature_order);

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(m + 1);
  if (m >= 2) {
    x0(0) = std::log(boost::math::constants::root_two_pi<double>());
    x0(2) = 0.5;
  } else {
    x0(0) = std::log(zu - zl);
  }
  auto lm = levenberg_marquardt([&](const Eigen::VectorXd& z) { return system.residual(z); },
                                [&](const Eigen::VectorXd& z) { return system.jacobian(z); }, x0,
                                opts.lm);

  FitDiagnostics diag;
  diag.iterations = lm.iterations;
  diag.residual_norm = lm.residual_norm;
  diag.converged = lm.residual_norm <= opts.lm.tol;
  diag.constraint_residuals.assign(lm.residual.data(), lm.residual.data() + lm.residual.size());
  std::vector<double> zeta(lm.x.data(), lm.x.data() + lm.x.size());
  auto est = DensityEstimate::max_entropy(lower, upper, st.shift, st.scale, std::move(zeta));
  diag.entropy = entropy_of_estimate(est);
  diag.mass_defect = 1.0 - est.mass();
  if (!diag.converged)
    throw FitDivergedError("ME fit for '" + ms.var + "' did not converge: residual " +
                               std::to_string(lm.residual_norm) + " after " +
                               std::to_string(lm.iterations) + " iterations",
                           diag);
  return {std::move(est), std::move(diag)};
}

DensityEstimate fit_gram_charlier(const moments::MomentSet& ms, double lower, double upper) {
  auto cv = specfun::cumulants_from_moments(ms);
  const int order = static_cast<int>(ms.order());
  return DensityEstimate::gram_charlier(lower, upper, std::move(cv), order);
}

std::pair<double, double> default_support(const moments::MomentSet& ms,
                                          const Eigen::VectorXd* sample) {
  if (sample && sample->size() > 0) {
    std::vector<double> v(sample->data(), sample->data() + sample->size());
    std::sort(v.begin(), v.end());
    auto quantile = [&](double p) {
      const double h = (static_cast<double>(v.size()) - 1) * p;
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const auto hi = std::min(lo + 1, v.size() - 1);
      return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    double width = quantile(0.75) - quantile(0.25);
    if (!(width > 0)) {
      const double mean = sample->mean();
      width = std::sqrt((sample->array() - mean).square().mean());
    }
    if (!(width > 0)) width = std::max(1.0, std::fabs(v.front())) * 1e-3;
    return {v.front() - 3 * width, v.back() + 3 * width};
  }
  if (ms.order() < 2)
    throw Error(ErrorKind::InvalidArgument, "default support needs two moments or a sample");
  const double mu = ms.values[0];
  const double var = ms.values[1] - mu * mu;
  if (!(var > 0)) throw Error(ErrorKind::DegenerateVariance, "default support needs a positive variance");
  const double sd = std::sqrt(var);
  return {mu - 8 * sd, mu + 8 * sd};
}

nlohmann::json to_json(const DensityEstimate& est) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(est.kind()));
  j["support"] = {est.lower(), est.upper()};
  if (est.kind() == Kind::ME) {
    j["xi"] = est.xi();
    j["zeta"] = est.zeta();
    j["shift"] = est.shift();
    j["scale"] = est.scale();
  } else {
    j["cumulants"] = est.cumulants().kappa;
    j["order"] = est.order();
    j["mu"] = est.mean();
    j["sigma2"] = est.cumulants().variance();
  }
  return j;
}

DensityEstimate from_json(const nlohmann::json& doc) {
  auto bad = [](const std::string& msg) { return Error(ErrorKind::SchemaError, "estimate: " + msg); };
  try {
    if (!doc.is_object() || !doc.contains("kind") || !doc.contains("support"))
      throw bad("requires \"kind\" and \"support\"");
    const auto kind = doc.at("kind").get<std::string>();
    const auto support = doc.at("support").get<std::vector<double>>();
    if (support.size() != 2) throw bad("\"support\" must have two entries");
    if (kind == "ME") {
      if (doc.contains("zeta")) {
        return DensityEstimate::max_entropy(support[0], support[1], doc.at("shift").get<double>(),
                                            doc.at("scale").get<double>(),
                                            doc.at("zeta").get<std::vector<double>>());
      }
      return DensityEstimate::max_entropy(support[0], support[1], 0.0, 1.0,
                                          doc.at("xi").get<std::vector<double>>());
    }
    if (kind == "GC") {
      specfun::CumulantVector cv{doc.at("cumulants").get<std::vector<double>>()};
      return DensityEstimate::gram_charlier(support[0], support[1], std::move(cv),
                                            doc.at("order").get<int>());
    }
    throw bad("unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw bad(e.what());
  }
}

nlohmann::json to_json(const FitDiagnostics& diag) {
  return {{"iterations", diag.iterations},
          {"residual_norm", diag.residual_norm},
          {"converged", diag.converged},
          {"constraint_residuals", diag.constraint_residuals},
          {"entropy", diag.entropy},
          {"mass_defect", diag.mass_defect}};
}

}  // namespace momentest::estimate
