#include "momentest/gof.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/constants/constants.hpp>

#include "momentest/specfun.hpp"

namespace momentest::gof {

std::string_view to_string(Test t) { return t == Test::ChiSquare ? "chi_square" : "ks"; }
std::string_view to_string(Verdict v) {
  return v == Verdict::NotRejected ? "NOT_REJECTED" : "REJECTED";
}

TestResult chi_square_test(const Eigen::VectorXd& sample, const estimate::DensityEstimate& est,
                           int k, double alpha) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "chi-square test needs k >= 2 bins");
  if (sample.size() == 0) throw Error(ErrorKind::InvalidArgument, "sample is empty");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::InvalidArgument, "alpha must be in (0,1)");
  const double lo = sample.minCoeff(), hi = sample.maxCoeff();
  if (!(hi > lo)) throw Error(ErrorKind::InvalidArgument, "sample has zero range; cannot bin");
  const double width = (hi - lo) / k;
  const auto n = static_cast<double>(sample.size());

  TestResult r;
  r.test = Test::ChiSquare;
  r.alpha = alpha;
  r.k = k;
  r.bins.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    r.bins[i].lo = lo + i * width;
    r.bins[i].hi = i == k - 1 ? hi : lo + (i + 1) * width;
  }
  for (Eigen::Index j = 0; j < sample.size(); ++j) {
    int b = static_cast<int>((sample(j) - lo) / width);
    b = std::clamp(b, 0, k - 1);
    ++r.bins[b].observed;
  }
  double prev = est.cdf(lo);
  for (int i = 0; i < k; ++i) {
    const double next = est.cdf(r.bins[i].hi);
    r.bins[i].expected = n * (next - prev);
    prev = next;
  }
  for (int i = 0; i < k; ++i) {
    const auto& b = r.bins[i];
    if (b.expected < 1e-12) {
      r.empty_expected.push_back(i);
      continue;
    }
    const double d = static_cast<double>(b.observed) - b.expected;
    r.statistic += d * d / b.expected;
  }
  r.critical = specfun::chi2_inv_cdf(1.0 - alpha, k - 1);
  r.result = verdict(r.statistic, r.critical);
  return r;
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "sample is empty");
  return std::sqrt(-std::log(alpha / 2.0) / static_cast<double>(n));
}

TestResult ks_test(const Eigen::VectorXd& sample, const estimate::DensityEstimate& est,
                   double alpha) {
  if (sample.size() == 0) throw Error(ErrorKind::InvalidArgument, "sample is empty");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::InvalidArgument, "alpha must be in (0,1)");
  std::vector<double> v(sample.data(), sample.data() + sample.size());
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  double d = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double f = est.cdf(v[i]);
    d = std::max({d, std::fabs(f - static_cast<double>(i) / n), std::fabs(f - static_cast<double>(j) / n)});
    i = j;
  }
  TestResult r;
  r.test = Test::KS;
  r.alpha = alpha;
  r.statistic = std::min(d, 1.0);
  r.critical = ks_critical_value(v.size(), alpha);
  r.result = verdict(r.statistic, r.critical);
  return r;
}

namespace {

ErrorCell cell(double value, double exact) {
  ErrorCell c;
  c.value = value;
  c.ae = std::fabs(value - exact);
  if (exact != 0) c.re = c.ae / std::fabs(exact);
  return c;
}

}  // namespace

ErrorTable error_report(const moments::MomentSet& exact, const engine::SampleData& sample,
                        const std::vector<std::pair<std::string, const estimate::DensityEstimate*>>&
                            estimates,
                        int max_order) {
  if (max_order < 1) throw Error(ErrorKind::InvalidArgument, "max_order must be >= 1");
  if (static_cast<int>(exact.order()) < max_order)
    throw Error(ErrorKind::InvalidArgument, "exact moments cover only " +
                                                std::to_string(exact.order()) + " orders");
  const auto emp = engine::empirical_moments(sample, exact.var, max_order);
  ErrorTable t;
  for (const auto& [name, est] : estimates) t.estimate_names.push_back(name);
  for (int i = 1; i <= max_order; ++i) {
    ErrorRow row;
    row.order = i;
    row.exact = exact.raw(static_cast<std::size_t>(i));
    row.sample = cell(emp.raw(static_cast<std::size_t>(i)), row.exact);
    for (const auto& [name, est] : estimates)
      row.estimates.push_back(cell(estimate::moment_of_estimate(*est, i), row.exact));
    t.rows.push_back(std::move(row));
  }
  return t;
}

KdeCurve kde(const Eigen::VectorXd& sample, std::optional<double> bandwidth) {
  if (sample.size() == 0) throw Error(ErrorKind::InvalidArgument, "sample is empty");
  const auto n = static_cast<double>(sample.size());
  const double lo = sample.minCoeff(), hi = sample.maxCoeff();
  KdeCurve c;
  if (bandwidth) {
    if (!(*bandwidth > 0)) throw Error(ErrorKind::InvalidArgument, "bandwidth must be positive");
    c.bandwidth = *bandwidth;
  } else {
    const double mean = sample.mean();
    const double sd =
        sample.size() > 1 ? std::sqrt((sample.array() - mean).square().sum() / (n - 1)) : 0.0;
    c.bandwidth = 1.06 * sd * std::pow(n, -0.2);
    // A constant sample gets a narrow spike instead of a zero-width kernel.
    if (!(c.bandwidth > 0)) c.bandwidth = std::max(1.0, std::fabs(lo)) * 1e-3;
  }
  const double a = lo - 3 * c.bandwidth, b = hi + 3 * c.bandwidth;
  const double norm = 1.0 / (n * c.bandwidth * boost::math::constants::root_two_pi<double>());
  c.x.resize(kKdePoints);
  c.density.resize(kKdePoints);
  for (int i = 0; i < kKdePoints; ++i) {
    const double x = a + (b - a) * i / (kKdePoints - 1);
    double s = 0;
    for (Eigen::Index j = 0; j < sample.size(); ++j) {
      const double z = (x - sample(j)) / c.bandwidth;
      s += std::exp(-0.5 * z * z);
    }
    c.x[i] = x;
    c.density[i] = s * norm;
  }
  return c;
}

nlohmann::json to_json(const TestResult& r) {
  nlohmann::json j;
  j["test"] = std::string(to_string(r.test));
  j["statistic"] = r.statistic;
  j["critical_value"] = r.critical;
  j["alpha"] = r.alpha;
  j["verdict"] = std::string(to_string(r.result));
  if (r.test == Test::ChiSquare) {
    j["k"] = r.k;
    auto& bins = j["bins"] = nlohmann::json::array();
    for (const auto& b : r.bins)
      bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"observed", b.observed}, {"expected", b.expected}});
    j["empty_expected_bins"] = r.empty_expected;
  }
  return j;
}

namespace {

nlohmann::json cell_json(const ErrorCell& c) {
  nlohmann::json j{{"value", c.value}, {"ae", c.ae}};
  j["re"] = c.re ? nlohmann::json(*c.re) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

nlohmann::json to_json(const ErrorTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row{{"order", r.order}, {"exact", r.exact}, {"sample", cell_json(r.sample)}};
    for (std::size_t i = 0; i < t.estimate_names.size(); ++i)
      row[t.estimate_names[i]] = cell_json(r.estimates[i]);
    row["relative_undefined"] = r.exact == 0;
    rows.push_back(std::move(row));
  }
  return {{"estimates", t.estimate_names}, {"rows", rows}};
}

namespace {

void write_cell(std::ostream& os, const ErrorCell& c) {
  os << ',' << nlohmann::json(c.value).dump() << ',' << nlohmann::json(c.ae).dump() << ',';
  if (c.re) os << nlohmann::json(*c.re).dump();
}

}  // namespace

void write_csv(std::ostream& os, const ErrorTable& t) {
  os << "order,exact,sample,AE_Sample,RE_Sample";
  for (const auto& n : t.estimate_names) os << ',' << n << ",AE_" << n << ",RE_" << n;
  os << '\n';
  for (const auto& r : t.rows) {
    os << r.order << ',' << nlohmann::json(r.exact).dump();
    write_cell(os, r.sample);
    for (const auto& c : r.estimates) write_cell(os, c);
    os << '\n';
  }
}

}  // namespace momentest::gof
