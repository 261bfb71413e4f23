#ifndef MOMENTEST_GOF_HPP
#define MOMENTEST_GOF_HPP

// Goodness-of-fit tests and moment-error tables.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "momentest/engine.hpp"
#include "momentest/estimate.hpp"

namespace momentest::gof {

enum class Test { ChiSquare, KS };
enum class Verdict { NotRejected, Rejected };

std::string_view to_string(Test t);
std::string_view to_string(Verdict v);

/// NOT_REJECTED iff statistic < critical.
inline Verdict verdict(double statistic, double critical) {
  return statistic < critical ? Verdict::NotRejected : Verdict::Rejected;
}

struct Bin {
  double lo = 0, hi = 0;
  std::int64_t observed = 0;
  double expected = 0;
};

struct TestResult {
  Test test = Test::ChiSquare;
  double statistic = 0;
  double critical = 0;
  double alpha = 0.05;
  int k = 0;  // chi-square only
  Verdict result = Verdict::NotRejected;
  std::vector<Bin> bins;            // chi-square only
  std::vector<int> empty_expected;  // bins with E_i < 1e-12, left out of the statistic
};

/// k equal-width bins over [min, max] of the sample; CV = chi2_{1-alpha, k-1}.
TestResult chi_square_test(const Eigen::VectorXd& sample, const estimate::DensityEstimate& est,
                           int k, double alpha);

/// sqrt(-ln(alpha/2) / N).
double ks_critical_value(std::size_t n, double alpha);

TestResult ks_test(const Eigen::VectorXd& sample, const estimate::DensityEstimate& est,
                   double alpha);

struct ErrorCell {
  double value = 0;
  double ae = 0;
  std::optional<double> re;  // empty when the exact moment is zero
};

struct ErrorRow {
  int order = 0;
  double exact = 0;
  ErrorCell sample;
  std::vector<ErrorCell> estimates;  // parallel to ErrorTable::estimate_names
};

struct ErrorTable {
  std::vector<std::string> estimate_names;
  std::vector<ErrorRow> rows;
};

/// AE/RE of sample and estimate moments against the exact moments for orders
/// 1..max_order. `exact` must cover max_order.
ErrorTable error_report(const moments::MomentSet& exact, const engine::SampleData& sample,
                        const std::vector<std::pair<std::string, const estimate::DensityEstimate*>>&
                            estimates,
                        int max_order);

struct KdeCurve {
  std::vector<double> x, density;
  double bandwidth = 0;
};

inline constexpr int kKdePoints = 256;

/// Gaussian kernel density estimate; Silverman bandwidth by default.
KdeCurve kde(const Eigen::VectorXd& sample, std::optional<double> bandwidth = {});

nlohmann::json to_json(const TestResult& r);
nlohmann::json to_json(const ErrorTable& t);
/// order,exact,sample,AE_Sample,RE_Sample, then value,AE,RE per estimate.
void write_csv(std::ostream& os, const ErrorTable& t);

}  // namespace momentest::gof

#endif
