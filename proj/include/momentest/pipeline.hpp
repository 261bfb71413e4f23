#ifndef MOMENTEST_PIPELINE_HPP
#define MOMENTEST_PIPELINE_HPP

// End-to-end distribution estimation: exact moments, sampling, ME and GC
// fits, goodness-of-fit tests and moment-error tables. Every stage is also
// callable on its own; the CLI subcommands are thin wrappers around these.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "json.hpp"

#include "momentest/dsl.hpp"
#include "momentest/engine.hpp"
#include "momentest/estimate.hpp"
#include "momentest/gof.hpp"
#include "momentest/moments.hpp"

namespace momentest::pipeline {

enum class MomentSource { Propagate, External, Empirical };

struct PipelineConfig {
  std::string program_path;
  std::string var;
  std::int64_t n = 100;
  std::int64_t e = 1000;
  std::uint64_t seed = 0;
  int m = 2;
  MomentSource source = MomentSource::Propagate;
  std::string moments_path;  // External only
  std::optional<std::pair<double, double>> support;
  double alpha = 0.05;
  int bins = 15;
  /// Highest order in the error table; capped by the available exact moments.
  int error_orders = 8;
  std::string out_dir;
  unsigned threads = 0;  // does not affect any output
};

/// Error raised by a pipeline stage; `stage` names it in the CLI's error
/// document.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Throws Error{ValidationError} for an invalid config.
void check_config(const PipelineConfig& cfg);

struct LoadedProgram {
  dsl::Program program;
  dsl::ValidationReport report;
  dsl::CoreProgram core;
};

/// Reads, parses, validates and desugars. Throws on any validation error.
LoadedProgram load_program(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

nlohmann::json validation_json(const dsl::ValidationReport& report);

/// Exact moments of `var` up to order m at iteration n.
moments::MomentSet propagate_moments(const dsl::CoreProgram& core, const std::string& var,
                                     std::int64_t n, int m);

/// Our own moments.json (written by to_json(MomentSet)) or an external
/// document. Exact rationals are restored when present.
moments::MomentSet read_moments(const nlohmann::json& doc,
                                std::optional<std::int64_t> n_override = {});

struct Fits {
  estimate::DensityEstimate me;
  estimate::FitDiagnostics me_diagnostics;
  estimate::DensityEstimate gc;
};

/// Support override, else the default rule on the sample (when given) or
/// the moments.
std::pair<double, double> choose_support(const moments::MomentSet& sm,
                                         const std::optional<std::pair<double, double>>& support,
                                         const Eigen::VectorXd* sample);

Fits fit_both(const moments::MomentSet& sm, double lower, double upper);

nlohmann::json estimate_json(const estimate::DensityEstimate& est,
                             const estimate::FitDiagnostics* diag);

struct GofResults {
  gof::TestResult chi_me, ks_me, chi_gc, ks_gc;
};

GofResults run_tests(const Eigen::VectorXd& sample, const estimate::DensityEstimate& me,
                     const estimate::DensityEstimate& gc, int bins, double alpha);

/// NOT_REJECTED when either test does not reject.
gof::Verdict combined(const gof::TestResult& chi, const gof::TestResult& ks);

nlohmann::json gof_json(const GofResults& r);

std::string histogram_csv(const GofResults& r);
std::string pdf_curves_csv(const Eigen::VectorXd& sample, const estimate::DensityEstimate& me,
                           const estimate::DensityEstimate& gc);

/// File name -> contents, all produced in memory.
struct ReportBundle {
  nlohmann::json report;
  std::map<std::string, std::string> files;
};

/// Runs every stage; throws StageError. Writes the files when cfg.out_dir is
/// non-empty.
ReportBundle run_pipeline(const PipelineConfig& cfg);

}  // namespace momentest::pipeline

#endif
