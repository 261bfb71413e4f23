#include "momentest/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace momentest::pipeline {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string num(double v) { return nlohmann::json(v).dump(); }

}  // namespace

void check_config(const PipelineConfig& cfg) {
  auto bad = [](const std::string& msg) { return Error(ErrorKind::ValidationError, msg); };
  if (cfg.program_path.empty()) throw bad("a program is required");
  if (cfg.var.empty()) throw bad("a variable is required");
  if (cfg.m < 2) throw bad("m must be >= 2 (got " + std::to_string(cfg.m) + ")");
  if (cfg.n < 0) throw bad("n must be >= 0");
  if (cfg.e < 1) throw bad("e must be >= 1");
  if (cfg.bins < 2) throw bad("bins must be >= 2");
  if (!(cfg.alpha > 0 && cfg.alpha < 1)) throw bad("alpha must be in (0,1)");
  if (cfg.error_orders < 1) throw bad("error orders must be >= 1");
  if (cfg.support && !(cfg.support->first < cfg.support->second))
    throw bad("support needs lower < upper");
  if (cfg.source == MomentSource::External && cfg.moments_path.empty())
    throw bad("external moments need a moments file");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}

LoadedProgram load_program(const std::string& path) {
  LoadedProgram lp;
  lp.program = dsl::parse_program(read_file(path));
  lp.report = dsl::validate(lp.program);
  if (!lp.report.ok()) {
    std::string msg = "program '" + path + "' failed validation";
    for (const auto& e : lp.report.errors()) msg += "; " + e;
    throw Error(ErrorKind::ValidationError, msg);
  }
  lp.core = dsl::desugar(lp.program);
  return lp;
}

nlohmann::json validation_json(const dsl::ValidationReport& report) {
  nlohmann::json diags = nlohmann::json::array();
  for (const auto& d : report.diagnostics)
    diags.push_back({{"severity", d.severity == dsl::Severity::Error ? "error" : "warning"},
                     {"message", d.message},
                     {"line", d.pos.line},
                     {"column", d.pos.column}});
  return {{"ok", report.ok()},
          {"propagation_eligible", report.propagation_eligible},
          {"diagnostics", diags}};
}

moments::MomentSet propagate_moments(const dsl::CoreProgram& core, const std::string& var,
                                     std::int64_t n, int m) {
  const auto basis = moments::closure_basis(core, var, m);
  return moments::propagate(core, basis, n);
}

moments::MomentSet read_moments(const nlohmann::json& doc, std::optional<std::int64_t> n_override) {
  auto ms = moments::load_moments(doc, n_override);
  if (doc.contains("values") && doc.contains("exact")) {
    const auto& ex = doc["exact"];
    if (!ex.is_array() || ex.size() != ms.order())
      throw Error(ErrorKind::SchemaError, "\"exact\" must parallel \"values\"");
    std::vector<Rational> exact;
    for (const auto& s : ex) {
      if (!s.is_string()) throw Error(ErrorKind::SchemaError, "\"exact\" must contain strings");
      try {
        exact.emplace_back(s.get<std::string>());
      } catch (const std::exception&) {
        throw Error(ErrorKind::SchemaError, "malformed rational '" + s.get<std::string>() + "'");
      }
      if (to_double(exact.back()) != ms.values[exact.size() - 1])
        throw Error(ErrorKind::SchemaError, "\"exact\" disagrees with \"values\"");
    }
    ms.exact = std::move(exact);
  }
  if (doc.contains("provenance") && doc["provenance"].is_string()) {
    const auto p = doc["provenance"].get<std::string>();
    if (p == "propagated") ms.provenance = moments::Provenance::Propagated;
    if (p == "empirical") ms.provenance = moments::Provenance::Empirical;
  }
  return ms;
}

std::pair<double, double> choose_support(const moments::MomentSet& sm,
                                         const std::optional<std::pair<double, double>>& support,
                                         const Eigen::VectorXd* sample) {
  if (support) return *support;
  return estimate::default_support(sm, sample);
}

Fits fit_both(const moments::MomentSet& sm, double lower, double upper) {
  auto [me, diag] = estimate::fit_max_entropy(sm, lower, upper);
  auto gc = estimate::fit_gram_charlier(sm, lower, upper);
  return {std::move(me), std::move(diag), std::move(gc)};
}

nlohmann::json estimate_json(const estimate::DensityEstimate& est,
                             const estimate::FitDiagnostics* diag) {
  nlohmann::json j{{"estimate", estimate::to_json(est)}};
  if (diag) {
    j["diagnostics"] = estimate::to_json(*diag);
  } else {
    j["mass_defect"] = 1.0 - est.mass();
  }
  return j;
}

GofResults run_tests(const Eigen::VectorXd& sample, const estimate::DensityEstimate& me,
                     const estimate::DensityEstimate& gc, int bins, double alpha) {
  return {gof::chi_square_test(sample, me, bins, alpha), gof::ks_test(sample, me, alpha),
          gof::chi_square_test(sample, gc, bins, alpha), gof::ks_test(sample, gc, alpha)};
}

gof::Verdict combined(const gof::TestResult& chi, const gof::TestResult& ks) {
  return chi.result == gof::Verdict::NotRejected || ks.result == gof::Verdict::NotRejected
             ? gof::Verdict::NotRejected
             : gof::Verdict::Rejected;
}

nlohmann::json gof_json(const GofResults& r) {
  return {{"ME", {{"chi_square", gof::to_json(r.chi_me)}, {"ks", gof::to_json(r.ks_me)},
                  {"verdict", std::string(gof::to_string(combined(r.chi_me, r.ks_me)))}}},
          {"GC", {{"chi_square", gof::to_json(r.chi_gc)}, {"ks", gof::to_json(r.ks_gc)},
                  {"verdict", std::string(gof::to_string(combined(r.chi_gc, r.ks_gc)))}}}};
}

std::string histogram_csv(const GofResults& r) {
  std::ostringstream os;
  os << "bin,lo,hi,observed,expected_ME,expected_GC\n";
  for (std::size_t i = 0; i < r.chi_me.bins.size(); ++i) {
    const auto& b = r.chi_me.bins[i];
    os << i << ',' << num(b.lo) << ',' << num(b.hi) << ',' << b.observed << ','
       << num(b.expected) << ',' << num(r.chi_gc.bins[i].expected) << '\n';
  }
  return os.str();
}

std::string pdf_curves_csv(const Eigen::VectorXd& sample, const estimate::DensityEstimate& me,
                           const estimate::DensityEstimate& gc) {
  const auto curve = gof::kde(sample);
  auto inside = [](const estimate::DensityEstimate& est, double x) {
    return x >= est.lower() && x <= est.upper() ? est.pdf(x) : 0.0;
  };
  std::ostringstream os;
  os << "x,f_ME,f_GC,kde\n";
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    const double x = curve.x[i];
    os << num(x) << ',' << num(inside(me, x)) << ',' << num(inside(gc, x)) << ','
       << num(curve.density[i]) << '\n';
  }
  return os.str();
}

namespace {

std::string_view source_name(MomentSource s) {
  switch (s) {
    case MomentSource::Propagate: return "propagate";
    case MomentSource::External: return "external";
    case MomentSource::Empirical: return "empirical";
  }
  return "propagate";
}

}  // namespace

ReportBundle run_pipeline(const PipelineConfig& cfg) {
  stage("config", [&] {
    check_config(cfg);
    return 0;
  });
  const auto program = stage("validate", [&] { return load_program(cfg.program_path); });
  const int top = std::max(cfg.m, cfg.error_orders);

  std::optional<moments::MomentSet> exact;
  if (cfg.source == MomentSource::Propagate) {
    exact = stage("moments", [&] {
      try {
        return propagate_moments(program.core, cfg.var, cfg.n, top);
      } catch (const Error& e) {
        // Higher orders only feed the error table; fall back to m.
        if (e.kind() != ErrorKind::ClosureExceeded || top == cfg.m) throw;
        return propagate_moments(program.core, cfg.var, cfg.n, cfg.m);
      }
    });
  } else if (cfg.source == MomentSource::External) {
    exact = stage("moments", [&] {
      auto doc = nlohmann::json::parse(read_file(cfg.moments_path), nullptr, false);
      if (doc.is_discarded())
        throw Error(ErrorKind::SchemaError, "'" + cfg.moments_path + "' is not valid JSON");
      auto ms = read_moments(doc, cfg.n);
      if (ms.var != cfg.var)
        throw Error(ErrorKind::SchemaError, "moments are for '" + ms.var + "', not '" + cfg.var + "'");
      return ms;
    });
  }

  const auto data = stage("sample", [&] {
    return engine::sample(program.core, cfg.n, cfg.e, cfg.seed, cfg.threads);
  });
  const Eigen::VectorXd column = stage("sample", [&] { return data.column(cfg.var); });
  if (!exact) exact = stage("moments", [&] { return engine::empirical_moments(data, cfg.var, top); });

  const auto sm = stage("moments", [&] {
    if (static_cast<int>(exact->order()) < cfg.m)
      throw Error(ErrorKind::InvalidArgument, "only " + std::to_string(exact->order()) +
                                                  " moments available, m = " + std::to_string(cfg.m));
    return exact->prefix(static_cast<std::size_t>(cfg.m));
  });
  const auto support = stage("estimate", [&] { return choose_support(sm, cfg.support, &column); });
  const auto fits = stage("estimate", [&] { return fit_both(sm, support.first, support.second); });
  const auto tests = stage("gof", [&] { return run_tests(column, fits.me, fits.gc, cfg.bins, cfg.alpha); });
  const int error_orders = std::min(cfg.error_orders, static_cast<int>(exact->order()));
  const auto table = stage("errors", [&] {
    return gof::error_report(*exact, data, {{"ME", &fits.me}, {"GC", &fits.gc}}, error_orders);
  });

  ReportBundle bundle;
  auto& r = bundle.report;
  r["config"] = {{"program", cfg.program_path},
                 {"var", cfg.var},
                 {"n", cfg.n},
                 {"e", cfg.e},
                 {"seed", cfg.seed},
                 {"m", cfg.m},
                 {"source", std::string(source_name(cfg.source))},
                 {"alpha", cfg.alpha},
                 {"bins", cfg.bins},
                 {"error_orders", cfg.error_orders}};
  r["config"]["support"] = cfg.support ? nlohmann::json{cfg.support->first, cfg.support->second}
                                       : nlohmann::json(nullptr);
  if (cfg.source == MomentSource::External) r["config"]["moments_file"] = cfg.moments_path;
  r["validation"] = validation_json(program.report);
  r["moments"] = moments::to_json(*exact);
  r["moments_used"] = sm.values;
  r["support"] = {support.first, support.second};
  r["estimates"] = {{"ME", estimate_json(fits.me, &fits.me_diagnostics)},
                    {"GC", estimate_json(fits.gc, nullptr)}};
  r["tests"] = gof_json(tests);
  r["verdicts"] = {{"A_ME", std::string(gof::to_string(combined(tests.chi_me, tests.ks_me)))},
                   {"A_GC", std::string(gof::to_string(combined(tests.chi_gc, tests.ks_gc)))}};
  r["errors"] = gof::to_json(table);

  stage("output", [&] {
    std::ostringstream samples, errors;
    engine::write_csv(samples, data);
    gof::write_csv(errors, table);
    bundle.files["samples.csv"] = samples.str();
    bundle.files["moments.json"] = dump(moments::to_json(*exact));
    bundle.files["estimate_me.json"] = dump(estimate_json(fits.me, &fits.me_diagnostics));
    bundle.files["estimate_gc.json"] = dump(estimate_json(fits.gc, nullptr));
    bundle.files["gof.json"] = dump(gof_json(tests));
    bundle.files["errors.csv"] = errors.str();
    bundle.files["histogram.csv"] = histogram_csv(tests);
    bundle.files["pdf_curves.csv"] = pdf_curves_csv(column, fits.me, fits.gc);
    bundle.files["report.json"] = dump(bundle.report);
    if (!cfg.out_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(cfg.out_dir, ec);
      if (ec) throw Error(ErrorKind::IoError, "cannot create '" + cfg.out_dir + "': " + ec.message());
      for (const auto& [name, contents] : bundle.files)
        write_file((std::filesystem::path(cfg.out_dir) / name).string(), contents);
    }
    return 0;
  });
  return bundle;
}

}  // namespace momentest::pipeline
