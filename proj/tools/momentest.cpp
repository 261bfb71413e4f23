// momentest: distribution estimation for probabilistic loops.
//
//   momentest validate --program P
//   momentest sample   --program P --n N --e E --seed S [--out DIR]
//   momentest moments  (--program P | --moments-file F | --samples CSV) --var V --n N --m M
//   momentest estimate --moments F --m M [--method me|gc|both] [--support l,u] [--samples CSV --var V]
//   momentest gof      --samples CSV --var V (--me F | --gc F)... [--bins K] [--alpha A]
//   momentest run      --program P --var V [...]
//
// Exit codes: 0 success, 1 stage failure, 2 usage or validation error. Errors
// are reported on stderr as {"error": {"stage", "kind", "message"}}.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "momentest/pipeline.hpp"

namespace mp = momentest::pipeline;
using momentest::Error;
using momentest::ErrorKind;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError:
    case ErrorKind::UndefinedVariable:
    case ErrorKind::DuplicateInit:
    case ErrorKind::ValidationError:
    case ErrorKind::SchemaError:
    case ErrorKind::InvalidArgument:
      return 2;
    default:
      return 1;
  }
}

int report_error(const std::string& stage, const Error& e, const std::string& out_dir) {
  nlohmann::json doc{{"error",
                      {{"stage", stage},
                       {"kind", std::string(momentest::to_string(e.kind()))},
                       {"message", e.what()}}}};
  std::cerr << doc.dump() << '\n';
  if (!out_dir.empty()) {
    try {
      std::filesystem::create_directories(out_dir);
      mp::write_file((std::filesystem::path(out_dir) / "error.json").string(), doc.dump(2) + "\n");
    } catch (const std::exception&) {
    }
  }
  return exit_code(e.kind());
}

std::optional<std::pair<double, double>> parse_support(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto comma = text.find(',');
  if (comma == std::string::npos)
    throw Error(ErrorKind::InvalidArgument, "--support expects l,u");
  try {
    std::size_t used = 0;
    const double l = std::stod(text.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument("l");
    const auto rest = text.substr(comma + 1);
    const double u = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("u");
    if (!(l < u)) throw Error(ErrorKind::InvalidArgument, "--support needs l < u");
    return std::make_pair(l, u);
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidArgument, "--support expects two numbers l,u");
  }
}

void emit(const std::string& out_dir, const std::string& name, const std::string& contents) {
  if (out_dir.empty()) {
    std::cout << contents;
    return;
  }
  std::filesystem::create_directories(out_dir);
  mp::write_file((std::filesystem::path(out_dir) / name).string(), contents);
}

momentest::engine::SampleData read_samples(const std::string& path) {
  std::istringstream in(mp::read_file(path));
  return momentest::engine::read_csv(in);
}

nlohmann::json parse_json_file(const std::string& path) {
  auto doc = nlohmann::json::parse(mp::read_file(path), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::SchemaError, "'" + path + "' is not valid JSON");
  return doc;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution estimation for probabilistic loops"};
  app.require_subcommand(1);

  std::string program, var, moments_file, samples_file, support_text, out_dir, method = "both";
  std::string me_file, gc_file, source = "propagate";
  std::int64_t n = 100, e = 1000;
  std::uint64_t seed = 0;
  int m = 2, bins = 15, error_orders = 8;
  double alpha = 0.05;
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "master seed (falls back to MOMENTEST_SEED, then 0)");
    sub->add_option("--n", n, "loop iteration")->check(CLI::NonNegativeNumber);
    sub->add_option("--e", e, "number of executions");
    sub->add_option("--m", m, "number of moments");
    sub->add_option("--alpha", alpha, "significance level");
    sub->add_option("--bins", bins, "chi-square bins");
    sub->add_option("--support", support_text, "support l,u");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "sampling threads (0 = all cores)");
  };

  auto* validate_cmd = app.add_subcommand("validate", "parse and validate a program");
  validate_cmd->add_option("--program", program, "program file")->required();
  add_common(validate_cmd);

  auto* sample_cmd = app.add_subcommand("sample", "sample a program");
  sample_cmd->add_option("--program", program, "program file")->required();
  add_common(sample_cmd);

  auto* moments_cmd = app.add_subcommand("moments", "exact, external or empirical moments");
  moments_cmd->add_option("--program", program, "program file");
  moments_cmd->add_option("--moments-file", moments_file, "external moments JSON");
  moments_cmd->add_option("--samples", samples_file, "sample CSV for empirical moments");
  moments_cmd->add_option("--var", var, "variable")->required();
  add_common(moments_cmd);

  auto* estimate_cmd = app.add_subcommand("estimate", "fit ME and/or GC estimates");
  estimate_cmd->add_option("--moments", moments_file, "moments JSON")->required();
  estimate_cmd->add_option("--method", method, "me, gc or both")
      ->check(CLI::IsMember({"me", "gc", "both"}));
  estimate_cmd->add_option("--samples", samples_file, "sample CSV for the default support");
  estimate_cmd->add_option("--var", var, "variable (defaults to the moments' variable)");
  add_common(estimate_cmd);

  auto* gof_cmd = app.add_subcommand("gof", "goodness-of-fit tests");
  gof_cmd->add_option("--samples", samples_file, "sample CSV")->required();
  gof_cmd->add_option("--var", var, "variable")->required();
  gof_cmd->add_option("--me", me_file, "ME estimate JSON");
  gof_cmd->add_option("--gc", gc_file, "GC estimate JSON");
  add_common(gof_cmd);

  auto* run_cmd = app.add_subcommand("run", "full pipeline");
  run_cmd->add_option("--program", program, "program file")->required();
  run_cmd->add_option("--var", var, "variable")->required();
  run_cmd->add_option("--source", source, "propagate, external or empirical")
      ->check(CLI::IsMember({"propagate", "external", "empirical"}));
  run_cmd->add_option("--moments-file", moments_file, "external moments JSON");
  run_cmd->add_option("--error-orders", error_orders, "orders in the error table");
  add_common(run_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  bool seed_given = false;
  for (auto* sub : app.get_subcommands())
    if (sub->count("--seed")) seed_given = true;
  if (!seed_given) {
    if (const char* env = std::getenv("MOMENTEST_SEED")) {
      try {
        seed = std::stoull(env);
      } catch (const std::exception&) {
        std::cerr << R"({"error":{"stage":"config","kind":"InvalidArgument","message":"MOMENTEST_SEED is not an integer"}})"
                  << '\n';
        return 2;
      }
    }
  }

  std::string stage = "config";
  try {
    const auto support = parse_support(support_text);

    if (*validate_cmd) {
      stage = "validate";
      const auto parsed = momentest::dsl::parse_program(mp::read_file(program));
      const auto report = momentest::dsl::validate(parsed);
      auto doc = mp::validation_json(report);
      if (report.ok()) doc["core"] = momentest::dsl::pretty_print(momentest::dsl::desugar(parsed));
      std::cout << dump(doc);
      return report.ok() ? 0 : 2;
    }

    if (*sample_cmd) {
      stage = "validate";
      const auto lp = mp::load_program(program);
      stage = "sample";
      const auto data = momentest::engine::sample(lp.core, n, e, seed, threads);
      std::ostringstream os;
      momentest::engine::write_csv(os, data);
      emit(out_dir, "samples.csv", os.str());
      return 0;
    }

    if (*moments_cmd) {
      if (m < 1) throw Error(ErrorKind::InvalidArgument, "--m must be >= 1");
      stage = "moments";
      momentest::moments::MomentSet ms;
      if (!moments_file.empty()) {
        ms = mp::read_moments(parse_json_file(moments_file),
                              moments_cmd->count("--n") ? std::optional<std::int64_t>(n) : std::nullopt);
        if (static_cast<int>(ms.order()) > m && moments_cmd->count("--m"))
          ms = ms.prefix(static_cast<std::size_t>(m));
      } else if (!samples_file.empty()) {
        ms = momentest::engine::empirical_moments(read_samples(samples_file), var, m);
      } else if (!program.empty()) {
        stage = "validate";
        const auto lp = mp::load_program(program);
        stage = "moments";
        ms = mp::propagate_moments(lp.core, var, n, m);
      } else {
        throw Error(ErrorKind::InvalidArgument, "moments needs --program, --moments-file or --samples");
      }
      emit(out_dir, "moments.json", dump(momentest::moments::to_json(ms)));
      return 0;
    }

    if (*estimate_cmd) {
      stage = "moments";
      auto all = mp::read_moments(parse_json_file(moments_file));
      if (m < 2) throw Error(ErrorKind::ValidationError, "--m must be >= 2");
      if (static_cast<int>(all.order()) < m)
        throw Error(ErrorKind::InvalidArgument,
                    "moments file has only " + std::to_string(all.order()) + " orders");
      const auto sm = all.prefix(static_cast<std::size_t>(m));
      stage = "estimate";
      std::optional<Eigen::VectorXd> column;
      if (!samples_file.empty()) column = read_samples(samples_file).column(var.empty() ? sm.var : var);
      const auto [lo, hi] = mp::choose_support(sm, support, column ? &*column : nullptr);
      if (method == "me" || method == "both") {
        auto [est, diag] = momentest::estimate::fit_max_entropy(sm, lo, hi);
        emit(out_dir, "estimate_me.json", dump(mp::estimate_json(est, &diag)));
      }
      if (method == "gc" || method == "both") {
        auto est = momentest::estimate::fit_gram_charlier(sm, lo, hi);
        emit(out_dir, "estimate_gc.json", dump(mp::estimate_json(est, nullptr)));
      }
      return 0;
    }

    if (*gof_cmd) {
      stage = "gof";
      if (me_file.empty() && gc_file.empty())
        throw Error(ErrorKind::InvalidArgument, "gof needs --me and/or --gc");
      const auto column = read_samples(samples_file).column(var);
      auto load = [](const std::string& path) {
        return momentest::estimate::from_json(parse_json_file(path).at("estimate"));
      };
      if (!me_file.empty() && !gc_file.empty()) {
        const auto r = mp::run_tests(column, load(me_file), load(gc_file), bins, alpha);
        emit(out_dir, "gof.json", dump(mp::gof_json(r)));
        return 0;
      }
      const auto est = load(me_file.empty() ? gc_file : me_file);
      const auto chi = momentest::gof::chi_square_test(column, est, bins, alpha);
      const auto ks = momentest::gof::ks_test(column, est, alpha);
      nlohmann::json doc{{me_file.empty() ? "GC" : "ME",
                          {{"chi_square", momentest::gof::to_json(chi)},
                           {"ks", momentest::gof::to_json(ks)},
                           {"verdict", std::string(momentest::gof::to_string(mp::combined(chi, ks)))}}}};
      emit(out_dir, "gof.json", dump(doc));
      return 0;
    }

    if (*run_cmd) {
      mp::PipelineConfig cfg;
      cfg.program_path = program;
      cfg.var = var;
      cfg.n = n;
      cfg.e = e;
      cfg.seed = seed;
      cfg.m = m;
      cfg.source = source == "external"    ? mp::MomentSource::External
                   : source == "empirical" ? mp::MomentSource::Empirical
                                           : mp::MomentSource::Propagate;
      cfg.moments_path = moments_file;
      cfg.support = support;
      cfg.alpha = alpha;
      cfg.bins = bins;
      cfg.error_orders = error_orders;
      cfg.out_dir = out_dir;
      cfg.threads = threads;
      const auto bundle = mp::run_pipeline(cfg);
      if (out_dir.empty()) std::cout << bundle.files.at("report.json");
      return 0;
    }
  } catch (const mp::StageError& err) {
    return report_error(err.stage(), err, out_dir);
  } catch (const Error& err) {
    return report_error(stage, err, out_dir);
  } catch (const nlohmann::json::exception& err) {
    return report_error(stage, Error(ErrorKind::SchemaError, err.what()), out_dir);
  } catch (const std::filesystem::filesystem_error& err) {
    return report_error(stage, Error(ErrorKind::IoError, err.what()), out_dir);
  }
  return 0;
}
