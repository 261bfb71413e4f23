// One PASS/FAIL line per acceptance criterion. Exits nonzero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "momentest/engine.hpp"
#include "momentest/rng.hpp"
#include "support.hpp"

using namespace momentest;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool ok = true;
  std::ostringstream detail;
  std::string failed;

  void require(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    failed += (failed.empty() ? "" : "; ") + what;
  }
};

bool report(int id, const std::string& title, Check& c) {
  std::printf("criterion %d %s: %s:%s%s%s\n", id, c.ok ? "PASS" : "FAIL", title.c_str(),
              c.detail.str().c_str(), c.failed.empty() ? "" : " | failed: ", c.failed.c_str());
  std::fflush(stdout);
  return c.ok;
}

moments::MomentSet external(std::vector<double> values) {
  moments::MomentSet ms;
  ms.var = "x";
  ms.values = std::move(values);
  return ms;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int order_for(const std::string& name) { return name == "uniform" ? 6 : name == "pdp" ? 3 : 2; }

pipeline::PipelineConfig config_for(const std::string& name, std::uint64_t seed) {
  pipeline::PipelineConfig cfg;
  cfg.program_path = testing::corpus_path(name);
  cfg.var = testing::target_of(name);
  cfg.m = order_for(name);
  cfg.seed = seed;
  cfg.error_orders = 2;
  if (name == "uniform") cfg.support = std::pair{0.0, 1.0};
  return cfg;
}

// --- criterion 1 -----------------------------------------------------------

bool exact_moments() {
  Check c;
  const auto t0 = Clock::now();
  auto moments_of = [](const std::string& name, int m) {
    const auto lp = testing::load(name);
    return pipeline::propagate_moments(lp.core, testing::target_of(name), 100, m);
  };
  auto exact_eq = [](const moments::MomentSet& ms, int i, const Rational& want) {
    return ms.exact && (*ms.exact)[i] == want;
  };

  const auto sp = moments_of("stutteringp", 2);
  c.require(exact_eq(sp, 0, Rational(210)), "StutteringP E(s) = 210 exactly");
  c.require(testing::rel_err(sp.values[1], 4.4405e4) <= 1e-4, "StutteringP E(s^2)");
  c.detail << " E(s)=" << sp.values[0] << " E(s^2)=" << sp.values[1];

  const auto rw = moments_of("randomwalk1d", 2);
  c.require(testing::rel_err(rw.values[0], 20) <= 1e-9, "RandomWalk1D E(x)");
  c.require(testing::rel_err(rw.values[1], 1288.0 / 3) <= 1e-9, "RandomWalk1D E(x^2)");
  c.require(std::abs(rw.values[1] - 429.33) < 5e-3, "RandomWalk1D printed value");

  const auto bi = moments_of("binomial", 2);
  c.require(exact_eq(bi, 0, Rational(50)) && exact_eq(bi, 1, Rational(2525)), "Binomial 50, 2525 exactly");

  const auto sq = moments_of("square", 1);
  c.require(exact_eq(sq, 0, Rational(10100)), "Square E(y) = 10100 exactly");

  const auto un = moments_of("uniform", 8);
  for (int i = 1; i <= 8; ++i)
    c.require(std::abs(un.values[i - 1] - 1.0 / (i + 1)) <= 1e-9, "Uniform order " + std::to_string(i));

  const auto va = moments_of("vasicek", 2);
  c.require(testing::rel_err(va.values[0], 0.2) <= 1e-9, "Vasicek E(r)");
  c.require(testing::rel_err(va.values[1], 0.04 + 0.16 / 3) <= 1e-9, "Vasicek E(r^2)");

  const auto pd = moments_of("pdp", 1);
  c.require(testing::rel_err(pd.values[0], 1.1885e3) <= 1e-3, "PDP E(x)");
  c.detail << " PDP E(x)=" << pd.values[0];

  const double dt = seconds_since(t0);
  c.require(dt < 5, "runtime < 5 s");
  c.detail << " (" << dt << " s)";
  return report(1, "exact moments at n=100", c);
}

// --- criterion 2 -----------------------------------------------------------

bool critical_values() {
  Check c;
  const double a = specfun::chi2_inv_cdf(0.95, 14), b = specfun::chi2_inv_cdf(0.95, 49);
  const double k = gof::ks_critical_value(1000, 0.05);
  c.detail << " chi2(0.95,14)=" << a << " chi2(0.95,49)=" << b << " KS(1000)=" << k;
  c.require(std::abs(a - 23.685) <= 5e-3, "chi2 df 14");
  c.require(std::abs(b - 66.339) <= 5e-3, "chi2 df 49");
  c.require(std::abs(k - 0.0608) <= 5e-4, "K-S CV");
  return report(2, "critical values", c);
}

// --- criterion 3 -----------------------------------------------------------

bool vasicek_closed_form() {
  Check c;
  const double var = 0.16 / 3;
  const auto ms = external({0.2, 0.04 + var});
  const auto gc = estimate::fit_gram_charlier(ms, -0.8, 1.2);
  const double coeff = gc.pdf(0.2);
  const double expo = -std::log(gc.pdf(0.7) / coeff) / 0.25;
  c.detail << " GC = " << coeff << " exp(-" << expo << " (r-0.2)^2)";
  c.require(testing::rel_err(coeff, 1.7275) <= 1e-3, "GC coefficient");
  c.require(testing::rel_err(expo, 9.375) <= 1e-3, "GC exponent");

  const auto [me, diag] = estimate::fit_max_entropy(ms, -0.8, 1.2);
  c.require(diag.converged, "ME converged");
  double worst = 0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = -0.8 + 2.0 * i / 4000;
    worst = std::max(worst, std::abs(me.pdf(x) - 1.7275 * std::exp(-9.375 * (x - 0.2) * (x - 0.2))));
  }
  c.detail << " ME L_inf=" << worst;
  c.require(worst <= 1e-3, "ME L_inf");
  for (int i = 1; i <= 2; ++i)
    c.require(testing::rel_err(estimate::moment_of_estimate(me, i), ms.values[i - 1]) <= 1e-6,
              "ME moment " + std::to_string(i));
  return report(3, "Vasicek closed-form estimates", c);
}

// --- criteria 4 and 5 ------------------------------------------------------

struct Runs {
  // name -> per-seed reports
  std::map<std::string, std::vector<nlohmann::json>> reports;
  double seconds = 0;
};

Runs run_corpus(int seeds) {
  Runs r;
  const auto t0 = Clock::now();
  for (const auto& name : testing::corpus_names())
    for (int s = 0; s < seeds; ++s)
      r.reports[name].push_back(pipeline::run_pipeline(config_for(name, static_cast<std::uint64_t>(s))).report);
  r.seconds = seconds_since(t0);
  return r;
}

double rate(const std::vector<nlohmann::json>& reports, const std::string& est, const std::string& test,
            const std::string& verdict) {
  int hits = 0;
  for (const auto& r : reports)
    if (r.at("tests").at(est).at(test).at("verdict") == verdict) ++hits;
  return static_cast<double>(hits) / static_cast<double>(reports.size());
}

bool verdicts(const Runs& runs) {
  Check c;
  for (const auto* name : {"vasicek", "stutteringp", "randomwalk1d", "pdp"}) {
    const auto& reps = runs.reports.at(name);
    c.detail << ' ' << name << '(';
    for (const auto* est : {"ME", "GC"})
      for (const auto* test : {"chi_square", "ks"}) {
        const double p = rate(reps, est, test, "NOT_REJECTED");
        c.detail << (std::string(est) == "ME" && std::string(test) == "chi_square" ? "" : " ") << est << '/'
                 << test << '=' << p;
        c.require(p >= 0.9, std::string(name) + " " + est + " " + test + " not rejected in >= 90%");
      }
    c.detail << ')';
  }
  {
    const auto& reps = runs.reports.at("uniform");
    const double gc_rej = rate(reps, "GC", "chi_square", "REJECTED");
    const double me_ok = rate(reps, "ME", "chi_square", "NOT_REJECTED");
    c.detail << " uniform(GC/chi_square rejected=" << gc_rej << " ME/chi_square=" << me_ok << ')';
    c.require(gc_rej >= 0.9, "uniform GC chi-square rejected in >= 90%");
    c.require(me_ok >= 0.9, "uniform ME chi-square not rejected in >= 90%");
  }
  for (const auto* name : {"square", "binomial"}) {
    const auto& reps = runs.reports.at(name);
    const double me = rate(reps, "ME", "ks", "NOT_REJECTED"), gc = rate(reps, "GC", "ks", "NOT_REJECTED");
    c.detail << ' ' << name << "(ME/ks=" << me << " GC/ks=" << gc << ')';
    c.require(me >= 0.8 && gc >= 0.8, std::string(name) + " K-S not rejected in >= 80%");
  }
  c.require(runs.seconds < 120, "runtime < 2 min");
  c.detail << " (" << runs.seconds << " s)";
  return report(4, "verdicts over 20 seeds", c);
}

bool error_dominance(const Runs& runs) {
  Check c;
  for (const auto& name : testing::corpus_names()) {
    for (int order = 1; order <= 2; ++order) {
      std::vector<double> me, sample;
      for (const auto& r : runs.reports.at(name)) {
        const auto& row = r.at("errors").at("rows").at(order - 1);
        if (row.at("relative_undefined").get<bool>()) continue;
        me.push_back(row.at("ME").at("re").get<double>());
        sample.push_back(row.at("sample").at("re").get<double>());
      }
      if (me.empty()) continue;
      const double a = median(me), b = median(sample);
      c.require(a <= b, name + " order " + std::to_string(order));
      if (order == 2) c.detail << ' ' << name << "(RE_ME=" << a << " RE_Sample=" << b << ')';
    }
  }

  const auto lp = testing::load("uniform");
  const auto exact = pipeline::propagate_moments(lp.core, "u", 100, 8);
  const auto fits = pipeline::fit_both(exact.prefix(6), 0, 1);
  const double re_me = std::abs(estimate::moment_of_estimate(fits.me, 8) - exact.values[7]) / exact.values[7];
  const double re_gc = std::abs(estimate::moment_of_estimate(fits.gc, 8) - exact.values[7]) / exact.values[7];
  c.detail << " uniform order 8: RE_GC=" << re_gc << " RE_ME=" << re_me;
  c.require(re_gc > 0.10, "uniform RE_GC(8) > 10%");
  c.require(re_me < 1e-3, "uniform RE_ME(8) < 0.1%");
  return report(5, "moment error dominance", c);
}

// --- criterion 6 -----------------------------------------------------------

double binom(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Raw moments of a random Gaussian mixture, from E[(mu + s Z)^k].
std::vector<double> mixture_moments(std::mt19937_64& gen, int m) {
  std::uniform_real_distribution<double> mean(-1, 1), sd(0.4, 1.2), weight(0.1, 1);
  const int parts = 1 + static_cast<int>(gen() % 3);
  std::vector<double> out(m, 0.0), w(parts), mu(parts), s(parts);
  double total = 0;
  for (int p = 0; p < parts; ++p) {
    total += (w[p] = weight(gen));
    mu[p] = mean(gen);
    s[p] = sd(gen);
  }
  for (int p = 0; p < parts; ++p)
    for (int k = 1; k <= m; ++k) {
      double e = 0, z = 1;  // z = E Z^j for even j
      for (int j = 0; j <= k; j += 2) {
        e += binom(k, j) * std::pow(mu[p], k - j) * std::pow(s[p], j) * z;
        z *= j + 1;
      }
      out[k - 1] += w[p] / total * e;
    }
  return out;
}

double cumulant_by_determinant(const std::vector<double>& raw, int m) {
  auto mom = [&](int i) { return i == 0 ? 1.0 : raw[i - 1]; };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i <= m; ++i) {
    a(i - 1, 0) = mom(i);
    for (int j = 2; j <= std::min(m, i + 1); ++j) a(i - 1, j - 1) = binom(i - 1, j - 2) * mom(i - j + 1);
  }
  return (m % 2 == 1 ? 1.0 : -1.0) * a.determinant();
}

bool numerical_properties() {
  Check c;
  std::mt19937_64 gen(6);

  double jac = 0;
  std::uniform_real_distribution<double> small(-0.1, 0.1);
  for (int m = 1; m <= 6; ++m) {
    std::vector<double> targets(m + 1);
    for (int i = 0; i <= m; ++i) targets[i] = i % 2 == 0 ? 1.0 + i : 0.3;
    const estimate::MeSystem sys(-3, 3, targets, 16, specfun::kDefaultQuadratureOrder);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd zeta = Eigen::VectorXd::Zero(m + 1);
      zeta(0) = std::log(std::sqrt(2 * std::numbers::pi));
      for (int j = 1; j <= m; ++j) zeta(j) = small(gen);
      if (m >= 2) zeta(2) += 0.5;
      const Eigen::MatrixXd analytic = sys.jacobian(zeta);
      for (int j = 0; j <= m; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(zeta(j)));
        Eigen::VectorXd up = zeta, down = zeta;
        up(j) += h;
        down(j) -= h;
        const Eigen::VectorXd fd = (sys.residual(up) - sys.residual(down)) / (2 * h);
        const double scale = std::max(analytic.col(j).lpNorm<Eigen::Infinity>(), 1e-12);
        jac = std::max(jac, (fd - analytic.col(j)).lpNorm<Eigen::Infinity>() / scale);
      }
    }
  }
  c.detail << " jacobian=" << jac;
  c.require(jac <= 1e-5, "LM jacobian vs central differences");

  double quad = 0;
  for (int q : {1, 2, 3, 8, 16, 32, 64}) {
    const auto rule = specfun::gauss_legendre(0, 1, q);
    for (int d = 0; d <= 2 * q - 1; ++d)
      quad = std::max(quad, testing::rel_err(rule.integrate([d](double x) { return std::pow(x, d); }), 1.0 / (d + 1)));
  }
  c.detail << " quadrature=" << quad;
  c.require(quad <= 1e-12, "quadrature degree exactness");

  double round = 0, det = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto raw = mixture_moments(gen, 8);
    const auto cv = specfun::cumulants_from_moments(external(raw));
    const auto back = specfun::moments_from_cumulants(cv);
    for (int i = 0; i < 8; ++i) round = std::max(round, testing::rel_err(back.values[i], raw[i]));
    const double sd = std::sqrt(cv.variance());
    for (int m = 1; m <= 8; ++m) {
      const double denom = std::max(std::abs(cv.kappa[m - 1]), std::pow(sd, m));
      det = std::max(det, std::abs(cumulant_by_determinant(raw, m) - cv.kappa[m - 1]) / denom);
    }
  }
  c.detail << " round_trip=" << round << " determinant=" << det;
  c.require(round <= 1e-10, "cumulant round trip");
  c.require(det <= 1e-9, "determinant agreement");

  double gc2 = 0;
  std::uniform_real_distribution<double> mus(-5, 5), vars(0.01, 10), unit(0, 1);
  for (int rep = 0; rep < 50; ++rep) {
    const double mu = mus(gen), var = vars(gen), sd = std::sqrt(var);
    const auto gc = estimate::fit_gram_charlier(external({mu, var + mu * mu}), mu - 10 * sd, mu + 10 * sd);
    for (int i = 0; i < 20; ++i) {
      const double x = mu + sd * (8 * unit(gen) - 4);
      const double want = std::exp(-(x - mu) * (x - mu) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
      gc2 = std::max(gc2, std::abs(gc.pdf(x) - want));
    }
  }
  c.detail << " gc2=" << gc2;
  c.require(gc2 <= 1e-12, "GC-2 equals the Gaussian");

  int mismatches = 0;
  for (const auto& name : testing::corpus_names()) {
    const auto lp = testing::load(name);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto kd = engine::keyed_draws(lp.core, rng::derive(12345, seed));
      auto draw = [&](std::int64_t it, std::size_t slot, const dsl::Distribution& d) {
        return exact_rational(kd(it, slot, d));
      };
      const auto direct = engine::run_program<Rational>(lp.program, 50, draw);
      const auto core = engine::run_core<Rational>(lp.core, 50, draw);
      for (std::size_t i = 0; i < lp.core.state.size(); ++i)
        if (direct.at(lp.core.state[i]) != core[i]) ++mismatches;
    }
  }
  c.detail << " coupling_mismatches=" << mismatches;
  c.require(mismatches == 0, "desugar coupling");
  return report(6, "numerical properties", c);
}

// --- criterion 7 -----------------------------------------------------------

bool determinism() {
  Check c;
  for (const auto* name : {"vasicek", "pdp", "stutteringp"}) {
    auto cfg = config_for(name, 3);
    cfg.error_orders = 8;
    cfg.threads = 1;
    const auto first = pipeline::run_pipeline(cfg).files.at("report.json");
    for (unsigned t : {1u, 2u, 4u}) {
      cfg.threads = t;
      c.require(pipeline::run_pipeline(cfg).files.at("report.json") == first,
                std::string(name) + " threads=" + std::to_string(t));
    }
  }
  c.detail << " vasicek, pdp, stutteringp; two runs plus 2 and 4 threads";
  return report(7, "byte-identical report.json", c);
}

}  // namespace

int main() {
  bool ok = true;
  ok &= exact_moments();
  ok &= critical_values();
  ok &= vasicek_closed_form();
  const auto runs = run_corpus(20);
  ok &= verdicts(runs);
  ok &= error_dominance(runs);
  ok &= numerical_properties();
  ok &= determinism();
  return ok ? 0 : 1;
}
