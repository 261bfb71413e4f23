#include "momentest/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace momentest::engine {

namespace {

std::uint64_t init_draw_count(const dsl::CoreProgram& core) {
  std::uint64_t k = 0;
  for (const auto& i : core.inits)
    if (std::holds_alternative<dsl::Distribution>(i)) ++k;
  return k;
}

// Distribution parameters converted once.
struct Params {
  dsl::DistKind kind;
  double a, b;
};

Params params_of(const dsl::Distribution& d) {
  return {d.kind, to_double(d.first),
          d.kind == dsl::DistKind::Normal ? std::sqrt(to_double(d.second)) : to_double(d.second)};
}

double draw_from(const Params& p, double u) {
  switch (p.kind) {
    case dsl::DistKind::Bernoulli: return u < p.a ? 1.0 : 0.0;
    case dsl::DistKind::Uniform: return p.a + (p.b - p.a) * u;
    case dsl::DistKind::Normal: return p.a + p.b * rng::normal_quantile(u);
  }
  return 0;
}

// Flat form of the update polynomials for the binary64 sampler.
struct Factor {
  std::uint32_t symbol;
  std::uint32_t power;
};

struct Term {
  double coeff;
  std::uint32_t first, last;  // range into factors
};

struct CompiledUpdate {
  std::size_t target;
  std::vector<Term> terms;
};

class Compiled {
 public:
  explicit Compiled(const dsl::CoreProgram& core) : core_(core) {
    for (const auto& u : core.updates) {
      CompiledUpdate cu{u.target, {}};
      for (const auto& [e, c] : u.rhs.terms()) {
        Term t{to_double(c), static_cast<std::uint32_t>(factors_.size()), 0};
        for (std::size_t i = 0; i < e.size(); ++i)
          if (e[i] != 0)
            factors_.push_back({static_cast<std::uint32_t>(i), e[i]});
        t.last = static_cast<std::uint32_t>(factors_.size());
        cu.terms.push_back(t);
      }
      updates_.push_back(std::move(cu));
    }
    for (const auto& f : core.fresh) fresh_.push_back(params_of(f.dist));
  }

  void run(std::vector<double>& sym, std::int64_t n, const KeyedDraws& draw) const {
    const std::size_t state = core_.state.size();
    std::size_t init_slot = 0;
    for (std::size_t i = 0; i < state; ++i) {
      if (const auto* r = std::get_if<Rational>(&core_.inits[i])) {
        sym[i] = to_double(*r);
      } else {
        sym[i] = draw(-1, init_slot++, std::get<dsl::Distribution>(core_.inits[i]));
      }
    }
    for (std::int64_t it = 0; it < n; ++it) {
      const auto base = static_cast<std::uint64_t>(it + 1) * draw.stride;
      for (std::size_t f = 0; f < fresh_.size(); ++f)
        sym[state + f] = draw_from(fresh_[f], rng::uniform(draw.key, base + f));
      for (const auto& u : updates_) {
        double sum = 0;
        for (const auto& t : u.terms) {
          double v = t.coeff;
          for (auto k = t.first; k < t.last; ++k) {
            const double x = sym[factors_[k].symbol];
            for (std::uint32_t p = 0; p < factors_[k].power; ++p) v *= x;
          }
          sum += v;
        }
        if (!std::isfinite(sum))
          throw NumericOverflow("variable '" + core_.state[u.target] +
                                "' left the binary64 range at iteration " + std::to_string(it + 1));
        sym[u.target] = sum;
      }
    }
  }

 private:
  const dsl::CoreProgram& core_;
  std::vector<Factor> factors_;
  std::vector<CompiledUpdate> updates_;
  std::vector<Params> fresh_;
};

}  // namespace

std::uint64_t draw_counter(const dsl::CoreProgram& core, std::int64_t iteration, std::size_t slot) {
  return keyed_draws(core, 0).stride * static_cast<std::uint64_t>(iteration + 1) + slot;
}

KeyedDraws keyed_draws(const dsl::CoreProgram& core, std::uint64_t key) {
  const std::uint64_t stride =
      std::max<std::uint64_t>({1, core.fresh.size(), init_draw_count(core)});
  return {key, stride};
}

double transform(const dsl::Distribution& dist, double u) { return draw_from(params_of(dist), u); }

Eigen::Index SampleData::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Eigen::Index>(i);
  throw Error(ErrorKind::UnknownVariable, "sample has no variable '" + std::string(name) + "'");
}

std::map<std::string, double> run_once(const dsl::CoreProgram& core, std::int64_t n,
                                       std::uint64_t seed) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be >= 0");
  std::vector<double> sym(core.symbol_count(), 0.0);
  Compiled(core).run(sym, n, keyed_draws(core, seed));
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < core.state.size(); ++i) out[core.state[i]] = sym[i];
  return out;
}

SampleData sample(const dsl::CoreProgram& core, std::int64_t n, std::int64_t e,
                  std::uint64_t master_seed, unsigned threads) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "iteration count must be >= 0");
  if (e < 1) throw Error(ErrorKind::InvalidArgument, "number of executions must be >= 1");
  SampleData data;
  data.names = core.state;
  data.n = n;
  data.e = e;
  data.seed = master_seed;
  const auto cols = static_cast<Eigen::Index>(core.state.size());
  data.values.resize(e, cols);

  const Compiled compiled(core);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, e));

  std::mutex failure_mutex;
  std::int64_t failed_row = -1;
  std::string failure;
  auto work = [&](unsigned t) {
    std::vector<double> sym(core.symbol_count(), 0.0);
    for (std::int64_t row = t; row < e; row += threads) {
      try {
        compiled.run(sym, n, keyed_draws(core, rng::derive(master_seed, static_cast<std::uint64_t>(row))));
      } catch (const NumericOverflow& ex) {
        std::lock_guard lock(failure_mutex);
        if (failed_row < 0 || row < failed_row) {
          failed_row = row;
          failure = ex.what();
        }
        return;
      }
      for (Eigen::Index c = 0; c < cols; ++c) data.values(row, c) = sym[static_cast<std::size_t>(c)];
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  if (failed_row >= 0)
    throw NumericOverflow("row " + std::to_string(failed_row) + ": " + failure, failed_row);
  return data;
}

moments::MomentSet empirical_moments(const SampleData& data, std::string_view var, int m) {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "moment order must be >= 1");
  const Eigen::VectorXd x = data.column(var);
  moments::MomentSet ms;
  ms.var = std::string(var);
  ms.n = data.n;
  ms.provenance = moments::Provenance::Empirical;
  ms.values.assign(static_cast<std::size_t>(m), 0.0);
  Eigen::VectorXd power = Eigen::VectorXd::Ones(x.size());
  for (int i = 0; i < m; ++i) {
    power = power.cwiseProduct(x);
    ms.values[static_cast<std::size_t>(i)] = power.mean();
  }
  return ms;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_csv(std::ostream& os, const SampleData& data) {
  os << "# n=" << data.n << " e=" << data.e << " seed=" << data.seed << '\n';
  for (std::size_t i = 0; i < data.names.size(); ++i) os << (i ? "," : "") << data.names[i];
  os << '\n';
  for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.values.cols(); ++c)
      os << (c ? "," : "") << format_double(data.values(r, c));
    os << '\n';
  }
}

SampleData read_csv(std::istream& is) {
  auto bad = [](const std::string& msg) { return Error(ErrorKind::SchemaError, "sample CSV: " + msg); };
  SampleData data;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw bad("missing metadata line");
  {
    std::istringstream meta(line.substr(2));
    std::string field;
    bool have_n = false, have_e = false, have_seed = false;
    while (meta >> field) {
      auto eq = field.find('=');
      if (eq == std::string::npos) throw bad("malformed metadata field '" + field + "'");
      auto key = field.substr(0, eq);
      auto value = field.substr(eq + 1);
      try {
        if (key == "n") {
          data.n = std::stoll(value);
          have_n = true;
        } else if (key == "e") {
          data.e = std::stoll(value);
          have_e = true;
        } else if (key == "seed") {
          data.seed = std::stoull(value);
          have_seed = true;
        }
      } catch (const std::exception&) {
        throw bad("malformed metadata value '" + field + "'");
      }
    }
    if (!have_n || !have_e || !have_seed) throw bad("metadata needs n, e and seed");
  }
  if (!std::getline(is, line)) throw bad("missing header");
  {
    std::istringstream header(line);
    std::string name;
    while (std::getline(header, name, ',')) data.names.push_back(name);
  }
  std::vector<double> cells;
  std::int64_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t start = 0, count = 0;
    while (start <= line.size()) {
      auto end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      double v = 0;
      auto res = std::from_chars(line.data() + start, line.data() + end, v);
      if (res.ec != std::errc() || res.ptr != line.data() + end)
        throw bad("malformed value in row " + std::to_string(rows));
      cells.push_back(v);
      ++count;
      start = end + 1;
    }
    if (count != data.names.size()) throw bad("row " + std::to_string(rows) + " has wrong width");
    ++rows;
  }
  if (rows != data.e) throw bad("metadata says e=" + std::to_string(data.e) + " but found " +
                                std::to_string(rows) + " rows");
  data.values.resize(rows, static_cast<Eigen::Index>(data.names.size()));
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < data.names.size(); ++c)
      data.values(r, static_cast<Eigen::Index>(c)) = cells[static_cast<std::size_t>(r) * data.names.size() + c];
  return data;
}

}  // namespace momentest::engine
