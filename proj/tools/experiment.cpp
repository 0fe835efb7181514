#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "rara/analytic.hpp"
#include "rara/mpr.hpp"
#include "rara/random.hpp"
#include "rara/sim.hpp"

namespace rara::cli {
namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

template <class T>
T parse_number(const std::string& text) {
  const std::string s = trim(text);
  T value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (s.empty() || ec != std::errc{} || ptr != last)
    throw std::invalid_argument("'" + s + "' is not a valid number");
  return value;
}

// Rounds away accumulated step error so that range points such as 1.0 come
// out exact.
double snap(double v) { return std::round(v * 1e12) / 1e12; }

template <class T, class Step>
std::vector<T> parse_grid(const std::string& text, Step step_fn) {
  const std::string s = trim(text);
  if (s.empty()) return {};
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() < 2 || parts.size() > 3)
      throw std::invalid_argument("range '" + s + "' must look like start:stop[:step]");
    const T lo = parse_number<T>(parts[0]);
    const T hi = parse_number<T>(parts[1]);
    const T step = parts.size() == 3 ? parse_number<T>(parts[2]) : T{1};
    if (!(step > T{0})) throw std::invalid_argument("range step must be positive");
    if (hi < lo) throw std::invalid_argument("range '" + s + "' has stop < start");
    return step_fn(lo, hi, step);
  }
  std::vector<T> out;
  for (const auto& p : split(s, ',')) out.push_back(parse_number<T>(p));
  return out;
}

const std::vector<std::string> kKeyColumns{"lambda", "m", "epsilon"};
const std::vector<std::string> kTheoryColumns{
    "throughput_exact", "throughput_approx", "outage_exact", "outage_approx",
    "asymptotic_throughput", "pi_0", "pi_1", "pi_S", "pi_U", "mean_session_length",
    "u_discontinuity", "pi_fallback"};
const std::vector<std::string> kSimColumns{
    "throughput_hat", "stderr", "outage_hat", "outage_stderr", "mean_session_length_hat",
    "mean_session_length_stderr", "sessions", "seed"};
const std::vector<std::string> kErrorColumns{
    "throughput_abs_error", "outage_abs_error", "mean_session_length_abs_error"};

struct GridPoint {
  double lambda;
  int m;
};

std::vector<GridPoint> grid_points(const ExperimentSpec& spec) {
  std::vector<GridPoint> pts;
  for (double l : spec.lambda_grid)
    for (int m : spec.m_grid) pts.push_back({l, m});
  return pts;
}

std::vector<Cell> theory_cells(const SystemParams& params) {
  const PerformanceMetrics perf = throughput_exact(params);
  // The large-M approximations need lambda > 0; at zero load both vanish.
  const bool loaded = params.lambda > 0.0;
  const auto& pi = perf.stationary.pi;
  return {perf.throughput,
          loaded ? throughput_approx(params) : 0.0,
          perf.outage,
          loaded ? outage_approx(params) : 0.0,
          asymptotic_throughput(params.lambda),
          pi[0],
          pi[1],
          pi[2],
          pi[3],
          perf.mean_session_length,
          std::int64_t{params.lambda == 1.0 ? 1 : 0},
          std::int64_t{perf.stationary.from_fallback ? 1 : 0}};
}

std::vector<Cell> sim_cells(const sim::SimReport& r) {
  return {r.throughput_hat,
          r.stderr_throughput,
          r.outage_hat,
          r.stderr_outage,
          r.mean_session_length_hat,
          r.stderr_mean_session_length,
          r.sessions(),
          std::to_string(r.seed)};
}

sim::SimConfig sim_config(const ExperimentSpec& spec, const SystemParams& params,
                          std::uint64_t seed) {
  sim::SimConfig c = sim::SimConfig::poisson(params, spec.n_sessions, seed);
  if (spec.arrivals == Arrivals::Finite)
    c.arrivals = sim::FinitePopulation::for_load(params.lambda, params.relays);
  if (spec.rule == Rule::Phy) c.rule = sim::PhyCoupledRule{*spec.snr_db};
  return c;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
}

Table run_grid(const ExperimentSpec& spec) {
  const auto pts = grid_points(spec);
  Table table;
  table.columns = columns_for(spec.mode);
  table.rows.resize(pts.size());

  const bool theory = spec.mode != Mode::Sim;
  const bool simulate = spec.mode != Mode::Theory;

  std::vector<sim::SimConfig> configs;
  if (simulate) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      configs.push_back(sim_config(spec, {pts[i].lambda, pts[i].m, spec.epsilon},
                                   derive_seed(spec.seed, i)));
  }

  parallel_for(pts.size(), spec.threads, [&](std::size_t i) {
    const SystemParams params{pts[i].lambda, pts[i].m, spec.epsilon};
    std::vector<Cell> row{params.lambda, std::int64_t{params.relays}, params.epsilon};
    std::vector<Cell> th;
    if (theory) {
      th = theory_cells(params);
      row.insert(row.end(), th.begin(), th.end());
    }
    if (simulate) {
      const sim::SimReport r = sim::run(configs[i]);
      const auto sc = sim_cells(r);
      row.insert(row.end(), sc.begin(), sc.end());
      if (theory) {
        row.push_back(std::abs(r.throughput_hat - std::get<double>(th[0])));
        row.push_back(std::abs(r.outage_hat - std::get<double>(th[2])));
        row.push_back(std::abs(r.mean_session_length_hat - std::get<double>(th[9])));
      }
    }
    table.rows[i] = std::move(row);
  });
  return table;
}

Table run_phy(const ExperimentSpec& spec) {
  struct Point {
    int k;
    int m;
  };
  std::vector<Point> pts;
  for (int m : spec.m_grid) {
    if (spec.k_grid.empty()) {
      for (int k = 1; k <= m + 1; ++k) pts.push_back({k, m});
    } else {
      for (int k : spec.k_grid)
        if (k <= m + 1) pts.push_back({k, m});
    }
  }
  Table table;
  table.columns = columns_for(Mode::Phy);
  table.rows.resize(pts.size());
  // Trials inside a point are split across threads, points run in order.
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double ser = mpr::symbol_error_rate(pts[i].k, pts[i].m, *spec.snr_db, spec.trials,
                                              derive_seed(spec.seed, i),
                                              spec.threads == 0
                                                  ? std::max(1u, std::thread::hardware_concurrency())
                                                  : spec.threads);
    table.rows[i] = {std::int64_t{pts[i].k}, std::int64_t{pts[i].m}, *spec.snr_db, ser,
                     std::int64_t{spec.trials}};
  }
  return table;
}

}  // namespace

SpecError::SpecError(std::vector<std::string> problems)
    : std::runtime_error("invalid experiment spec: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

std::vector<double> parse_real_grid(const std::string& text) {
  return parse_grid<double>(text, [](double lo, double hi, double step) {
    std::vector<double> out;
    const auto n = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::int64_t i = 0; i <= n; ++i) out.push_back(snap(lo + static_cast<double>(i) * step));
    return out;
  });
}

std::vector<int> parse_int_grid(const std::string& text) {
  return parse_grid<int>(text, [](int lo, int hi, int step) {
    std::vector<int> out;
    for (int v = lo; v <= hi; v += step) out.push_back(v);
    return out;
  });
}

ExperimentSpec validate_spec(const RawSpec& raw) {
  ExperimentSpec spec;
  std::vector<std::string> problems;
  auto fail = [&](const std::string& field, const std::string& why) {
    problems.push_back(field + ": " + why);
  };

  if (raw.mode == "theory") spec.mode = Mode::Theory;
  else if (raw.mode == "sim") spec.mode = Mode::Sim;
  else if (raw.mode == "compare") spec.mode = Mode::Compare;
  else if (raw.mode == "phy") spec.mode = Mode::Phy;
  else fail("mode", "must be one of theory, sim, compare, phy (got '" + raw.mode + "')");

  const bool phy = spec.mode == Mode::Phy;

  if (!phy) {
    try {
      spec.lambda_grid = parse_real_grid(raw.lambda.value_or(""));
      if (spec.lambda_grid.empty()) fail("lambda_grid", "must not be empty");
      for (double l : spec.lambda_grid)
        if (!(l >= 0.0) || !std::isfinite(l)) {
          fail("lambda_grid", "values must be finite and >= 0");
          break;
        }
    } catch (const std::exception& e) {
      fail("lambda_grid", e.what());
    }
  }

  try {
    spec.m_grid = parse_int_grid(raw.m.value_or(""));
    if (spec.m_grid.empty()) fail("m_grid", "must not be empty");
    if (std::any_of(spec.m_grid.begin(), spec.m_grid.end(), [](int m) { return m < 1; }))
      fail("m_grid", "relay counts must be >= 1");
  } catch (const std::exception& e) {
    fail("m_grid", e.what());
  }

  if (raw.k) {
    try {
      spec.k_grid = parse_int_grid(*raw.k);
      if (std::any_of(spec.k_grid.begin(), spec.k_grid.end(), [](int k) { return k < 1; }))
        fail("k_grid", "device counts must be >= 1");
    } catch (const std::exception& e) {
      fail("k_grid", e.what());
    }
  }

  if (raw.epsilon) {
    try {
      spec.epsilon = parse_number<double>(*raw.epsilon);
      if (!(spec.epsilon > 0.0 && spec.epsilon <= 1.0)) fail("epsilon", "must lie in (0, 1]");
    } catch (const std::exception& e) {
      fail("epsilon", e.what());
    }
  }

  if (raw.sessions) {
    try {
      spec.n_sessions = parse_number<std::int64_t>(*raw.sessions);
      if (spec.n_sessions < 1) fail("n_sessions", "must be >= 1");
    } catch (const std::exception& e) {
      fail("n_sessions", e.what());
    }
  }

  if (raw.trials) {
    try {
      spec.trials = parse_number<std::int64_t>(*raw.trials);
      if (spec.trials < 1) fail("trials", "must be >= 1");
    } catch (const std::exception& e) {
      fail("trials", e.what());
    }
  }

  if (raw.seed) {
    try {
      spec.seed = parse_number<std::uint64_t>(*raw.seed);
    } catch (const std::exception& e) {
      fail("seed", e.what());
    }
  }

  if (raw.snr_db) {
    try {
      spec.snr_db = parse_number<double>(*raw.snr_db);
      if (std::isnan(*spec.snr_db)) fail("snr_db", "must be a number");
    } catch (const std::exception& e) {
      fail("snr_db", e.what());
    }
  }

  if (raw.threads) {
    try {
      spec.threads = parse_number<unsigned>(*raw.threads);
    } catch (const std::exception& e) {
      fail("threads", e.what());
    }
  }

  spec.output_path = raw.out.value_or("");

  const std::string format = raw.format.value_or("csv");
  if (format == "csv") spec.format = Format::Csv;
  else if (format == "json") spec.format = Format::Json;
  else fail("format", "must be csv or json (got '" + format + "')");

  const std::string arrivals = raw.arrivals.value_or("poisson");
  if (arrivals == "poisson") spec.arrivals = Arrivals::Poisson;
  else if (arrivals == "finite") spec.arrivals = Arrivals::Finite;
  else fail("arrivals", "must be poisson or finite (got '" + arrivals + "')");

  const std::string rule = raw.rule.value_or("threshold");
  if (rule == "threshold") spec.rule = Rule::Threshold;
  else if (rule == "phy") spec.rule = Rule::Phy;
  else fail("rule", "must be threshold or phy (got '" + rule + "')");

  if (phy && !spec.snr_db && !raw.snr_db) fail("snr_db", "required in phy mode");
  if (!phy && spec.rule == Rule::Phy && !spec.snr_db && !raw.snr_db)
    fail("snr_db", "required with --rule phy");
  if (spec.arrivals == Arrivals::Finite) {
    const bool overloaded = std::any_of(spec.lambda_grid.begin(), spec.lambda_grid.end(), [&](double l) {
      return std::any_of(spec.m_grid.begin(), spec.m_grid.end(),
                         [&](int m) { return m >= 1 && l > 40.0 * m; });
    });
    if (overloaded)
      fail("lambda_grid", "finite population of 40*M devices cannot carry lambda > 40*M");
  }

  if (!problems.empty()) throw SpecError(std::move(problems));
  return spec;
}

std::vector<std::string> columns_for(Mode mode) {
  if (mode == Mode::Phy) return {"k", "m", "snr_db", "ser", "trials"};
  std::vector<std::string> cols = kKeyColumns;
  if (mode != Mode::Sim) cols.insert(cols.end(), kTheoryColumns.begin(), kTheoryColumns.end());
  if (mode != Mode::Theory) cols.insert(cols.end(), kSimColumns.begin(), kSimColumns.end());
  if (mode == Mode::Compare) cols.insert(cols.end(), kErrorColumns.begin(), kErrorColumns.end());
  return cols;
}

Table run_experiment(const ExperimentSpec& spec) {
  return spec.mode == Mode::Phy ? run_phy(spec) : run_grid(spec);
}

std::string format_cell(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  const double v = std::get<double>(cell);
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string render(const Table& table, Format format) {
  if (format == Format::Csv) {
    std::string out = join(table.columns, ",") + "\n";
    for (const auto& row : table.rows) {
      std::vector<std::string> cells;
      for (const auto& c : row) cells.push_back(format_cell(c));
      out += join(cells, ",") + "\n";
    }
    return out;
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i)
      std::visit([&](const auto& v) { obj[table.columns[i]] = v; }, row[i]);
    rows.push_back(std::move(obj));
  }
  return rows.dump(2) + "\n";
}

void write_output(const std::string& text, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw OutputError("cannot open '" + path.string() + "' for writing");
    f << text;
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw OutputError("failed writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw OutputError("cannot move output into '" + path.string() + "'");
  }
}

}  // namespace rara::cli
