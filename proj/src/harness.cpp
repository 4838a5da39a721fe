#include "retel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "retel/stats.hpp"

#include "retel/errors.hpp"

namespace retel::harness {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError(what + ": not a number: '" + t + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError(what + ": not an integer: '" + t + "'");
  return v;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double parse_cell(const std::string& s) {
  if (trim(s).empty()) return std::nan("");
  char* end = nullptr;
  const std::string t = trim(s);
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) throw ConfigError("ResultTable: bad numeric cell '" + t + "'");
  return v;
}

}  // namespace

std::string TauRule::label() const {
  if (log_n) return "log_n";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", c);
  return buf;
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.out_path = experiment + ".csv";
  if (experiment == "uniformity") {
    cfg.reps = 10000;
    cfg.n_values = {5, 20, 50, 100};
    cfg.s_values = {1.0, 5.0};
    cfg.tau_rules = {TauRule{false, 1.0}, TauRule{true, 0.0}};
    cfg.methods = {Method::RETEL_f, Method::RETEL_r, Method::ETEL, Method::AETEL};
  } else if (experiment == "coverage") {
    cfg.reps = 10000;
    cfg.n_values = {5, 20, 50, 100};
    cfg.s_values = {0.5, 1.0, 5.0};
    cfg.l_values = {0.0, 2.0};
    cfg.tau_rules = {TauRule{true, 0.0}};
    cfg.methods = {Method::RETEL_f, Method::RETEL_r, Method::ETEL, Method::AETEL};
  } else if (experiment == "kl") {
    cfg.reps = 1000;
    cfg.n_values = {2, 4, 6, 8, 10};
    cfg.methods = {Method::RETEL_f, Method::RETEL_r, Method::ETEL, Method::EL};
    cfg.chains = 2;
    cfg.chain_steps = 5000;
  } else if (experiment == "lambda_convergence") {
    cfg.reps = 1;
  } else if (experiment == "logratio_curve") {
    cfg.reps = 1;
    cfg.tau_rules = {TauRule{false, 1.0}, TauRule{false, 5.0}, TauRule{false, 25.0}};
    cfg.grid_points = 601;
  } else if (experiment == "wilks") {
    cfg.reps = 2000;
    cfg.n_values = {200};
    cfg.tau_rules = {TauRule{true, 0.0}};
    cfg.methods = {Method::ETEL, Method::RETEL_f, Method::RETEL_r};
  } else if (experiment == "small_area") {
    cfg.reps = 1;
    cfg.chains = 4;
    cfg.chain_steps = 250000;
    cfg.tau_rules = {TauRule{true, 0.0}};
    cfg.methods = {Method::RETEL_f, Method::RETEL_r, Method::EL, Method::ETEL};
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return cfg;
}

namespace {
bool key_allowed(const std::string& experiment, const std::string& key) {
  static const char* common[] = {"experiment", "reps", "seed", "threads", "out"};
  for (const char* k : common)
    if (key == k) return true;
  const bool has_methods = experiment != "lambda_convergence" && experiment != "logratio_curve";
  if (key == "methods") return has_methods;
  if (key == "n_values")
    return experiment == "uniformity" || experiment == "coverage" ||
           experiment == "kl" || experiment == "wilks";
  if (key == "s_values")
    return experiment == "uniformity" || experiment == "coverage";
  if (key == "l_values") return experiment == "coverage";
  if (key == "tau_rule")
    return experiment == "uniformity" || experiment == "coverage" ||
           experiment == "wilks" || experiment == "logratio_curve";
  if (key == "chains" || key == "chain_steps")
    return experiment == "kl" || experiment == "small_area";
  if (key == "emit_marginal") return experiment == "kl";
  if (key == "csv") return experiment == "small_area";
  if (key == "grid_points")
    return experiment == "uniformity" || experiment == "coverage" ||
           experiment == "logratio_curve";
  return false;
}
}  // namespace

void apply_key(ExperimentConfig& cfg, const std::string& raw_key,
               const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (!key_allowed(cfg.experiment, key))
    throw ConfigError("unknown key '" + key + "' for experiment '" + cfg.experiment + "'");

  if (key == "experiment") {
    if (value != cfg.experiment)
      throw ConfigError("config experiment '" + value + "' does not match '" +
                        cfg.experiment + "'");
  } else if (key == "reps") {
    const long v = parse_long(value, "reps");
    if (v < 1) throw ConfigError("reps must be positive");
    cfg.reps = static_cast<int>(v);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(std::strtoull(value.c_str(), nullptr, 10));
  } else if (key == "threads") {
    const long v = parse_long(value, "threads");
    if (v < 1) throw ConfigError("threads must be positive");
    cfg.threads = static_cast<int>(v);
  } else if (key == "out") {
    cfg.out_path = value;
  } else if (key == "methods") {
    cfg.methods.clear();
    for (const std::string& item : split(value, ',')) {
      const auto m = method_from_string(trim(item));
      if (!m) throw ConfigError("unknown method '" + trim(item) + "'");
      cfg.methods.push_back(*m);
    }
  } else if (key == "n_values") {
    cfg.n_values.clear();
    for (const std::string& item : split(value, ',')) {
      const long v = parse_long(item, "n_values");
      if (v < 1) throw ConfigError("n_values must be positive");
      cfg.n_values.push_back(static_cast<int>(v));
    }
  } else if (key == "s_values") {
    cfg.s_values.clear();
    for (const std::string& item : split(value, ',')) {
      const double v = parse_double(item, "s_values");
      if (!(v > 0.0)) throw ConfigError("s_values must be positive");
      cfg.s_values.push_back(v);
    }
  } else if (key == "l_values") {
    cfg.l_values.clear();
    for (const std::string& item : split(value, ','))
      cfg.l_values.push_back(parse_double(item, "l_values"));
  } else if (key == "tau_rule") {
    cfg.tau_rules.clear();
    for (const std::string& item : split(value, ',')) {
      const std::string t = trim(item);
      if (t == "log_n") {
        cfg.tau_rules.push_back(TauRule{true, 0.0});
      } else {
        const double v = parse_double(t, "tau_rule");
        if (!(v > 0.0)) throw ConfigError("tau_rule constants must be positive");
        cfg.tau_rules.push_back(TauRule{false, v});
      }
    }
  } else if (key == "chains") {
    const long v = parse_long(value, "chains");
    if (v < 2) throw ConfigError("chains must be at least 2");
    cfg.chains = static_cast<int>(v);
  } else if (key == "chain_steps") {
    const long v = parse_long(value, "chain_steps");
    if (v < 10) throw ConfigError("chain_steps too small");
    cfg.chain_steps = static_cast<int>(v);
  } else if (key == "emit_marginal") {
    cfg.emit_marginal = parse_long(value, "emit_marginal") != 0;
  } else if (key == "csv") {
    cfg.csv_path = value;
  } else if (key == "grid_points") {
    const long v = parse_long(value, "grid_points");
    if (v < 3) throw ConfigError("grid_points must be at least 3");
    cfg.grid_points = static_cast<int>(v);
  }
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    apply_key(cfg, t.substr(0, eq), t.substr(eq + 1));
  }
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw ConfigError("reps must be positive");
  if (cfg.experiment == "small_area" && cfg.csv_path.empty())
    throw ConfigError("small_area requires csv = <path>");
  const bool wetel_ok = cfg.experiment == "lambda_convergence";
  for (Method m : cfg.methods)
    if (m == Method::WETEL && !wetel_ok)
      throw ConfigError("WETEL has no pseudo-data specification in this experiment");
  if (cfg.experiment == "kl")
    for (Method m : cfg.methods)
      if (m == Method::AETEL || m == Method::WETEL)
        throw ConfigError(std::string(method_name(m)) + " is not configured for the kl study");
}

std::string ResultTable::to_csv() const {
  std::string out = "experiment,n,s,l,tau,method,metric,value,se\n";
  for (const ResultRow& r : rows) {
    out += r.experiment;
    out += ',';
    out += format_value(r.n);
    out += ',';
    out += format_value(r.s);
    out += ',';
    out += format_value(r.l);
    out += ',';
    out += r.tau;
    out += ',';
    out += r.method;
    out += ',';
    out += r.metric;
    out += ',';
    out += format_value(r.value);
    out += ',';
    out += format_value(r.se);
    out += '\n';
  }
  return out;
}

ResultTable ResultTable::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "experiment,n,s,l,tau,method,metric,value,se")
    throw ConfigError("ResultTable: bad header");
  ResultTable t;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split(trim(line), ',');
    if (f.size() != 9) throw ConfigError("ResultTable: expected 9 columns");
    ResultRow r;
    r.experiment = f[0];
    r.n = parse_cell(f[1]);
    r.s = parse_cell(f[2]);
    r.l = parse_cell(f[3]);
    r.tau = f[4];
    r.method = f[5];
    r.metric = f[6];
    r.value = parse_cell(f[7]);
    r.se = parse_cell(f[8]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SmallAreaData parse_small_area_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IngestError("small_area csv: empty file", 1, 1);
  {
    std::vector<std::string> h = split(trim(line), ',');
    for (std::string& s : h) s = trim(s);
    if (h.size() != 3 || h[0] != "y" || h[1] != "x1" || h[2] != "x2")
      throw IngestError("small_area csv: header must be y,x1,x2", 1, 1);
  }
  SmallAreaData d;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split(trim(line), ',');
    if (f.size() != 3)
      throw IngestError("small_area csv: row " + std::to_string(row) + " has " +
                            std::to_string(f.size()) + " fields, expected 3",
                        row, static_cast<int>(f.size()));
    double vals[3];
    for (int c = 0; c < 3; ++c) {
      const std::string t = trim(f[c]);
      char* end = nullptr;
      vals[c] = std::strtod(t.c_str(), &end);
      if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(vals[c]))
        throw IngestError("small_area csv: non-numeric cell at row " +
                              std::to_string(row) + ", column " + std::to_string(c + 1),
                          row, c + 1);
    }
    d.y.push_back(vals[0]);
    d.x1.push_back(vals[1]);
    d.x2.push_back(vals[2]);
  }
  d.n = static_cast<int>(d.y.size());
  if (d.n < 3) throw IngestError("small_area csv: need at least 3 areas", 0, 0);
  return d;
}

SmallAreaData load_small_area_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open csv '" + path + "'", 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_small_area_csv(ss.str());
}

std::string synth_small_area_csv(int areas, std::uint64_t seed) {
  CounterRng rng(seed, 0x5A, 0x51);
  std::string out = "y,x1,x2\n";
  char buf[96];
  for (int i = 0; i < areas; ++i) {
    const double x1 = rng.next_gaussian();
    const double x2 = 0.85 * x1 + 0.55 * rng.next_gaussian();
    const double theta = 1.0 * x1 + 0.5 * x2 + 0.7 * rng.next_gaussian();
    const double y = theta + rng.next_gaussian();  // E[Y|theta] = theta, Var = V_i = 1
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", y, x1, x2);
    out += buf;
  }
  return out;
}

void standardize(std::vector<double>& column) {
  const double m = stats::mean(column);
  const double sd = std::sqrt(stats::variance(column));
  if (!(sd > 0.0)) throw IngestError("standardize: constant column", 0, 0);
  for (double& v : column) v = (v - m) / sd;
}

void parallel_for(int jobs, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 1 || jobs <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, jobs);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

GridPosterior adaptive_grid_posterior(const Prior& prior,
                                      const std::function<double(double)>& loglik,
                                      double center, double half, int points) {
  const double spacing = 2.0 * half / (points - 1);
  std::vector<double> grid(points);
  for (int j = 0; j < points; ++j) grid[j] = center - half + j * spacing;

  auto logpost = [&](double t) {
    const double pr = prior(t);
    if (pr == -std::numeric_limits<double>::infinity()) return pr;
    return pr + loglik(t);
  };
  std::vector<double> lp(grid.size());
  for (size_t j = 0; j < grid.size(); ++j) lp[j] = logpost(grid[j]);

  // Extend a side while its endpoint still carries relative density; keeps the
  // spacing fixed so the resolution near the data is unchanged.
  const double log_tol = std::log(1e-9);
  const int chunk = points / 2;
  for (int round = 0; round < 12; ++round) {
    const double mx = *std::max_element(lp.begin(), lp.end());
    const bool left = lp.front() > mx + log_tol;
    const bool right = lp.back() > mx + log_tol;
    if (!left && !right) break;
    if (left) {
      std::vector<double> g2(chunk), l2(chunk);
      for (int j = 0; j < chunk; ++j) {
        g2[j] = grid.front() - (chunk - j) * spacing;
        l2[j] = logpost(g2[j]);
      }
      grid.insert(grid.begin(), g2.begin(), g2.end());
      lp.insert(lp.begin(), l2.begin(), l2.end());
    }
    if (right) {
      for (int j = 1; j <= chunk; ++j) {
        grid.push_back(grid.back() + spacing);
        lp.push_back(logpost(grid.back()));
      }
    }
  }

  const double mx = *std::max_element(lp.begin(), lp.end());
  if (mx == -std::numeric_limits<double>::infinity())
    throw EvalError("adaptive_grid_posterior: posterior vanishes on the grid");
  GridPosterior gp;
  gp.grid = std::move(grid);
  gp.density.resize(gp.grid.size());
  for (size_t j = 0; j < gp.grid.size(); ++j)
    gp.density[j] = lp[j] == -std::numeric_limits<double>::infinity()
                        ? 0.0
                        : std::exp(lp[j] - mx);
  const double mass = stats::trapezoid(gp.grid, gp.density);
  for (double& v : gp.density) v /= mass;
  return gp;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.experiment == "uniformity") return run_uniformity(cfg);
  if (cfg.experiment == "coverage") return run_coverage(cfg);
  if (cfg.experiment == "kl") return run_kl(cfg);
  if (cfg.experiment == "lambda_convergence") return run_lambda_convergence(cfg);
  if (cfg.experiment == "logratio_curve") return run_logratio_curve(cfg);
  if (cfg.experiment == "wilks") return run_wilks(cfg);
  if (cfg.experiment == "small_area") return run_small_area(cfg.csv_path, cfg);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace retel::harness
