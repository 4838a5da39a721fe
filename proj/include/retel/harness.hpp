#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "retel/inference.hpp"
#include "retel/likelihood.hpp"

namespace retel::harness {

// tau_n rule: a constant or log n.
struct TauRule {
  bool log_n = false;
  double c = 1.0;

  double value(int n) const { return log_n ? std::log(static_cast<double>(n)) : c; }
  std::string label() const;
};

struct ExperimentConfig {
  std::string experiment;
  int reps = 0;
  std::vector<int> n_values;
  std::vector<double> s_values;
  std::vector<double> l_values;
  std::vector<TauRule> tau_rules;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 -> hardware concurrency
  std::vector<Method> methods;
  std::string out_path;
  int chains = 2;
  int chain_steps = 5000;
  bool emit_marginal = false;
  std::string csv_path;
  int grid_points = 2001;
};

// Full-scale defaults for a named experiment; throws ConfigError on an
// unknown name.
ExperimentConfig default_config(const std::string& experiment);

// Flat key = value text (comma-separated lists, '#' comments). Unknown keys
// and keys that do not apply to the experiment are rejected.
void apply_config_text(ExperimentConfig& cfg, const std::string& text);
void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void validate(const ExperimentConfig& cfg);

// Long-format output: experiment,n,s,l,tau,method,metric,value,se with unused
// factor columns left empty. Values print with 6 significant digits.
struct ResultRow {
  std::string experiment;
  double n;
  double s;
  double l;
  std::string tau;
  std::string method;
  std::string metric;
  double value;
  double se;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  std::string to_csv() const;
  static ResultTable from_csv(const std::string& text);
};

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

ResultTable run_experiment(const ExperimentConfig& cfg);

ResultTable run_uniformity(const ExperimentConfig& cfg);
ResultTable run_coverage(const ExperimentConfig& cfg);
ResultTable run_kl(const ExperimentConfig& cfg);
ResultTable run_lambda_convergence(const ExperimentConfig& cfg);
ResultTable run_logratio_curve(const ExperimentConfig& cfg);
ResultTable run_wilks(const ExperimentConfig& cfg);
ResultTable run_small_area(const std::string& csv_path, const ExperimentConfig& cfg);

// ---- small-area ingestion ----------------------------------------------

struct SmallAreaData {
  std::vector<double> y, x1, x2;
  int n = 0;
};

// Deviation metrics between point estimates and direct estimates.
struct AreaMetrics {
  double aad;   // mean |dev|
  double aard;  // mean |dev / y|
  double asd;   // mean dev^2
  double asrd;  // mean (dev / y)^2
};
AreaMetrics area_metrics(std::span<const double> theta_hat,
                         std::span<const double> y);

SmallAreaData parse_small_area_csv(const std::string& text);  // throws IngestError
SmallAreaData load_small_area_csv(const std::string& path);
// Synthetic dataset from the hierarchical area model, for tests and demos.
std::string synth_small_area_csv(int areas, std::uint64_t seed);
void standardize(std::vector<double>& column);

// ---- shared machinery ----------------------------------------------------

// Deterministic fan-out: job i writes only to its own slot, so results do not
// depend on the thread count.
void parallel_for(int jobs, int threads, const std::function<void(int)>& fn);

inline std::uint64_t stream_key(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return CounterRng::mix(CounterRng::mix(CounterRng::mix(a) + b) + c);
}

// Grid posterior with the default range (center +- 6 max(1,s) n^{-1/2}),
// extended adaptively while an endpoint still carries relative density.
GridPosterior adaptive_grid_posterior(const Prior& prior,
                                      const std::function<double(double)>& loglik,
                                      double center, double half, int points);

}  // namespace retel::harness
