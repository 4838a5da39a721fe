// Command-line front end for the experiment harness; talks to the shared
// library strictly through the C API.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "retel.h"

namespace {

struct Options {
  std::string config_path;
  std::string out_path;
  std::string csv_path;
  std::uint64_t seed = 0;
  int threads = 0;
  int reps = 0;
  bool seed_set = false, threads_set = false, reps_set = false;
};

int exit_code_for(retel_status st) {
  switch (st) {
    case RETEL_OK: return 0;
    case RETEL_ERR_CONFIG: return 2;
    case RETEL_ERR_INGEST: return 3;
    default: return 1;
  }
}

int fail(retel_status st) {
  std::fprintf(stderr, "retel: %s\n", retel_last_error());
  return exit_code_for(st);
}

int run_experiment(const std::string& name, const Options& opt) {
  std::unique_ptr<retel_config, void (*)(retel_config*)> cfg(
      retel_config_create(name.c_str()), retel_config_destroy);
  if (!cfg) return fail(RETEL_ERR_CONFIG);

  retel_status st;
  if (!opt.config_path.empty()) {
    st = retel_config_load_file(cfg.get(), opt.config_path.c_str());
    if (st != RETEL_OK) return fail(st);
  }
  auto set = [&](const char* key, const std::string& value) {
    st = retel_config_set(cfg.get(), key, value.c_str());
    return st == RETEL_OK;
  };
  if (opt.seed_set && !set("seed", std::to_string(opt.seed))) return fail(st);
  if (opt.threads_set && !set("threads", std::to_string(opt.threads))) return fail(st);
  if (opt.reps_set && !set("reps", std::to_string(opt.reps))) return fail(st);
  if (!opt.out_path.empty() && !set("out", opt.out_path)) return fail(st);
  if (!opt.csv_path.empty() && !set("csv", opt.csv_path)) return fail(st);

  st = retel_run(cfg.get());
  if (st != RETEL_OK) return fail(st);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retel: empirical-likelihood inference experiments"};
  app.set_version_flag("--version", retel_version());
  app.require_subcommand(1);

  const std::vector<std::string> experiments = {
      "uniformity",   "coverage", "kl",        "lambda_convergence",
      "logratio_curve", "wilks",  "small_area"};

  Options opt;
  std::string chosen;
  for (const std::string& name : experiments) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", opt.config_path, "config file (key = value lines)");
    sub->add_option("--seed", opt.seed, "random seed")->each([&](const std::string&) {
      opt.seed_set = true;
    });
    sub->add_option("--threads", opt.threads, "worker threads")
        ->each([&](const std::string&) { opt.threads_set = true; });
    sub->add_option("--reps", opt.reps, "replications")->each([&](const std::string&) {
      opt.reps_set = true;
    });
    sub->add_option("--out", opt.out_path, "output CSV path");
    if (name == "small_area")
      sub->add_option("--csv", opt.csv_path, "input CSV with header y,x1,x2");
    sub->callback([&chosen, name] { chosen = name; });
  }

  // generator for a synthetic small-area dataset
  int synth_areas = 51;
  std::uint64_t synth_seed = 1;
  std::string synth_out = "small_area_synth.csv";
  CLI::App* synth = app.add_subcommand("synth_small_area",
                                       "write a synthetic area-level dataset");
  synth->add_option("--areas", synth_areas, "number of areas");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "output CSV path");
  synth->callback([&chosen] { chosen = "synth_small_area"; });

  CLI11_PARSE(app, argc, argv);

  if (chosen == "synth_small_area") {
    const retel_status st = retel_synth_small_area(synth_areas, synth_seed,
                                                   synth_out.c_str());
    if (st != RETEL_OK) return fail(st);
    return 0;
  }
  return run_experiment(chosen, opt);
}
