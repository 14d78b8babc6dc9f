#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "adaptchi/bench.hpp"

using namespace adaptchi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitThreshold = 4;

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  bool trace = false;
};

bench::ExperimentConfig load_config(const CliArgs& args,
                                    bench::Experiment experiment) {
  bench::ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    std::ifstream f(args.config_path);
    if (!f) throw InvalidConfig("cannot open config file " + args.config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    cfg = bench::parse_config(ss.str());
  }
  // flags take precedence over file values
  cfg.experiment = experiment;
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (args.seed >= 0) {
    cfg.seed = static_cast<uint64_t>(args.seed);
    cfg.dmrg.seed = cfg.seed;
  }
  if (args.trace) cfg.trace = true;
  cfg.validate();
  return cfg;
}

int run(const CliArgs& args, bench::Experiment experiment) {
  bench::ExperimentConfig cfg;
  try {
    cfg = load_config(args, experiment);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    bench::ExperimentResult result = bench::run_experiment(cfg);
    for (const auto& rec : result.records) {
      std::cout << rec.experiment_id << ": E/N = " << rec.energy_per_site
                << ", sweeps = " << rec.sweeps
                << ", avg chi = " << rec.average_chi
                << ", median wall = " << rec.median_wall << " s";
      if (std::isfinite(rec.speedup_vs_baseline))
        std::cout << ", speedup = " << rec.speedup_vs_baseline << "x";
      if (rec.cov_flag)
        std::cout << "  [warning: wall-time CoV " << 100 * rec.cov << "% >= 5%]";
      std::cout << '\n';
    }
    if (!result.note.empty()) std::cout << result.note << '\n';
    std::cout << "artifacts written to " << cfg.output_dir << '\n';
    if (!result.converged) return kExitNoConvergence;
    if (!result.thresholds_ok) return kExitThreshold;
    return kExitOk;
  } catch (const NoUltimateGain& e) {
    std::cerr << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "adaptchi - MPS/DMRG engine with entropy-feedback bond dimension "
      "control (entropies in nats)"};
  app.require_subcommand(1);

  CliArgs args;
  app.add_option("--config", args.config_path, "JSON config file");
  app.add_option("--out", args.out_dir, "output directory");
  app.add_option("--seed", args.seed, "RNG seed override");
  app.add_flag("--trace", args.trace, "emit controller_trace.csv");

  std::map<std::string, bench::Experiment> subs = {
      {"dmrg", bench::Experiment::dmrg},
      {"ablate", bench::Experiment::ablate},
      {"scan-hamiltonians", bench::Experiment::scan_hamiltonians},
      {"scaling", bench::Experiment::scaling},
      {"tune-pid", bench::Experiment::tune_pid},
      {"stability-map", bench::Experiment::stability_map},
      {"svd-bench", bench::Experiment::svd_bench}};
  std::map<std::string, CLI::App*> sub_apps;
  for (const auto& [name, exp] : subs) {
    (void)exp;
    sub_apps[name] = app.add_subcommand(name);
    sub_apps[name]->fallthrough();  // global options may follow the command
  }

  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, exp] : subs)
    if (sub_apps[name]->parsed()) return run(args, exp);
  std::cerr << "no subcommand given\n";
  return kExitConfig;
}
