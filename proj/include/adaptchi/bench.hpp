#pragma once

#include <string>
#include <vector>

#include "adaptchi/dmrg.hpp"

namespace adaptchi::bench {

enum class Experiment {
  dmrg,
  ablate,
  scan_hamiltonians,
  scaling,
  tune_pid,
  stability_map,
  svd_bench
};

struct TuneOptions {
  std::string plant = "synthetic";  // or "live"
  double s_plateau = 2.5;
  double s_target = 2.0;
  std::vector<double> kp_grid = {0.25, 0.5, 1, 2, 4, 8, 16, 32, 64};
  int sweeps = 64;
  int live_n = 8;  // chain length for the live-DMRG plant
};

struct StabilityOptions {
  double g_max = 3.0 / 8.0;
  int points = 96;
};

struct AblateOptions {
  double pid_eps_trunc = 1e-5;        // matches the ablation table setup
  double threshold_eps_trunc = 1e-10;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::dmrg;
  models::ModelSpec model{};
  dmrg::DmrgConfig dmrg{};
  int repetitions = 3;
  std::string output_dir = "out";
  uint64_t seed = 1234;
  bool trace = false;
  std::vector<int> sizes = {10, 20, 40};            // scaling
  std::vector<int> chi_list = {32, 64, 128, 256, 512};  // svd_bench
  TuneOptions tune{};
  StabilityOptions stability{};
  AblateOptions ablate{};

  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
std::string serialize_config(const ExperimentConfig& cfg);
uint64_t config_hash(const ExperimentConfig& cfg);

struct BenchmarkRecord {
  std::string experiment_id;
  uint64_t config_hash = 0;
  std::vector<double> wall_times;
  double median_wall = 0;
  double cov = 0;  // coefficient of variation of the wall times
  bool cov_flag = false;  // raised when cov >= 5%
  double energy = 0;
  double energy_per_site = 0;
  double delta_e_vs_oracle = 0;  // NaN when no oracle applies
  double speedup_vs_baseline = 0;  // NaN when no baseline applies
  double average_chi = 0;
  int max_chi_used = 0;
  int sweeps = 0;
  bool converged = false;
};

struct ExperimentResult {
  std::vector<BenchmarkRecord> records;
  bool converged = true;      // exit code 3 when false
  bool thresholds_ok = true;  // exit code 4 when false
  std::string note;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Individual runners (exposed for tests).
ExperimentResult cmd_dmrg(const ExperimentConfig& cfg);
ExperimentResult cmd_ablate(const ExperimentConfig& cfg);
ExperimentResult cmd_scan_hamiltonians(const ExperimentConfig& cfg);
ExperimentResult cmd_scaling(const ExperimentConfig& cfg);
ExperimentResult cmd_tune_pid(const ExperimentConfig& cfg);
ExperimentResult cmd_stability_map(const ExperimentConfig& cfg);
ExperimentResult cmd_svd_bench(const ExperimentConfig& cfg);

// Median wall time over `repetitions` full runs plus per-sweep artifacts from
// the first repetition.
struct RepeatedRun {
  dmrg::DmrgResult first;
  std::vector<double> wall_times;
  double median_wall = 0;
  double cov = 0;
};
RepeatedRun run_repeated(const models::ModelSpec& spec,
                         const dmrg::DmrgConfig& cfg, int repetitions,
                         ctrl::ControllerTrace* trace = nullptr);

// Least-squares slope of log(t) vs log(n).
double log_log_slope(const std::vector<double>& n,
                     const std::vector<double>& t);

}  // namespace adaptchi::bench
