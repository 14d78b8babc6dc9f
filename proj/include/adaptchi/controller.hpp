#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "adaptchi/mps.hpp"

namespace adaptchi::ctrl {

enum class ControlMode { fixed, threshold, direct, pid };
enum class PredictorOrder { off, linear, quadratic };
enum class PidScale { additive, multiplicative };

struct PidGains {
  double kp = 2.0;
  double ki = 0.1;
  double kd = 0.5;
};

struct ControllerConfig {
  ControlMode mode = ControlMode::pid;
  double alpha_ema = 0.3;
  double gamma_margin = 1.2;
  // Target entropy in nats; negative means "resolve to ln(chi_max) - 0.5".
  double s_target = -1.0;
  PidGains gains{};
  double beta_predict = 0.4;
  PredictorOrder predictor_order = PredictorOrder::linear;
  int chi_min = 2;
  int chi_max = 64;
  PidScale pid_scale = PidScale::additive;
  // Truncation-weight floor: the smallest rank whose discarded density
  // weight (sum of trailing p_k) stays below this is always retained.
  // Also the cutoff used by threshold mode.
  double eps_trunc = 1e-10;

  double resolved_s_target() const;
  void validate() const;
};

// Per-bond controller memory.
struct BondControllerState {
  double ema = 0.0;
  double prev_error = 0.0;
  double integral = 0.0;
  int chi = 1;
  std::array<double, 3> history{};  // most recent last
  int history_len = 0;
  bool initialized = false;

  void push_history(double v);
  double history_at(int steps_back) const;  // 0 = latest
};

struct StabilityReport {
  double loop_gain = 0;
  std::array<double, 2> pole_moduli{};
  bool jury_a = false, jury_b = false, jury_c = false;
  bool stable = false;
};

struct TuneReport {
  double k_ultimate = 0;
  double t_ultimate = 0;  // sweeps
  PidGains tuned{};
};

struct PredictResult {
  double value = 0;
  bool fallback = false;  // not enough history, reactive value returned
};

// One controller evaluation, with every intermediate the trace stream needs.
struct ControllerDecision {
  int chi = 0;
  double s_raw = 0, s_ema = 0, s_pred = 0;
  double error = 0, p_term = 0, i_term = 0, d_term = 0;
  long delta_chi = 0;
  bool clamped = false;
};

void ema_update(BondControllerState& state, double s_raw, double alpha);
double ema_time_constant(double alpha);

int chi_target_direct(double s_smoothed, double gamma, int chi_min,
                      int chi_max);

ControllerDecision pid_step(BondControllerState& state, double s_input,
                            const ControllerConfig& cfg);

PredictResult predict_entropy(const BondControllerState& state, double beta,
                              PredictorOrder order);

// Smallest rank whose discarded normalized weight is <= eps.
int rank_for_discarded_weight(const RVector& values, double eps);

ControllerDecision controller_update(BondControllerState& state,
                                     const mps::SingularSpectrum& spectrum,
                                     const ControllerConfig& cfg);

// Finite-difference loop gain dS/dchi at chi_star from a singular spectrum,
// entropies renormalized over the kept values.
double loop_gain_estimate(const mps::SingularSpectrum& spectrum, int chi_star);

StabilityReport jury_stability(const PidGains& gains, double g);

// Ziegler-Nichols auto-tuning against a synthetic entropy plant chi -> S.
TuneReport ziegler_nichols_tune(const std::function<double(int)>& plant,
                                const std::vector<double>& kp_grid, int sweeps,
                                const ControllerConfig& base);

// Controller trace stream (CSV rows, one per update).
struct TraceRow {
  int sweep = 0;
  int bond = 0;
  ControllerDecision d{};
};

class ControllerTrace {
 public:
  void add(int sweep, int bond, const ControllerDecision& d) {
    rows_.push_back({sweep, bond, d});
  }
  const std::vector<TraceRow>& rows() const { return rows_; }
  void write_csv(std::ostream& os) const;

 private:
  std::vector<TraceRow> rows_;
};

}  // namespace adaptchi::ctrl
