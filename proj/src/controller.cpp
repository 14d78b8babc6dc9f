#include "adaptchi/controller.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>

#include "adaptchi/util.hpp"

namespace adaptchi::ctrl {

double ControllerConfig::resolved_s_target() const {
  if (s_target >= 0) return s_target;
  return std::log(static_cast<double>(chi_max)) - 0.5;
}

void ControllerConfig::validate() const {
  if (chi_min < 1) throw InvalidConfig("controller: chi_min must be >= 1");
  if (chi_min > chi_max)
    throw InvalidConfig("controller: chi_min must be <= chi_max");
  if (!(alpha_ema > 0.0) || alpha_ema > 1.0)
    throw InvalidConfig("controller: alpha_ema must lie in (0, 1]");
  if (gamma_margin < 1.0)
    throw InvalidConfig("controller: gamma_margin must be >= 1");
  if (beta_predict < 0.0)
    throw InvalidConfig("controller: beta_predict must be >= 0");
  if (!(eps_trunc >= 0.0))
    throw InvalidConfig("controller: eps_trunc must be >= 0");
  if (gains.kp < 0 || gains.ki < 0 || gains.kd < 0 ||
      !std::isfinite(gains.kp) || !std::isfinite(gains.ki) ||
      !std::isfinite(gains.kd))
    throw InvalidConfig("controller: gains must be finite and >= 0");
}

void BondControllerState::push_history(double v) {
  if (history_len < 3) {
    history[static_cast<size_t>(history_len++)] = v;
  } else {
    history[0] = history[1];
    history[1] = history[2];
    history[2] = v;
  }
}

double BondControllerState::history_at(int steps_back) const {
  return history[static_cast<size_t>(history_len - 1 - steps_back)];
}

void ema_update(BondControllerState& state, double s_raw, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw InvalidConfig("ema_update: alpha must lie in (0, 1]");
  if (s_raw < 0) throw InvalidConfig("ema_update: entropy must be >= 0");
  if (!state.initialized) {
    state.ema = s_raw;  // S_bar(0) = S(0), avoids startup bias
    state.initialized = true;
  } else {
    state.ema = alpha * s_raw + (1.0 - alpha) * state.ema;
  }
  state.push_history(state.ema);
}

double ema_time_constant(double alpha) {
  if (!(alpha > 0.0) || alpha >= 1.0) {
    if (alpha == 1.0)
      throw InfiniteResponse("ema_time_constant: alpha = 1 tracks instantly");
    throw InvalidConfig("ema_time_constant: alpha must lie in (0, 1)");
  }
  return -1.0 / std::log1p(-alpha);
}

int chi_target_direct(double s_smoothed, double gamma, int chi_min,
                      int chi_max) {
  if (s_smoothed < 0)
    throw InvalidConfig("chi_target_direct: entropy must be >= 0");
  if (gamma < 1.0) throw InvalidConfig("chi_target_direct: gamma must be >= 1");
  // the small slack keeps exact integers (e.g. gamma*exp(ln 4) = 4) from
  // ceiling up on floating-point dust
  double target = std::ceil(gamma * std::exp(s_smoothed) - 1e-9);
  double clamped = std::clamp(target, static_cast<double>(chi_min),
                              static_cast<double>(chi_max));
  return static_cast<int>(clamped);
}

ControllerDecision pid_step(BondControllerState& state, double s_input,
                            const ControllerConfig& cfg) {
  if (!state.initialized)
    throw InvalidConfig("pid_step: state not initialized (no EMA update yet)");
  ControllerDecision d;
  d.s_ema = state.ema;
  d.s_pred = s_input;
  d.error = s_input - cfg.resolved_s_target();
  d.p_term = cfg.gains.kp * d.error;
  state.integral += cfg.gains.ki * d.error;
  d.i_term = state.integral;
  d.d_term = cfg.gains.kd * (d.error - state.prev_error);
  double u = d.p_term + d.i_term + d.d_term;

  long raw;
  if (cfg.pid_scale == PidScale::additive) {
    d.delta_chi = std::llround(u);
    raw = state.chi + d.delta_chi;
  } else {
    constexpr double chi_ref = 10.0;
    raw = std::llround(state.chi * (1.0 + u / chi_ref));
    d.delta_chi = raw - state.chi;
  }
  long clamped = std::clamp<long>(raw, cfg.chi_min, cfg.chi_max);
  d.clamped = clamped != raw;
  if (d.clamped) {
    state.integral -= cfg.gains.ki * d.error;  // anti-windup: undo the update
    d.i_term = state.integral;
  }
  state.prev_error = d.error;
  state.chi = static_cast<int>(clamped);
  d.chi = state.chi;
  return d;
}

PredictResult predict_entropy(const BondControllerState& state, double beta,
                              PredictorOrder order) {
  const int need = order == PredictorOrder::quadratic ? 3 : 2;
  if (order == PredictorOrder::off || state.history_len < need)
    return {state.ema, true};
  double st = state.history_at(0);
  double st1 = state.history_at(1);
  double value = st + beta * (st - st1);
  if (order == PredictorOrder::quadratic) {
    double st2 = state.history_at(2);
    value += beta * (st - 2.0 * st1 + st2);
  }
  return {std::max(0.0, value), false};
}

int rank_for_discarded_weight(const RVector& values, double eps) {
  const Eigen::Index n = values.size();
  if (n == 0) throw DegenerateSpectrum("rank_for_discarded_weight: empty");
  double total = values.squaredNorm();
  if (!(total > 0))
    throw DegenerateSpectrum("rank_for_discarded_weight: all-zero spectrum");
  double tail = 0;
  // walk from the smallest value up; the first k whose tail would exceed
  // eps*total must still be kept
  for (Eigen::Index k = n - 1; k >= 1; --k) {
    tail += values(k) * values(k);
    if (tail > eps * total) return static_cast<int>(k + 1);
  }
  return 1;
}

ControllerDecision controller_update(BondControllerState& state,
                                     const mps::SingularSpectrum& spectrum,
                                     const ControllerConfig& cfg) {
  double s_raw = mps::entropy_from_spectrum(spectrum);
  ema_update(state, s_raw, cfg.alpha_ema);
  PredictResult pred = predict_entropy(state, cfg.beta_predict,
                                       cfg.predictor_order);
  double s_in = pred.value;

  ControllerDecision d;
  switch (cfg.mode) {
    case ControlMode::fixed:
      d.chi = cfg.chi_max;
      d.s_ema = state.ema;
      d.s_pred = s_in;
      state.chi = d.chi;
      break;
    case ControlMode::threshold: {
      int r = rank_for_discarded_weight(spectrum.values, cfg.eps_trunc);
      d.chi = std::clamp(r, cfg.chi_min, cfg.chi_max);
      d.s_ema = state.ema;
      d.s_pred = s_in;
      state.chi = d.chi;
      break;
    }
    case ControlMode::direct:
      d.chi = chi_target_direct(s_in, cfg.gamma_margin, cfg.chi_min,
                                cfg.chi_max);
      d.s_ema = state.ema;
      d.s_pred = s_in;
      state.chi = d.chi;
      break;
    case ControlMode::pid:
      d = pid_step(state, s_in, cfg);
      break;
  }
  d.s_raw = s_raw;
  d.s_ema = state.ema;
  d.s_pred = s_in;
  return d;
}

namespace {
double renormalized_entropy(const RVector& values, int rank) {
  double total = 0;
  for (int k = 0; k < rank; ++k) total += values(k) * values(k);
  double s = 0;
  for (int k = 0; k < rank; ++k) {
    double p = values(k) * values(k) / total;
    if (p > 0) s -= p * std::log(p);
  }
  return s;
}
}  // namespace

double loop_gain_estimate(const mps::SingularSpectrum& spectrum,
                          int chi_star) {
  if (chi_star < 1) throw InvalidRank("loop_gain_estimate: chi_star >= 1");
  if (chi_star + 1 > spectrum.values.size())
    throw InsufficientSpectrum(
        "loop_gain_estimate: spectrum shorter than chi_star + 1");
  return renormalized_entropy(spectrum.values, chi_star + 1) -
         renormalized_entropy(spectrum.values, chi_star);
}

StabilityReport jury_stability(const PidGains& gains, double g) {
  if (!(g > 0)) throw InvalidConfig("jury_stability: g must be > 0");
  double a = 1.0 + g * gains.kp + g * gains.kd;  // z^2 coefficient
  double B = 2.0 + g * gains.kp - g * gains.ki - 2.0 * g * gains.kd;
  double c = 1.0 + g * gains.kd;  // constant term
  if (a == 0) throw DegeneratePolynomial("jury_stability: leading coeff 0");

  // roots of a z^2 - B z + c = 0
  std::complex<double> disc = std::complex<double>(B * B - 4.0 * a * c, 0.0);
  std::complex<double> sq = std::sqrt(disc);
  std::complex<double> z1 = (B + sq) / (2.0 * a);
  std::complex<double> z2 = (B - sq) / (2.0 * a);

  StabilityReport r;
  r.loop_gain = g;
  r.pole_moduli = {std::abs(z1), std::abs(z2)};
  r.jury_a = c > 0;
  r.jury_b = (a + c) > std::abs(B);
  r.jury_c = (c * c) > (std::pow(B / 2.0, 2) / (a * a));
  r.stable = r.pole_moduli[0] < 1.0 && r.pole_moduli[1] < 1.0;
  return r;
}

TuneReport ziegler_nichols_tune(const std::function<double(int)>& plant,
                                const std::vector<double>& kp_grid, int sweeps,
                                const ControllerConfig& base) {
  if (kp_grid.empty())
    throw InvalidConfig("ziegler_nichols_tune: empty kp grid");
  for (double kp : kp_grid) {
    ControllerConfig cfg = base;
    cfg.gains = {kp, 0.0, 0.0};

    // The relay loop regulates the measured entropy toward the target, so
    // the proportional action must oppose the error (the plant gain
    // dS/dchi is positive); the ultimate gain is where this regulating
    // loop first breaks into a sustained limit cycle.
    BondControllerState state;
    state.chi = cfg.chi_min;
    std::vector<int> series;
    series.reserve(static_cast<size_t>(sweeps));
    for (int t = 0; t < sweeps; ++t) {
      double s = plant(state.chi);
      ema_update(state, s, cfg.alpha_ema);
      double e = cfg.resolved_s_target() - state.ema;
      long raw = state.chi + std::llround(kp * e);
      state.chi =
          static_cast<int>(std::clamp<long>(raw, cfg.chi_min, cfg.chi_max));
      series.push_back(state.chi);
    }

    // sustained oscillation over the second half of the run: at least three
    // sign alternations of the first differences and peak-to-peak >= 2
    int start = sweeps / 2;
    std::vector<int> window(series.begin() + start, series.end());
    int alternations = 0, prev_sign = 0;
    int lo = window[0], hi = window[0];
    for (size_t i = 1; i < window.size(); ++i) {
      lo = std::min(lo, window[i]);
      hi = std::max(hi, window[i]);
      int diff = window[i] - window[i - 1];
      if (diff == 0) continue;
      int sign = diff > 0 ? 1 : -1;
      if (prev_sign != 0 && sign != prev_sign) ++alternations;
      prev_sign = sign;
    }
    if (alternations < 3 || hi - lo < 2) continue;

    // period: mean spacing between local maxima (up-down crossings)
    std::vector<int> peaks;
    for (size_t i = 1; i + 1 < window.size(); ++i)
      if (window[i] > window[i - 1] && window[i] >= window[i + 1])
        peaks.push_back(static_cast<int>(i));
    if (peaks.size() < 2) continue;
    double t_u = 0;
    for (size_t i = 1; i < peaks.size(); ++i) t_u += peaks[i] - peaks[i - 1];
    t_u /= static_cast<double>(peaks.size() - 1);

    TuneReport report;
    report.k_ultimate = kp;
    report.t_ultimate = t_u;
    report.tuned.kp = 0.6 * kp;
    report.tuned.ki = 1.2 * kp / t_u;
    report.tuned.kd = 0.075 * kp * t_u;
    return report;
  }
  throw NoUltimateGain(
      "ziegler_nichols_tune: no sustained oscillation on the kp grid");
}

void ControllerTrace::write_csv(std::ostream& os) const {
  os << "sweep,bond,s_raw,s_ema,s_pred,e,P,I,D,delta_chi,chi,clamped\n";
  for (const auto& r : rows_) {
    os << r.sweep << ',' << r.bond << ',' << util::g17(r.d.s_raw) << ','
       << util::g17(r.d.s_ema) << ',' << util::g17(r.d.s_pred) << ','
       << util::g17(r.d.error) << ',' << util::g17(r.d.p_term) << ','
       << util::g17(r.d.i_term) << ',' << util::g17(r.d.d_term) << ','
       << r.d.delta_chi << ',' << r.d.chi << ',' << (r.d.clamped ? 1 : 0)
       << '\n';
  }
}

}  // namespace adaptchi::ctrl
