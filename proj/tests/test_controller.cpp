#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "adaptchi/controller.hpp"

using namespace adaptchi;
using namespace adaptchi::ctrl;

namespace {

mps::SingularSpectrum spec_of(std::initializer_list<double> vals) {
  mps::SingularSpectrum s;
  s.values = RVector(static_cast<long>(vals.size()));
  long i = 0;
  for (double v : vals) s.values(i++) = v;
  return s;
}

BondControllerState fresh_state(int chi = 2) {
  BondControllerState st;
  st.chi = chi;
  return st;
}

}  // namespace

TEST_CASE("ema_update initialization avoids startup bias") {
  BondControllerState st;
  ema_update(st, 0.5, 0.3);
  CHECK(st.ema == 0.5);
  CHECK(st.initialized);
}

TEST_CASE("ema_update arithmetic") {
  BondControllerState st;
  st.initialized = true;
  st.ema = 0.0;
  ema_update(st, 1.0, 0.5);
  CHECK(st.ema == doctest::Approx(0.5));
}

TEST_CASE("ema fixed point under constant input") {
  for (double alpha : {0.1, 0.3, 0.9}) {
    BondControllerState st;
    for (int t = 0; t < 50; ++t) ema_update(st, 0.7312, alpha);
    CHECK(std::abs(st.ema - 0.7312) <= 1e-12);
  }
}

TEST_CASE("ema linearity") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(0, 1);
  std::vector<double> s1(30), s2(30);
  for (auto& v : s1) v = uni(rng);
  for (auto& v : s2) v = uni(rng);
  const double a = 0.6, b = 1.7, alpha = 0.35;
  BondControllerState x, y, z;
  for (int t = 0; t < 30; ++t) {
    ema_update(x, s1[static_cast<size_t>(t)], alpha);
    ema_update(y, s2[static_cast<size_t>(t)], alpha);
    ema_update(z, a * s1[static_cast<size_t>(t)] + b * s2[static_cast<size_t>(t)], alpha);
  }
  CHECK(std::abs(z.ema - (a * x.ema + b * y.ema)) <= 1e-12);
}

TEST_CASE("ema_time_constant") {
  CHECK(ema_time_constant(1.0 - std::exp(-1.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ema_time_constant(0.5) ==
        doctest::Approx(1.4426950408889634).epsilon(1e-12));
  CHECK_THROWS_AS(ema_time_constant(1.0), InfiniteResponse);
  // monotone increasing as alpha -> 0+
  double prev = ema_time_constant(0.9);
  for (double alpha : {0.5, 0.2, 0.05, 0.01}) {
    double tau = ema_time_constant(alpha);
    CHECK(tau > prev);
    prev = tau;
  }
}

TEST_CASE("chi_target_direct examples") {
  CHECK(chi_target_direct(std::log(4.0), 1.0, 1, 1024) == 4);
  CHECK(chi_target_direct(std::log(4.0), 1.5, 1, 1024) == 6);
  CHECK(chi_target_direct(10.0, 1.0, 1, 256) == 256);  // clamped
  CHECK(chi_target_direct(0.0, 1.0, 2, 64) == 2);      // clamped from below
}

TEST_CASE("pid_step hand-evaluated example") {
  // gains from the reference setup; e = 0.5 with zero accumulated integral
  ControllerConfig cfg;
  cfg.gains = {2.0, 0.1, 0.5};
  cfg.s_target = 0.0;
  cfg.chi_min = 1;
  cfg.chi_max = 1024;
  BondControllerState st = fresh_state(10);
  st.initialized = true;
  st.prev_error = 0.5;
  st.integral = 0.0;
  ControllerDecision d = pid_step(st, 0.5, cfg);
  CHECK(d.p_term == doctest::Approx(1.0));
  CHECK(st.integral == doctest::Approx(0.05));
  CHECK(d.d_term == doctest::Approx(0.0));
  CHECK(d.delta_chi == 1);  // round(1.05)
  CHECK(st.chi == 11);
  CHECK_FALSE(d.clamped);
}

TEST_CASE("pid_step zero error at steady state") {
  ControllerConfig cfg;
  cfg.s_target = 0.8;
  cfg.chi_min = 1;
  BondControllerState st = fresh_state(7);
  st.initialized = true;
  pid_step(st, 0.8, cfg);
  CHECK(st.chi == 7);
}

TEST_CASE("pid_step anti-windup freezes the integral at the clamp") {
  ControllerConfig cfg;
  cfg.gains = {2.0, 0.1, 0.5};
  cfg.s_target = 0.0;
  cfg.chi_min = 1;
  cfg.chi_max = 16;
  BondControllerState st = fresh_state(16);
  st.initialized = true;
  st.prev_error = 1.0;
  double before = st.integral;
  ControllerDecision d = pid_step(st, 1.0, cfg);  // e > 0 at chi_max
  CHECK(st.chi == 16);
  CHECK(d.clamped);
  CHECK(st.integral == doctest::Approx(before));
}

TEST_CASE("anti-windup bound after a long saturated run") {
  ControllerConfig cfg;
  cfg.gains = {2.0, 0.1, 0.5};
  cfg.s_target = 0.0;
  cfg.chi_min = 1;
  cfg.chi_max = 32;
  BondControllerState st = fresh_state(32);
  st.initialized = true;
  const double e = 0.9;
  for (int t = 0; t < 100; ++t) pid_step(st, e, cfg);
  // no accumulated windup beyond one step's worth
  CHECK(std::abs(st.integral) <= cfg.gains.ki * e + 1e-12);
}

TEST_CASE("pid zero-gain identity") {
  ControllerConfig cfg;
  cfg.gains = {0, 0, 0};
  cfg.s_target = 0.3;
  cfg.chi_min = 1;
  BondControllerState st = fresh_state(9);
  st.initialized = true;
  for (int t = 0; t < 20; ++t) pid_step(st, 0.1 * t, cfg);
  CHECK(st.chi == 9);
}

TEST_CASE("pid multiplicative scale moves chi proportionally") {
  ControllerConfig cfg;
  cfg.gains = {2.0, 0.0, 0.0};
  cfg.s_target = 0.0;
  cfg.pid_scale = PidScale::multiplicative;
  cfg.chi_min = 1;
  cfg.chi_max = 4096;
  BondControllerState st = fresh_state(100);
  st.initialized = true;
  pid_step(st, 1.0, cfg);  // u = 2, chi <- round(100 * (1 + 2/10)) = 120
  CHECK(st.chi == 120);
}

TEST_CASE("predict_entropy examples") {
  BondControllerState st;
  st.ema = 0.5;
  st.push_history(0.4);
  st.push_history(0.5);
  PredictResult lin = predict_entropy(st, 1.0, PredictorOrder::linear);
  CHECK_FALSE(lin.fallback);
  CHECK(lin.value == doctest::Approx(0.6).epsilon(1e-14));
  // beta = 0 recovers the reactive value bit-for-bit
  PredictResult re = predict_entropy(st, 0.0, PredictorOrder::linear);
  CHECK(re.value == st.history_at(0));

  BondControllerState q;
  q.ema = 0.5;
  q.push_history(0.5);
  q.push_history(0.5);
  q.push_history(0.5);
  PredictResult quad = predict_entropy(q, 0.8, PredictorOrder::quadratic);
  CHECK(quad.value == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("predict_entropy falls back without enough history") {
  BondControllerState st;
  st.ema = 0.42;
  st.push_history(0.42);
  PredictResult p = predict_entropy(st, 1.0, PredictorOrder::linear);
  CHECK(p.fallback);
  CHECK(p.value == 0.42);
  PredictResult q = predict_entropy(st, 1.0, PredictorOrder::quadratic);
  CHECK(q.fallback);
}

TEST_CASE("predictor floors at zero") {
  BondControllerState st;
  st.push_history(0.9);
  st.push_history(0.1);
  st.ema = 0.1;
  PredictResult p = predict_entropy(st, 2.0, PredictorOrder::linear);
  CHECK(p.value == 0.0);
}

TEST_CASE("rank_for_discarded_weight") {
  RVector v(4);
  v << 0.9, 0.4, 0.1, 0.01;
  // weights ~ (0.8198, 0.1620, 0.0101, 1.01e-4)
  CHECK(rank_for_discarded_weight(v, 1e-6) == 4);
  CHECK(rank_for_discarded_weight(v, 1e-3) == 3);
  CHECK(rank_for_discarded_weight(v, 0.05) == 2);
  CHECK(rank_for_discarded_weight(v, 0.5) == 1);
}

TEST_CASE("controller_update mode dispatch") {
  ControllerConfig cfg;
  cfg.chi_min = 1;
  cfg.chi_max = 64;

  SUBCASE("fixed always returns chi_max") {
    cfg.mode = ControlMode::fixed;
    BondControllerState st = fresh_state();
    for (int t = 0; t < 5; ++t) {
      auto d = controller_update(st, spec_of({0.9, 0.3, 0.01}), cfg);
      CHECK(d.chi == 64);
    }
  }

  SUBCASE("direct mode reaches the margin target on a singlet spectrum") {
    cfg.mode = ControlMode::direct;
    cfg.gamma_margin = 1.0;
    cfg.alpha_ema = 0.5;
    cfg.predictor_order = PredictorOrder::off;
    BondControllerState st = fresh_state();
    int chi = 0;
    for (int t = 0; t < 60; ++t)
      chi = controller_update(st, spec_of({M_SQRT1_2, M_SQRT1_2}), cfg).chi;
    CHECK(chi == 2);  // ceil(exp(ln 2)) after the EMA settles
  }

  SUBCASE("threshold mode keeps the significant rank") {
    cfg.mode = ControlMode::threshold;
    cfg.eps_trunc = 1e-6;
    BondControllerState st = fresh_state();
    auto d = controller_update(st, spec_of({1.0, 1e-2, 1e-9}), cfg);
    CHECK(d.chi == 2);
  }

  SUBCASE("pid mode converges on a frozen spectrum at target entropy") {
    cfg.mode = ControlMode::pid;
    cfg.alpha_ema = 1.0;
    cfg.predictor_order = PredictorOrder::off;
    auto sp = spec_of({M_SQRT1_2, M_SQRT1_2});  // S = ln 2 exactly
    cfg.s_target = std::log(2.0);
    BondControllerState st = fresh_state(8);
    st.initialized = true;
    std::vector<int> last;
    for (int t = 0; t < 40; ++t)
      last.push_back(controller_update(st, sp, cfg).chi);
    for (size_t t = 30; t < last.size(); ++t)
      CHECK(std::abs(last[t] - last[29]) <= 1);
  }
}

TEST_CASE("controller clamp containment") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(0, 2.5);
  ControllerConfig cfg;
  cfg.mode = ControlMode::pid;
  cfg.chi_min = 3;
  cfg.chi_max = 17;
  cfg.s_target = 1.0;
  BondControllerState st = fresh_state(5);
  st.initialized = true;
  for (int t = 0; t < 300; ++t) {
    RVector v(6);
    for (long i = 0; i < 6; ++i) v(i) = uni(rng) + 1e-6;
    std::sort(v.data(), v.data() + 6, std::greater<double>());
    auto d = controller_update(st, {v, 0}, cfg);
    CHECK(d.chi >= 3);
    CHECK(d.chi <= 17);
  }
}

TEST_CASE("beta = 0 output equals the reactive path bit-for-bit") {
  ControllerConfig with, without;
  with.mode = without.mode = ControlMode::pid;
  with.s_target = without.s_target = 0.4;
  with.predictor_order = PredictorOrder::linear;
  with.beta_predict = 0.0;
  without.predictor_order = PredictorOrder::off;
  BondControllerState a = fresh_state(4), b = fresh_state(4);
  a.initialized = b.initialized = true;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.1, 1.4);
  for (int t = 0; t < 50; ++t) {
    double x = uni(rng);
    RVector v(3);
    v << 1.0, x, x * x;
    auto da = controller_update(a, {v, 0}, with);
    auto db = controller_update(b, {v, 0}, without);
    CHECK(da.chi == db.chi);
    CHECK(da.error == db.error);
  }
}

TEST_CASE("direct-mode fixed point satisfies the margin inequality") {
  ControllerConfig cfg;
  cfg.mode = ControlMode::direct;
  cfg.alpha_ema = 0.3;
  cfg.gamma_margin = 1.2;
  cfg.chi_min = 1;
  cfg.chi_max = 256;
  cfg.predictor_order = PredictorOrder::off;
  auto sp = spec_of({0.8, 0.5, 0.3, 0.1, 0.05});
  BondControllerState st = fresh_state();
  double tau = ema_time_constant(cfg.alpha_ema);
  int steps = static_cast<int>(std::ceil(tau * 5));
  int chi = 0, prev = -1;
  int settle = 0;
  for (int t = 0; t < steps + 10; ++t) {
    chi = controller_update(st, sp, cfg).chi;
    if (chi == prev)
      ++settle;
    else
      settle = 0;
    prev = chi;
    if (t >= steps) CHECK(settle >= 1);  // fixed point within ~5 tau
  }
  CHECK(chi >= std::exp(st.ema) * cfg.gamma_margin - 1.0);
}

TEST_CASE("loop_gain_estimate regimes") {
  // uniform spectrum: g ~ 1/chi* within 10%
  RVector u = RVector::Constant(64, 0.5);
  for (int chi : {10, 20, 40}) {
    double g = loop_gain_estimate({u, 0}, chi);
    CHECK(std::abs(g - 1.0 / chi) <= 0.1 / chi);
  }
  // exponentially decaying spectrum: far below the saturated gain
  RVector e(30);
  for (long k = 0; k < 30; ++k) e(k) = std::exp(-static_cast<double>(k + 1));
  double g = loop_gain_estimate({e, 0}, 10);
  CHECK(g < 0.1 / 10.0);
  // boundary: spectrum too short
  RVector s = RVector::Constant(10, 1.0);
  CHECK_THROWS_AS(loop_gain_estimate({s, 0}, 10), InsufficientSpectrum);
}

TEST_CASE("jury_stability reference gains") {
  StabilityReport r = jury_stability({2.0, 0.1, 0.5}, 1.0 / 128.0);
  CHECK(r.stable);
  CHECK(r.jury_a);
  CHECK(r.jury_b);
  CHECK(r.jury_c);
  CHECK(r.pole_moduli[0] < 1.0);
  CHECK(r.pole_moduli[1] < 1.0);
}

TEST_CASE("jury_stability default gains stable across g in (0, 3/chi*]") {
  for (int i = 1; i <= 200; ++i) {
    double g = (3.0 / 8.0) * i / 200.0;
    CHECK(jury_stability({2.0, 0.1, 0.5}, g).stable);
  }
}

TEST_CASE("jury_stability flags integral-dominated oscillation") {
  StabilityReport r = jury_stability({2.0, 2000.0, 0.5}, 1.0 / 8.0);
  CHECK_FALSE(r.stable);
  CHECK(std::max(r.pole_moduli[0], r.pole_moduli[1]) >= 1.0);
}

TEST_CASE("jury criteria agree with the root-modulus verdict") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> uni(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    PidGains gains{5.0 * uni(rng) + 1e-6, 2.0 * uni(rng), 2.0 * uni(rng)};
    double g = uni(rng) + 1e-9;
    StabilityReport r = jury_stability(gains, g);
    // independent root oracle
    double a = 1 + g * gains.kp + g * gains.kd;
    double B = 2 + g * gains.kp - g * gains.ki - 2 * g * gains.kd;
    double c = 1 + g * gains.kd;
    std::complex<double> sq = std::sqrt(std::complex<double>(B * B - 4 * a * c));
    bool inside = std::abs((B + sq) / (2 * a)) < 1.0 &&
                  std::abs((B - sq) / (2 * a)) < 1.0;
    CHECK(r.stable == inside);
    CHECK((r.jury_a && r.jury_b && r.jury_c) == inside);
  }
}

TEST_CASE("ziegler_nichols_tune on a saturated plant") {
  ControllerConfig base;
  base.chi_min = 2;
  base.chi_max = 64;
  base.s_target = 2.0;
  base.alpha_ema = 1.0;
  auto plant = [](int chi) {
    return std::min(2.5, std::log(static_cast<double>(chi)));
  };
  TuneReport r = ziegler_nichols_tune(plant, {0.25, 0.5, 1, 2, 4, 8, 16, 32, 64},
                                      64, base);
  CHECK(r.k_ultimate > 0);
  CHECK(r.t_ultimate >= 2.0);
  // the three tuning identities hold exactly
  CHECK(r.tuned.kp == 0.6 * r.k_ultimate);
  CHECK(r.tuned.ki == 1.2 * r.k_ultimate / r.t_ultimate);
  CHECK(r.tuned.kd == 0.075 * r.k_ultimate * r.t_ultimate);
}

TEST_CASE("ziegler_nichols_tune with no feedback path") {
  ControllerConfig base;
  base.chi_min = 2;
  base.chi_max = 64;
  base.s_target = 2.0;
  base.alpha_ema = 1.0;
  auto plant = [](int) { return 1.3; };
  CHECK_THROWS_AS(
      ziegler_nichols_tune(plant, {0.5, 1, 2, 4, 8, 16}, 64, base),
      NoUltimateGain);
}

TEST_CASE("controller trace CSV has the documented header") {
  ControllerTrace trace;
  ControllerDecision d;
  d.chi = 5;
  trace.add(0, 3, d);
  std::ostringstream os;
  trace.write_csv(os);
  std::string text = os.str();
  CHECK(text.find("sweep,bond,s_raw,s_ema,s_pred,e,P,I,D,delta_chi,chi,clamped") == 0);
  CHECK(text.find("\n0,3,") != std::string::npos);
}
