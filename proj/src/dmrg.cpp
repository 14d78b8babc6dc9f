#include "adaptchi/dmrg.hpp"

#include <chrono>
#include <cmath>

#include "adaptchi/linalg.hpp"

namespace adaptchi::dmrg {

void DmrgConfig::validate() const {
  if (max_sweeps < 1) throw InvalidConfig("dmrg: max_sweeps must be >= 1");
  if (!(eps_conv > 0)) throw InvalidConfig("dmrg: eps_conv must be > 0");
  if (!(eig_tol > 0)) throw InvalidConfig("dmrg: eig_tol must be > 0");
  if (eig_max_iter < 1) throw InvalidConfig("dmrg: eig_max_iter must be >= 1");
  controller.validate();
}

Environment::Environment(int n)
    : left_(static_cast<size_t>(n)), right_(static_cast<size_t>(n)) {
  Tensor triv({1, 1, 1});
  triv.data()[0] = Cplx(1, 0);
  left_[0] = triv;
  right_[static_cast<size_t>(n - 1)] = triv;
}

void Environment::update_left(int k, const mps::MatrixProductState& psi,
                              const models::MatrixProductOperator& mpo) {
  // left(k) from left(k-1) and site k-1:
  //   L'(b', a', j') = conj(A)(b, s', b') W(a, s', s, a') A(j, s, j') L(b,a,j)
  const Tensor& l = left_[static_cast<size_t>(k - 1)];
  const Tensor& a = psi.site(k - 1);
  const Tensor& w = mpo.sites[static_cast<size_t>(k - 1)];
  Tensor t = l.contract({2}, a, {0});             // (b, a, s, j')
  t = t.contract({1, 2}, w, {0, 2});              // (b, j', s', a')
  t = a.conjugated().contract({0, 1}, t, {0, 2}); // (b', j', a')
  left_[static_cast<size_t>(k)] = t.permuted({0, 2, 1});
}

void Environment::update_right(int k, const mps::MatrixProductState& psi,
                               const models::MatrixProductOperator& mpo) {
  // right(k) from right(k+1) and site k+1
  const Tensor& r = right_[static_cast<size_t>(k + 1)];
  const Tensor& a = psi.site(k + 1);
  const Tensor& w = mpo.sites[static_cast<size_t>(k + 1)];
  Tensor t = a.contract({2}, r, {2});             // (j, s, b, e)
  t = t.contract({1, 3}, w, {2, 3});              // (j, b, a, s')
  t = a.conjugated().contract({1, 2}, t, {3, 1}); // (b', j, a)
  right_[static_cast<size_t>(k)] = t.permuted({0, 2, 1});
}

void Environment::rebuild(const mps::MatrixProductState& psi,
                          const models::MatrixProductOperator& mpo,
                          int center) {
  for (int k = 1; k <= center; ++k) update_left(k, psi, mpo);
  for (int k = psi.size() - 2; k >= center; --k) update_right(k, psi, mpo);
}

Tensor apply_effective_hamiltonian(const Environment& env,
                                   const models::MatrixProductOperator& mpo,
                                   int bond, const Tensor& theta) {
  const Tensor& l = env.left(bond);
  const Tensor& w1 = mpo.sites[static_cast<size_t>(bond)];
  const Tensor& w2 = mpo.sites[static_cast<size_t>(bond + 1)];
  const Tensor& r = env.right(bond + 1);
  // theta (jl, s1, s2, jr)
  Tensor t = l.contract({2}, theta, {0});       // (bl, a, s1, s2, jr)
  t = t.contract({1, 2}, w1, {0, 2});           // (bl, s2, jr, s1', c)
  t = t.contract({4, 1}, w2, {0, 2});           // (bl, jr, s1', s2', e)
  t = t.contract({4, 1}, r, {1, 2});            // (bl, s1', s2', br)
  return t;
}

namespace {

struct VisitResult {
  double energy;
  int kept;
  double entropy;
  double trunc_error;
};

// Optimize sites (bond, bond+1), split with the controller-governed rank and
// absorb singular values toward the sweep direction.
VisitResult visit_bond(mps::MatrixProductState& psi,
                       const models::MatrixProductOperator& mpo,
                       Environment& env, const DmrgConfig& cfg,
                       std::vector<ctrl::BondControllerState>& states,
                       int bond, bool moving_right, int sweep_index,
                       ctrl::ControllerTrace* trace) {
  const long d = psi.phys_dim();
  const long chi_l = psi.site(bond).dim(0);
  const long chi_r = psi.site(bond + 1).dim(2);

  Tensor theta0 = psi.site(bond).contract({2}, psi.site(bond + 1), {0});
  CVector v0(Eigen::Map<const CVector>(theta0.data(), theta0.size()));

  Tensor tin({chi_l, d, d, chi_r});
  auto apply = [&](const CVector& in, CVector& out) {
    Eigen::Map<CVector>(tin.data(), tin.size()) = in;
    Tensor tout = apply_effective_hamiltonian(env, mpo, bond, tin);
    out = Eigen::Map<const CVector>(tout.data(), tout.size());
  };
  auto eig = linalg::eigs_lowest(apply, v0.size(), v0, cfg.eig_tol,
                                 cfg.eig_max_iter);

  // rows (l, s1), cols (s2, r): the eigenvector is row-major (l, s1, s2, r)
  DenseMatrix theta = DenseMatrix(
      ConstRowMajorMap(eig.eigenvector.data(), chi_l * d, d * chi_r));

  ctrl::BondControllerState& st = states[static_cast<size_t>(bond)];
  const ctrl::ControllerConfig& cc = cfg.controller;

  // rank for this visit: the request stored at the previous visit, floored by
  // the rank the truncation-weight budget needs, capped by chi_max
  int request = st.chi;

  linalg::SvdResult svd = linalg::svd_full(theta);
  double s1 = svd.sigma.size() > 0 ? svd.sigma(0) : 0.0;
  if (!(s1 > 0)) throw DegenerateSpectrum("dmrg: zero two-site block");

  int floor_rank =
      ctrl::rank_for_discarded_weight(svd.sigma, cc.eps_trunc);
  int kept;
  if (cc.mode == ctrl::ControlMode::fixed) {
    kept = cc.chi_max;
  } else {
    kept = std::clamp(std::max(request, floor_rank), cc.chi_min, cc.chi_max);
  }
  // numerical-noise guard and the hard rank bound of the block
  int significant = 0;
  for (Eigen::Index k = 0; k < svd.sigma.size(); ++k)
    if (svd.sigma(k) > cfg.noise_floor * s1) ++significant;
  if (cc.mode != ctrl::ControlMode::fixed)
    kept = std::min(kept, std::max(significant, 1));
  kept = std::min<long>(kept, svd.sigma.size());
  kept = std::max(kept, 1);

  // controller update from the full (pre-truncation) spectrum; the decision
  // applies at this bond's next visit
  mps::SingularSpectrum spectrum{svd.sigma, bond};
  ctrl::ControllerDecision dec = ctrl::controller_update(st, spectrum, cc);
  if (trace) trace->add(sweep_index, bond, dec);

  DenseMatrix u = svd.u.leftCols(kept);
  DenseMatrix vdag = svd.v_dagger.topRows(kept);
  RVector lam = svd.sigma.head(kept);
  // the state must stay normalized after discarding weight
  double lam_norm = lam.norm();
  if (!(lam_norm > 0)) throw DegenerateSpectrum("dmrg: empty truncation");
  lam /= lam_norm;
  if (moving_right)
    vdag = lam.asDiagonal() * vdag;
  else
    u = u * lam.asDiagonal();

  psi.set_site(bond, Tensor::from_matrix(u, {chi_l, d, kept}));
  psi.set_site(bond + 1, Tensor::from_matrix(vdag, {kept, d, chi_r}));
  psi.set_canonical_center(moving_right ? bond + 1 : bond);

  if (moving_right)
    env.update_left(bond + 1, psi, mpo);
  else
    env.update_right(bond, psi, mpo);

  VisitResult out;
  out.energy = eig.eigenvalue;
  out.kept = kept;
  out.entropy = mps::entropy_from_spectrum(spectrum);
  out.trunc_error = mps::truncation_error(spectrum, kept);
  return out;
}

}  // namespace

SweepOutcome two_site_sweep(mps::MatrixProductState& psi,
                            const models::MatrixProductOperator& mpo,
                            Environment& env, const DmrgConfig& cfg,
                            std::vector<ctrl::BondControllerState>& states,
                            int sweep_index, ctrl::ControllerTrace* trace) {
  const int n = psi.size();
  SweepOutcome out;
  out.record.sweep_index = sweep_index;
  out.record.entropy_profile.assign(static_cast<size_t>(n - 1), 0.0);
  double energy = 0;
  auto t0 = std::chrono::steady_clock::now();

  for (int bond = 0; bond <= n - 2; ++bond) {
    VisitResult v = visit_bond(psi, mpo, env, cfg, states, bond, true,
                               sweep_index, trace);
    energy = v.energy;
    out.max_chi_used = std::max(out.max_chi_used, v.kept);
    out.record.max_trunc_error =
        std::max(out.record.max_trunc_error, v.trunc_error);
    out.record.entropy_profile[static_cast<size_t>(bond)] = v.entropy;
  }
  for (int bond = n - 2; bond >= 0; --bond) {
    VisitResult v = visit_bond(psi, mpo, env, cfg, states, bond, false,
                               sweep_index, trace);
    energy = v.energy;
    out.max_chi_used = std::max(out.max_chi_used, v.kept);
    out.record.max_trunc_error =
        std::max(out.record.max_trunc_error, v.trunc_error);
    out.record.entropy_profile[static_cast<size_t>(bond)] = v.entropy;
  }

  auto t1 = std::chrono::steady_clock::now();
  out.record.wall_time = std::chrono::duration<double>(t1 - t0).count();
  out.record.energy = energy;
  auto dims = psi.bond_dims();
  out.record.chi_profile = dims;
  out.record.parameter_count = mps::parameter_count(psi);
  out.record.average_chi = mps::average_bond_dim(psi);
  return out;
}

DmrgResult run_dmrg(const models::ModelSpec& spec, const DmrgConfig& cfg,
                    ctrl::ControllerTrace* trace) {
  spec.validate();
  cfg.validate();
  models::MatrixProductOperator mpo = models::build_mpo(spec);

  DmrgConfig::InitialState init = cfg.initial_state;
  if (init == DmrgConfig::InitialState::automatic)
    init = spec.family == models::ModelFamily::heisenberg_xxz
               ? DmrgConfig::InitialState::neel
               : DmrgConfig::InitialState::random;

  mps::MatrixProductState psi;
  if (init == DmrgConfig::InitialState::neel) {
    std::vector<int> basis(static_cast<size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) basis[static_cast<size_t>(i)] = i % 2;
    psi = mps::product_state(spec.n, 2, basis);
  } else {
    psi = mps::random_mps(spec.n, 2, cfg.controller.chi_min, cfg.seed);
  }
  mps::canonicalize(psi, 0);

  Environment env(spec.n);
  env.rebuild(psi, mpo, 0);

  // cold start: chi_i = chi_min, S_bar(0) = 0, integral 0; the first measured
  // spectrum enters through a normal EMA step
  std::vector<ctrl::BondControllerState> states(
      static_cast<size_t>(spec.n - 1));
  for (auto& st : states) {
    st.chi = cfg.controller.chi_min;
    st.ema = 0.0;
    st.initialized = true;
    st.push_history(0.0);
  }

  DmrgResult result;
  double prev_energy = 0;
  bool have_prev = false;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    SweepOutcome out =
        two_site_sweep(psi, mpo, env, cfg, states, sweep, trace);
    result.max_chi_used = std::max(result.max_chi_used, out.max_chi_used);
    SweepRecord rec = out.record;
    if (have_prev) {
      double delta = rec.energy - prev_energy;
      rec.delta_e_rel =
          std::abs(delta) / std::max(std::abs(rec.energy), 1e-300);
      if (delta > 0)
        result.max_monotonicity_violation =
            std::max(result.max_monotonicity_violation, delta);
    } else {
      rec.delta_e_rel = std::numeric_limits<double>::infinity();
    }
    result.sweeps.push_back(rec);
    if (have_prev && rec.delta_e_rel < cfg.eps_conv) {
      result.converged = true;
      prev_energy = rec.energy;
      break;
    }
    prev_energy = rec.energy;
    have_prev = true;
  }
  result.energy = prev_energy;
  result.psi = std::move(psi);
  return result;
}

double expectation_energy(const mps::MatrixProductState& psi,
                          const models::MatrixProductOperator& mpo) {
  if (psi.size() != mpo.n)
    throw InternalConsistency("expectation_energy: size mismatch");
  Environment env(psi.size());
  for (int k = 1; k < psi.size(); ++k) env.update_left(k, psi, mpo);
  // close with the last site: contract left(n-1) with A, W, conj(A)
  const int n = psi.size();
  const Tensor& a = psi.site(n - 1);
  const Tensor& w = mpo.sites[static_cast<size_t>(n - 1)];
  Tensor t = env.left(n - 1).contract({2}, a, {0});  // (b, a, s, 1)
  t = t.contract({1, 2}, w, {0, 2});                 // (b, 1, s', 1)
  Tensor closed = a.conjugated().contract({0, 1, 2}, t, {0, 2, 1});
  return std::real(closed.data()[0]);
}

double tvd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size())
    throw InvalidDistribution("tvd: length mismatch");
  double sp = 0, sq = 0, acc = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < -1e-12 || q[i] < -1e-12)
      throw InvalidDistribution("tvd: negative probability");
    sp += p[i];
    sq += q[i];
    acc += std::abs(p[i] - q[i]);
  }
  if (std::abs(sp - 1.0) > 1e-8 || std::abs(sq - 1.0) > 1e-8)
    throw InvalidDistribution("tvd: distributions must sum to 1");
  return 0.5 * acc;
}

}  // namespace adaptchi::dmrg
