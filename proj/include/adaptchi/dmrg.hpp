#pragma once

#include <cstdint>
#include <vector>

#include "adaptchi/controller.hpp"
#include "adaptchi/models.hpp"
#include "adaptchi/mps.hpp"

namespace adaptchi::dmrg {

struct DmrgConfig {
  int max_sweeps = 24;
  double eps_conv = 1e-8;  // stop when |dE / E| drops below this
  double eig_tol = 1e-10;
  int eig_max_iter = 200;
  ctrl::ControllerConfig controller{};
  enum class InitialState { automatic, neel, random };
  InitialState initial_state = InitialState::automatic;
  uint64_t seed = 1234;       // random initial states
  double noise_floor = 1e-14;  // relative singular-value guard at splits

  void validate() const;
};

struct SweepRecord {
  int sweep_index = 0;
  double energy = 0;
  double delta_e_rel = 0;
  std::vector<int> chi_profile;        // N-1 bond dimensions at sweep end
  std::vector<double> entropy_profile; // nats, last visit per bond
  double max_trunc_error = 0;
  double wall_time = 0;  // seconds, this sweep only
  long parameter_count = 0;
  double average_chi = 0;
};

// Cached left/right contraction blocks of <psi|H|psi>.  left(k) covers sites
// < k, right(k) covers sites > k; both are rank-3 (bra, mpo, ket).
class Environment {
 public:
  Environment(int n);
  Tensor& left(int k) { return left_[static_cast<size_t>(k)]; }
  Tensor& right(int k) { return right_[static_cast<size_t>(k)]; }
  const Tensor& left(int k) const { return left_[static_cast<size_t>(k)]; }
  const Tensor& right(int k) const { return right_[static_cast<size_t>(k)]; }

  void update_left(int k, const mps::MatrixProductState& psi,
                   const models::MatrixProductOperator& mpo);
  void update_right(int k, const mps::MatrixProductState& psi,
                    const models::MatrixProductOperator& mpo);
  void rebuild(const mps::MatrixProductState& psi,
               const models::MatrixProductOperator& mpo, int center);

 private:
  std::vector<Tensor> left_, right_;
};

// H_eff * theta at bond k, theta shaped (chi_l, d, d, chi_r).
Tensor apply_effective_hamiltonian(const Environment& env,
                                   const models::MatrixProductOperator& mpo,
                                   int bond, const Tensor& theta);

struct SweepOutcome {
  SweepRecord record;
  int max_chi_used = 0;
};

// One full sweep (left-to-right then right-to-left); updates psi, env and the
// per-bond controller states in place.
SweepOutcome two_site_sweep(mps::MatrixProductState& psi,
                            const models::MatrixProductOperator& mpo,
                            Environment& env, const DmrgConfig& cfg,
                            std::vector<ctrl::BondControllerState>& states,
                            int sweep_index,
                            ctrl::ControllerTrace* trace = nullptr);

struct DmrgResult {
  mps::MatrixProductState psi;
  std::vector<SweepRecord> sweeps;
  bool converged = false;
  double energy = 0;
  int max_chi_used = 0;
  // largest positive inter-sweep energy increase observed (adaptive runs may
  // transiently lose monotonicity when chi shrinks)
  double max_monotonicity_violation = 0;
};

DmrgResult run_dmrg(const models::ModelSpec& spec, const DmrgConfig& cfg,
                    ctrl::ControllerTrace* trace = nullptr);

double expectation_energy(const mps::MatrixProductState& psi,
                          const models::MatrixProductOperator& mpo);

// Total variation distance between two discrete distributions.
double tvd(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace adaptchi::dmrg
