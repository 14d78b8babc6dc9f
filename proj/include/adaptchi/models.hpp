#pragma once

#include <vector>

#include "adaptchi/tensor.hpp"

namespace adaptchi::models {

enum class ModelFamily { heisenberg_xxz, transverse_ising };
enum class SpinConvention { spin_half, pauli };

// Spin-chain specification, open boundary conditions, d = 2.
//   heisenberg_xxz:  H = sum_i jx XX + jy YY + jz ZZ  -  h sum_i Z
//   transverse_ising: H = -J sum_i ZZ - h sum_i X   (J taken from jz)
// spin_half convention replaces every Pauli operator by S = sigma/2.
struct ModelSpec {
  ModelFamily family = ModelFamily::heisenberg_xxz;
  int n = 2;
  double jx = 1.0, jy = 1.0, jz = 1.0, h = 0.0;
  SpinConvention convention = SpinConvention::pauli;

  void validate() const;
};

// Hamiltonian as an operator tensor train; site tensors are rank-4,
// indexed (left_bond, phys_out, phys_in, right_bond).
struct MatrixProductOperator {
  std::vector<Tensor> sites;
  int n = 0;
  int d = 2;
};

MatrixProductOperator build_mpo(const ModelSpec& spec);
MatrixProductOperator identity_mpo(int n, int d);

// Dense 2^n x 2^n matrix of the Hamiltonian (n <= 10), for oracle tests.
DenseMatrix dense_hamiltonian(const ModelSpec& spec);
DenseMatrix dense_mpo_matrix(const MatrixProductOperator& mpo);

// Lowest eigenvalue.  XXZ runs a matrix-free Lanczos up to n = 14 (n = 20
// with the extended tier enabled via ADAPTCHI_EXTENDED_ORACLE=1); the
// transverse-field Ising family uses the exact free-fermion reduction at
// any n.
double exact_ground_energy(const ModelSpec& spec);

// Jordan-Wigner single-particle summation for the open transverse-field
// Ising chain.
double tfim_free_fermion_energy(int n, double coupling_j, double field_h,
                                SpinConvention convention);

// Thermodynamic-limit Heisenberg ground energy per site, spin convention.
double bethe_reference();
// Same value in the Pauli convention (factor 4 from sigma = 2S).
double bethe_reference_pauli();

}  // namespace adaptchi::models
