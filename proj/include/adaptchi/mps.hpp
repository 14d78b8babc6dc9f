#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaptchi/linalg.hpp"
#include "adaptchi/tensor.hpp"

namespace adaptchi::mps {

// Singular values at one bond, non-increasing.
struct SingularSpectrum {
  RVector values;
  int bond_index = -1;
};

// Bookkeeping from one truncated two-site split.  The spectrum is the full
// (pre-truncation) one; entropy is computed from it.
struct TruncationOutcome {
  int kept_chi = 0;
  double truncation_error = 0;  // sqrt of discarded squared singular values
  double entropy = 0;           // nats
  SingularSpectrum spectrum;
  bool degenerate_cut = false;
};

// Open-boundary matrix product state: a chain of rank-3 site tensors indexed
// (left, phys, right) with chi_0 = chi_N = 1.
class MatrixProductState {
 public:
  MatrixProductState() = default;
  explicit MatrixProductState(std::vector<Tensor> sites);

  int size() const { return static_cast<int>(sites_.size()); }
  int phys_dim() const { return static_cast<int>(sites_.front().dim(1)); }
  Tensor& site(int i) { return sites_[static_cast<size_t>(i)]; }
  const Tensor& site(int i) const { return sites_[static_cast<size_t>(i)]; }
  void set_site(int i, Tensor t);

  std::vector<int> bond_dims() const;
  std::optional<int> canonical_center() const { return center_; }
  void set_canonical_center(std::optional<int> c) { center_ = c; }

  void check_consistency() const;

 private:
  std::vector<Tensor> sites_;
  std::optional<int> center_;
};

MatrixProductState product_state(int n, int d,
                                 const std::vector<int>& local_states);
MatrixProductState random_mps(int n, int d, int chi, uint64_t seed);

// Von Neumann entropy in nats from a singular spectrum:
// p_k = lambda_k^2 / sum lambda^2, S = -sum p ln p.  Values below
// 1e-14 * lambda_1 are dropped before normalization.
double entropy_from_spectrum(const SingularSpectrum& spec);

// sqrt(sum_{k > kept} lambda_k^2)
double truncation_error(const SingularSpectrum& spec, int kept);

enum class AbsorbSide { left, right };

struct SplitResult {
  Tensor left;   // (chi_left, d, kept)
  SingularSpectrum lambda;  // kept values
  Tensor right;  // (kept, d, chi_right)
  TruncationOutcome outcome;
};

// Split a two-site block theta, shaped (d*chi_left) x (d*chi_right), keeping
// at most chi_request singular values and discarding values below
// trunc_floor * sigma_1.  Singular values are absorbed into the tensor on the
// side given by `absorb` (the side the canonical center moves to).
SplitResult split_two_site(const DenseMatrix& theta, int d, int chi_left,
                           int chi_right, int chi_request,
                           double trunc_floor = 1e-14,
                           AbsorbSide absorb = AbsorbSide::right);

// Move the canonical center to `center` by QR sweeps; the state is unchanged.
void canonicalize(MatrixProductState& psi, int center);

// Full amplitude vector, basis ordered with site 0 as the most significant
// digit.  Guarded to N <= 20.
CVector to_statevector(const MatrixProductState& psi);

Cplx overlap(const MatrixProductState& bra, const MatrixProductState& ket);

long parameter_count(const MatrixProductState& psi);
double average_bond_dim(const MatrixProductState& psi);

// Versioned binary snapshot ("ACHI" container).
void save_mps(const MatrixProductState& psi, const std::string& path);
MatrixProductState load_mps(const std::string& path);

// Merge sites k, k+1 into a (d*chi_l) x (d*chi_r) matrix.
DenseMatrix merge_two_site(const MatrixProductState& psi, int k);

}  // namespace adaptchi::mps
