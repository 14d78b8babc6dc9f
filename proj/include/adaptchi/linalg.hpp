#pragma once

#include <functional>
#include <memory>
#include <string_view>

#include "adaptchi/tensor.hpp"

namespace adaptchi::linalg {

// Thin SVD with singular values in non-increasing order.  Columns of u and
// rows of v_dagger are isometric; a deterministic phase convention makes the
// factors reproducible (largest-magnitude entry of each left singular vector
// is real and positive).
struct SvdResult {
  DenseMatrix u;         // m x r
  RVector sigma;         // r, non-increasing, >= 0
  DenseMatrix v_dagger;  // r x n
  Eigen::Index rank = 0;
  bool degenerate_cut = false;  // cut fell inside a near-degenerate multiplet
};

enum class BackendId { reference, external };

struct BackendPolicy {
  Eigen::Index accelerator_threshold = 64;  // chi below this stays on host
  BackendId preferred = BackendId::external;
};

class SvdBackend {
 public:
  virtual ~SvdBackend() = default;
  virtual SvdResult svd(const DenseMatrix& m) const = 0;
  virtual std::string_view name() const = 0;
};

// Holds the optional accelerator backend.  Written once at startup, read-only
// afterwards; the reference host backend is always available.
class BackendRegistry {
 public:
  static BackendRegistry& global();

  void register_external(std::unique_ptr<SvdBackend> backend);
  bool has_external() const { return external_ != nullptr; }
  const SvdBackend* external() const { return external_.get(); }

 private:
  std::unique_ptr<SvdBackend> external_;
};

SvdResult svd_full(const DenseMatrix& m);
SvdResult svd_truncated(const DenseMatrix& m, Eigen::Index keep);

BackendId select_backend(const BackendPolicy& policy, Eigen::Index chi,
                         const BackendRegistry& registry =
                             BackendRegistry::global());

// Dispatches the decomposition according to the size-threshold policy.
SvdResult svd_dispatch(const DenseMatrix& m, const BackendPolicy& policy,
                       Eigen::Index chi,
                       const BackendRegistry& registry =
                           BackendRegistry::global());

struct EigsResult {
  double eigenvalue = 0;
  CVector eigenvector;
  int matvec_count = 0;
  double residual = 0;
};

using LinearMap = std::function<void(const CVector&, CVector&)>;

// Lowest eigenpair of a Hermitian operator by a restarted Lanczos iteration
// with full reorthogonalization.  `max_iter` bounds the total number of
// operator applications.  Residual criterion: |H v - E v| <= tol * max(1,|E|).
EigsResult eigs_lowest(const LinearMap& apply_h, Eigen::Index dim,
                       const CVector& v0, double tol = 1e-10,
                       int max_iter = 200);

}  // namespace adaptchi::linalg
