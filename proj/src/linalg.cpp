#include "adaptchi/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace adaptchi::linalg {

namespace {

void check_input(const DenseMatrix& m) {
  if (m.rows() < 1 || m.cols() < 1)
    throw InvalidMatrix("svd: matrix must be at least 1x1");
  if (!m.allFinite()) throw InvalidMatrix("svd: non-finite entries");
}

// Rotate the phase of each left singular vector so its largest-magnitude
// entry is real and positive; the compensating phase goes into v_dagger.
void fix_phases(DenseMatrix& u, DenseMatrix& v_dagger) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = 0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      double a = std::abs(u(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (best <= 0) continue;
    Cplx f = std::conj(u(imax, j)) / best;
    u.col(j) *= f;
    if (j < v_dagger.rows()) v_dagger.row(j) *= std::conj(f);
  }
}

SvdResult reference_svd(const DenseMatrix& m) {
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericalFailure("svd: decomposition did not converge");
  SvdResult r;
  r.u = svd.matrixU();
  r.sigma = svd.singularValues();
  r.v_dagger = svd.matrixV().adjoint();
  r.rank = r.sigma.size();
  fix_phases(r.u, r.v_dagger);
  return r;
}

class ReferenceBackend final : public SvdBackend {
 public:
  SvdResult svd(const DenseMatrix& m) const override { return reference_svd(m); }
  std::string_view name() const override { return "reference"; }
};

}  // namespace

BackendRegistry& BackendRegistry::global() {
  static BackendRegistry registry;
  return registry;
}

void BackendRegistry::register_external(std::unique_ptr<SvdBackend> backend) {
  external_ = std::move(backend);
}

SvdResult svd_full(const DenseMatrix& m) {
  check_input(m);
  return reference_svd(m);
}

SvdResult svd_truncated(const DenseMatrix& m, Eigen::Index keep) {
  check_input(m);
  const Eigen::Index rmax = std::min(m.rows(), m.cols());
  if (keep < 1 || keep > rmax)
    throw InvalidRank("svd_truncated: keep out of range [1, min(rows,cols)]");
  SvdResult full = reference_svd(m);
  SvdResult r;
  r.u = full.u.leftCols(keep);
  r.sigma = full.sigma.head(keep);
  r.v_dagger = full.v_dagger.topRows(keep);
  r.rank = keep;
  if (keep < full.rank) {
    double s1 = full.sigma(0);
    r.degenerate_cut =
        std::abs(full.sigma(keep - 1) - full.sigma(keep)) <= 1e-12 * s1;
  }
  return r;
}

BackendId select_backend(const BackendPolicy& policy, Eigen::Index chi,
                         const BackendRegistry& registry) {
  if (chi < policy.accelerator_threshold) return BackendId::reference;
  if (policy.preferred == BackendId::external && registry.has_external())
    return BackendId::external;
  return BackendId::reference;
}

SvdResult svd_dispatch(const DenseMatrix& m, const BackendPolicy& policy,
                       Eigen::Index chi, const BackendRegistry& registry) {
  check_input(m);
  if (select_backend(policy, chi, registry) == BackendId::external)
    return registry.external()->svd(m);
  return reference_svd(m);
}

EigsResult eigs_lowest(const LinearMap& apply_h, Eigen::Index dim,
                       const CVector& v0, double tol, int max_iter) {
  if (v0.size() != dim) throw InvalidMatrix("eigs_lowest: v0 size mismatch");
  double n0 = v0.norm();
  if (!(n0 > 0)) throw InvalidMatrix("eigs_lowest: v0 must have norm > 0");

  const int block = static_cast<int>(std::min<Eigen::Index>(dim, 48));
  CVector q = v0 / n0;
  double best_residual = std::numeric_limits<double>::infinity();
  int matvecs = 0;

  std::vector<CVector> basis;
  CVector w(dim), ritz(dim);

  while (matvecs < max_iter) {
    basis.clear();
    basis.push_back(q);
    std::vector<double> alpha, beta;

    for (int j = 0; j < block && matvecs < max_iter; ++j) {
      apply_h(basis[static_cast<size_t>(j)], w);
      ++matvecs;
      double a = std::real(basis[static_cast<size_t>(j)].dot(w));
      alpha.push_back(a);
      w -= a * basis[static_cast<size_t>(j)];
      if (j > 0) w -= beta[static_cast<size_t>(j - 1)] * basis[static_cast<size_t>(j - 1)];
      // full reorthogonalization against the whole basis
      for (const auto& b : basis) w -= b.dot(w) * b;
      double bnorm = w.norm();

      // Ritz pair from the tridiagonal projection
      const int k = j + 1;
      Eigen::VectorXd diag =
          Eigen::Map<const Eigen::VectorXd>(alpha.data(), k);
      Eigen::VectorXd sub = k > 1 ? Eigen::Map<const Eigen::VectorXd>(
                                        beta.data(), k - 1)
                                  : Eigen::VectorXd();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub);
      double theta = es.eigenvalues()(0);
      Eigen::VectorXd s = es.eigenvectors().col(0);
      double res_bound = bnorm * std::abs(s(k - 1));

      bool breakdown = bnorm <= 1e-14 * std::max(1.0, std::abs(theta));
      if (res_bound <= tol * std::max(1.0, std::abs(theta)) || breakdown ||
          k == block || matvecs >= max_iter) {
        ritz.setZero();
        for (int i = 0; i < k; ++i) ritz += s(i) * basis[static_cast<size_t>(i)];
        ritz.normalize();
        apply_h(ritz, w);
        ++matvecs;
        double ev = std::real(ritz.dot(w));
        double res = (w - ev * ritz).norm();
        best_residual = std::min(best_residual, res);
        if (res <= tol * std::max(1.0, std::abs(ev)))
          return {ev, ritz, matvecs, res};
        if (breakdown && res > tol * std::max(1.0, std::abs(ev))) {
          // invariant subspace that is not yet good enough: deflate by
          // restarting from the residual direction mixed into the Ritz vector
          q = (ritz + 1e-8 * (w - ev * ritz).normalized()).normalized();
        } else {
          q = ritz;  // restart with the best Ritz vector
        }
        break;
      }
      beta.push_back(bnorm);
      basis.push_back(w / bnorm);
    }
  }
  throw EigenNonConvergence("eigs_lowest: no convergence within max_iter",
                            best_residual);
}

}  // namespace adaptchi::linalg
