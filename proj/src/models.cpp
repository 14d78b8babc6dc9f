#include "adaptchi/models.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstdlib>
#include <random>

#include "adaptchi/linalg.hpp"

namespace adaptchi::models {

void ModelSpec::validate() const {
  if (n < 2) throw InvalidConfig("model: n must be >= 2");
  if (!std::isfinite(jx) || !std::isfinite(jy) || !std::isfinite(jz) ||
      !std::isfinite(h))
    throw InvalidConfig("model: couplings must be finite");
}

namespace {

struct PauliSet {
  DenseMatrix id, x, y, z;
};

PauliSet pauli_ops(SpinConvention conv) {
  PauliSet p;
  p.id = DenseMatrix::Identity(2, 2);
  p.x = DenseMatrix::Zero(2, 2);
  p.x << Cplx(0, 0), Cplx(1, 0), Cplx(1, 0), Cplx(0, 0);
  p.y = DenseMatrix::Zero(2, 2);
  p.y << Cplx(0, 0), Cplx(0, -1), Cplx(0, 1), Cplx(0, 0);
  p.z = DenseMatrix::Zero(2, 2);
  p.z << Cplx(1, 0), Cplx(0, 0), Cplx(0, 0), Cplx(-1, 0);
  if (conv == SpinConvention::spin_half) {
    p.x *= 0.5;
    p.y *= 0.5;
    p.z *= 0.5;
  }
  return p;
}

void put_block(Tensor& w, long row, long col, const DenseMatrix& op) {
  for (long so = 0; so < 2; ++so)
    for (long si = 0; si < 2; ++si) w(row, so, si, col) = op(so, si);
}

}  // namespace

MatrixProductOperator build_mpo(const ModelSpec& spec) {
  spec.validate();
  const PauliSet p = pauli_ops(spec.convention);
  MatrixProductOperator mpo;
  mpo.n = spec.n;
  mpo.d = 2;

  long w;
  // bulk tensor, lower-triangular operator-sum form
  Tensor bulk;
  if (spec.family == ModelFamily::heisenberg_xxz) {
    w = 5;
    bulk = Tensor({w, 2, 2, w});
    put_block(bulk, 0, 0, p.id);
    put_block(bulk, 1, 0, p.x);
    put_block(bulk, 2, 0, p.y);
    put_block(bulk, 3, 0, p.z);
    put_block(bulk, 4, 0, -spec.h * p.z);
    put_block(bulk, 4, 1, spec.jx * p.x);
    put_block(bulk, 4, 2, spec.jy * p.y);
    put_block(bulk, 4, 3, spec.jz * p.z);
    put_block(bulk, 4, 4, p.id);
  } else if (spec.family == ModelFamily::transverse_ising) {
    w = 3;
    bulk = Tensor({w, 2, 2, w});
    put_block(bulk, 0, 0, p.id);
    put_block(bulk, 1, 0, p.z);
    put_block(bulk, 2, 0, -spec.h * p.x);
    put_block(bulk, 2, 1, -spec.jz * p.z);
    put_block(bulk, 2, 2, p.id);
  } else {
    throw UnsupportedModel("build_mpo: unknown model family");
  }

  // boundary tensors select the last row / first column
  Tensor first({1, 2, 2, w});
  for (long so = 0; so < 2; ++so)
    for (long si = 0; si < 2; ++si)
      for (long c = 0; c < w; ++c) first(0, so, si, c) = bulk(w - 1, so, si, c);
  Tensor last({w, 2, 2, 1});
  for (long r = 0; r < w; ++r)
    for (long so = 0; so < 2; ++so)
      for (long si = 0; si < 2; ++si) last(r, so, si, 0) = bulk(r, so, si, 0);

  mpo.sites.push_back(std::move(first));
  for (int i = 1; i < spec.n - 1; ++i) mpo.sites.push_back(bulk);
  mpo.sites.push_back(std::move(last));
  return mpo;
}

MatrixProductOperator identity_mpo(int n, int d) {
  MatrixProductOperator mpo;
  mpo.n = n;
  mpo.d = d;
  for (int i = 0; i < n; ++i) {
    Tensor t({1, d, d, 1});
    for (long s = 0; s < d; ++s) t(0, s, s, 0) = Cplx(1, 0);
    mpo.sites.push_back(std::move(t));
  }
  return mpo;
}

DenseMatrix dense_mpo_matrix(const MatrixProductOperator& mpo) {
  const int n = mpo.n;
  const long d = mpo.d;
  long dim = 1;
  for (int i = 0; i < n; ++i) dim *= d;
  if (dim > 1024) throw SizeGuard("dense_mpo_matrix: n too large");

  // accumulate site by site: block(row_out, row_in, bond)
  Tensor acc = mpo.sites[0];  // (1, so, si, w)
  long rows = d;
  for (int i = 1; i < n; ++i) {
    // acc (1, O, I, w) x site (w, so, si, w') -> (1, O, I, so, si, w')
    Tensor nxt = acc.contract({3}, mpo.sites[static_cast<size_t>(i)], {0});
    // merge (O, so) and (I, si)
    nxt = nxt.permuted({0, 1, 3, 2, 4, 5});
    rows *= d;
    acc = nxt.reshaped({1, rows, rows, nxt.dim(5)});
  }
  DenseMatrix out(rows, rows);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < rows; ++c) out(r, c) = acc(0, r, c, 0);
  return out;
}

DenseMatrix dense_hamiltonian(const ModelSpec& spec) {
  spec.validate();
  long dim = 1;
  for (int i = 0; i < spec.n; ++i) dim *= 2;
  if (dim > 1024) throw SizeGuard("dense_hamiltonian: n too large");
  const PauliSet p = pauli_ops(spec.convention);

  auto kron_at = [&](const DenseMatrix& op_a, int site_a,
                     const DenseMatrix& op_b, int site_b) {
    DenseMatrix acc = DenseMatrix::Identity(1, 1);
    for (int i = 0; i < spec.n; ++i) {
      const DenseMatrix& op =
          i == site_a ? op_a : (i == site_b ? op_b : p.id);
      DenseMatrix next(acc.rows() * 2, acc.cols() * 2);
      for (long r = 0; r < acc.rows(); ++r)
        for (long c = 0; c < acc.cols(); ++c)
          next.block(r * 2, c * 2, 2, 2) = acc(r, c) * op;
      acc = next;
    }
    return acc;
  };

  DenseMatrix h = DenseMatrix::Zero(dim, dim);
  if (spec.family == ModelFamily::heisenberg_xxz) {
    for (int i = 0; i + 1 < spec.n; ++i) {
      h += spec.jx * kron_at(p.x, i, p.x, i + 1);
      h += spec.jy * kron_at(p.y, i, p.y, i + 1);
      h += spec.jz * kron_at(p.z, i, p.z, i + 1);
    }
    for (int i = 0; i < spec.n; ++i) h -= spec.h * kron_at(p.z, i, p.z, -1);
  } else {
    for (int i = 0; i + 1 < spec.n; ++i)
      h -= spec.jz * kron_at(p.z, i, p.z, i + 1);
    for (int i = 0; i < spec.n; ++i) h -= spec.h * kron_at(p.x, i, p.x, -1);
  }
  return h;
}

namespace {

// Matrix-free H|v> for the XXZ family in the sigma-z product basis;
// bit i of the index is site i (0 -> sigma_z = +1).
class XxzApply {
 public:
  explicit XxzApply(const ModelSpec& spec) : spec_(spec) {
    scale_two_ = spec.convention == SpinConvention::pauli ? 1.0 : 0.25;
    scale_field_ = spec.convention == SpinConvention::pauli ? 1.0 : 0.5;
    dim_ = 1ll << spec.n;
  }

  long dim() const { return dim_; }

  void operator()(const CVector& in, CVector& out) const {
    out.setZero();
    const double flip_amp = (spec_.jx + spec_.jy) * scale_two_;
    const double raise_amp = (spec_.jx - spec_.jy) * scale_two_;
    for (long idx = 0; idx < dim_; ++idx) {
      double diag = 0;
      for (int i = 0; i + 1 < spec_.n; ++i) {
        bool si = (idx >> i) & 1, sj = (idx >> (i + 1)) & 1;
        double zz = si == sj ? 1.0 : -1.0;
        diag += spec_.jz * scale_two_ * zz;
        long flipped = idx ^ (3ll << i);
        if (si != sj) {
          if (flip_amp != 0) out(flipped) += flip_amp * in(idx);
        } else {
          if (raise_amp != 0) out(flipped) += raise_amp * in(idx);
        }
      }
      for (int i = 0; i < spec_.n; ++i) {
        double z = ((idx >> i) & 1) ? -1.0 : 1.0;
        diag -= spec_.h * scale_field_ * z;
      }
      out(idx) += diag * in(idx);
    }
  }

 private:
  ModelSpec spec_;
  double scale_two_, scale_field_;
  long dim_;
};

bool extended_oracle_enabled() {
  const char* v = std::getenv("ADAPTCHI_EXTENDED_ORACLE");
  return v != nullptr && v[0] == '1';
}

}  // namespace

double tfim_free_fermion_energy(int n, double coupling_j, double field_h,
                                SpinConvention convention) {
  double j = coupling_j, h = field_h;
  if (convention == SpinConvention::spin_half) {
    j *= 0.25;
    h *= 0.5;
  }
  // E0 = -(1/2) sum_k Lambda_k with Lambda_k the singular values of
  // M = 2(h I - j L), L the lower shift matrix (open chain)
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 2.0 * h;
  for (int i = 0; i + 1 < n; ++i) m(i + 1, i) = -2.0 * j;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return -0.5 * svd.singularValues().sum();
}

double exact_ground_energy(const ModelSpec& spec) {
  spec.validate();
  if (spec.family == ModelFamily::transverse_ising)
    return tfim_free_fermion_energy(spec.n, spec.jz, spec.h, spec.convention);

  const int cap = extended_oracle_enabled() ? 20 : 14;
  if (spec.n > cap)
    throw SizeGuard("exact_ground_energy: n exceeds the Lanczos tier cap");

  XxzApply apply(spec);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVector v0(apply.dim());
  for (long i = 0; i < apply.dim(); ++i) v0(i) = Cplx(gauss(rng), 0.0);
  auto result = linalg::eigs_lowest(
      [&apply](const CVector& in, CVector& out) { apply(in, out); },
      apply.dim(), v0, 1e-12, 800);
  return result.eigenvalue;
}

double bethe_reference() { return 0.25 - std::log(2.0); }
double bethe_reference_pauli() { return 4.0 * bethe_reference(); }

}  // namespace adaptchi::models
