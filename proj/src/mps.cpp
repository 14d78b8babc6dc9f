#include "adaptchi/mps.hpp"

#include <Eigen/QR>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace adaptchi::mps {

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

MatrixProductState::MatrixProductState(std::vector<Tensor> sites)
    : sites_(std::move(sites)) {
  check_consistency();
}

void MatrixProductState::set_site(int i, Tensor t) {
  sites_[static_cast<size_t>(i)] = std::move(t);
}

std::vector<int> MatrixProductState::bond_dims() const {
  std::vector<int> dims;
  for (size_t i = 0; i + 1 < sites_.size(); ++i)
    dims.push_back(static_cast<int>(sites_[i].dim(2)));
  return dims;
}

void MatrixProductState::check_consistency() const {
  if (sites_.empty()) throw InternalConsistency("empty MPS");
  if (sites_.front().dim(0) != 1 || sites_.back().dim(2) != 1)
    throw InternalConsistency("boundary bond dimensions must be 1");
  for (size_t i = 0; i + 1 < sites_.size(); ++i)
    if (sites_[i].dim(2) != sites_[i + 1].dim(0))
      throw InternalConsistency("adjacent bond dimension mismatch");
}

MatrixProductState product_state(int n, int d,
                                 const std::vector<int>& local_states) {
  if (static_cast<int>(local_states.size()) != n)
    throw InvalidBasisState("product_state: need one basis index per site");
  std::vector<Tensor> sites;
  sites.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int s = local_states[static_cast<size_t>(i)];
    if (s < 0 || s >= d)
      throw InvalidBasisState("product_state: basis index out of range");
    Tensor t({1, d, 1});
    t(0, s, 0) = Cplx(1, 0);
    sites.push_back(std::move(t));
  }
  MatrixProductState psi(std::move(sites));
  psi.set_canonical_center(0);
  return psi;
}

static std::vector<int> capped_bond_dims(int n, int d, int chi) {
  // chi_i = min(chi, d^i, d^(n-i)) without overflowing
  std::vector<int> dims(static_cast<size_t>(n - 1), chi);
  long grow = 1;
  for (int i = 0; i < n - 1; ++i) {
    grow = std::min<long>(grow * d, chi);
    dims[static_cast<size_t>(i)] = std::min<long>(dims[static_cast<size_t>(i)], grow);
  }
  grow = 1;
  for (int i = n - 2; i >= 0; --i) {
    grow = std::min<long>(grow * d, chi);
    dims[static_cast<size_t>(i)] = std::min<long>(dims[static_cast<size_t>(i)], grow);
  }
  return dims;
}

MatrixProductState random_mps(int n, int d, int chi, uint64_t seed) {
  if (chi < 1) throw InvalidRank("random_mps: chi must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto dims = capped_bond_dims(n, d, chi);
  std::vector<Tensor> sites;
  for (int i = 0; i < n; ++i) {
    long l = i == 0 ? 1 : dims[static_cast<size_t>(i - 1)];
    long r = i == n - 1 ? 1 : dims[static_cast<size_t>(i)];
    Tensor t({l, d, r});
    for (long k = 0; k < t.size(); ++k)
      t.data()[k] = Cplx(gauss(rng), gauss(rng));
    sites.push_back(std::move(t));
  }
  MatrixProductState psi(std::move(sites));
  canonicalize(psi, 0);
  double nrm = psi.site(0).norm();
  if (!(nrm > 0)) throw NumericalFailure("random_mps: zero-norm state");
  psi.site(0).scale(Cplx(1.0 / nrm, 0));
  return psi;
}

double entropy_from_spectrum(const SingularSpectrum& spec) {
  if (spec.values.size() == 0)
    throw DegenerateSpectrum("entropy: empty spectrum");
  double lmax = spec.values(0);
  if (!(lmax > 0)) throw DegenerateSpectrum("entropy: all-zero spectrum");
  double cutoff = 1e-14 * lmax;
  double total = 0;
  for (Eigen::Index k = 0; k < spec.values.size(); ++k)
    if (spec.values(k) > cutoff) total += spec.values(k) * spec.values(k);
  double s = 0;
  for (Eigen::Index k = 0; k < spec.values.size(); ++k) {
    if (spec.values(k) <= cutoff) continue;
    double p = spec.values(k) * spec.values(k) / total;
    if (p > 0) s -= p * std::log(p);
  }
  return s;
}

double truncation_error(const SingularSpectrum& spec, int kept) {
  if (kept < 1 || kept > spec.values.size())
    throw InvalidRank("truncation_error: kept out of range");
  double tail = 0;
  for (Eigen::Index k = kept; k < spec.values.size(); ++k)
    tail += spec.values(k) * spec.values(k);
  return std::sqrt(std::max(0.0, tail));
}

SplitResult split_two_site(const DenseMatrix& theta, int d, int chi_left,
                           int chi_right, int chi_request, double trunc_floor,
                           AbsorbSide absorb) {
  if (theta.rows() != static_cast<Eigen::Index>(d) * chi_left ||
      theta.cols() != static_cast<Eigen::Index>(d) * chi_right)
    throw InvalidMatrix("split_two_site: theta shape mismatch");
  if (chi_request < 1) throw InvalidRank("split_two_site: chi_request >= 1");

  linalg::SvdResult svd = linalg::svd_full(theta);
  double s1 = svd.sigma.size() > 0 ? svd.sigma(0) : 0.0;
  if (!(s1 > 0)) throw DegenerateSpectrum("split_two_site: zero matrix");

  Eigen::Index significant = 0;
  for (Eigen::Index k = 0; k < svd.sigma.size(); ++k)
    if (svd.sigma(k) > trunc_floor * s1) ++significant;
  significant = std::max<Eigen::Index>(significant, 1);

  Eigen::Index kept = std::min<Eigen::Index>(chi_request, significant);

  SplitResult out;
  out.outcome.spectrum.values = svd.sigma;
  out.outcome.kept_chi = static_cast<int>(kept);
  out.outcome.entropy = entropy_from_spectrum(out.outcome.spectrum);
  out.outcome.truncation_error =
      truncation_error(out.outcome.spectrum, static_cast<int>(kept));
  out.outcome.degenerate_cut =
      kept < svd.sigma.size() &&
      std::abs(svd.sigma(kept - 1) - svd.sigma(kept)) <= 1e-12 * s1;

  DenseMatrix u = svd.u.leftCols(kept);
  DenseMatrix vdag = svd.v_dagger.topRows(kept);
  RVector lam = svd.sigma.head(kept);
  if (absorb == AbsorbSide::right)
    vdag = lam.asDiagonal() * vdag;
  else
    u = u * lam.asDiagonal();

  out.lambda.values = lam;
  out.left = Tensor::from_matrix(u, {chi_left, d, kept});
  // vdag rows index the new bond; columns are (phys, chi_right) pairs after
  // reshaping theta's column index (s2, right)
  out.right = Tensor::from_matrix(vdag, {kept, d, chi_right});
  return out;
}

namespace {

// Left-orthonormalize site i, pushing the R factor into site i+1.
void push_right(MatrixProductState& psi, int i) {
  Tensor& a = psi.site(i);
  long l = a.dim(0), d = a.dim(1), r = a.dim(2);
  DenseMatrix m = a.matricize(2);  // (l*d) x r
  Eigen::HouseholderQR<DenseMatrix> qr(m);
  long k = std::min(l * d, r);
  DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(l * d, k);
  DenseMatrix rr = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  psi.set_site(i, Tensor::from_matrix(q, {l, d, k}));
  Tensor& b = psi.site(i + 1);
  DenseMatrix bn = rr * DenseMatrix(b.matricize(1));
  psi.set_site(i + 1, Tensor::from_matrix(bn, {k, b.dim(1), b.dim(2)}));
}

// Right-orthonormalize site i, pushing the L factor into site i-1.
void push_left(MatrixProductState& psi, int i) {
  Tensor& a = psi.site(i);
  long l = a.dim(0), d = a.dim(1), r = a.dim(2);
  DenseMatrix m = DenseMatrix(a.matricize(1)).adjoint();  // (d*r) x l
  Eigen::HouseholderQR<DenseMatrix> qr(m);
  long k = std::min(d * r, l);
  DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(d * r, k);
  DenseMatrix rr = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  psi.set_site(i, Tensor::from_matrix(q.adjoint(), {k, d, r}));
  Tensor& b = psi.site(i - 1);
  DenseMatrix bn = DenseMatrix(b.matricize(2)) * rr.adjoint();
  psi.set_site(i - 1, Tensor::from_matrix(bn, {b.dim(0), b.dim(1), k}));
}

}  // namespace

void canonicalize(MatrixProductState& psi, int center) {
  const int n = psi.size();
  if (center < 0 || center >= n)
    throw InvalidRank("canonicalize: center out of range");
  for (int i = 0; i < center; ++i) push_right(psi, i);
  for (int i = n - 1; i > center; --i) push_left(psi, i);
  psi.set_canonical_center(center);
}

CVector to_statevector(const MatrixProductState& psi) {
  const int n = psi.size();
  const int d = psi.phys_dim();
  if (n > 20) throw SizeGuard("to_statevector: N > 20");
  DenseMatrix v = DenseMatrix::Ones(1, 1);  // (d^k) x chi_k, site 0 slowest
  long rows = 1;
  for (int i = 0; i < n; ++i) {
    const Tensor& a = psi.site(i);
    DenseMatrix m = v * DenseMatrix(a.matricize(1));  // rows x (d*chi')
    DenseMatrix next(rows * d, a.dim(2));
    for (long x = 0; x < rows; ++x)
      for (long s = 0; s < d; ++s)
        for (long j = 0; j < a.dim(2); ++j)
          next(x * d + s, j) = m(x, s * a.dim(2) + j);
    rows *= d;
    v = std::move(next);
  }
  return CVector(Eigen::Map<const CVector>(v.data(), v.rows()));
}

Cplx overlap(const MatrixProductState& bra, const MatrixProductState& ket) {
  if (bra.size() != ket.size())
    throw InternalConsistency("overlap: size mismatch");
  Tensor env({1, 1});
  env.data()[0] = Cplx(1, 0);
  for (int i = 0; i < bra.size(); ++i) {
    // env(b, k) -> contract ket tensor then bra tensor
    Tensor t = env.contract({1}, ket.site(i), {0});       // (b, d, k')
    env = bra.site(i).conjugated().contract({0, 1}, t, {0, 1});  // (b', k')
  }
  return env.data()[0];
}

long parameter_count(const MatrixProductState& psi) {
  long total = 0;
  for (int i = 0; i < psi.size(); ++i) {
    const Tensor& a = psi.site(i);
    total += a.dim(0) * a.dim(1) * a.dim(2);
  }
  return total;
}

double average_bond_dim(const MatrixProductState& psi) {
  if (psi.size() < 2)
    throw InvalidRank("average_bond_dim: need at least 2 sites");
  auto dims = psi.bond_dims();
  double s = 0;
  for (int x : dims) s += x;
  return s / static_cast<double>(dims.size());
}

namespace {
template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_mps(const MatrixProductState& psi, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("save_mps: cannot open " + path);
  f.write("ACHI", 4);
  write_pod<uint32_t>(f, 1);  // format version
  write_pod<uint64_t>(f, static_cast<uint64_t>(psi.size()));
  write_pod<uint64_t>(f, static_cast<uint64_t>(psi.phys_dim()));
  for (int i = 0; i < psi.size(); ++i) {
    const Tensor& a = psi.site(i);
    write_pod<uint64_t>(f, static_cast<uint64_t>(a.dim(0)));
    write_pod<uint64_t>(f, static_cast<uint64_t>(a.dim(2)));
    f.write(reinterpret_cast<const char*>(a.data()),
            static_cast<std::streamsize>(sizeof(Cplx) * static_cast<size_t>(a.size())));
  }
  if (!f) throw Error("save_mps: write failed for " + path);
}

MatrixProductState load_mps(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("load_mps: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, "ACHI", 4) != 0)
    throw Error("load_mps: bad magic bytes");
  uint32_t version = read_pod<uint32_t>(f);
  if (version != 1) throw Error("load_mps: unsupported format version");
  auto n = static_cast<long>(read_pod<uint64_t>(f));
  auto d = static_cast<long>(read_pod<uint64_t>(f));
  std::vector<Tensor> sites;
  for (long i = 0; i < n; ++i) {
    auto l = static_cast<long>(read_pod<uint64_t>(f));
    auto r = static_cast<long>(read_pod<uint64_t>(f));
    Tensor t({l, d, r});
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(sizeof(Cplx) * static_cast<size_t>(t.size())));
    sites.push_back(std::move(t));
  }
  if (!f) throw Error("load_mps: truncated file");
  return MatrixProductState(std::move(sites));
}

DenseMatrix merge_two_site(const MatrixProductState& psi, int k) {
  const Tensor& a = psi.site(k);
  const Tensor& b = psi.site(k + 1);
  // (l, s1, x) * (x, s2, r) -> (l, s1, s2, r); rows (l, s1), cols (s2, r)
  Tensor th = a.contract({2}, b, {0});
  long l = a.dim(0), d = a.dim(1), r = b.dim(2);
  return DenseMatrix(ConstRowMajorMap(th.data(), l * d, d * r));
}

}  // namespace adaptchi::mps
