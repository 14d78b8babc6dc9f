#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "adaptchi/mps.hpp"

using namespace adaptchi;
using namespace adaptchi::mps;

namespace {

SingularSpectrum spec_of(std::initializer_list<double> vals) {
  SingularSpectrum s;
  s.values = RVector(static_cast<long>(vals.size()));
  long i = 0;
  for (double v : vals) s.values(i++) = v;
  return s;
}

double fidelity(const MatrixProductState& a, const MatrixProductState& b) {
  return std::abs(overlap(a, b));
}

}  // namespace

TEST_CASE("product_state basics") {
  auto psi = product_state(2, 2, {0, 1});
  CVector v = to_statevector(psi);
  CHECK(v.size() == 4);
  CHECK(std::abs(v(1) - Cplx(1, 0)) <= 1e-15);  // |01>
  CHECK(std::abs(v(0)) + std::abs(v(2)) + std::abs(v(3)) <= 1e-15);
  for (int chi : psi.bond_dims()) CHECK(chi == 1);
}

TEST_CASE("product_state Neel N=4") {
  auto psi = product_state(4, 2, {0, 1, 0, 1});
  CVector v = to_statevector(psi);
  CHECK(std::abs(v(0b0101) - Cplx(1, 0)) <= 1e-15);
  CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("product_state single site") {
  auto psi = product_state(1, 2, {1});
  CVector v = to_statevector(psi);
  CHECK(std::abs(v(1) - Cplx(1, 0)) <= 1e-15);
}

TEST_CASE("product_state rejects bad basis index") {
  CHECK_THROWS_AS(product_state(2, 2, {0, 2}), InvalidBasisState);
  CHECK_THROWS_AS(product_state(3, 2, {0, 1}), InvalidBasisState);
}

TEST_CASE("random_mps determinism and dimension caps") {
  auto a = random_mps(4, 2, 100, 7);
  auto b = random_mps(4, 2, 100, 7);
  CHECK(a.bond_dims() == std::vector<int>{2, 4, 2});
  for (int i = 0; i < a.size(); ++i)
    for (long k = 0; k < a.site(i).size(); ++k)
      CHECK(a.site(i).data()[k] == b.site(i).data()[k]);
  auto c = random_mps(4, 2, 100, 8);
  bool different = false;
  for (long k = 0; k < a.site(1).size(); ++k)
    if (a.site(1).data()[k] != c.site(1).data()[k]) different = true;
  CHECK(different);
}

TEST_CASE("random_mps is normalized (statevector oracle)") {
  auto psi = random_mps(6, 2, 8, 7);
  CHECK(to_statevector(psi).norm() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(overlap(psi, psi) - Cplx(1, 0)) <= 1e-10);
}

TEST_CASE("entropy_from_spectrum examples") {
  CHECK(entropy_from_spectrum(spec_of({1.0})) == doctest::Approx(0.0));
  CHECK(entropy_from_spectrum(spec_of({M_SQRT1_2, M_SQRT1_2})) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // -0.9 ln 0.9 - 0.1 ln 0.1
  CHECK(entropy_from_spectrum(spec_of({std::sqrt(0.9), std::sqrt(0.1)})) ==
        doctest::Approx(0.3250829733914482).epsilon(1e-12));
}

TEST_CASE("entropy drops values below 1e-14 * lambda_1") {
  double s = entropy_from_spectrum(spec_of({1.0, 1e-15}));
  CHECK(s == 0.0);
}

TEST_CASE("entropy rejects a zero spectrum") {
  CHECK_THROWS_AS(entropy_from_spectrum(spec_of({0.0, 0.0})),
                  DegenerateSpectrum);
}

TEST_CASE("entropy bound S <= ln(len)") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    long len = 1 + static_cast<long>(uni(rng) * 20);
    RVector v(len);
    for (long i = 0; i < len; ++i) v(i) = uni(rng);
    std::sort(v.data(), v.data() + len, std::greater<double>());
    SingularSpectrum sp{v, 0};
    CHECK(entropy_from_spectrum(sp) <=
          std::log(static_cast<double>(len)) + 1e-12);
  }
}

TEST_CASE("truncation_error examples and monotonicity") {
  auto sp = spec_of({std::sqrt(0.8), std::sqrt(0.2)});
  CHECK(truncation_error(sp, 2) == doctest::Approx(0.0));
  CHECK(truncation_error(sp, 1) ==
        doctest::Approx(0.4472135954999579).epsilon(1e-12));
  CHECK(truncation_error(spec_of({1.0, 0.0}), 1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(truncation_error(sp, 0), InvalidRank);
  CHECK_THROWS_AS(truncation_error(sp, 3), InvalidRank);

  auto big = spec_of({0.9, 0.5, 0.3, 0.1, 0.01});
  for (int k = 1; k < 5; ++k)
    CHECK(truncation_error(big, k + 1) <= truncation_error(big, k) + 1e-15);
}

TEST_CASE("split_two_site singlet") {
  DenseMatrix theta = DenseMatrix::Zero(2, 2);
  theta(0, 1) = Cplx(M_SQRT1_2, 0);
  theta(1, 0) = Cplx(-M_SQRT1_2, 0);
  SplitResult r = split_two_site(theta, 2, 1, 1, 2);
  CHECK(r.outcome.kept_chi == 2);
  CHECK(r.lambda.values(0) == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
  CHECK(r.lambda.values(1) == doctest::Approx(M_SQRT1_2).epsilon(1e-12));
  CHECK(r.outcome.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(r.outcome.degenerate_cut == false);
}

TEST_CASE("split_two_site product block keeps rank 1") {
  DenseMatrix theta = DenseMatrix::Zero(2, 2);
  theta(0, 0) = Cplx(1, 0);  // |00>
  SplitResult r = split_two_site(theta, 2, 1, 1, 4);
  CHECK(r.outcome.kept_chi == 1);
  CHECK(r.outcome.truncation_error == doctest::Approx(0.0));
}

TEST_CASE("split_two_site truncation matches the full-SVD tail oracle") {
  std::mt19937_64 rng(64);
  std::normal_distribution<double> gauss(0, 1);
  DenseMatrix theta(8, 8);
  for (long i = 0; i < 8; ++i)
    for (long j = 0; j < 8; ++j) theta(i, j) = Cplx(gauss(rng), gauss(rng));
  theta /= theta.norm();
  SplitResult r = split_two_site(theta, 2, 4, 4, 3);
  linalg::SvdResult full = linalg::svd_full(theta);  // oracle
  double tail = 0;
  for (long k = 3; k < full.sigma.size(); ++k)
    tail += full.sigma(k) * full.sigma(k);
  CHECK(r.outcome.truncation_error ==
        doctest::Approx(std::sqrt(tail)).epsilon(1e-10));
  CHECK(r.outcome.kept_chi == 3);
}

TEST_CASE("split-merge round trip at full rank") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0, 1);
  DenseMatrix theta(8, 8);
  for (long i = 0; i < 8; ++i)
    for (long j = 0; j < 8; ++j) theta(i, j) = Cplx(gauss(rng), gauss(rng));
  SplitResult r = split_two_site(theta, 2, 4, 4, 8);
  // recontract left (chi_l, d, kept) x right (kept, d, chi_r)
  Tensor th = r.left.contract({2}, r.right, {0});  // (l, s1, s2, r)
  DenseMatrix rec(8, 8);
  for (long l = 0; l < 4; ++l)
    for (long s1 = 0; s1 < 2; ++s1)
      for (long s2 = 0; s2 < 2; ++s2)
        for (long rr = 0; rr < 4; ++rr)
          rec(l * 2 + s1, s2 * 4 + rr) = th(l, s1, s2, rr);
  CHECK((theta - rec).norm() / theta.norm() <= 1e-10);
}

TEST_CASE("split_two_site rejects a zero block") {
  DenseMatrix theta = DenseMatrix::Zero(4, 4);
  CHECK_THROWS_AS(split_two_site(theta, 2, 2, 2, 2), DegenerateSpectrum);
}

TEST_CASE("split_two_site absorbs singular values on either side") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> gauss(0, 1);
  DenseMatrix theta(4, 4);
  for (long i = 0; i < 4; ++i)
    for (long j = 0; j < 4; ++j) theta(i, j) = Cplx(gauss(rng), gauss(rng));
  for (auto side : {AbsorbSide::left, AbsorbSide::right}) {
    SplitResult r = split_two_site(theta, 2, 2, 2, 4, 1e-14, side);
    Tensor th = r.left.contract({2}, r.right, {0});
    DenseMatrix rec(4, 4);
    for (long l = 0; l < 2; ++l)
      for (long s1 = 0; s1 < 2; ++s1)
        for (long s2 = 0; s2 < 2; ++s2)
          for (long rr = 0; rr < 2; ++rr)
            rec(l * 2 + s1, s2 * 2 + rr) = th(l, s1, s2, rr);
    CHECK((theta - rec).norm() / theta.norm() <= 1e-10);
    // the absorbing side carries the weight; the other side is isometric
    if (side == AbsorbSide::right) {
      DenseMatrix u = r.left.matricize(2);
      CHECK((u.adjoint() * u - DenseMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() <=
            1e-10);
    } else {
      DenseMatrix v = r.right.matricize(1);
      CHECK((v * v.adjoint() - DenseMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() <=
            1e-10);
    }
  }
}

TEST_CASE("random_mps rejects chi < 1") {
  CHECK_THROWS_AS(random_mps(4, 2, 0, 1), InvalidRank);
}

TEST_CASE("canonicalize leaves a product state unchanged up to phase") {
  auto psi = product_state(4, 2, {0, 1, 1, 0});
  auto ref = psi;
  canonicalize(psi, 2);
  CHECK(fidelity(psi, ref) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("canonicalize establishes isometries (contraction oracle)") {
  auto psi = random_mps(6, 2, 8, 3);
  canonicalize(psi, 3);
  for (int i = 0; i < 3; ++i) {
    const Tensor& a = psi.site(i);
    DenseMatrix m = a.matricize(2);  // (l*d) x r
    DenseMatrix g = m.adjoint() * m;
    CHECK((g - DenseMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() <=
          1e-10);
  }
  for (int i = 5; i > 3; --i) {
    const Tensor& a = psi.site(i);
    DenseMatrix m = a.matricize(1);  // l x (d*r)
    DenseMatrix g = m * m.adjoint();
    CHECK((g - DenseMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() <=
          1e-10);
  }
}

TEST_CASE("canonicalize preserves the state and its norm") {
  auto psi = random_mps(8, 2, 6, 21);
  CVector before = to_statevector(psi);
  canonicalize(psi, 0);
  canonicalize(psi, 7);
  canonicalize(psi, 0);
  CVector after = to_statevector(psi);
  CHECK(std::abs(std::abs(before.dot(after)) - 1.0) <= 1e-10);
  CHECK(std::abs(overlap(psi, psi).real() - 1.0) <= 1e-10);
}

TEST_CASE("gauge invariance: bond entropy identical from either side") {
  auto psi = random_mps(7, 2, 6, 13);
  const int bond = 3;
  auto left_route = psi;
  canonicalize(left_route, bond);
  linalg::SvdResult l =
      linalg::svd_full(left_route.site(bond).matricize(2));
  auto right_route = psi;
  canonicalize(right_route, bond + 1);
  linalg::SvdResult r =
      linalg::svd_full(right_route.site(bond + 1).matricize(1));
  SingularSpectrum ls{l.sigma, bond}, rs{r.sigma, bond};
  CHECK(entropy_from_spectrum(ls) ==
        doctest::Approx(entropy_from_spectrum(rs)).epsilon(1e-10));
}

TEST_CASE("to_statevector singlet amplitudes") {
  DenseMatrix theta = DenseMatrix::Zero(2, 2);
  theta(0, 1) = Cplx(M_SQRT1_2, 0);
  theta(1, 0) = Cplx(-M_SQRT1_2, 0);
  SplitResult r = split_two_site(theta, 2, 1, 1, 2);
  MatrixProductState psi({r.left, r.right});
  CVector v = to_statevector(psi);
  // (0, 1/sqrt2, -1/sqrt2, 0) up to a global phase
  Cplx phase = v(1) / Cplx(M_SQRT1_2, 0);
  CHECK(std::abs(std::abs(phase) - 1.0) <= 1e-12);
  CHECK(std::abs(v(0)) <= 1e-12);
  CHECK(std::abs(v(3)) <= 1e-12);
  CHECK(std::abs(v(2) / phase - Cplx(-M_SQRT1_2, 0)) <= 1e-12);
}

TEST_CASE("to_statevector norm on a random state") {
  auto psi = random_mps(8, 2, 10, 17);
  CHECK(to_statevector(psi).norm() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("to_statevector size guard") {
  auto psi = product_state(21, 2, std::vector<int>(21, 0));
  CHECK_THROWS_AS(to_statevector(psi), SizeGuard);
}

TEST_CASE("parameter_count examples") {
  CHECK(parameter_count(product_state(2, 2, {0, 0})) == 4);
  auto psi = random_mps(4, 2, 100, 1);  // dims (2, 4, 2)
  CHECK(parameter_count(psi) == 2 * (1 * 2 + 2 * 4 + 4 * 2 + 2 * 1));
}

TEST_CASE("parameter_count uniform chain accounting") {
  // 100 sites at uniform chi = 256 carries 99 bonds x 256 units; the
  // parameter sum is d * sum(chi_l * chi_r) with the open-boundary caps
  auto psi = random_mps(12, 2, 16, 2);
  auto dims = psi.bond_dims();
  long expect = 0;
  long prev = 1;
  for (size_t i = 0; i < dims.size(); ++i) {
    expect += 2 * prev * dims[i];
    prev = dims[i];
  }
  expect += 2 * prev * 1;
  CHECK(parameter_count(psi) == expect);
}

TEST_CASE("average_bond_dim") {
  CHECK(average_bond_dim(product_state(5, 2, {0, 0, 0, 0, 0})) ==
        doctest::Approx(1.0));
  auto psi = random_mps(4, 2, 100, 3);
  CHECK(average_bond_dim(psi) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("snapshot container round trip") {
  auto psi = random_mps(6, 2, 5, 99);
  std::string path = "test_mps_snapshot.achi";
  save_mps(psi, path);
  auto back = load_mps(path);
  REQUIRE(back.size() == psi.size());
  CHECK(back.bond_dims() == psi.bond_dims());
  for (int i = 0; i < psi.size(); ++i)
    for (long k = 0; k < psi.site(i).size(); ++k)
      CHECK(back.site(i).data()[k] == psi.site(i).data()[k]);
  std::remove(path.c_str());
}

TEST_CASE("snapshot rejects foreign files") {
  std::string path = "test_mps_bad.achi";
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE1234";
  }
  CHECK_THROWS(load_mps(path));
  std::remove(path.c_str());
}
