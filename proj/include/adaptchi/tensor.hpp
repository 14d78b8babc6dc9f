#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "adaptchi/errors.hpp"

namespace adaptchi {

using Cplx = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

using RowMajorMatrix =
    Eigen::Matrix<Cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorMap = Eigen::Map<RowMajorMatrix>;
using ConstRowMajorMap = Eigen::Map<const RowMajorMatrix>;

// Dense tensor of small rank, row-major storage.  The workhorse for MPS/MPO
// contractions: permute into matrix form, multiply with Eigen, reshape back.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<long> shape)
      : shape_(std::move(shape)), data_(size_of(shape_), Cplx(0, 0)) {}

  static long size_of(const std::vector<long>& shape) {
    long n = 1;
    for (long s : shape) {
      if (s < 1) throw InvalidMatrix("tensor dimension must be >= 1");
      n *= s;
    }
    return n;
  }

  const std::vector<long>& shape() const { return shape_; }
  long dim(int axis) const { return shape_[static_cast<size_t>(axis)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  long size() const { return static_cast<long>(data_.size()); }
  Cplx* data() { return data_.data(); }
  const Cplx* data() const { return data_.data(); }

  Cplx& operator()(long i, long j, long k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  Cplx operator()(long i, long j, long k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  Cplx& operator()(long i, long j, long k, long l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  Cplx operator()(long i, long j, long k, long l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  // View as matrix splitting the axes at `split`: rows = prod(shape[0:split]),
  // cols = prod(shape[split:]).  Zero-copy (row-major layout).
  RowMajorMap matricize(int split) {
    auto [r, c] = split_dims(split);
    return RowMajorMap(data_.data(), r, c);
  }
  ConstRowMajorMap matricize(int split) const {
    auto [r, c] = split_dims(split);
    return ConstRowMajorMap(data_.data(), r, c);
  }

  // Reinterpret with a new shape of the same total size.
  Tensor reshaped(std::vector<long> shape) const {
    if (size_of(shape) != size())
      throw InternalConsistency("reshape size mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  Tensor permuted(const std::vector<int>& axes) const;

  // Contract axesA of *this with axesB of other (axes matched pairwise, in
  // order).  Result carries the free axes of *this followed by those of other.
  Tensor contract(const std::vector<int>& axes_a, const Tensor& other,
                  const std::vector<int>& axes_b) const;

  Tensor conjugated() const {
    Tensor t = *this;
    for (auto& v : t.data_) v = std::conj(v);
    return t;
  }

  double norm() const {
    double s = 0;
    for (const auto& v : data_) s += std::norm(v);
    return std::sqrt(s);
  }

  void scale(Cplx factor) {
    for (auto& v : data_) v *= factor;
  }

  static Tensor from_matrix(const DenseMatrix& m, std::vector<long> shape) {
    Tensor t(std::move(shape));
    RowMajorMap(t.data(), m.rows(), m.cols()) = m;
    return t;
  }

 private:
  std::pair<long, long> split_dims(int split) const {
    long r = 1, c = 1;
    for (int i = 0; i < rank(); ++i) (i < split ? r : c) *= shape_[i];
    return {r, c};
  }

  std::vector<long> shape_;
  std::vector<Cplx> data_;
};

inline Tensor Tensor::permuted(const std::vector<int>& axes) const {
  const int n = rank();
  std::vector<long> new_shape(n);
  for (int i = 0; i < n; ++i) new_shape[i] = shape_[axes[i]];
  Tensor out(new_shape);

  std::vector<long> old_strides(n, 1), new_strides_for_old(n, 0);
  for (int i = n - 2; i >= 0; --i)
    old_strides[i] = old_strides[i + 1] * shape_[i + 1];
  // stride in the output for each *old* axis
  std::vector<long> out_strides(n, 1);
  for (int i = n - 2; i >= 0; --i)
    out_strides[i] = out_strides[i + 1] * new_shape[i + 1];
  for (int i = 0; i < n; ++i) new_strides_for_old[axes[i]] = out_strides[i];

  const long total = size();
  std::vector<long> idx(n, 0);
  long dst = 0;
  for (long src = 0; src < total; ++src) {
    out.data_[dst] = data_[src];
    for (int ax = n - 1; ax >= 0; --ax) {
      dst += new_strides_for_old[ax];
      if (++idx[ax] < shape_[ax]) break;
      dst -= idx[ax] * new_strides_for_old[ax];
      idx[ax] = 0;
    }
  }
  return out;
}

inline Tensor Tensor::contract(const std::vector<int>& axes_a,
                               const Tensor& other,
                               const std::vector<int>& axes_b) const {
  if (axes_a.size() != axes_b.size())
    throw InternalConsistency("contract: axis count mismatch");
  const int na = rank(), nb = other.rank();
  const int nc = static_cast<int>(axes_a.size());

  std::vector<int> free_a, free_b;
  std::vector<bool> used_a(na, false), used_b(nb, false);
  for (int i = 0; i < nc; ++i) {
    if (dim(axes_a[i]) != other.dim(axes_b[i]))
      throw InternalConsistency("contract: dimension mismatch");
    used_a[axes_a[i]] = true;
    used_b[axes_b[i]] = true;
  }
  for (int i = 0; i < na; ++i)
    if (!used_a[i]) free_a.push_back(i);
  for (int i = 0; i < nb; ++i)
    if (!used_b[i]) free_b.push_back(i);

  std::vector<int> perm_a = free_a;
  perm_a.insert(perm_a.end(), axes_a.begin(), axes_a.end());
  std::vector<int> perm_b(axes_b.begin(), axes_b.end());
  perm_b.insert(perm_b.end(), free_b.begin(), free_b.end());

  Tensor pa = permuted(perm_a);
  Tensor pb = other.permuted(perm_b);

  long m = 1, k = 1, n = 1;
  std::vector<long> out_shape;
  for (int ax : free_a) {
    m *= dim(ax);
    out_shape.push_back(dim(ax));
  }
  for (int ax : axes_a) k *= dim(ax);
  for (int ax : free_b) {
    n *= other.dim(ax);
    out_shape.push_back(other.dim(ax));
  }
  if (out_shape.empty()) out_shape.push_back(1);

  Tensor out(out_shape);
  RowMajorMap(out.data(), m, n).noalias() =
      ConstRowMajorMap(pa.data(), m, k) * ConstRowMajorMap(pb.data(), k, n);
  return out;
}

}  // namespace adaptchi
