// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Dense row-major tensors and the handful of matrix kernels the model needs.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <type_traits>
#include <vector>

#include "phonmt/error.hpp"

namespace phonmt {

// Accumulator type one step wider than T.
template <typename T>
using wide_t = std::conditional_t<std::is_same_v<T, float>, double, long double>;

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, T fill = T{})
      : dims_(std::move(dims)), data_(element_count(dims_), fill) {}

  static Tensor matrix(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
  static Tensor vector(std::size_t n) { return Tensor({n}); }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix view: leading extent x product of the rest.
  std::size_t rows() const { return dims_.empty() ? 0 : dims_.front(); }
  std::size_t cols() const { return dims_.empty() ? 0 : data_.size() / std::max<std::size_t>(dims_.front(), 1); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols(), cols()}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols(), cols()}; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(T{}); }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(dims_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor& other) const = default;

 private:
  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> dims_;
  std::vector<T> data_;
};

namespace ops {

// out = a * b, a: n x k, b: k x m.
template <typename T>
void matmul(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  assert(b.rows() == k);
  if (out.rows() != n || out.cols() != m) out = Tensor<T>::matrix(n, m);
  out.zero();
  for (std::size_t i = 0; i < n; ++i) {
    T* o = out.data() + i * m;
    const T* ar = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ar[p];
      const T* br = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

// out += a * b^T, a: n x k, b: m x k.
template <typename T>
void matmul_nt_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  assert(b.cols() == k && out.rows() == n && out.cols() == m);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ar = a.data() + i * k;
    T* o = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const T* br = b.data() + j * k;
      T s{};
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      o[j] += s;
    }
  }
}

// out += a^T * b, a: n x k, b: n x m, out: k x m.
template <typename T>
void matmul_tn_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  assert(b.rows() == n && out.rows() == k && out.cols() == m);
  for (std::size_t i = 0; i < n; ++i) {
    const T* ar = a.data() + i * k;
    const T* br = b.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ar[p];
      T* o = out.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  assert(dst.size() == src.size());
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

template <typename T>
void add_row_vector(Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t m = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    T* r = x.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) r[j] += bias[j];
  }
}

// bias_grad += column sums of dy.
template <typename T>
void sum_rows_acc(const Tensor<T>& dy, Tensor<T>& bias_grad) {
  const std::size_t m = dy.cols();
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    const T* r = dy.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) bias_grad[j] += r[j];
  }
}

// In-place numerically stable softmax of a row.
template <typename T>
void softmax_inplace(std::span<T> row) {
  if (row.empty()) return;
  T mx = row[0];
  for (T v : row) mx = std::max(mx, v);
  T sum{};
  for (T& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (T& v : row) v /= sum;
}

}  // namespace ops

}  // namespace phonmt
