// Copyright (c) 2026 The occvla Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "occvla/rng.hpp"

namespace occvla {

enum class Dtype : uint8_t { f32 = 0, f64 = 1 };

inline size_t dtype_size(Dtype dt) { return dt == Dtype::f32 ? 4 : 8; }
const char* dtype_name(Dtype dt);

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorImpl;

// Dense n-dimensional array with row-major storage, an optional gradient
// buffer of identical shape/dtype, and an optional autodiff lineage node.
// Tensor is a cheap shared handle: copies alias the same storage. Data is
// immutable once an op has consumed the tensor; only leaf tensors may be
// mutated in place (data preparation, finite-difference probes).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, Dtype dt = Dtype::f32, bool requires_grad = false);
  static Tensor full(Shape shape, double value, Dtype dt = Dtype::f32);
  static Tensor scalar(double value, Dtype dt = Dtype::f32);
  static Tensor from_values(Shape shape, std::span<const double> values, Dtype dt = Dtype::f32,
                            bool requires_grad = false);
  // Seeded initializers; identical (stream, shape) -> bitwise identical data.
  static Tensor randn(Shape shape, RngStream stream, double stddev = 1.0, Dtype dt = Dtype::f32,
                      bool requires_grad = false);
  static Tensor rand_uniform(Shape shape, RngStream stream, double lo, double hi,
                             Dtype dt = Dtype::f32, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int ndim() const;
  int64_t dim(int i) const;  // negative indices allowed
  int64_t numel() const;
  Dtype dtype() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool v);

  double at(int64_t flat_index) const;
  double item() const;  // scalar tensors only
  std::vector<double> to_vector() const;
  // In-place write; leaf tensors only.
  void set(int64_t flat_index, double value);

  float* data_f32();
  const float* data_f32() const;
  double* data_f64();
  const double* data_f64() const;
  // Raw storage bytes (dtype-sized elements, row-major).
  std::span<const uint8_t> raw_bytes() const;

  bool has_grad() const;
  double grad_at(int64_t flat_index) const;
  std::vector<double> grad_to_vector() const;
  void zero_grad();
  double grad_l2norm() const;

  // Same storage, no lineage, requires_grad=false.
  Tensor detach() const;
  // Deep copy of the data as a leaf tensor.
  Tensor clone() const;
  Tensor astype(Dtype dt) const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  TensorImpl* impl() const { return impl_.get(); }
  std::shared_ptr<TensorImpl> impl_ptr() const { return impl_; }

  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Reverse-mode backward from a scalar loss. Gradients accumulate into the
// grad buffers of every reachable requires_grad tensor and keep
// accumulating across calls until zero_grad() is invoked.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables lineage recording in scope (evaluation / generation paths).
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// ---- arithmetic -----------------------------------------------------------
// Elementwise ops accept equal shapes, or a trailing-shape broadcast where
// b's shape is a suffix of a's, or a scalar b.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double v);
Tensor scale(const Tensor& a, double v);

// Batched matrix product: a [..., m, k] x b [k, n] or b [..., k, n] with
// identical leading dims.
Tensor matmul(const Tensor& a, const Tensor& b);

// ---- movement -------------------------------------------------------------
Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<int>& axes);
Tensor transpose_last(const Tensor& a);
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor slice(const Tensor& a, int axis, int64_t start, int64_t length);

// ---- nonlinearities & reductions -------------------------------------------
Tensor gelu(const Tensor& a);  // exact erf form
Tensor softmax(const Tensor& a, int axis);
// Attention softmax with a boolean keep-mask. mask shape must equal the
// score shape, or match it with the head axis (axis 1) dropped, or be the
// trailing [Tq, Tk] matrix shared across all leading dims. Masked-out
// entries get probability 0.
Tensor masked_softmax(const Tensor& scores, const std::vector<uint8_t>& mask,
                      const Shape& mask_shape);
Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps = 1e-5);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);

// ---- indexed ---------------------------------------------------------------
Tensor embedding_lookup(const Tensor& table, std::span<const int32_t> ids, const Shape& ids_shape);

// Mean negative log-likelihood over non-ignored rows; logits [N, K].
// Optional per-class weights turn the mean into a weight-normalized mean.
// All rows ignored -> 0 with zero gradient.
Tensor cross_entropy(const Tensor& logits, std::span<const int32_t> targets, int32_t ignore_index,
                     std::span<const double> class_weights = {});
Tensor mse(const Tensor& pred, const Tensor& target);

}  // namespace occvla
