// Copyright (c) 2026 The occvla Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "occvla/errors.hpp"
#include "occvla/tensor.hpp"

namespace occvla {

struct Node {
  std::vector<std::shared_ptr<TensorImpl>> parents;
  // Reads out.grad, accumulates into parents' grads.
  std::function<void(TensorImpl& out)> backprop;
};

struct TensorImpl {
  Shape shape;
  Dtype dtype = Dtype::f32;
  int64_t n = 0;
  // Exactly one of these is non-null; shared so reshape/detach are zero-copy.
  std::shared_ptr<std::vector<float>> f32;
  std::shared_ptr<std::vector<double>> f64;
  bool requires_grad = false;
  // Lazily allocated, always owned by this impl (never shared).
  std::vector<float> grad_f32;
  std::vector<double> grad_f64;
  std::unique_ptr<Node> node;
};

template <typename T>
const std::vector<T>& cdata(const TensorImpl& t);
template <>
inline const std::vector<float>& cdata<float>(const TensorImpl& t) { return *t.f32; }
template <>
inline const std::vector<double>& cdata<double>(const TensorImpl& t) { return *t.f64; }

template <typename T>
std::vector<T>& mdata(TensorImpl& t);
template <>
inline std::vector<float>& mdata<float>(TensorImpl& t) { return *t.f32; }
template <>
inline std::vector<double>& mdata<double>(TensorImpl& t) { return *t.f64; }

template <typename T>
std::vector<T>& grad_of(TensorImpl& t);
template <>
inline std::vector<float>& grad_of<float>(TensorImpl& t) { return t.grad_f32; }
template <>
inline std::vector<double>& grad_of<double>(TensorImpl& t) { return t.grad_f64; }

void ensure_grad(TensorImpl& t);
bool grad_allocated(const TensorImpl& t);

std::shared_ptr<TensorImpl> alloc_impl(Shape shape, Dtype dt);

// Builds the op result: runs with requires_grad/lineage wiring only when
// grad mode is on and some parent requires grad.
Tensor make_op_result(std::shared_ptr<TensorImpl> out,
                      std::vector<std::shared_ptr<TensorImpl>> parents,
                      std::function<void(TensorImpl&)> backprop);

#define OCCVLA_DISPATCH(dt, ...)                \
  do {                                          \
    if ((dt) == Dtype::f32) {                   \
      using scalar_t = float;                   \
      __VA_ARGS__                               \
    } else {                                    \
      using scalar_t = double;                  \
      __VA_ARGS__                               \
    }                                           \
  } while (0)

}  // namespace occvla
