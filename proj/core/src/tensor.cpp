// Copyright (c) 2026 The occvla Authors
// SPDX-License-Identifier: Apache-2.0
//
// Storage, the reverse-mode engine, and the arithmetic/movement ops.

#include "occvla/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "tensor_internal.hpp"

namespace occvla {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

const char* dtype_name(Dtype dt) { return dt == Dtype::f32 ? "float32" : "float64"; }

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::shared_ptr<TensorImpl> alloc_impl(Shape shape, Dtype dt) {
  for (int64_t d : shape) {
    if (d <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->n = shape_numel(shape);
  impl->shape = std::move(shape);
  impl->dtype = dt;
  if (dt == Dtype::f32) {
    impl->f32 = std::make_shared<std::vector<float>>(impl->n, 0.0f);
  } else {
    impl->f64 = std::make_shared<std::vector<double>>(impl->n, 0.0);
  }
  return impl;
}

void ensure_grad(TensorImpl& t) {
  if (t.dtype == Dtype::f32) {
    if (t.grad_f32.empty()) t.grad_f32.assign(static_cast<size_t>(t.n), 0.0f);
  } else {
    if (t.grad_f64.empty()) t.grad_f64.assign(static_cast<size_t>(t.n), 0.0);
  }
}

bool grad_allocated(const TensorImpl& t) {
  return t.dtype == Dtype::f32 ? !t.grad_f32.empty() : !t.grad_f64.empty();
}

Tensor make_op_result(std::shared_ptr<TensorImpl> out,
                      std::vector<std::shared_ptr<TensorImpl>> parents,
                      std::function<void(TensorImpl&)> backprop) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) {
      if (p->requires_grad) {
        needs = true;
        break;
      }
    }
  }
  if (needs) {
    out->requires_grad = true;
    out->node = std::make_unique<Node>();
    out->node->parents = std::move(parents);
    out->node->backprop = std::move(backprop);
  }
  return Tensor(std::move(out));
}

// ---- Tensor handle ----------------------------------------------------------

Tensor Tensor::zeros(Shape shape, Dtype dt, bool requires_grad) {
  auto impl = alloc_impl(std::move(shape), dt);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, double value, Dtype dt) {
  auto impl = alloc_impl(std::move(shape), dt);
  OCCVLA_DISPATCH(dt, {
    auto& v = mdata<scalar_t>(*impl);
    std::fill(v.begin(), v.end(), static_cast<scalar_t>(value));
  });
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, Dtype dt) { return full(Shape{}, value, dt); }

Tensor Tensor::from_values(Shape shape, std::span<const double> values, Dtype dt,
                           bool requires_grad) {
  auto impl = alloc_impl(std::move(shape), dt);
  if (static_cast<int64_t>(values.size()) != impl->n) {
    throw ShapeError("from_values: " + std::to_string(values.size()) + " values for shape " +
                     shape_str(impl->shape));
  }
  OCCVLA_DISPATCH(dt, {
    auto& v = mdata<scalar_t>(*impl);
    for (int64_t i = 0; i < impl->n; ++i) v[i] = static_cast<scalar_t>(values[i]);
  });
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::randn(Shape shape, RngStream stream, double stddev, Dtype dt, bool requires_grad) {
  auto impl = alloc_impl(std::move(shape), dt);
  OCCVLA_DISPATCH(dt, {
    auto& v = mdata<scalar_t>(*impl);
    for (int64_t i = 0; i < impl->n; ++i) v[i] = static_cast<scalar_t>(stream.normal() * stddev);
  });
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::rand_uniform(Shape shape, RngStream stream, double lo, double hi, Dtype dt,
                            bool requires_grad) {
  auto impl = alloc_impl(std::move(shape), dt);
  OCCVLA_DISPATCH(dt, {
    auto& v = mdata<scalar_t>(*impl);
    for (int64_t i = 0; i < impl->n; ++i) v[i] = static_cast<scalar_t>(stream.uniform(lo, hi));
  });
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

const Shape& Tensor::shape() const { return impl_->shape; }
int Tensor::ndim() const { return static_cast<int>(impl_->shape.size()); }

int64_t Tensor::dim(int i) const {
  int nd = ndim();
  if (i < 0) i += nd;
  if (i < 0 || i >= nd) throw IndexError("dim index out of range");
  return impl_->shape[static_cast<size_t>(i)];
}

int64_t Tensor::numel() const { return impl_->n; }
Dtype Tensor::dtype() const { return impl_->dtype; }
bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool v) {
  impl_->requires_grad = v;
  return *this;
}

double Tensor::at(int64_t i) const {
  if (i < 0 || i >= impl_->n) throw IndexError("flat index out of range");
  return impl_->dtype == Dtype::f32 ? static_cast<double>((*impl_->f32)[i]) : (*impl_->f64)[i];
}

double Tensor::item() const {
  if (impl_->n != 1) throw ContractError("item() requires a scalar tensor, got " + shape_str(shape()));
  return at(0);
}

std::vector<double> Tensor::to_vector() const {
  std::vector<double> out(static_cast<size_t>(impl_->n));
  OCCVLA_DISPATCH(impl_->dtype, {
    const auto& v = cdata<scalar_t>(*impl_);
    for (int64_t i = 0; i < impl_->n; ++i) out[i] = static_cast<double>(v[i]);
  });
  return out;
}

void Tensor::set(int64_t i, double value) {
  if (impl_->node) throw ContractError("set() is only allowed on leaf tensors");
  if (i < 0 || i >= impl_->n) throw IndexError("flat index out of range");
  if (impl_->dtype == Dtype::f32) {
    (*impl_->f32)[i] = static_cast<float>(value);
  } else {
    (*impl_->f64)[i] = value;
  }
}

float* Tensor::data_f32() {
  if (impl_->dtype != Dtype::f32) throw ContractError("tensor is not float32");
  return impl_->f32->data();
}
const float* Tensor::data_f32() const { return const_cast<Tensor*>(this)->data_f32(); }
double* Tensor::data_f64() {
  if (impl_->dtype != Dtype::f64) throw ContractError("tensor is not float64");
  return impl_->f64->data();
}
const double* Tensor::data_f64() const { return const_cast<Tensor*>(this)->data_f64(); }

std::span<const uint8_t> Tensor::raw_bytes() const {
  const void* p = impl_->dtype == Dtype::f32 ? static_cast<const void*>(impl_->f32->data())
                                             : static_cast<const void*>(impl_->f64->data());
  return {static_cast<const uint8_t*>(p), static_cast<size_t>(impl_->n) * dtype_size(impl_->dtype)};
}

bool Tensor::has_grad() const { return impl_ && grad_allocated(*impl_); }

double Tensor::grad_at(int64_t i) const {
  if (!has_grad()) throw ContractError("tensor has no gradient");
  if (i < 0 || i >= impl_->n) throw IndexError("flat index out of range");
  return impl_->dtype == Dtype::f32 ? static_cast<double>(impl_->grad_f32[i]) : impl_->grad_f64[i];
}

std::vector<double> Tensor::grad_to_vector() const {
  if (!has_grad()) return std::vector<double>(static_cast<size_t>(impl_->n), 0.0);
  std::vector<double> out(static_cast<size_t>(impl_->n));
  for (int64_t i = 0; i < impl_->n; ++i) out[i] = grad_at(i);
  return out;
}

void Tensor::zero_grad() {
  impl_->grad_f32.clear();
  impl_->grad_f64.clear();
}

double Tensor::grad_l2norm() const {
  if (!has_grad()) return 0.0;
  double s = 0.0;
  for (int64_t i = 0; i < impl_->n; ++i) {
    double g = grad_at(i);
    s += g * g;
  }
  return std::sqrt(s);
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->dtype = impl_->dtype;
  impl->n = impl_->n;
  impl->f32 = impl_->f32;
  impl->f64 = impl_->f64;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
  auto impl = alloc_impl(impl_->shape, impl_->dtype);
  OCCVLA_DISPATCH(impl_->dtype, { mdata<scalar_t>(*impl) = cdata<scalar_t>(*impl_); });
  return Tensor(std::move(impl));
}

Tensor Tensor::astype(Dtype dt) const {
  if (dt == impl_->dtype) return clone();
  auto impl = alloc_impl(impl_->shape, dt);
  if (dt == Dtype::f64) {
    auto& out = mdata<double>(*impl);
    const auto& in = cdata<float>(*impl_);
    for (int64_t i = 0; i < impl_->n; ++i) out[i] = static_cast<double>(in[i]);
  } else {
    auto& out = mdata<float>(*impl);
    const auto& in = cdata<double>(*impl_);
    for (int64_t i = 0; i < impl_->n; ++i) out[i] = static_cast<float>(in[i]);
  }
  return Tensor(std::move(impl));
}

// ---- engine -----------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward expects a defined scalar loss tensor");
  }
  TensorImpl* root = loss.impl();
  if (!root->requires_grad) {
    throw ContractError("backward: loss does not require grad (no lineage)");
  }

  // Iterative post-order DFS over requires_grad ancestors with lineage.
  std::vector<TensorImpl*> topo;
  std::unordered_set<TensorImpl*> visited;
  struct Frame {
    TensorImpl* impl;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  if (root->node) {
    stack.push_back({root, 0});
    visited.insert(root);
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    Node& node = *f.impl->node;
    if (f.next_parent < node.parents.size()) {
      TensorImpl* p = node.parents[f.next_parent++].get();
      if (p->requires_grad && p->node && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(f.impl);
      stack.pop_back();
    }
  }

  ensure_grad(*root);
  if (root->dtype == Dtype::f32) {
    root->grad_f32[0] += 1.0f;
  } else {
    root->grad_f64[0] += 1.0;
  }

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    TensorImpl* t = *it;
    ensure_grad(*t);
    t->node->backprop(*t);
  }
}

// ---- elementwise arithmetic ---------------------------------------------------

namespace {

// b broadcasts over a when b.shape is a trailing suffix of a.shape (a
// scalar b is the empty suffix).
void check_broadcast(const TensorImpl& a, const TensorImpl& b, const char* op) {
  if (a.dtype != b.dtype) {
    throw ShapeError(std::string(op) + ": dtype mismatch " + dtype_name(a.dtype) + " vs " +
                     dtype_name(b.dtype));
  }
  if (b.shape.size() > a.shape.size()) {
    throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(b.shape) + " onto " +
                     shape_str(a.shape));
  }
  size_t off = a.shape.size() - b.shape.size();
  for (size_t i = 0; i < b.shape.size(); ++i) {
    if (a.shape[off + i] != b.shape[i]) {
      throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                       shape_str(b.shape));
    }
  }
}

enum class BinOp { add, sub, mul };

Tensor binary_op(const Tensor& ta, const Tensor& tb, BinOp op, const char* name) {
  auto a = ta.impl_ptr();
  auto b = tb.impl_ptr();
  check_broadcast(*a, *b, name);
  const int64_t n = a->n;
  const int64_t nb = b->n;
  auto out = alloc_impl(a->shape, a->dtype);
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    const scalar_t* pb = cdata<scalar_t>(*b).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    switch (op) {
      case BinOp::add:
        for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i % nb];
        break;
      case BinOp::sub:
        for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i % nb];
        break;
      case BinOp::mul:
        for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i % nb];
        break;
    }
  });
  return make_op_result(std::move(out), {a, b}, [a, b, op, n, nb](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const scalar_t* g = grad_of<scalar_t>(o).data();
      if (a->requires_grad) {
        ensure_grad(*a);
        scalar_t* ga = grad_of<scalar_t>(*a).data();
        if (op == BinOp::mul) {
          const scalar_t* pb = cdata<scalar_t>(*b).data();
          for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * pb[i % nb];
        } else {
          for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
        }
      }
      if (b->requires_grad) {
        ensure_grad(*b);
        scalar_t* gb = grad_of<scalar_t>(*b).data();
        switch (op) {
          case BinOp::add:
            for (int64_t i = 0; i < n; ++i) gb[i % nb] += g[i];
            break;
          case BinOp::sub:
            for (int64_t i = 0; i < n; ++i) gb[i % nb] -= g[i];
            break;
          case BinOp::mul: {
            const scalar_t* pa = cdata<scalar_t>(*a).data();
            for (int64_t i = 0; i < n; ++i) gb[i % nb] += g[i] * pa[i];
            break;
          }
        }
      }
    });
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinOp::mul, "mul"); }

Tensor add_scalar(const Tensor& ta, double v) {
  auto a = ta.impl_ptr();
  auto out = alloc_impl(a->shape, a->dtype);
  const int64_t n = a->n;
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    const scalar_t c = static_cast<scalar_t>(v);
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + c;
  });
  return make_op_result(std::move(out), {a}, [a, n](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const scalar_t* g = grad_of<scalar_t>(o).data();
      ensure_grad(*a);
      scalar_t* ga = grad_of<scalar_t>(*a).data();
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    });
  });
}

Tensor scale(const Tensor& ta, double v) {
  auto a = ta.impl_ptr();
  auto out = alloc_impl(a->shape, a->dtype);
  const int64_t n = a->n;
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    const scalar_t c = static_cast<scalar_t>(v);
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * c;
  });
  return make_op_result(std::move(out), {a}, [a, n, v](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const scalar_t* g = grad_of<scalar_t>(o).data();
      ensure_grad(*a);
      scalar_t* ga = grad_of<scalar_t>(*a).data();
      const scalar_t c = static_cast<scalar_t>(v);
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * c;
    });
  });
}

// ---- matmul -------------------------------------------------------------------

namespace {

// C[m,n] += A[m,k] * B[k,n]
template <typename T>
void mm_nn(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
template <typename T>
void mm_nt(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = 0;
      for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
template <typename T>
void mm_tn(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const T av = arow[p];
      T* crow = c + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& ta, const Tensor& tb) {
  auto a = ta.impl_ptr();
  auto b = tb.impl_ptr();
  if (a->dtype != b->dtype) {
    throw ShapeError("matmul: dtype mismatch " + std::string(dtype_name(a->dtype)) + " vs " +
                     dtype_name(b->dtype));
  }
  if (a->shape.size() < 2 || b->shape.size() < 2) {
    throw ShapeError("matmul: operands must have >=2 dims, got " + shape_str(a->shape) + " x " +
                     shape_str(b->shape));
  }
  const bool b_batched = b->shape.size() > 2;
  if (b_batched && b->shape.size() != a->shape.size()) {
    throw ShapeError("matmul: batch rank mismatch " + shape_str(a->shape) + " x " +
                     shape_str(b->shape));
  }
  const int64_t m = a->shape[a->shape.size() - 2];
  const int64_t k = a->shape[a->shape.size() - 1];
  const int64_t kb = b->shape[b->shape.size() - 2];
  const int64_t n = b->shape[b->shape.size() - 1];
  if (k != kb) {
    throw ShapeError("matmul: inner extents disagree for " + shape_str(a->shape) + " x " +
                     shape_str(b->shape));
  }
  int64_t batch = 1;
  Shape out_shape;
  for (size_t i = 0; i + 2 < a->shape.size(); ++i) {
    batch *= a->shape[i];
    out_shape.push_back(a->shape[i]);
    if (b_batched && b->shape[i] != a->shape[i]) {
      throw ShapeError("matmul: batch extents disagree for " + shape_str(a->shape) + " x " +
                       shape_str(b->shape));
    }
  }
  out_shape.push_back(m);
  out_shape.push_back(n);

  auto out = alloc_impl(out_shape, a->dtype);
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    const scalar_t* pb = cdata<scalar_t>(*b).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    for (int64_t bi = 0; bi < batch; ++bi) {
      mm_nn(pa + bi * m * k, b_batched ? pb + bi * k * n : pb, po + bi * m * n, m, k, n);
    }
  });

  return make_op_result(
      std::move(out), {a, b}, [a, b, batch, m, k, n, b_batched](TensorImpl& o) {
        OCCVLA_DISPATCH(o.dtype, {
          const scalar_t* g = grad_of<scalar_t>(o).data();
          const scalar_t* pa = cdata<scalar_t>(*a).data();
          const scalar_t* pb = cdata<scalar_t>(*b).data();
          if (a->requires_grad) {
            ensure_grad(*a);
            scalar_t* ga = grad_of<scalar_t>(*a).data();
            for (int64_t bi = 0; bi < batch; ++bi) {
              mm_nt(g + bi * m * n, b_batched ? pb + bi * k * n : pb, ga + bi * m * k, m, n, k);
            }
          }
          if (b->requires_grad) {
            ensure_grad(*b);
            scalar_t* gb = grad_of<scalar_t>(*b).data();
            for (int64_t bi = 0; bi < batch; ++bi) {
              mm_tn(pa + bi * m * k, g + bi * m * n, b_batched ? gb + bi * k * n : gb, m, k, n);
            }
          }
        });
      });
}

// ---- movement -------------------------------------------------------------------

Tensor reshape(const Tensor& ta, Shape shape) {
  auto a = ta.impl_ptr();
  int64_t n = shape_numel(shape);
  if (n != a->n) {
    throw ShapeError("reshape: cannot view " + shape_str(a->shape) + " as " + shape_str(shape));
  }
  auto out = std::make_shared<TensorImpl>();
  out->shape = std::move(shape);
  out->dtype = a->dtype;
  out->n = n;
  out->f32 = a->f32;  // zero-copy: row-major reshape preserves layout
  out->f64 = a->f64;
  return make_op_result(std::move(out), {a}, [a, n](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const scalar_t* g = grad_of<scalar_t>(o).data();
      ensure_grad(*a);
      scalar_t* ga = grad_of<scalar_t>(*a).data();
      for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    });
  });
}

namespace {

std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> st(s.size());
  int64_t acc = 1;
  for (size_t i = s.size(); i-- > 0;) {
    st[i] = acc;
    acc *= s[i];
  }
  return st;
}

// out[idx] = in[map(idx)] for a permutation of axes; accumulate=true adds.
template <typename T, bool accumulate>
void permute_kernel(const T* in, T* out, const Shape& in_shape, const std::vector<int>& axes) {
  const size_t nd = in_shape.size();
  Shape out_shape(nd);
  for (size_t i = 0; i < nd; ++i) out_shape[i] = in_shape[static_cast<size_t>(axes[i])];
  auto in_strides = row_major_strides(in_shape);
  std::vector<int64_t> out_axis_in_stride(nd);
  for (size_t i = 0; i < nd; ++i) out_axis_in_stride[i] = in_strides[static_cast<size_t>(axes[i])];
  const int64_t n = shape_numel(in_shape);
  std::vector<int64_t> idx(nd, 0);
  int64_t in_off = 0;
  for (int64_t flat = 0; flat < n; ++flat) {
    if constexpr (accumulate) {
      out[flat] += in[in_off];
    } else {
      out[flat] = in[in_off];
    }
    // odometer increment over the output index space
    for (size_t d = nd; d-- > 0;) {
      idx[d]++;
      in_off += out_axis_in_stride[d];
      if (idx[d] < out_shape[d]) break;
      in_off -= out_axis_in_stride[d] * out_shape[d];
      idx[d] = 0;
    }
  }
}

}  // namespace

Tensor permute(const Tensor& ta, const std::vector<int>& axes) {
  auto a = ta.impl_ptr();
  const size_t nd = a->shape.size();
  if (axes.size() != nd) throw ShapeError("permute: axes rank mismatch for " + shape_str(a->shape));
  std::vector<bool> seen(nd, false);
  for (int ax : axes) {
    if (ax < 0 || static_cast<size_t>(ax) >= nd || seen[static_cast<size_t>(ax)]) {
      throw ShapeError("permute: invalid axes for " + shape_str(a->shape));
    }
    seen[static_cast<size_t>(ax)] = true;
  }
  Shape out_shape(nd);
  for (size_t i = 0; i < nd; ++i) out_shape[i] = a->shape[static_cast<size_t>(axes[i])];
  auto out = alloc_impl(out_shape, a->dtype);
  OCCVLA_DISPATCH(a->dtype, {
    permute_kernel<scalar_t, false>(cdata<scalar_t>(*a).data(), mdata<scalar_t>(*out).data(),
                                    a->shape, axes);
  });
  // Backward permutes the output grad back through the inverse axes.
  std::vector<int> inv(nd);
  for (size_t i = 0; i < nd; ++i) inv[static_cast<size_t>(axes[i])] = static_cast<int>(i);
  Shape o_shape = out_shape;
  return make_op_result(std::move(out), {a}, [a, inv, o_shape](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      ensure_grad(*a);
      permute_kernel<scalar_t, true>(grad_of<scalar_t>(o).data(), grad_of<scalar_t>(*a).data(),
                                     o_shape, inv);
    });
  });
}

Tensor transpose_last(const Tensor& a) {
  const int nd = a.ndim();
  if (nd < 2) throw ShapeError("transpose_last needs >=2 dims, got " + shape_str(a.shape()));
  std::vector<int> axes(static_cast<size_t>(nd));
  std::iota(axes.begin(), axes.end(), 0);
  std::swap(axes[static_cast<size_t>(nd) - 1], axes[static_cast<size_t>(nd) - 2]);
  return permute(a, axes);
}

namespace {

int normalize_axis(int axis, size_t nd, const char* op) {
  int a = axis;
  if (a < 0) a += static_cast<int>(nd);
  if (a < 0 || static_cast<size_t>(a) >= nd) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for rank " +
                     std::to_string(nd));
  }
  return a;
}

}  // namespace

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const auto& first = *parts[0].impl();
  const size_t nd = first.shape.size();
  const int ax = normalize_axis(axis, nd, "concat");
  Shape out_shape = first.shape;
  int64_t axis_total = 0;
  for (const Tensor& t : parts) {
    const auto& ti = *t.impl();
    if (ti.dtype != first.dtype) throw ShapeError("concat: dtype mismatch");
    if (ti.shape.size() != nd) throw ShapeError("concat: rank mismatch");
    for (size_t i = 0; i < nd; ++i) {
      if (i != static_cast<size_t>(ax) && ti.shape[i] != first.shape[i]) {
        throw ShapeError("concat: shape mismatch " + shape_str(ti.shape) + " vs " +
                         shape_str(first.shape));
      }
    }
    axis_total += ti.shape[static_cast<size_t>(ax)];
  }
  out_shape[static_cast<size_t>(ax)] = axis_total;

  int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < static_cast<size_t>(ax); ++i) outer *= out_shape[i];
  for (size_t i = static_cast<size_t>(ax) + 1; i < nd; ++i) inner *= out_shape[i];

  auto out = alloc_impl(out_shape, first.dtype);
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::vector<int64_t> part_axis(parts.size());
  for (size_t p = 0; p < parts.size(); ++p) {
    parents.push_back(parts[p].impl_ptr());
    part_axis[p] = parts[p].impl()->shape[static_cast<size_t>(ax)];
  }
  OCCVLA_DISPATCH(first.dtype, {
    scalar_t* po = mdata<scalar_t>(*out).data();
    int64_t axis_off = 0;
    for (size_t p = 0; p < parents.size(); ++p) {
      const scalar_t* pi = cdata<scalar_t>(*parents[p]).data();
      const int64_t alen = part_axis[p];
      for (int64_t o = 0; o < outer; ++o) {
        std::memcpy(po + (o * axis_total + axis_off) * inner, pi + o * alen * inner,
                    static_cast<size_t>(alen * inner) * sizeof(scalar_t));
      }
      axis_off += alen;
    }
  });
  return make_op_result(std::move(out), parents,
                        [parents, part_axis, outer, inner, axis_total](TensorImpl& o) {
                          OCCVLA_DISPATCH(o.dtype, {
                            const scalar_t* g = grad_of<scalar_t>(o).data();
                            int64_t axis_off = 0;
                            for (size_t p = 0; p < parents.size(); ++p) {
                              const int64_t alen = part_axis[p];
                              if (parents[p]->requires_grad) {
                                ensure_grad(*parents[p]);
                                scalar_t* gp = grad_of<scalar_t>(*parents[p]).data();
                                for (int64_t ou = 0; ou < outer; ++ou) {
                                  const scalar_t* gsrc = g + (ou * axis_total + axis_off) * inner;
                                  scalar_t* gdst = gp + ou * alen * inner;
                                  for (int64_t i = 0; i < alen * inner; ++i) gdst[i] += gsrc[i];
                                }
                              }
                              axis_off += alen;
                            }
                          });
                        });
}

Tensor slice(const Tensor& ta, int axis, int64_t start, int64_t length) {
  auto a = ta.impl_ptr();
  const size_t nd = a->shape.size();
  const int ax = normalize_axis(axis, nd, "slice");
  const int64_t alen = a->shape[static_cast<size_t>(ax)];
  if (start < 0 || length <= 0 || start + length > alen) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") invalid for axis extent " +
                     std::to_string(alen));
  }
  Shape out_shape = a->shape;
  out_shape[static_cast<size_t>(ax)] = length;
  int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < static_cast<size_t>(ax); ++i) outer *= a->shape[i];
  for (size_t i = static_cast<size_t>(ax) + 1; i < nd; ++i) inner *= a->shape[i];

  auto out = alloc_impl(out_shape, a->dtype);
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    for (int64_t o = 0; o < outer; ++o) {
      std::memcpy(po + o * length * inner, pa + (o * alen + start) * inner,
                  static_cast<size_t>(length * inner) * sizeof(scalar_t));
    }
  });
  return make_op_result(std::move(out), {a}, [a, outer, inner, alen, start, length](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const scalar_t* g = grad_of<scalar_t>(o).data();
      ensure_grad(*a);
      scalar_t* ga = grad_of<scalar_t>(*a).data();
      for (int64_t ou = 0; ou < outer; ++ou) {
        const scalar_t* gsrc = g + ou * length * inner;
        scalar_t* gdst = ga + (ou * alen + start) * inner;
        for (int64_t i = 0; i < length * inner; ++i) gdst[i] += gsrc[i];
      }
    });
  });
}

}  // namespace occvla
