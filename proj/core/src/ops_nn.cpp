// Copyright (c) 2026 The occvla Authors
// SPDX-License-Identifier: Apache-2.0
//
// Nonlinearities, normalization, reductions, and losses.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "occvla/tensor.hpp"
#include "tensor_internal.hpp"

namespace occvla {

namespace {

constexpr double inv_sqrt2 = 0.7071067811865475244;
constexpr double inv_sqrt2pi = 0.3989422804014326779;

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

Tensor gelu(const Tensor& ta) {
  auto a = ta.impl_ptr();
  auto out = alloc_impl(a->shape, a->dtype);
  const int64_t n = a->n;
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    for (int64_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(pa[i]);
      po[i] = static_cast<scalar_t>(x * 0.5 * (1.0 + std::erf(x * inv_sqrt2)));
    }
  });
  return make_op_result(std::move(out), {a}, [a, n](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const scalar_t* g = grad_of<scalar_t>(o).data();
      const scalar_t* pa = cdata<scalar_t>(*a).data();
      ensure_grad(*a);
      scalar_t* ga = grad_of<scalar_t>(*a).data();
      for (int64_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(pa[i]);
        const double phi = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
        ga[i] += static_cast<scalar_t>(static_cast<double>(g[i]) * (phi + x * pdf));
      }
    });
  });
}

// Shared softmax core over a strided lane decomposition [outer, n, inner].
namespace {

template <typename T>
void softmax_lane_forward(const T* in, T* out, int64_t outer, int64_t n, int64_t inner) {
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in_i = 0; in_i < inner; ++in_i) {
      const T* src = in + o * n * inner + in_i;
      T* dst = out + o * n * inner + in_i;
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t j = 0; j < n; ++j) mx = std::max(mx, static_cast<double>(src[j * inner]));
      double denom = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        const double e = std::exp(static_cast<double>(src[j * inner]) - mx);
        dst[j * inner] = static_cast<T>(e);
        denom += e;
      }
      const double inv = 1.0 / denom;
      for (int64_t j = 0; j < n; ++j) dst[j * inner] = static_cast<T>(static_cast<double>(dst[j * inner]) * inv);
    }
  }
}

template <typename T>
void softmax_lane_backward(const T* y, const T* g, T* gx, int64_t outer, int64_t n, int64_t inner) {
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in_i = 0; in_i < inner; ++in_i) {
      const T* py = y + o * n * inner + in_i;
      const T* pg = g + o * n * inner + in_i;
      T* pgx = gx + o * n * inner + in_i;
      double dot = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        dot += static_cast<double>(py[j * inner]) * static_cast<double>(pg[j * inner]);
      }
      for (int64_t j = 0; j < n; ++j) {
        const double yj = static_cast<double>(py[j * inner]);
        pgx[j * inner] += static_cast<T>(yj * (static_cast<double>(pg[j * inner]) - dot));
      }
    }
  }
}

}  // namespace

Tensor softmax(const Tensor& ta, int axis) {
  auto a = ta.impl_ptr();
  const int ax = normalize_axis(axis, a->shape.size(), "softmax");
  const int64_t n_axis = a->shape[static_cast<size_t>(ax)];
  int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < static_cast<size_t>(ax); ++i) outer *= a->shape[i];
  for (size_t i = static_cast<size_t>(ax) + 1; i < a->shape.size(); ++i) inner *= a->shape[i];

  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    for (int64_t i = 0; i < a->n; ++i) {
      if (!std::isfinite(static_cast<double>(pa[i]))) {
        throw NumericError("softmax: non-finite input");
      }
    }
  });

  auto out = alloc_impl(a->shape, a->dtype);
  OCCVLA_DISPATCH(a->dtype, {
    softmax_lane_forward(cdata<scalar_t>(*a).data(), mdata<scalar_t>(*out).data(), outer, n_axis,
                         inner);
  });
  auto out_keep = out;  // backward needs the forward output
  return make_op_result(std::move(out), {a}, [a, out_keep, outer, n_axis, inner](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      ensure_grad(*a);
      softmax_lane_backward(cdata<scalar_t>(*out_keep).data(), grad_of<scalar_t>(o).data(),
                            grad_of<scalar_t>(*a).data(), outer, n_axis, inner);
    });
  });
}

Tensor masked_softmax(const Tensor& tscores, const std::vector<uint8_t>& mask,
                      const Shape& mask_shape) {
  auto a = tscores.impl_ptr();
  const size_t nd = a->shape.size();
  if (nd < 2) throw ShapeError("masked_softmax: scores must have >=2 dims");
  const int64_t tk = a->shape[nd - 1];
  const int64_t lanes = a->n / tk;
  if (shape_numel(mask_shape) != static_cast<int64_t>(mask.size())) {
    throw ShapeError("masked_softmax: mask data does not match its shape");
  }

  // Resolve how a lane index maps to a mask row.
  enum class MaskForm { exact, drop_head_axis, trailing };
  MaskForm form;
  if (mask_shape == a->shape) {
    form = MaskForm::exact;
  } else if (nd == 4 && mask_shape.size() == 3 && mask_shape[0] == a->shape[0] &&
             mask_shape[1] == a->shape[2] && mask_shape[2] == a->shape[3]) {
    form = MaskForm::drop_head_axis;
  } else if (mask_shape.size() == 2 && mask_shape[0] == a->shape[nd - 2] &&
             mask_shape[1] == tk) {
    form = MaskForm::trailing;
  } else {
    throw ShapeError("masked_softmax: mask shape " + shape_str(mask_shape) +
                     " incompatible with scores " + shape_str(a->shape));
  }
  const int64_t heads = nd == 4 ? a->shape[1] : 1;
  const int64_t tq = a->shape[nd - 2];
  auto mask_row = [form, heads, tq, tk](int64_t lane) -> int64_t {
    switch (form) {
      case MaskForm::exact:
        return lane * tk;
      case MaskForm::drop_head_axis: {
        const int64_t b = lane / (heads * tq);
        const int64_t t = lane % tq;
        return (b * tq + t) * tk;
      }
      case MaskForm::trailing:
        return (lane % tq) * tk;
    }
    return 0;
  };

  auto out = alloc_impl(a->shape, a->dtype);
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    for (int64_t lane = 0; lane < lanes; ++lane) {
      const scalar_t* src = pa + lane * tk;
      scalar_t* dst = po + lane * tk;
      const uint8_t* mrow = mask.data() + mask_row(lane);
      double mx = -std::numeric_limits<double>::infinity();
      bool any = false;
      for (int64_t j = 0; j < tk; ++j) {
        if (mrow[j]) {
          any = true;
          mx = std::max(mx, static_cast<double>(src[j]));
        }
      }
      if (!any) throw ContractError("masked_softmax: a query row has no allowed keys");
      double denom = 0.0;
      for (int64_t j = 0; j < tk; ++j) {
        if (mrow[j]) {
          const double e = std::exp(static_cast<double>(src[j]) - mx);
          dst[j] = static_cast<scalar_t>(e);
          denom += e;
        } else {
          dst[j] = 0;
        }
      }
      const double inv = 1.0 / denom;
      for (int64_t j = 0; j < tk; ++j) {
        dst[j] = static_cast<scalar_t>(static_cast<double>(dst[j]) * inv);
      }
    }
  });
  auto out_keep = out;
  return make_op_result(std::move(out), {a}, [a, out_keep, lanes, tk](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      ensure_grad(*a);
      // Masked entries have y=0, so the plain softmax Jacobian is correct.
      softmax_lane_backward(cdata<scalar_t>(*out_keep).data(), grad_of<scalar_t>(o).data(),
                            grad_of<scalar_t>(*a).data(), lanes, tk, int64_t{1});
    });
  });
}

Tensor rms_norm(const Tensor& tx, const Tensor& tgain, double eps) {
  auto x = tx.impl_ptr();
  auto gain = tgain.impl_ptr();
  if (x->shape.empty()) throw ShapeError("rms_norm: input must have >=1 dim");
  const int64_t n_feat = x->shape.back();
  if (gain->n != n_feat || x->dtype != gain->dtype) {
    throw ShapeError("rms_norm: gain " + shape_str(gain->shape) + " incompatible with input " +
                     shape_str(x->shape));
  }
  const int64_t rows = x->n / n_feat;
  auto out = alloc_impl(x->shape, x->dtype);
  // Saved per-row inverse rms for the backward pass.
  auto inv_rms = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
  OCCVLA_DISPATCH(x->dtype, {
    const scalar_t* px = cdata<scalar_t>(*x).data();
    const scalar_t* pg = cdata<scalar_t>(*gain).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    for (int64_t r = 0; r < rows; ++r) {
      const scalar_t* row = px + r * n_feat;
      double ms = 0.0;
      for (int64_t j = 0; j < n_feat; ++j) {
        ms += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      }
      const double inv = 1.0 / std::sqrt(ms / static_cast<double>(n_feat) + eps);
      (*inv_rms)[static_cast<size_t>(r)] = inv;
      scalar_t* orow = po + r * n_feat;
      for (int64_t j = 0; j < n_feat; ++j) {
        orow[j] = static_cast<scalar_t>(static_cast<double>(row[j]) * inv *
                                        static_cast<double>(pg[j]));
      }
    }
  });
  return make_op_result(std::move(out), {x, gain}, [x, gain, inv_rms, rows, n_feat](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const scalar_t* g = grad_of<scalar_t>(o).data();
      const scalar_t* px = cdata<scalar_t>(*x).data();
      const scalar_t* pg = cdata<scalar_t>(*gain).data();
      if (gain->requires_grad) {
        ensure_grad(*gain);
        scalar_t* ggain = grad_of<scalar_t>(*gain).data();
        for (int64_t r = 0; r < rows; ++r) {
          const double inv = (*inv_rms)[static_cast<size_t>(r)];
          const scalar_t* grow = g + r * n_feat;
          const scalar_t* xrow = px + r * n_feat;
          for (int64_t j = 0; j < n_feat; ++j) {
            ggain[j] += static_cast<scalar_t>(static_cast<double>(grow[j]) *
                                              static_cast<double>(xrow[j]) * inv);
          }
        }
      }
      if (x->requires_grad) {
        ensure_grad(*x);
        scalar_t* gx = grad_of<scalar_t>(*x).data();
        for (int64_t r = 0; r < rows; ++r) {
          const double inv = (*inv_rms)[static_cast<size_t>(r)];
          const scalar_t* grow = g + r * n_feat;
          const scalar_t* xrow = px + r * n_feat;
          double s = 0.0;
          for (int64_t j = 0; j < n_feat; ++j) {
            s += static_cast<double>(grow[j]) * static_cast<double>(pg[j]) *
                 static_cast<double>(xrow[j]);
          }
          const double c = s * inv * inv * inv / static_cast<double>(n_feat);
          for (int64_t j = 0; j < n_feat; ++j) {
            gx[r * n_feat + j] += static_cast<scalar_t>(
                static_cast<double>(grow[j]) * static_cast<double>(pg[j]) * inv -
                static_cast<double>(xrow[j]) * c);
          }
        }
      }
    });
  });
}

namespace {

Tensor reduce_all(const Tensor& ta, bool take_mean, const char* name) {
  (void)name;
  auto a = ta.impl_ptr();
  const int64_t n = a->n;
  const double denom = take_mean ? static_cast<double>(n) : 1.0;
  auto out = alloc_impl(Shape{}, a->dtype);
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(pa[i]);
    mdata<scalar_t>(*out)[0] = static_cast<scalar_t>(acc / denom);
  });
  return make_op_result(std::move(out), {a}, [a, n, denom](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const double g = static_cast<double>(grad_of<scalar_t>(o)[0]) / denom;
      ensure_grad(*a);
      scalar_t* ga = grad_of<scalar_t>(*a).data();
      const scalar_t gc = static_cast<scalar_t>(g);
      for (int64_t i = 0; i < n; ++i) ga[i] += gc;
    });
  });
}

Tensor reduce_axis(const Tensor& ta, int axis, bool take_mean, const char* name) {
  auto a = ta.impl_ptr();
  const int ax = normalize_axis(axis, a->shape.size(), name);
  const int64_t n_axis = a->shape[static_cast<size_t>(ax)];
  int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < static_cast<size_t>(ax); ++i) outer *= a->shape[i];
  for (size_t i = static_cast<size_t>(ax) + 1; i < a->shape.size(); ++i) inner *= a->shape[i];
  Shape out_shape;
  for (size_t i = 0; i < a->shape.size(); ++i) {
    if (i != static_cast<size_t>(ax)) out_shape.push_back(a->shape[i]);
  }
  const double denom = take_mean ? static_cast<double>(n_axis) : 1.0;
  auto out = alloc_impl(out_shape, a->dtype);
  OCCVLA_DISPATCH(a->dtype, {
    const scalar_t* pa = cdata<scalar_t>(*a).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t in_i = 0; in_i < inner; ++in_i) {
        double acc = 0.0;
        for (int64_t j = 0; j < n_axis; ++j) {
          acc += static_cast<double>(pa[(o * n_axis + j) * inner + in_i]);
        }
        po[o * inner + in_i] = static_cast<scalar_t>(acc / denom);
      }
    }
  });
  return make_op_result(std::move(out), {a}, [a, outer, inner, n_axis, denom](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const scalar_t* g = grad_of<scalar_t>(o).data();
      ensure_grad(*a);
      scalar_t* ga = grad_of<scalar_t>(*a).data();
      for (int64_t ou = 0; ou < outer; ++ou) {
        for (int64_t in_i = 0; in_i < inner; ++in_i) {
          const scalar_t gv =
              static_cast<scalar_t>(static_cast<double>(g[ou * inner + in_i]) / denom);
          for (int64_t j = 0; j < n_axis; ++j) ga[(ou * n_axis + j) * inner + in_i] += gv;
        }
      }
    });
  });
}

}  // namespace

Tensor sum(const Tensor& a) { return reduce_all(a, false, "sum"); }
Tensor mean(const Tensor& a) { return reduce_all(a, true, "mean"); }
Tensor sum_axis(const Tensor& a, int axis) { return reduce_axis(a, axis, false, "sum_axis"); }
Tensor mean_axis(const Tensor& a, int axis) { return reduce_axis(a, axis, true, "mean_axis"); }

Tensor embedding_lookup(const Tensor& ttable, std::span<const int32_t> ids,
                        const Shape& ids_shape) {
  auto table = ttable.impl_ptr();
  if (table->shape.size() != 2) {
    throw ShapeError("embedding_lookup: table must be 2-d, got " + shape_str(table->shape));
  }
  if (shape_numel(ids_shape) != static_cast<int64_t>(ids.size())) {
    throw ShapeError("embedding_lookup: ids do not match their shape");
  }
  const int64_t vocab = table->shape[0];
  const int64_t width = table->shape[1];
  for (int32_t id : ids) {
    if (id < 0 || static_cast<int64_t>(id) >= vocab) {
      throw IndexError("embedding_lookup: id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(vocab) + ")");
    }
  }
  Shape out_shape = ids_shape;
  out_shape.push_back(width);
  auto out = alloc_impl(out_shape, table->dtype);
  const int64_t rows = static_cast<int64_t>(ids.size());
  std::vector<int32_t> ids_copy(ids.begin(), ids.end());
  OCCVLA_DISPATCH(table->dtype, {
    const scalar_t* pt = cdata<scalar_t>(*table).data();
    scalar_t* po = mdata<scalar_t>(*out).data();
    for (int64_t r = 0; r < rows; ++r) {
      std::memcpy(po + r * width, pt + static_cast<int64_t>(ids_copy[static_cast<size_t>(r)]) * width,
                  static_cast<size_t>(width) * sizeof(scalar_t));
    }
  });
  return make_op_result(std::move(out), {table},
                        [table, ids_copy = std::move(ids_copy), rows, width](TensorImpl& o) {
                          OCCVLA_DISPATCH(o.dtype, {
                            const scalar_t* g = grad_of<scalar_t>(o).data();
                            ensure_grad(*table);
                            scalar_t* gt = grad_of<scalar_t>(*table).data();
                            for (int64_t r = 0; r < rows; ++r) {
                              scalar_t* dst =
                                  gt + static_cast<int64_t>(ids_copy[static_cast<size_t>(r)]) * width;
                              const scalar_t* src = g + r * width;
                              for (int64_t j = 0; j < width; ++j) dst[j] += src[j];
                            }
                          });
                        });
}

Tensor cross_entropy(const Tensor& tlogits, std::span<const int32_t> targets, int32_t ignore_index,
                     std::span<const double> class_weights) {
  auto logits = tlogits.impl_ptr();
  if (logits->shape.size() != 2) {
    throw ShapeError("cross_entropy: logits must be [N, K], got " + shape_str(logits->shape));
  }
  const int64_t n_rows = logits->shape[0];
  const int64_t k = logits->shape[1];
  if (static_cast<int64_t>(targets.size()) != n_rows) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(n_rows) + " rows");
  }
  if (!class_weights.empty() && static_cast<int64_t>(class_weights.size()) != k) {
    throw ShapeError("cross_entropy: class weight count != K");
  }
  for (int32_t t : targets) {
    if (t != ignore_index && (t < 0 || static_cast<int64_t>(t) >= k)) {
      throw IndexError("cross_entropy: target " + std::to_string(t) + " out of range [0, " +
                       std::to_string(k) + ")");
    }
  }

  std::vector<int32_t> tgt(targets.begin(), targets.end());
  std::vector<double> wts(class_weights.begin(), class_weights.end());
  // Per-row log-sum-exp saved for backward.
  auto lse = std::make_shared<std::vector<double>>(static_cast<size_t>(n_rows), 0.0);
  double total = 0.0, weight_sum = 0.0;
  OCCVLA_DISPATCH(logits->dtype, {
    const scalar_t* pl = cdata<scalar_t>(*logits).data();
    for (int64_t r = 0; r < n_rows; ++r) {
      const int32_t t = tgt[static_cast<size_t>(r)];
      if (t == ignore_index) continue;
      const scalar_t* row = pl + r * k;
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t j = 0; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
      double denom = 0.0;
      for (int64_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j]) - mx);
      const double row_lse = mx + std::log(denom);
      (*lse)[static_cast<size_t>(r)] = row_lse;
      const double w = wts.empty() ? 1.0 : wts[static_cast<size_t>(t)];
      total += w * (row_lse - static_cast<double>(row[t]));
      weight_sum += w;
    }
  });
  const double loss = weight_sum > 0.0 ? total / weight_sum : 0.0;
  auto out = alloc_impl(Shape{}, logits->dtype);
  OCCVLA_DISPATCH(logits->dtype, { mdata<scalar_t>(*out)[0] = static_cast<scalar_t>(loss); });

  return make_op_result(
      std::move(out), {logits},
      [logits, tgt = std::move(tgt), wts = std::move(wts), lse, n_rows, k, ignore_index,
       weight_sum](TensorImpl& o) {
        if (weight_sum <= 0.0) return;  // all rows ignored: zero gradient
        OCCVLA_DISPATCH(o.dtype, {
          const double g = static_cast<double>(grad_of<scalar_t>(o)[0]);
          const scalar_t* pl = cdata<scalar_t>(*logits).data();
          ensure_grad(*logits);
          scalar_t* gl = grad_of<scalar_t>(*logits).data();
          for (int64_t r = 0; r < n_rows; ++r) {
            const int32_t t = tgt[static_cast<size_t>(r)];
            if (t == ignore_index) continue;
            const double w = wts.empty() ? 1.0 : wts[static_cast<size_t>(t)];
            const double c = g * w / weight_sum;
            const double row_lse = (*lse)[static_cast<size_t>(r)];
            const scalar_t* row = pl + r * k;
            scalar_t* grow = gl + r * k;
            for (int64_t j = 0; j < k; ++j) {
              const double p = std::exp(static_cast<double>(row[j]) - row_lse);
              const double delta = (j == static_cast<int64_t>(t)) ? 1.0 : 0.0;
              grow[j] += static_cast<scalar_t>(c * (p - delta));
            }
          }
        });
      });
}

Tensor mse(const Tensor& tpred, const Tensor& ttarget) {
  auto pred = tpred.impl_ptr();
  auto target = ttarget.impl_ptr();
  if (pred->shape != target->shape || pred->dtype != target->dtype) {
    throw ShapeError("mse: shape mismatch " + shape_str(pred->shape) + " vs " +
                     shape_str(target->shape));
  }
  const int64_t n = pred->n;
  auto out = alloc_impl(Shape{}, pred->dtype);
  OCCVLA_DISPATCH(pred->dtype, {
    const scalar_t* pp = cdata<scalar_t>(*pred).data();
    const scalar_t* pt = cdata<scalar_t>(*target).data();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(pp[i]) - static_cast<double>(pt[i]);
      acc += d * d;
    }
    mdata<scalar_t>(*out)[0] = static_cast<scalar_t>(acc / static_cast<double>(n));
  });
  return make_op_result(std::move(out), {pred, target}, [pred, target, n](TensorImpl& o) {
    OCCVLA_DISPATCH(o.dtype, {
      const double g = static_cast<double>(grad_of<scalar_t>(o)[0]);
      const scalar_t* pp = cdata<scalar_t>(*pred).data();
      const scalar_t* pt = cdata<scalar_t>(*target).data();
      const double c = 2.0 * g / static_cast<double>(n);
      if (pred->requires_grad) {
        ensure_grad(*pred);
        scalar_t* gp = grad_of<scalar_t>(*pred).data();
        for (int64_t i = 0; i < n; ++i) {
          gp[i] += static_cast<scalar_t>(c * (static_cast<double>(pp[i]) - static_cast<double>(pt[i])));
        }
      }
      if (target->requires_grad) {
        ensure_grad(*target);
        scalar_t* gt = grad_of<scalar_t>(*target).data();
        for (int64_t i = 0; i < n; ++i) {
          gt[i] -= static_cast<scalar_t>(c * (static_cast<double>(pp[i]) - static_cast<double>(pt[i])));
        }
      }
    });
  });
}

}  // namespace occvla
