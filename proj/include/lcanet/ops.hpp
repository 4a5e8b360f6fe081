// Copyright 2026 The lcanet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense tensor operations used by the classifiers: 2-D cross-correlation and
// its exact adjoint, 2x2 max pooling, batch normalization, a fully connected
// layer, softmax cross-entropy, and an SGD-momentum update. All kernels are
// templated so tests can run them in double precision.
//
// Parallel loops are structured so that every output element is written by
// exactly one thread; results are bit-identical for any thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lcanet/common.hpp"
#include "lcanet/tensor.hpp"

namespace lcanet {

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

// Valid output range [lo, hi) so that 0 <= o*stride - pad + u < in.
inline void conv_range(int in, int stride, int pad, int u, int out_dim,
                       int* lo, int* hi) {
  int a = pad - u;
  *lo = a <= 0 ? 0 : (a + stride - 1) / stride;
  int t = in - 1 + pad - u;
  *hi = t < 0 ? 0 : std::min(out_dim, t / stride + 1);
  if (*hi < *lo) *hi = *lo;
}

}  // namespace detail

/// 2-D cross-correlation. input B x Cin x H x W, kernel Cout x Cin x kh x kw.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernel,
                  int stride, int pad) {
  if (input.ndim() != 4 || kernel.ndim() != 4)
    throw ShapeError("conv2d: expected 4-D input and kernel, got " +
                     input.shape_str() + " and " + kernel.shape_str());
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (input.dim(1) != kernel.dim(1))
    throw ShapeError("conv2d: input channels " + input.shape_str() +
                     " do not match kernel " + kernel.shape_str());
  const int B = input.dim(0), Ci = input.dim(1), H = input.dim(2),
            W = input.dim(3);
  const int Co = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kh > H + 2 * pad || kw > W + 2 * pad)
    throw ShapeError("conv2d: kernel " + kernel.shape_str() +
                     " larger than padded input " + input.shape_str());
  const int Ho = conv_out_dim(H, kh, stride, pad);
  const int Wo = conv_out_dim(W, kw, stride, pad);
  TensorT<T> out({B, Co, Ho, Wo});

#pragma omp parallel for schedule(static) collapse(2)
  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < Co; ++co) {
      T* yslice = out.ptr((static_cast<int64_t>(b) * Co + co) * Ho * Wo);
      for (int ci = 0; ci < Ci; ++ci) {
        const T* xslice =
            input.ptr((static_cast<int64_t>(b) * Ci + ci) * H * W);
        for (int u = 0; u < kh; ++u) {
          int oh_lo, oh_hi;
          detail::conv_range(H, stride, pad, u, Ho, &oh_lo, &oh_hi);
          for (int v = 0; v < kw; ++v) {
            const T wv = kernel.data[((static_cast<int64_t>(co) * Ci + ci) *
                                          kh +
                                      u) *
                                         kw +
                                     v];
            if (wv == T(0)) continue;
            int ow_lo, ow_hi;
            detail::conv_range(W, stride, pad, v, Wo, &ow_lo, &ow_hi);
            const int n = ow_hi - ow_lo;
            for (int oh = oh_lo; oh < oh_hi; ++oh) {
              const int ih = oh * stride - pad + u;
              const T* xr = xslice + static_cast<int64_t>(ih) * W +
                            (ow_lo * stride - pad + v);
              T* yr = yslice + static_cast<int64_t>(oh) * Wo + ow_lo;
              if (stride == 1) {
                for (int t = 0; t < n; ++t) yr[t] += wv * xr[t];
              } else {
                for (int t = 0; t < n; ++t) yr[t] += wv * xr[t * stride];
              }
            }
          }
        }
      }
    }
  }
  check_finite(out, "conv2d output");
  return out;
}

/// Exact linear adjoint of conv2d under the same stride/pad:
/// <conv2d(x, K), y> == <x, conv2d_transpose(y, K)> for all x, y.
/// out_h/out_w select the original input size when the stride makes the
/// output dimension formula ambiguous; -1 uses (H'-1)*stride - 2*pad + kh.
template <typename T>
TensorT<T> conv2d_transpose(const TensorT<T>& code, const TensorT<T>& kernel,
                            int stride, int pad, int out_h = -1,
                            int out_w = -1) {
  if (code.ndim() != 4 || kernel.ndim() != 4)
    throw ShapeError("conv2d_transpose: expected 4-D tensors, got " +
                     code.shape_str() + " and " + kernel.shape_str());
  if (stride < 1) throw ShapeError("conv2d_transpose: stride must be >= 1");
  if (code.dim(1) != kernel.dim(0))
    throw ShapeError("conv2d_transpose: code channels " + code.shape_str() +
                     " do not match kernel " + kernel.shape_str());
  const int B = code.dim(0), Co = code.dim(1), Ho = code.dim(2),
            Wo = code.dim(3);
  const int Ci = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
  const int H = out_h >= 0 ? out_h : (Ho - 1) * stride - 2 * pad + kh;
  const int W = out_w >= 0 ? out_w : (Wo - 1) * stride - 2 * pad + kw;
  if (H <= 0 || W <= 0)
    throw ShapeError("conv2d_transpose: inconsistent stride/pad/shape");
  if (conv_out_dim(H, kh, stride, pad) != Ho ||
      conv_out_dim(W, kw, stride, pad) != Wo)
    throw ShapeError(
        "conv2d_transpose: code shape " + code.shape_str() +
        " is not the conv2d output shape for the requested input size");
  TensorT<T> out({B, Ci, H, W});

  struct Entry {
    int co, oh, ow;
    T val;
  };

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < B; ++b) {
    // Gather nonzero code entries once; sparse codes make this pass cheap.
    std::vector<Entry> nz;
    nz.reserve(256);
    const T* cslice = code.ptr(static_cast<int64_t>(b) * Co * Ho * Wo);
    for (int co = 0; co < Co; ++co)
      for (int oh = 0; oh < Ho; ++oh) {
        const T* cr = cslice + (static_cast<int64_t>(co) * Ho + oh) * Wo;
        for (int ow = 0; ow < Wo; ++ow)
          if (cr[ow] != T(0)) nz.push_back({co, oh, ow, cr[ow]});
      }
    for (int ci = 0; ci < Ci; ++ci) {
      T* xslice = out.ptr((static_cast<int64_t>(b) * Ci + ci) * H * W);
      for (const Entry& e : nz) {
        const int ih0 = e.oh * stride - pad;
        const int iw0 = e.ow * stride - pad;
        const int v_lo = std::max(0, -iw0);
        const int v_hi = std::min(kw, W - iw0);
        for (int u = 0; u < kh; ++u) {
          const int ih = ih0 + u;
          if (ih < 0 || ih >= H) continue;
          const T* wr =
              kernel.ptr(((static_cast<int64_t>(e.co) * Ci + ci) * kh + u) *
                         kw);
          T* xr = xslice + static_cast<int64_t>(ih) * W + iw0;
          for (int v = v_lo; v < v_hi; ++v) xr[v] += e.val * wr[v];
        }
      }
    }
  }
  check_finite(out, "conv2d_transpose output");
  return out;
}

/// Gradient of conv2d output w.r.t. the kernel: correlates input with the
/// upstream gradient.
template <typename T>
TensorT<T> conv2d_weight_grad(const TensorT<T>& input, const TensorT<T>& gout,
                              int kh, int kw, int stride, int pad) {
  const int B = input.dim(0), Ci = input.dim(1), H = input.dim(2),
            W = input.dim(3);
  const int Co = gout.dim(1), Ho = gout.dim(2), Wo = gout.dim(3);
  TensorT<T> gw({Co, Ci, kh, kw});

#pragma omp parallel for schedule(static)
  for (int co = 0; co < Co; ++co) {
    for (int ci = 0; ci < Ci; ++ci) {
      for (int u = 0; u < kh; ++u) {
        int oh_lo, oh_hi;
        detail::conv_range(H, stride, pad, u, Ho, &oh_lo, &oh_hi);
        for (int v = 0; v < kw; ++v) {
          int ow_lo, ow_hi;
          detail::conv_range(W, stride, pad, v, Wo, &ow_lo, &ow_hi);
          T acc = 0;
          for (int b = 0; b < B; ++b) {
            const T* gslice =
                gout.ptr((static_cast<int64_t>(b) * Co + co) * Ho * Wo);
            const T* xslice =
                input.ptr((static_cast<int64_t>(b) * Ci + ci) * H * W);
            for (int oh = oh_lo; oh < oh_hi; ++oh) {
              const int ih = oh * stride - pad + u;
              const T* gr = gslice + static_cast<int64_t>(oh) * Wo;
              const T* xr = xslice + static_cast<int64_t>(ih) * W - pad + v;
              if (stride == 1) {
                for (int ow = ow_lo; ow < ow_hi; ++ow)
                  acc += gr[ow] * xr[ow];
              } else {
                for (int ow = ow_lo; ow < ow_hi; ++ow)
                  acc += gr[ow] * xr[ow * stride];
              }
            }
          }
          gw.data[((static_cast<int64_t>(co) * Ci + ci) * kh + u) * kw + v] =
              acc;
        }
      }
    }
  }
  return gw;
}

/// Adds a per-output-channel bias in place.
template <typename T>
void add_channel_bias(TensorT<T>& x, const TensorT<T>& bias) {
  const int B = x.dim(0), C = x.dim(1);
  const int64_t hw = static_cast<int64_t>(x.dim(2)) * x.dim(3);
  if (bias.numel() != C)
    throw ShapeError("bias length does not match channel count");
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      T* p = x.ptr((static_cast<int64_t>(b) * C + c) * hw);
      const T bv = bias.data[c];
      for (int64_t i = 0; i < hw; ++i) p[i] += bv;
    }
}

// ---------------------------------------------------------------------------
// 2x2 max pooling

/// Non-overlapping 2x2 max pooling. Odd spatial dims are padded with -inf
/// (out-of-range cells never win). argmax records the flat input index that
/// produced each output; ties go to the first cell in row-major scan order.
template <typename T>
TensorT<T> maxpool2(const TensorT<T>& x, std::vector<int64_t>* argmax) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = (H + 1) / 2, Wo = (W + 1) / 2;
  TensorT<T> out({B, C, Ho, Wo});
  if (argmax) argmax->assign(out.numel(), -1);
  int64_t oi = 0;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* xs = x.ptr((static_cast<int64_t>(b) * C + c) * H * W);
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow, ++oi) {
          T best = -std::numeric_limits<T>::infinity();
          int64_t best_idx = -1;
          for (int dh = 0; dh < 2; ++dh)
            for (int dw = 0; dw < 2; ++dw) {
              const int ih = 2 * oh + dh, iw = 2 * ow + dw;
              if (ih >= H || iw >= W) continue;
              const T v = xs[static_cast<int64_t>(ih) * W + iw];
              if (v > best) {
                best = v;
                best_idx = (static_cast<int64_t>(b) * C + c) * H * W +
                           static_cast<int64_t>(ih) * W + iw;
              }
            }
          out.data[oi] = best;
          if (argmax) (*argmax)[oi] = best_idx;
        }
    }
  return out;
}

template <typename T>
TensorT<T> maxpool2_backward(const TensorT<T>& gout,
                             const std::vector<int64_t>& argmax,
                             const std::vector<int>& input_shape) {
  TensorT<T> gx(input_shape);
  for (int64_t i = 0; i < gout.numel(); ++i) gx.data[argmax[i]] += gout.data[i];
  return gx;
}

// ---------------------------------------------------------------------------
// Batch normalization

template <typename T>
struct BatchNormCache {
  TensorT<T> xhat;            // normalized input, saved for backward
  std::vector<T> invstd;      // per channel
  bool train = false;
};

/// Per-channel batch normalization over (B, H, W). Train mode normalizes
/// with batch statistics (variance epsilon 1e-5) and updates the running
/// stats in place with momentum 0.1; eval mode uses the running stats.
template <typename T>
TensorT<T> batchnorm(const TensorT<T>& x, const TensorT<T>& gamma,
                     const TensorT<T>& beta, TensorT<T>& running_mean,
                     TensorT<T>& running_var, bool train,
                     BatchNormCache<T>* cache = nullptr, T momentum = T(0.1),
                     T eps = T(1e-5)) {
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (gamma.numel() != C || beta.numel() != C)
    throw ShapeError("batchnorm: gamma/beta length does not match channels");
  if (train && B < 2)
    throw Error("batchnorm: train mode requires batch size >= 2");
  const int64_t n = static_cast<int64_t>(B) * H * W;
  TensorT<T> out(x.shape);
  if (cache) {
    cache->xhat = TensorT<T>(x.shape);
    cache->invstd.assign(C, T(0));
    cache->train = train;
  }

#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    T mean, var;
    if (train) {
      T sum = 0, sq = 0;
      for (int b = 0; b < B; ++b) {
        const T* p = x.ptr((static_cast<int64_t>(b) * C + c) *
                           static_cast<int64_t>(H) * W);
        for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i) {
          sum += p[i];
          sq += p[i] * p[i];
        }
      }
      mean = sum / static_cast<T>(n);
      var = sq / static_cast<T>(n) - mean * mean;
      if (var < T(0)) var = T(0);
      running_mean.data[c] =
          (T(1) - momentum) * running_mean.data[c] + momentum * mean;
      running_var.data[c] =
          (T(1) - momentum) * running_var.data[c] + momentum * var;
    } else {
      mean = running_mean.data[c];
      var = running_var.data[c];
    }
    const T invstd = T(1) / std::sqrt(var + eps);
    if (cache) cache->invstd[c] = invstd;
    const T g = gamma.data[c], be = beta.data[c];
    for (int b = 0; b < B; ++b) {
      const int64_t off =
          (static_cast<int64_t>(b) * C + c) * static_cast<int64_t>(H) * W;
      const T* p = x.ptr(off);
      T* q = out.ptr(off);
      T* xh = cache ? cache->xhat.ptr(off) : nullptr;
      for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i) {
        const T xhat = (p[i] - mean) * invstd;
        if (xh) xh[i] = xhat;
        q[i] = g * xhat + be;
      }
    }
  }
  check_finite(out, "batchnorm output");
  return out;
}

/// Backward for batchnorm. In train mode the gradient flows through the
/// batch statistics; in eval mode the transform is a fixed per-channel
/// affine map.
template <typename T>
void batchnorm_backward(const TensorT<T>& gout, const BatchNormCache<T>& cache,
                        const TensorT<T>& gamma, TensorT<T>* gx,
                        TensorT<T>* dgamma, TensorT<T>* dbeta) {
  const int B = gout.dim(0), C = gout.dim(1), H = gout.dim(2),
            W = gout.dim(3);
  const int64_t hw = static_cast<int64_t>(H) * W;
  const T n = static_cast<T>(static_cast<int64_t>(B) * hw);
  if (gx) *gx = TensorT<T>(gout.shape);
  if (dgamma) *dgamma = TensorT<T>({C});
  if (dbeta) *dbeta = TensorT<T>({C});

#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    T sum_g = 0, sum_gx = 0;
    for (int b = 0; b < B; ++b) {
      const int64_t off = (static_cast<int64_t>(b) * C + c) * hw;
      const T* g = gout.ptr(off);
      const T* xh = cache.xhat.ptr(off);
      for (int64_t i = 0; i < hw; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
    }
    if (dgamma) dgamma->data[c] = sum_gx;
    if (dbeta) dbeta->data[c] = sum_g;
    if (!gx) continue;
    const T k = gamma.data[c] * cache.invstd[c];
    for (int b = 0; b < B; ++b) {
      const int64_t off = (static_cast<int64_t>(b) * C + c) * hw;
      const T* g = gout.ptr(off);
      const T* xh = cache.xhat.ptr(off);
      T* out = gx->ptr(off);
      if (cache.train) {
        for (int64_t i = 0; i < hw; ++i)
          out[i] = k * (g[i] - sum_g / n - xh[i] * sum_gx / n);
      } else {
        for (int64_t i = 0; i < hw; ++i) out[i] = k * g[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ReLU

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> out(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i)
    out.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  return out;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& gout, const TensorT<T>& saved_out) {
  TensorT<T> gx(gout.shape);
  for (int64_t i = 0; i < gout.numel(); ++i)
    gx.data[i] = saved_out.data[i] > T(0) ? gout.data[i] : T(0);
  return gx;
}

// ---------------------------------------------------------------------------
// Fully connected layer

/// x is treated as B x D with D = numel/B. weight is K x D, bias K.
template <typename T>
TensorT<T> fully_connected(const TensorT<T>& x, const TensorT<T>& weight,
                           const TensorT<T>& bias) {
  const int B = x.dim(0);
  const int64_t D = x.numel() / B;
  const int K = weight.dim(0);
  if (weight.dim(1) != D)
    throw ShapeError("fully_connected: weight " + weight.shape_str() +
                     " does not match input feature count " +
                     std::to_string(D));
  TensorT<T> out({B, K});
#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b) {
    const T* xb = x.ptr(static_cast<int64_t>(b) * D);
    for (int k = 0; k < K; ++k) {
      const T* wk = weight.ptr(static_cast<int64_t>(k) * D);
      T acc = bias.data[k];
      for (int64_t i = 0; i < D; ++i) acc += wk[i] * xb[i];
      out.data[static_cast<int64_t>(b) * K + k] = acc;
    }
  }
  check_finite(out, "fully_connected output");
  return out;
}

template <typename T>
void fully_connected_backward(const TensorT<T>& gout, const TensorT<T>& x,
                              const TensorT<T>& weight, TensorT<T>* gx,
                              TensorT<T>* gw, TensorT<T>* gb) {
  const int B = x.dim(0);
  const int64_t D = x.numel() / B;
  const int K = weight.dim(0);
  if (gx) {
    *gx = TensorT<T>(x.shape);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
      T* out = gx->ptr(static_cast<int64_t>(b) * D);
      for (int k = 0; k < K; ++k) {
        const T g = gout.data[static_cast<int64_t>(b) * K + k];
        if (g == T(0)) continue;
        const T* wk = weight.ptr(static_cast<int64_t>(k) * D);
        for (int64_t i = 0; i < D; ++i) out[i] += g * wk[i];
      }
    }
  }
  if (gw) {
    *gw = TensorT<T>(weight.shape);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < K; ++k) {
      T* out = gw->ptr(static_cast<int64_t>(k) * D);
      for (int b = 0; b < B; ++b) {
        const T g = gout.data[static_cast<int64_t>(b) * K + k];
        if (g == T(0)) continue;
        const T* xb = x.ptr(static_cast<int64_t>(b) * D);
        for (int64_t i = 0; i < D; ++i) out[i] += g * xb[i];
      }
    }
  }
  if (gb) {
    *gb = TensorT<T>({K});
    for (int b = 0; b < B; ++b)
      for (int k = 0; k < K; ++k)
        gb->data[k] += gout.data[static_cast<int64_t>(b) * K + k];
  }
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy

template <typename T>
struct SoftmaxXentResult {
  T loss = 0;            // mean of -log softmax(logits)[label] over the batch
  TensorT<T> softmax;    // saved for the backward pass
};

template <typename T>
SoftmaxXentResult<T> softmax_cross_entropy(const TensorT<T>& logits,
                                           const std::vector<int>& labels) {
  const int B = logits.dim(0), K = logits.dim(1);
  if (static_cast<int>(labels.size()) != B)
    throw ShapeError("softmax_cross_entropy: label count != batch size");
  SoftmaxXentResult<T> res;
  res.softmax = TensorT<T>({B, K});
  double total = 0;
  for (int b = 0; b < B; ++b) {
    if (labels[b] < 0 || labels[b] >= K)
      throw Error("softmax_cross_entropy: label " +
                  std::to_string(labels[b]) + " out of range [0," +
                  std::to_string(K) + ")");
    const T* row = logits.ptr(static_cast<int64_t>(b) * K);
    T mx = row[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
    T denom = 0;
    for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
    T* s = res.softmax.ptr(static_cast<int64_t>(b) * K);
    for (int k = 0; k < K; ++k) s[k] = std::exp(row[k] - mx) / denom;
    total += -static_cast<double>(std::log(
        std::max(s[labels[b]], std::numeric_limits<T>::min())));
  }
  res.loss = static_cast<T>(total / B);
  if (!std::isfinite(res.loss))
    throw NumericError("softmax_cross_entropy: non-finite loss");
  return res;
}

/// Gradient of the mean cross-entropy w.r.t. the logits: (softmax-onehot)/B.
template <typename T>
TensorT<T> softmax_cross_entropy_backward(const TensorT<T>& softmax,
                                          const std::vector<int>& labels,
                                          T upstream = T(1)) {
  const int B = softmax.dim(0), K = softmax.dim(1);
  TensorT<T> g({B, K});
  const T scale = upstream / static_cast<T>(B);
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) {
      T v = softmax.data[static_cast<int64_t>(b) * K + k];
      if (k == labels[b]) v -= T(1);
      g.data[static_cast<int64_t>(b) * K + k] = v * scale;
    }
  return g;
}

// ---------------------------------------------------------------------------
// SGD with momentum

/// v <- momentum*v + grad; p <- p - lr*v.
template <typename T>
void sgd_momentum_step(TensorT<T>& param, const TensorT<T>& grad,
                       TensorT<T>& velocity, T lr, T momentum) {
  if (!param.same_shape(grad) || !param.same_shape(velocity))
    throw ShapeError("sgd_momentum_step: shape mismatch");
  for (int64_t i = 0; i < param.numel(); ++i) {
    velocity.data[i] = momentum * velocity.data[i] + grad.data[i];
    param.data[i] -= lr * velocity.data[i];
  }
}

}  // namespace lcanet
