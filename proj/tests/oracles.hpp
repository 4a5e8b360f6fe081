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

// Independent reference implementations used as test oracles. These stay
// deliberately naive and do not call the library paths they check.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "lcanet/tensor.hpp"

namespace oracles {

/// Direct-summation cross-correlation: literal nested loops over every
/// output element and kernel tap.
template <typename T>
lcanet::TensorT<T> conv2d_direct(const lcanet::TensorT<T>& x,
                                 const lcanet::TensorT<T>& k, int stride,
                                 int pad) {
  const int B = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Co = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  lcanet::TensorT<T> y({B, Co, Ho, Wo});
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Co; ++co)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          T acc = 0;
          for (int ci = 0; ci < Ci; ++ci)
            for (int u = 0; u < kh; ++u)
              for (int v = 0; v < kw; ++v) {
                const int ih = oh * stride - pad + u;
                const int iw = ow * stride - pad + v;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += x.at(b, ci, ih, iw) * k.at(co, ci, u, v);
              }
          y.at(b, co, oh, ow) = acc;
        }
  return y;
}

/// Direct-summation adjoint of conv2d_direct (scatter form).
template <typename T>
lcanet::TensorT<T> conv2d_transpose_direct(const lcanet::TensorT<T>& code,
                                           const lcanet::TensorT<T>& k,
                                           int stride, int pad, int H,
                                           int W) {
  const int B = code.dim(0), Co = code.dim(1), Ho = code.dim(2),
            Wo = code.dim(3);
  const int Ci = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  lcanet::TensorT<T> x({B, Ci, H, W});
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Co; ++co)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          const T c = code.at(b, co, oh, ow);
          if (c == T(0)) continue;
          for (int ci = 0; ci < Ci; ++ci)
            for (int u = 0; u < kh; ++u)
              for (int v = 0; v < kw; ++v) {
                const int ih = oh * stride - pad + u;
                const int iw = ow * stride - pad + v;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                x.at(b, ci, ih, iw) += c * k.at(co, ci, u, v);
              }
        }
  return x;
}

template <typename T>
T inner_product(const lcanet::TensorT<T>& a, const lcanet::TensorT<T>& b) {
  T acc = 0;
  for (int64_t i = 0; i < a.numel(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

/// Plain direct DFT of a real frame (reference for spectrum checks).
inline std::vector<std::complex<double>> dft_direct(
    const std::vector<double>& x, int n_fft) {
  std::vector<std::complex<double>> out(n_fft);
  for (int k = 0; k < n_fft; ++k) {
    std::complex<double> acc(0, 0);
    for (size_t t = 0; t < x.size(); ++t) {
      const double ang = -2.0 * 3.14159265358979323846 * k *
                         static_cast<double>(t) / n_fft;
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

/// Proximal-gradient (ISTA) solver for the sparse-coding objective
///   min_C 0.5*||x - transpose_conv(C, dict)||^2 + lambda*||C||_1
/// optionally constrained to C >= 0. Built entirely on the direct-summation
/// oracles above. Returns the code after n_iter iterations with step 1/L,
/// L estimated by power iteration.
template <typename T>
lcanet::TensorT<T> ista_solve(const lcanet::TensorT<T>& x,
                              const lcanet::TensorT<T>& dict_features,
                              int stride, int pad, T lambda, bool nonneg,
                              int n_iter, lcanet::Rng& rng) {
  const int H = x.dim(2), W = x.dim(3);
  lcanet::TensorT<T> probe = lcanet::random_normal<T>(
      conv2d_direct(x, dict_features, stride, pad).shape, rng);
  T lip = T(1);
  for (int it = 0; it < 40; ++it) {
    lcanet::TensorT<T> next = conv2d_direct(
        conv2d_transpose_direct(probe, dict_features, stride, pad, H, W),
        dict_features, stride, pad);
    T norm = 0;
    for (const T& v : next.data) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == T(0)) break;
    lip = norm;
    for (int64_t i = 0; i < next.numel(); ++i) next.data[i] /= norm;
    probe = next;
  }
  const T step = T(1) / std::max(lip, T(1e-6));

  lcanet::TensorT<T> code(probe.shape);
  for (int it = 0; it < n_iter; ++it) {
    lcanet::TensorT<T> recon =
        conv2d_transpose_direct(code, dict_features, stride, pad, H, W);
    for (int64_t i = 0; i < recon.numel(); ++i)
      recon.data[i] -= x.data[i];  // residual
    lcanet::TensorT<T> grad =
        conv2d_direct(recon, dict_features, stride, pad);
    for (int64_t i = 0; i < code.numel(); ++i) {
      T v = code.data[i] - step * grad.data[i];
      const T thr = lambda * step;
      if (nonneg) {
        v = v - thr;
        code.data[i] = v > T(0) ? v : T(0);
      } else {
        if (v > thr)
          code.data[i] = v - thr;
        else if (v < -thr)
          code.data[i] = v + thr;
        else
          code.data[i] = T(0);
      }
    }
  }
  return code;
}

/// Objective value evaluated with the direct-summation pieces only.
template <typename T>
T sparse_objective_direct(const lcanet::TensorT<T>& x,
                          const lcanet::TensorT<T>& code,
                          const lcanet::TensorT<T>& dict_features, int stride,
                          int pad, T lambda) {
  lcanet::TensorT<T> recon = conv2d_transpose_direct(
      code, dict_features, stride, pad, x.dim(2), x.dim(3));
  T quad = 0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T r = x.data[i] - recon.data[i];
    quad += r * r;
  }
  T l1 = 0;
  for (const T& v : code.data) l1 += std::abs(v);
  return T(0.5) * quad + lambda * l1;
}

inline double rel_error(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central finite difference of f w.r.t. x[i].
inline double central_diff(const std::function<double()>& f,
                           lcanet::TensorD& x, int64_t i, double h) {
  const double saved = x.data[i];
  x.data[i] = saved + h;
  const double fp = f();
  x.data[i] = saved - h;
  const double fm = f();
  x.data[i] = saved;
  return (fp - fm) / (2.0 * h);
}

}  // namespace oracles
