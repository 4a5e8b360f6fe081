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

// Convolutional sparse coding by lateral competition. A bank of unit-norm
// convolutional features encodes an input by evolving membrane potentials
// under leaky integration: each neuron is driven by its correlation with the
// input and inhibited by the firing of neurons with overlapping features,
// and fires through a soft threshold. The feature bank is learned
// unsupervised by alternating encoding with reconstruction-gradient steps.

#include <cstdint>
#include <iostream>
#include <utility>
#include <vector>

#include "lcanet/autodiff.hpp"
#include "lcanet/common.hpp"
#include "lcanet/ops.hpp"
#include "lcanet/tensor.hpp"

namespace lcanet {

/// Convolutional feature bank. Every feature (slice [k, :, :, :]) keeps unit
/// L2 norm after construction and after every update.
template <typename T>
struct DictionaryT {
  TensorT<T> features;  // K x Cin x kh x kw
  int stride = 1;
  int pad = 2;

  int count() const { return features.dim(0); }
  int in_channels() const { return features.dim(1); }
};

using Dictionary = DictionaryT<float>;

struct LcaConfig {
  float lambda = 1.0f;  // sparsity trade-off
  float gamma = 50.0f;  // time constant; Euler step is 1/gamma
  int n_iter = 50;
  bool nonneg = true;   // nonnegative firing rates (default polarity)

  void validate() const {
    if (lambda < 0) throw Error("LcaConfig: lambda must be >= 0");
    if (gamma <= 1) throw Error("LcaConfig: gamma must be > 1");
    if (n_iter < 1) throw Error("LcaConfig: n_iter must be >= 1");
  }
};

template <typename T>
struct LcaStateT {
  TensorT<T> membrane;  // B x K x H' x W'
  TensorT<T> code;      // soft_threshold(membrane, lambda)
  int in_h = 0, in_w = 0;  // input spatial dims, needed for the adjoint
};

using LcaState = LcaStateT<float>;

/// Renormalizes each feature to unit L2 norm in place. Returns the norms
/// found before normalization.
template <typename T>
std::vector<T> normalize_features(TensorT<T>& features) {
  const int K = features.dim(0);
  const int64_t per = features.numel() / K;
  std::vector<T> norms(K);
  for (int k = 0; k < K; ++k) {
    T* p = features.ptr(k * per);
    T sq = 0;
    for (int64_t i = 0; i < per; ++i) sq += p[i] * p[i];
    norms[k] = std::sqrt(sq);
    if (norms[k] > T(0))
      for (int64_t i = 0; i < per; ++i) p[i] /= norms[k];
  }
  return norms;
}

template <typename T>
DictionaryT<T> make_dictionary(int count, int in_channels, int kh, int kw,
                               int stride, Rng& rng) {
  DictionaryT<T> d;
  d.features = random_normal<T>({count, in_channels, kh, kw}, rng);
  normalize_features(d.features);
  d.stride = stride;
  d.pad = (kh - 1) / 2;
  return d;
}

/// Shrinkage nonlinearity: zero inside the dead zone of width lambda.
template <typename T>
TensorT<T> soft_threshold(const TensorT<T>& m, T lambda, bool nonneg) {
  TensorT<T> out(m.shape);
  if (nonneg) {
    for (int64_t i = 0; i < m.numel(); ++i)
      out.data[i] = m.data[i] > lambda ? m.data[i] - lambda : T(0);
  } else {
    for (int64_t i = 0; i < m.numel(); ++i) {
      const T v = m.data[i];
      if (v > lambda)
        out.data[i] = v - lambda;
      else if (v < -lambda)
        out.data[i] = v + lambda;
      else
        out.data[i] = T(0);
    }
  }
  return out;
}

/// Feed-forward excitation: correlation of the input with every feature.
template <typename T>
TensorT<T> input_drive(const TensorT<T>& x, const DictionaryT<T>& dict) {
  return conv2d(x, dict.features, dict.stride, dict.pad);
}

/// Lateral competition term applied to a code: for each neuron, the summed
/// firing of all other neurons weighted by feature overlap. Computed as
/// conv(convT(code)) - code; the subtraction cancels the unit self-overlap
/// exactly, so the pairwise-similarity operator is never materialized.
template <typename T>
TensorT<T> lateral_inhibition(const TensorT<T>& code,
                              const DictionaryT<T>& dict, int in_h,
                              int in_w) {
  TensorT<T> recon =
      conv2d_transpose(code, dict.features, dict.stride, dict.pad, in_h, in_w);
  TensorT<T> lat = conv2d(recon, dict.features, dict.stride, dict.pad);
  for (int64_t i = 0; i < lat.numel(); ++i) lat.data[i] -= code.data[i];
  return lat;
}

/// One Euler step of the membrane dynamics:
///   M += (1/gamma) * (drive - M - lateral(code)); code = soft_threshold(M).
template <typename T>
void lca_step(LcaStateT<T>& state, const TensorT<T>& drive,
              const DictionaryT<T>& dict, const LcaConfig& cfg,
              int iteration = -1) {
  TensorT<T> lat =
      lateral_inhibition(state.code, dict, state.in_h, state.in_w);
  const T step = T(1) / static_cast<T>(cfg.gamma);
  for (int64_t i = 0; i < state.membrane.numel(); ++i) {
    state.membrane.data[i] +=
        step * (drive.data[i] - state.membrane.data[i] - lat.data[i]);
    if (!std::isfinite(state.membrane.data[i]))
      throw NumericError("lca_step: non-finite membrane at iteration " +
                         std::to_string(iteration));
  }
  state.code = soft_threshold(state.membrane, static_cast<T>(cfg.lambda),
                              cfg.nonneg);
}

/// Runs the dynamics from a zero membrane for cfg.n_iter steps and returns
/// the final state (code = firing rates).
template <typename T>
LcaStateT<T> lca_encode(const TensorT<T>& x, const DictionaryT<T>& dict,
                        const LcaConfig& cfg) {
  cfg.validate();
  TensorT<T> drive = input_drive(x, dict);
  LcaStateT<T> state;
  state.membrane = TensorT<T>(drive.shape);
  state.code = TensorT<T>(drive.shape);
  state.in_h = x.dim(2);
  state.in_w = x.dim(3);
  for (int it = 0; it < cfg.n_iter; ++it) lca_step(state, drive, dict, cfg, it);
  return state;
}

/// Sparse-coding objective: 0.5*||x - recon(code)||^2 + lambda*||code||_1.
template <typename T>
T reconstruction_loss(const TensorT<T>& x, const TensorT<T>& code,
                      const DictionaryT<T>& dict, T lambda) {
  TensorT<T> recon = conv2d_transpose(code, dict.features, dict.stride,
                                      dict.pad, x.dim(2), x.dim(3));
  T quad = 0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T r = x.data[i] - recon.data[i];
    quad += r * r;
  }
  T l1 = 0;
  for (int64_t i = 0; i < code.numel(); ++i) l1 += std::abs(code.data[i]);
  return T(0.5) * quad + lambda * l1;
}

/// One reconstruction-gradient step on the feature bank with the code held
/// fixed, followed by renormalization to unit norm. A feature that collapses
/// to zero norm is reinitialized from a deterministic random draw (logged).
template <typename T>
DictionaryT<T> dict_update(const DictionaryT<T>& dict, const TensorT<T>& x,
                           const TensorT<T>& code, T lr_dict) {
  TensorT<T> recon = conv2d_transpose(code, dict.features, dict.stride,
                                      dict.pad, x.dim(2), x.dim(3));
  TensorT<T> residual(recon.shape);
  for (int64_t i = 0; i < recon.numel(); ++i)
    residual.data[i] = recon.data[i] - x.data[i];
  // d(0.5*||x - code (*) phi||^2)/d(phi) correlates the code with the
  // residual; the L1 term has zero feature gradient.
  TensorT<T> grad =
      conv2d_weight_grad(residual, code, dict.features.dim(2),
                         dict.features.dim(3), dict.stride, dict.pad);
  DictionaryT<T> out = dict;
  for (int64_t i = 0; i < grad.numel(); ++i)
    out.features.data[i] -= lr_dict * grad.data[i];
  std::vector<T> norms = normalize_features(out.features);
  const int K = out.features.dim(0);
  const int64_t per = out.features.numel() / K;
  for (int k = 0; k < K; ++k) {
    if (norms[k] == T(0)) {
      std::cerr << "dict_update: feature " << k
                << " collapsed to zero norm, reinitializing\n";
      Rng rng(fnv1a64(out.features.data.data(),
                      out.features.data.size() * sizeof(T)) +
              static_cast<uint64_t>(k));
      T* p = out.features.ptr(k * per);
      for (int64_t i = 0; i < per; ++i) p[i] = static_cast<T>(rng.normal());
      T sq = 0;
      for (int64_t i = 0; i < per; ++i) sq += p[i] * p[i];
      const T n = std::sqrt(sq);
      for (int64_t i = 0; i < per; ++i) p[i] /= n;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tape-recorded encoding: the iterations are unrolled, so backward passes
// through every Euler step with the soft-threshold subgradient (0 inside the
// dead zone, 1 outside). Only the per-step threshold masks are stored; the
// linear pieces reuse the feature bank, which is captured by value so later
// dictionary updates cannot alter the recorded graph. The features are
// constants of the graph: no gradient flows into them.

namespace detail {

struct BitMask {
  std::vector<uint64_t> bits;
  void resize(int64_t n) { bits.assign((n + 63) / 64, 0); }
  void set(int64_t i) { bits[i >> 6] |= uint64_t(1) << (i & 63); }
  bool get(int64_t i) const {
    return (bits[i >> 6] >> (i & 63)) & uint64_t(1);
  }
};

}  // namespace detail

inline int t_lca_encode(Tape& tp, int x_id, const Dictionary& dict,
                        const LcaConfig& cfg) {
  cfg.validate();
  const Tensor& x = tp.val(x_id);
  const int in_h = x.dim(2), in_w = x.dim(3);
  Tensor drive = input_drive(x, dict);

  auto masks = std::make_shared<std::vector<detail::BitMask>>();
  masks->resize(cfg.n_iter + 1);  // (*masks)[0] stays empty: code starts at 0

  LcaState state;
  state.membrane = Tensor::zeros(drive.shape);
  state.code = Tensor::zeros(drive.shape);
  state.in_h = in_h;
  state.in_w = in_w;
  for (int it = 0; it < cfg.n_iter; ++it) {
    lca_step(state, drive, dict, cfg, it);
    detail::BitMask& m = (*masks)[it + 1];
    m.resize(state.code.numel());
    for (int64_t i = 0; i < state.code.numel(); ++i)
      if (state.code.data[i] != 0.0f) m.set(i);
  }

  auto dict_snapshot = std::make_shared<Dictionary>(dict);
  const int out = tp.push(state.code);
  const int n_iter = cfg.n_iter;
  const float inv_gamma = 1.0f / cfg.gamma;
  tp.add_node([=](Tape& t) {
    if (!t.grad_touched(out)) return;
    const Tensor& g_code = t.grad(out);
    // u_t = dLoss/dMembrane_t, walked backward from the final step.
    Tensor u(g_code.shape);
    const detail::BitMask& last = (*masks)[n_iter];
    for (int64_t i = 0; i < u.numel(); ++i)
      u.data[i] = last.get(i) ? g_code.data[i] : 0.0f;
    Tensor g_drive = u;
    for (int step = n_iter - 1; step >= 1; --step) {
      Tensor lat = lateral_inhibition(u, *dict_snapshot, in_h, in_w);
      const detail::BitMask& m = (*masks)[step];
      for (int64_t i = 0; i < u.numel(); ++i) {
        const float inhib = m.get(i) ? lat.data[i] : 0.0f;
        u.data[i] = (1.0f - inv_gamma) * u.data[i] - inv_gamma * inhib;
      }
      accumulate(g_drive, u);
    }
    for (auto& v : g_drive.data) v *= inv_gamma;
    // Adjoint of the input drive maps code space back to input space.
    accumulate(t.grad_ref(x_id),
               conv2d_transpose(g_drive, dict_snapshot->features,
                                dict_snapshot->stride, dict_snapshot->pad,
                                in_h, in_w));
  });
  return out;
}

}  // namespace lcanet
