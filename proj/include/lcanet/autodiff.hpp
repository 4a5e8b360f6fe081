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

// Reverse-mode gradient tape. A forward pass pushes values and records one
// backward closure per differentiable operation; backward() replays the
// closures in exact reverse execution order. Gradients accumulate additively
// at fan-in points. A tape records a single forward pass and can run
// backward once.

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "lcanet/ops.hpp"
#include "lcanet/tensor.hpp"

namespace lcanet {

class Tape {
 public:
  /// Registers a value (leaf or op output) and returns its id.
  int push(Tensor v) {
    values_.push_back(std::move(v));
    grads_.emplace_back();
    return static_cast<int>(values_.size()) - 1;
  }

  const Tensor& val(int id) const { return values_[id]; }

  /// Gradient of the loss w.r.t. value `id`; zeros if the loss does not
  /// depend on it. Valid after backward().
  const Tensor& grad(int id) {
    return grad_ref(id);
  }

  Tensor& grad_ref(int id) {
    if (grads_[id].data.empty() && values_[id].numel() > 0)
      grads_[id] = Tensor::zeros(values_[id].shape);
    return grads_[id];
  }

  bool grad_touched(int id) const { return !grads_[id].data.empty(); }

  void add_node(std::function<void(Tape&)> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
  }

  /// Runs reverse-mode accumulation from a scalar loss. The tape is consumed;
  /// a second call is an error.
  void backward(int loss_id) {
    if (consumed_)
      throw Error("Tape::backward: tape already consumed by a backward pass");
    consumed_ = true;
    if (values_[loss_id].numel() != 1)
      throw ShapeError("Tape::backward: loss must be a scalar");
    grad_ref(loss_id).data[0] = 1.0f;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)(*this);
  }

  bool consumed() const { return consumed_; }

 private:
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::vector<std::function<void(Tape&)>> nodes_;
  bool consumed_ = false;
};

// ---------------------------------------------------------------------------
// Tape-recorded operations. Each returns the id of its output value.

/// Convolution with optional bias. When `train_kernel` is false the kernel is
/// treated as a constant (no gradient is accumulated into it).
inline int t_conv2d(Tape& tp, int x, int w, int bias, int stride, int pad,
                    bool train_kernel = true) {
  Tensor y = conv2d(tp.val(x), tp.val(w), stride, pad);
  if (bias >= 0) add_channel_bias(y, tp.val(bias));
  const int out = tp.push(std::move(y));
  tp.add_node([=](Tape& t) {
    if (!t.grad_touched(out)) return;
    const Tensor& gy = t.grad(out);
    const Tensor& kernel = t.val(w);
    const Tensor& input = t.val(x);
    accumulate(t.grad_ref(x),
               conv2d_transpose(gy, kernel, stride, pad, input.dim(2),
                                input.dim(3)));
    if (train_kernel)
      accumulate(t.grad_ref(w),
                 conv2d_weight_grad(input, gy, kernel.dim(2), kernel.dim(3),
                                    stride, pad));
    if (bias >= 0) {
      Tensor& gb = t.grad_ref(bias);
      const int B = gy.dim(0), C = gy.dim(1);
      const int64_t hw = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const float* p = gy.ptr((static_cast<int64_t>(b) * C + c) * hw);
          float acc = 0;
          for (int64_t i = 0; i < hw; ++i) acc += p[i];
          gb.data[c] += acc;
        }
    }
  });
  return out;
}

inline int t_relu(Tape& tp, int x) {
  const int out = tp.push(relu(tp.val(x)));
  tp.add_node([=](Tape& t) {
    if (!t.grad_touched(out)) return;
    accumulate(t.grad_ref(x), relu_backward(t.grad(out), t.val(out)));
  });
  return out;
}

inline int t_maxpool2(Tape& tp, int x) {
  auto argmax = std::make_shared<std::vector<int64_t>>();
  const int out = tp.push(maxpool2(tp.val(x), argmax.get()));
  const std::vector<int> in_shape = tp.val(x).shape;
  tp.add_node([=](Tape& t) {
    if (!t.grad_touched(out)) return;
    accumulate(t.grad_ref(x),
               maxpool2_backward(t.grad(out), *argmax, in_shape));
  });
  return out;
}

/// Batch normalization. Running stats are updated in place in train mode.
inline int t_batchnorm(Tape& tp, int x, int gamma, int beta,
                       Tensor& running_mean, Tensor& running_var,
                       bool train) {
  auto cache = std::make_shared<BatchNormCache<float>>();
  const int out = tp.push(batchnorm(tp.val(x), tp.val(gamma), tp.val(beta),
                                    running_mean, running_var, train,
                                    cache.get()));
  tp.add_node([=](Tape& t) {
    if (!t.grad_touched(out)) return;
    Tensor gx, dgamma, dbeta;
    batchnorm_backward(t.grad(out), *cache, t.val(gamma), &gx, &dgamma,
                       &dbeta);
    accumulate(t.grad_ref(x), gx);
    accumulate(t.grad_ref(gamma), dgamma);
    accumulate(t.grad_ref(beta), dbeta);
  });
  return out;
}

inline int t_fully_connected(Tape& tp, int x, int w, int b) {
  const int out = tp.push(fully_connected(tp.val(x), tp.val(w), tp.val(b)));
  tp.add_node([=](Tape& t) {
    if (!t.grad_touched(out)) return;
    Tensor gx, gw, gb;
    fully_connected_backward(t.grad(out), t.val(x), t.val(w), &gx, &gw, &gb);
    accumulate(t.grad_ref(x), gx);
    accumulate(t.grad_ref(w), gw);
    accumulate(t.grad_ref(b), gb);
  });
  return out;
}

/// Mean softmax cross-entropy over the batch; returns the id of a scalar
/// loss value.
inline int t_softmax_cross_entropy(Tape& tp, int logits,
                                   std::vector<int> labels) {
  auto res = softmax_cross_entropy(tp.val(logits), labels);
  const int sm = tp.push(std::move(res.softmax));
  const int out = tp.push(Tensor::from({1}, {res.loss}));
  tp.add_node([=, labels = std::move(labels)](Tape& t) {
    if (!t.grad_touched(out)) return;
    const float upstream = t.grad(out).data[0];
    accumulate(t.grad_ref(logits),
               softmax_cross_entropy_backward(t.val(sm), labels, upstream));
  });
  return out;
}

}  // namespace lcanet
