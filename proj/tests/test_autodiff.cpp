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

#include "catch_amalgamated.hpp"
#include "lcanet/autodiff.hpp"
#include "oracles.hpp"

using namespace lcanet;

namespace {

// Double-precision loss of a single affine layer followed by softmax
// cross-entropy, used as the finite-difference oracle for the float tape.
double affine_xent_loss(const TensorD& x, const TensorD& w, const TensorD& b,
                        const std::vector<int>& labels) {
  return softmax_cross_entropy(fully_connected(x, w, b), labels).loss;
}

}  // namespace

TEST_CASE("affine layer gradients match finite differences") {
  Rng rng(101);
  TensorD x = random_normal<double>({3, 1, 2, 4}, rng);
  TensorD w = random_normal<double>({3, 8}, rng);
  TensorD b = random_normal<double>({3}, rng);
  const std::vector<int> labels = {0, 2, 1};

  Tape tp;
  const int xid = tp.push(x.cast<float>());
  const int wid = tp.push(w.cast<float>());
  const int bid = tp.push(b.cast<float>());
  const int logits = t_fully_connected(tp, xid, wid, bid);
  const int loss = t_softmax_cross_entropy(tp, logits, labels);
  tp.backward(loss);

  auto fw = [&]() { return affine_xent_loss(x, w, b, labels); };
  const Tensor& gw = tp.grad(wid);
  for (int64_t i = 0; i < w.numel(); ++i) {
    const double fd = oracles::central_diff(fw, w, i, 1e-4);
    CHECK(oracles::rel_error(gw.data[i], fd, 1e-6) < 1e-4);
  }
  const Tensor& gx = tp.grad(xid);
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double fd = oracles::central_diff(fw, x, i, 1e-4);
    CHECK(oracles::rel_error(gx.data[i], fd, 1e-6) < 1e-4);
  }
}

TEST_CASE("loss independent of a parameter gives a zero gradient") {
  Rng rng(102);
  Tape tp;
  const int unused = tp.push(random_normal<float>({4, 4}, rng));
  const int x = tp.push(random_normal<float>({2, 1, 2, 2}, rng));
  const int w = tp.push(random_normal<float>({2, 4}, rng));
  const int b = tp.push(Tensor::zeros({2}));
  const int logits = t_fully_connected(tp, x, w, b);
  const int loss = t_softmax_cross_entropy(tp, logits, {0, 1});
  tp.backward(loss);
  for (float v : tp.grad(unused).data) CHECK(v == 0.0f);
}

TEST_CASE("tape reuse after consumption is an error") {
  Tape tp;
  const int x = tp.push(Tensor::zeros({1, 1}));
  const int w = tp.push(Tensor::full({2, 1}, 1.0f));
  const int b = tp.push(Tensor::zeros({2}));
  const int loss = t_softmax_cross_entropy(
      tp, t_fully_connected(tp, x, w, b), {0});
  tp.backward(loss);
  CHECK_THROWS_AS(tp.backward(loss), Error);
}

TEST_CASE("gradients accumulate additively when a value fans out") {
  // The same kernel drives two stacked convolutions; its gradient is the sum
  // of both contributions.
  Rng rng(103);
  TensorD xd = random_normal<double>({1, 1, 4, 4}, rng);
  TensorD wd = random_normal<double>({1, 1, 1, 1}, rng);
  const std::vector<int> labels = {1};

  auto loss_d = [&]() {
    TensorD h = conv2d(xd, wd, 1, 0);
    h = conv2d(h, wd, 1, 0);
    TensorD fw = TensorD::from({2, 16}, std::vector<double>(32, 0.25));
    TensorD fb = TensorD::from({2}, {0.0, 0.1});
    return softmax_cross_entropy(fully_connected(h, fw, fb), labels).loss;
  };

  Tape tp;
  const int x = tp.push(xd.cast<float>());
  const int w = tp.push(wd.cast<float>());
  int h = t_conv2d(tp, x, w, -1, 1, 0);
  h = t_conv2d(tp, h, w, -1, 1, 0);
  const int fw = tp.push(Tensor::full({2, 16}, 0.25f));
  const int fb = tp.push(Tensor::from({2}, {0.0f, 0.1f}));
  const int loss = t_softmax_cross_entropy(
      tp, t_fully_connected(tp, h, fw, fb), labels);
  tp.backward(loss);

  const double fd = oracles::central_diff(loss_d, wd, 0, 1e-5);
  CHECK(oracles::rel_error(tp.grad(w).data[0], fd, 1e-7) < 1e-3);
}

TEST_CASE("relu and maxpool route gradients through the tape") {
  Rng rng(104);
  TensorD xd = random_normal<double>({1, 1, 4, 4}, rng);
  const std::vector<int> labels = {0};
  auto loss_d = [&]() {
    TensorD h = relu(xd);
    h = maxpool2<double>(h, nullptr);
    TensorD fw = TensorD::from({2, 4}, {1, -1, 0.5, 0.2, -0.3, 1, 0.1, -0.2});
    TensorD fb = TensorD::zeros({2});
    return softmax_cross_entropy(fully_connected(h, fw, fb), labels).loss;
  };
  Tape tp;
  const int x = tp.push(xd.cast<float>());
  int h = t_relu(tp, x);
  h = t_maxpool2(tp, h);
  const int fw = tp.push(
      Tensor::from({2, 4}, {1, -1, 0.5f, 0.2f, -0.3f, 1, 0.1f, -0.2f}));
  const int fb = tp.push(Tensor::zeros({2}));
  const int loss = t_softmax_cross_entropy(
      tp, t_fully_connected(tp, h, fw, fb), labels);
  tp.backward(loss);
  const Tensor& gx = tp.grad(x);
  for (int64_t i = 0; i < xd.numel(); ++i) {
    // Keep clear of relu kinks and pooling ties.
    if (std::abs(xd.data[i]) < 1e-2) continue;
    const double fd = oracles::central_diff(loss_d, xd, i, 1e-6);
    CHECK(oracles::rel_error(gx.data[i], fd, 1e-6) < 1e-3);
  }
}

TEST_CASE("batchnorm through the tape matches double-precision gradients") {
  Rng rng(105);
  TensorD xd = random_normal<double>({4, 2, 2, 2}, rng);
  TensorD gd = TensorD::from({2}, {1.1, 0.9});
  TensorD bd = TensorD::from({2}, {0.0, 0.2});
  const std::vector<int> labels = {0, 1, 0, 1};
  auto loss_d = [&]() {
    TensorD rm = TensorD::zeros({2}), rv = TensorD::full({2}, 1.0);
    TensorD h = batchnorm<double>(xd, gd, bd, rm, rv, true);
    TensorD fw({2, 8});
    for (int64_t i = 0; i < fw.numel(); ++i)
      fw.data[i] = 0.1 * static_cast<double>((i * 7) % 11 - 5);
    TensorD fb = TensorD::zeros({2});
    return softmax_cross_entropy(fully_connected(h, fw, fb), labels).loss;
  };
  Tape tp;
  const int x = tp.push(xd.cast<float>());
  const int gamma = tp.push(gd.cast<float>());
  const int beta = tp.push(bd.cast<float>());
  Tensor rm = Tensor::zeros({2}), rv = Tensor::full({2}, 1.0f);
  int h = t_batchnorm(tp, x, gamma, beta, rm, rv, true);
  Tensor fwf({2, 8});
  for (int64_t i = 0; i < fwf.numel(); ++i)
    fwf.data[i] = 0.1f * static_cast<float>((i * 7) % 11 - 5);
  const int fw = tp.push(fwf);
  const int fb = tp.push(Tensor::zeros({2}));
  const int loss = t_softmax_cross_entropy(
      tp, t_fully_connected(tp, h, fw, fb), labels);
  tp.backward(loss);
  const Tensor& gx = tp.grad(x);
  const Tensor& ggamma = tp.grad(gamma);
  for (int64_t i = 0; i < xd.numel(); i += 3) {
    const double fd = oracles::central_diff(loss_d, xd, i, 1e-5);
    CHECK(oracles::rel_error(gx.data[i], fd, 1e-6) < 1e-3);
  }
  for (int64_t i = 0; i < 2; ++i) {
    const double fd = oracles::central_diff(loss_d, gd, i, 1e-5);
    CHECK(oracles::rel_error(ggamma.data[i], fd, 1e-6) < 1e-3);
  }
}
