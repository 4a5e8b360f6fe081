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

// Perturbations and adversarial attacks on feature maps: seeded Gaussian
// noise, white-box gradient-sign attacks (single-step and projected
// iterative), and a black-box evasion path that trains a surrogate from
// query access only and transfers its gradients.
//
// All attacks operate on normalized feature maps and measure their budget
// in normalized units. Perturbed features are not clipped to any data range;
// normalized space is unbounded.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lcanet/autodiff.hpp"
#include "lcanet/common.hpp"
#include "lcanet/model.hpp"
#include "lcanet/tensor.hpp"

namespace lcanet {

enum class AttackKind { fgsm, pgd, gaussian, evasion };

inline std::string attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::pgd: return "pgd";
    case AttackKind::gaussian: return "gaussian";
    case AttackKind::evasion: return "evasion";
  }
  throw Error("unknown attack kind");
}

inline AttackKind parse_attack(const std::string& s) {
  if (s == "fgsm") return AttackKind::fgsm;
  if (s == "pgd") return AttackKind::pgd;
  if (s == "gaussian") return AttackKind::gaussian;
  if (s == "evasion") return AttackKind::evasion;
  throw Error("unknown attack: " + s + " (expected fgsm|pgd|gaussian|evasion)");
}

struct AttackConfig {
  AttackKind kind = AttackKind::fgsm;
  float epsilon = 0.0f;   // L-inf budget, or Gaussian scale
  int pgd_steps = 10;
  float pgd_alpha = 0.0f;  // 0 selects epsilon/4
  uint64_t seed = 0;

  void validate() const {
    if (epsilon < 0) throw Error("AttackConfig: epsilon must be >= 0");
    if (kind == AttackKind::pgd) {
      if (pgd_steps < 1) throw Error("AttackConfig: pgd_steps must be >= 1");
      if (alpha() <= 0 && epsilon > 0)
        throw Error("AttackConfig: pgd_alpha must be > 0");
    }
  }
  float alpha() const { return pgd_alpha > 0 ? pgd_alpha : epsilon / 4.0f; }
};

/// Adds i.i.d. Normal(0, epsilon^2) noise from the seeded generator.
inline Tensor gaussian_perturb(const Tensor& fm, float epsilon,
                               uint64_t seed) {
  Tensor out = fm;
  Rng rng(seed);
  for (auto& v : out.data)
    v += epsilon * static_cast<float>(rng.normal());
  return out;
}

/// Gradient of the mean classification loss w.r.t. the input batch, taken
/// through the eval-mode graph (sparse-coding steps fully unrolled).
inline Tensor input_gradient(ModelParams& params, const ModelSpec& spec,
                             const Tensor& batch,
                             const std::vector<int>& labels) {
  Tape tp;
  TapeForward fw = forward_tape(tp, params, spec, batch, /*train=*/false);
  const int loss_id = t_softmax_cross_entropy(tp, fw.logits_id, labels);
  tp.backward(loss_id);
  Tensor g = tp.grad(fw.input_id);
  for (float v : g.data)
    if (!std::isfinite(v))
      throw NumericError("input_gradient: non-finite gradient");
  return g;
}

namespace detail {

template <typename T>
inline T sign_of(T v) {
  if (v > T(0)) return T(1);
  if (v < T(0)) return T(-1);
  return T(0);
}

}  // namespace detail

/// Single gradient-sign step: fm + epsilon * sign(dLoss/dfm). sign(0) = 0,
/// so the perturbation never exceeds epsilon in L-inf.
inline Tensor fgsm(ModelParams& params, const ModelSpec& spec,
                   const Tensor& batch, const std::vector<int>& labels,
                   float epsilon) {
  Tensor g = input_gradient(params, spec, batch, labels);
  Tensor out = batch;
  for (int64_t i = 0; i < out.numel(); ++i)
    out.data[i] += epsilon * detail::sign_of(g.data[i]);
  return out;
}

/// Iterated gradient-sign steps projected back into the epsilon-ball around
/// the clean batch. Starts at the clean input (no random start), so
/// pgd(steps=1, alpha=epsilon) is bit-identical to fgsm.
inline Tensor pgd(ModelParams& params, const ModelSpec& spec,
                  const Tensor& batch, const std::vector<int>& labels,
                  float epsilon, float alpha, int steps,
                  uint64_t /*seed*/ = 0) {
  Tensor x = batch;
  for (int step = 0; step < steps; ++step) {
    Tensor g = input_gradient(params, spec, x, labels);
    for (int64_t i = 0; i < x.numel(); ++i) {
      float v = x.data[i] + alpha * detail::sign_of(g.data[i]);
      const float lo = batch.data[i] - epsilon;
      const float hi = batch.data[i] + epsilon;
      x.data[i] = std::min(std::max(v, lo), hi);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Black-box evasion

/// Query-only view of a target model: exposes predictions and nothing else.
/// Implementations must not leak parameters or gradients.
class QueryOracle {
 public:
  virtual ~QueryOracle() = default;
  virtual int predict(const Tensor& feature_map) = 0;
};

/// Adapter giving query access to a model held elsewhere.
class ModelOracle : public QueryOracle {
 public:
  ModelOracle(ModelParams& params, const ModelSpec& spec)
      : params_(params), spec_(spec) {}
  int predict(const Tensor& feature_map) override {
    std::vector<Tensor> one{feature_map};
    return predict_labels(params_, spec_, one)[0];
  }

 private:
  ModelParams& params_;
  const ModelSpec& spec_;
};

struct SurrogateResult {
  ModelParams params;
  ModelSpec spec;
  int64_t query_count = 0;
};

/// Labels every probe input through the oracle (one query per probe), then
/// trains the surrogate architecture on the (probe, oracle-label) pairs with
/// the standard training loop.
inline SurrogateResult train_surrogate(QueryOracle& oracle,
                                       const std::vector<Tensor>& probes,
                                       const ModelSpec& spec,
                                       const TrainConfig& cfg) {
  if (probes.empty()) throw Error("train_surrogate: empty probe set");
  SurrogateResult res;
  res.spec = spec;
  std::vector<int> labels(probes.size());
  for (size_t i = 0; i < probes.size(); ++i) {
    labels[i] = oracle.predict(probes[i]);
    ++res.query_count;
  }
  res.params = build(spec, cfg.seed);
  if (cfg.epochs > 0) {
    OptimizerState opt = make_optimizer(res.params, spec, cfg);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch)
      train_epoch(res.params, spec, probes, labels, cfg, epoch, opt);
  }
  return res;
}

/// Transfer attack: the gradient-sign perturbation is computed on the
/// surrogate; the caller evaluates the result against the target.
inline Tensor evasion_attack(SurrogateResult& surrogate, const Tensor& batch,
                             const std::vector<int>& labels, float epsilon) {
  return fgsm(surrogate.params, surrogate.spec, batch, labels, epsilon);
}

}  // namespace lcanet
