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

// The three classifier architectures and their training loop.
//
//   cnn       conv -> relu -> pool -> conv -> relu -> pool -> fc
//   lcanet    sparse code -> pool -> conv -> relu -> pool -> fc
//   lcanet++  sparse code -> pool -> batchnorm -> sparse code -> pool -> fc
//
// Sparse-coding layers emit their codes directly (the soft threshold is the
// activation) and their feature banks learn unsupervised from reconstruction
// gradients; supervised gradients update every other parameter. Checkpoints
// round-trip bit-exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lcanet/autodiff.hpp"
#include "lcanet/common.hpp"
#include "lcanet/lca.hpp"
#include "lcanet/mfcc.hpp"
#include "lcanet/ops.hpp"
#include "lcanet/tensor.hpp"

namespace lcanet {

enum class Variant { cnn, lcanet, lcanet_pp };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::cnn: return "cnn";
    case Variant::lcanet: return "lcanet";
    case Variant::lcanet_pp: return "lcanet++";
  }
  throw Error("unknown variant");
}

inline Variant parse_variant(const std::string& s) {
  if (s == "cnn") return Variant::cnn;
  if (s == "lcanet") return Variant::lcanet;
  if (s == "lcanet++" || s == "lcanet_pp") return Variant::lcanet_pp;
  throw Error("unknown model variant: " + s + " (expected cnn|lcanet|lcanet++)");
}

struct ModelSpec {
  Variant variant = Variant::cnn;
  int n_classes = 3;
  int conv1_channels = 32;
  int conv2_channels = 64;
  int kernel = 5;
  int pad = 2;
  LcaConfig lca;
  int in_coeffs = 20;
  int in_frames = 98;

  int pool1_h() const { return (in_coeffs + 1) / 2; }
  int pool1_w() const { return (in_frames + 1) / 2; }
  int pool2_h() const { return (pool1_h() + 1) / 2; }
  int pool2_w() const { return (pool1_w() + 1) / 2; }
  int fc_inputs() const { return conv2_channels * pool2_h() * pool2_w(); }

  void validate() const {
    if (n_classes < 2) throw Error("ModelSpec: need at least 2 classes");
    lca.validate();
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"variant", variant_name(variant)},
                          {"n_classes", n_classes},
                          {"conv1_channels", conv1_channels},
                          {"conv2_channels", conv2_channels},
                          {"kernel", kernel},
                          {"pad", pad},
                          {"lca",
                           {{"lambda", lca.lambda},
                            {"gamma", lca.gamma},
                            {"n_iter", lca.n_iter},
                            {"nonneg", lca.nonneg}}},
                          {"in_coeffs", in_coeffs},
                          {"in_frames", in_frames}};
  }

  static ModelSpec from_json(const nlohmann::json& j) {
    ModelSpec s;
    s.variant = parse_variant(j.at("variant").get<std::string>());
    s.n_classes = j.at("n_classes").get<int>();
    s.conv1_channels = j.at("conv1_channels").get<int>();
    s.conv2_channels = j.at("conv2_channels").get<int>();
    s.kernel = j.at("kernel").get<int>();
    s.pad = j.at("pad").get<int>();
    s.lca.lambda = j.at("lca").at("lambda").get<float>();
    s.lca.gamma = j.at("lca").at("gamma").get<float>();
    s.lca.n_iter = j.at("lca").at("n_iter").get<int>();
    s.lca.nonneg = j.at("lca").at("nonneg").get<bool>();
    s.in_coeffs = j.at("in_coeffs").get<int>();
    s.in_frames = j.at("in_frames").get<int>();
    s.validate();
    return s;
  }
};

/// All learned tensors plus batch-norm running stats and the feature
/// normalization parameters, keyed by name. Shapes are determined uniquely
/// by the ModelSpec.
struct ModelParams {
  std::map<std::string, Tensor> tensors;

  Tensor& at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error("missing model tensor: " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error("missing model tensor: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return tensors.count(name) > 0; }
};

/// Expected tensor shapes for a spec; also defines the checkpoint layout.
inline std::map<std::string, std::vector<int>> expected_shapes(
    const ModelSpec& s) {
  std::map<std::string, std::vector<int>> m;
  const int k = s.kernel;
  if (s.variant == Variant::cnn) {
    m["conv1_w"] = {s.conv1_channels, 1, k, k};
    m["conv1_b"] = {s.conv1_channels};
  } else {
    m["dict1"] = {s.conv1_channels, 1, k, k};
  }
  if (s.variant == Variant::lcanet_pp) {
    m["bn_gamma"] = {s.conv1_channels};
    m["bn_beta"] = {s.conv1_channels};
    m["bn_rmean"] = {s.conv1_channels};
    m["bn_rvar"] = {s.conv1_channels};
    m["dict2"] = {s.conv2_channels, s.conv1_channels, k, k};
  } else {
    m["conv2_w"] = {s.conv2_channels, s.conv1_channels, k, k};
    m["conv2_b"] = {s.conv2_channels};
  }
  m["fc_w"] = {s.n_classes, s.fc_inputs()};
  m["fc_b"] = {s.n_classes};
  m["feat_mean"] = {s.in_coeffs};
  m["feat_std"] = {s.in_coeffs};
  return m;
}

/// Parameter names the supervised optimizer owns (everything learned except
/// the feature banks; running stats and feature normalization are buffers).
inline std::vector<std::string> trainable_names(const ModelSpec& s) {
  std::vector<std::string> names;
  if (s.variant == Variant::cnn) names.insert(names.end(), {"conv1_w", "conv1_b"});
  if (s.variant == Variant::lcanet_pp)
    names.insert(names.end(), {"bn_gamma", "bn_beta"});
  else
    names.insert(names.end(), {"conv2_w", "conv2_b"});
  names.insert(names.end(), {"fc_w", "fc_b"});
  return names;
}

inline std::vector<std::string> dictionary_names(const ModelSpec& s) {
  if (s.variant == Variant::lcanet) return {"dict1"};
  if (s.variant == Variant::lcanet_pp) return {"dict1", "dict2"};
  return {};
}

/// Deterministic initialization: conv/fc weights uniform in +-sqrt(1/fan_in),
/// feature banks from unit-normalized Gaussian draws, batch norm at identity.
inline ModelParams build(const ModelSpec& spec, uint64_t seed) {
  spec.validate();
  ModelParams p;
  Rng rng(seed);
  auto uniform_init = [&](std::vector<int> shape, int fan_in) {
    const float bound = std::sqrt(1.0f / static_cast<float>(fan_in));
    return random_uniform<float>(std::move(shape), -bound, bound, rng);
  };
  const int k = spec.kernel;
  const int fan1 = 1 * k * k;
  const int fan2 = spec.conv1_channels * k * k;
  if (spec.variant == Variant::cnn) {
    p.tensors["conv1_w"] = uniform_init({spec.conv1_channels, 1, k, k}, fan1);
    p.tensors["conv1_b"] = uniform_init({spec.conv1_channels}, fan1);
  } else {
    Tensor d = random_normal<float>({spec.conv1_channels, 1, k, k}, rng);
    normalize_features(d);
    p.tensors["dict1"] = std::move(d);
  }
  if (spec.variant == Variant::lcanet_pp) {
    p.tensors["bn_gamma"] = Tensor::full({spec.conv1_channels}, 1.0f);
    p.tensors["bn_beta"] = Tensor::zeros({spec.conv1_channels});
    p.tensors["bn_rmean"] = Tensor::zeros({spec.conv1_channels});
    p.tensors["bn_rvar"] = Tensor::full({spec.conv1_channels}, 1.0f);
    Tensor d = random_normal<float>(
        {spec.conv2_channels, spec.conv1_channels, k, k}, rng);
    normalize_features(d);
    p.tensors["dict2"] = std::move(d);
  } else {
    p.tensors["conv2_w"] =
        uniform_init({spec.conv2_channels, spec.conv1_channels, k, k}, fan2);
    p.tensors["conv2_b"] = uniform_init({spec.conv2_channels}, fan2);
  }
  p.tensors["fc_w"] =
      uniform_init({spec.n_classes, spec.fc_inputs()}, spec.fc_inputs());
  p.tensors["fc_b"] = uniform_init({spec.n_classes}, spec.fc_inputs());
  p.tensors["feat_mean"] = Tensor::zeros({spec.in_coeffs});
  p.tensors["feat_std"] = Tensor::full({spec.in_coeffs}, 1.0f);
  return p;
}

inline Dictionary dictionary_view(const ModelParams& p, const ModelSpec& spec,
                                  const std::string& name) {
  Dictionary d;
  d.features = p.at(name);
  d.stride = 1;
  d.pad = spec.pad;
  return d;
}

// ---------------------------------------------------------------------------
// Forward passes

/// Plain inference path (no gradient bookkeeping). Train mode only changes
/// batch normalization, which then updates running stats in place.
inline Tensor forward(ModelParams& params, const ModelSpec& spec,
                      const Tensor& batch, bool train) {
  Tensor h;
  if (spec.variant == Variant::cnn) {
    h = conv2d(batch, params.at("conv1_w"), 1, spec.pad);
    add_channel_bias(h, params.at("conv1_b"));
    h = relu(h);
    h = maxpool2<float>(h, nullptr);
    h = conv2d(h, params.at("conv2_w"), 1, spec.pad);
    add_channel_bias(h, params.at("conv2_b"));
    h = relu(h);
    h = maxpool2<float>(h, nullptr);
  } else if (spec.variant == Variant::lcanet) {
    h = lca_encode(batch, dictionary_view(params, spec, "dict1"), spec.lca)
            .code;
    h = maxpool2<float>(h, nullptr);
    h = conv2d(h, params.at("conv2_w"), 1, spec.pad);
    add_channel_bias(h, params.at("conv2_b"));
    h = relu(h);
    h = maxpool2<float>(h, nullptr);
  } else {
    h = lca_encode(batch, dictionary_view(params, spec, "dict1"), spec.lca)
            .code;
    h = maxpool2<float>(h, nullptr);
    h = batchnorm<float>(h, params.at("bn_gamma"), params.at("bn_beta"),
                         params.at("bn_rmean"), params.at("bn_rvar"), train);
    h = lca_encode(h, dictionary_view(params, spec, "dict2"), spec.lca).code;
    h = maxpool2<float>(h, nullptr);
  }
  return fully_connected(h, params.at("fc_w"), params.at("fc_b"));
}

/// Per-layer capture of a sparse-coding step, used for dictionary updates
/// and reconstruction metrics.
struct LcaLayerCapture {
  std::string dict_name;
  Tensor input;
  Tensor code;
};

struct TapeForward {
  int input_id = -1;
  int logits_id = -1;
  std::map<std::string, int> param_ids;  // supervised-trainable leaves
  std::vector<LcaLayerCapture> lca_layers;
};

/// Tape-recorded forward pass. Sparse-coding iterations are unrolled into a
/// single node whose backward walks every step; feature banks stay frozen on
/// the tape.
inline TapeForward forward_tape(Tape& tp, ModelParams& params,
                                const ModelSpec& spec, const Tensor& batch,
                                bool train) {
  TapeForward fw;
  fw.input_id = tp.push(batch);
  auto leaf = [&](const std::string& name) {
    const int id = tp.push(params.at(name));
    fw.param_ids[name] = id;
    return id;
  };
  int h;
  if (spec.variant == Variant::cnn) {
    h = t_conv2d(tp, fw.input_id, leaf("conv1_w"), leaf("conv1_b"), 1,
                 spec.pad);
    h = t_relu(tp, h);
    h = t_maxpool2(tp, h);
    h = t_conv2d(tp, h, leaf("conv2_w"), leaf("conv2_b"), 1, spec.pad);
    h = t_relu(tp, h);
    h = t_maxpool2(tp, h);
  } else if (spec.variant == Variant::lcanet) {
    const Dictionary d1 = dictionary_view(params, spec, "dict1");
    h = t_lca_encode(tp, fw.input_id, d1, spec.lca);
    fw.lca_layers.push_back({"dict1", batch, tp.val(h)});
    h = t_maxpool2(tp, h);
    h = t_conv2d(tp, h, leaf("conv2_w"), leaf("conv2_b"), 1, spec.pad);
    h = t_relu(tp, h);
    h = t_maxpool2(tp, h);
  } else {
    const Dictionary d1 = dictionary_view(params, spec, "dict1");
    h = t_lca_encode(tp, fw.input_id, d1, spec.lca);
    fw.lca_layers.push_back({"dict1", batch, tp.val(h)});
    h = t_maxpool2(tp, h);
    h = t_batchnorm(tp, h, leaf("bn_gamma"), leaf("bn_beta"),
                    params.at("bn_rmean"), params.at("bn_rvar"), train);
    const Dictionary d2 = dictionary_view(params, spec, "dict2");
    const int bn_out = h;
    h = t_lca_encode(tp, h, d2, spec.lca);
    fw.lca_layers.push_back({"dict2", tp.val(bn_out), tp.val(h)});
    h = t_maxpool2(tp, h);
  }
  fw.logits_id = t_fully_connected(tp, h, leaf("fc_w"), leaf("fc_b"));
  return fw;
}

// ---------------------------------------------------------------------------
// Training and evaluation

struct TrainConfig {
  int epochs = 20;
  float lr = 1e-4f;
  float momentum = 0.9f;
  float lr_dict = 0.01f;
  int batch_size = 32;
  uint64_t seed = 1;

  void validate() const {
    if (epochs < 1) throw Error("TrainConfig: epochs must be >= 1");
    if (batch_size < 2) throw Error("TrainConfig: batch_size must be >= 2");
  }
};

struct OptimizerState {
  std::map<std::string, Tensor> velocity;
  float lr = 1e-4f;
  float momentum = 0.9f;
};

inline OptimizerState make_optimizer(const ModelParams& params,
                                     const ModelSpec& spec,
                                     const TrainConfig& cfg) {
  OptimizerState opt;
  opt.lr = cfg.lr;
  opt.momentum = cfg.momentum;
  for (const std::string& name : trainable_names(spec))
    opt.velocity[name] = Tensor::zeros(params.at(name).shape);
  return opt;
}

struct EpochMetrics {
  double supervised_loss = 0;
  double train_accuracy = 0;
  std::map<std::string, double> recon_loss;  // per sparse layer, per sample
};

inline Tensor gather_batch(const std::vector<Tensor>& features,
                           const std::vector<int>& idx) {
  const Tensor& first = features[idx[0]];
  Tensor batch({static_cast<int>(idx.size()), first.dim(1), first.dim(2),
                first.dim(3)});
  const int64_t per = first.numel();
  for (size_t i = 0; i < idx.size(); ++i)
    std::copy(features[idx[i]].data.begin(), features[idx[i]].data.end(),
              batch.data.begin() + static_cast<int64_t>(i) * per);
  return batch;
}

/// One pass over the training split. Per batch: (1) forward with sparse
/// codes, (2) unsupervised feature-bank update from each layer's input and
/// code, (3) supervised backward updating every non-bank parameter. Batch
/// order is a seeded permutation per epoch.
inline EpochMetrics train_epoch(ModelParams& params, const ModelSpec& spec,
                                const std::vector<Tensor>& features,
                                const std::vector<int>& labels,
                                const TrainConfig& cfg, int epoch,
                                OptimizerState& opt) {
  cfg.validate();
  const int n = static_cast<int>(features.size());
  if (n == 0) throw Error("train_epoch: empty training split");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(hash_combine(cfg.seed, 0x5eedull + static_cast<uint64_t>(epoch)));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

  EpochMetrics metrics;
  int n_batches = 0, n_correct = 0, n_seen = 0;
  std::map<std::string, int64_t> recon_samples;

  for (int start = 0; start < n; start += cfg.batch_size) {
    const int bsz = std::min(cfg.batch_size, n - start);
    if (bsz < 2) break;  // batch norm train mode needs >= 2 samples
    std::vector<int> idx(order.begin() + start, order.begin() + start + bsz);
    Tensor batch = gather_batch(features, idx);
    std::vector<int> batch_labels(bsz);
    for (int i = 0; i < bsz; ++i) batch_labels[i] = labels[idx[i]];

    Tape tp;
    TapeForward fw = forward_tape(tp, params, spec, batch, /*train=*/true);
    const int loss_id = t_softmax_cross_entropy(tp, fw.logits_id, batch_labels);
    const float loss = tp.val(loss_id).data[0];
    if (!std::isfinite(loss))
      throw NumericError("train_epoch: non-finite loss in epoch " +
                         std::to_string(epoch) + ", batch " +
                         std::to_string(n_batches));

    const Tensor& logits = tp.val(fw.logits_id);
    for (int i = 0; i < bsz; ++i) {
      int best = 0;
      for (int k = 1; k < spec.n_classes; ++k)
        if (logits.data[static_cast<int64_t>(i) * spec.n_classes + k] >
            logits.data[static_cast<int64_t>(i) * spec.n_classes + best])
          best = k;
      if (best == batch_labels[i]) ++n_correct;
    }
    n_seen += bsz;

    // Unsupervised feature-bank step (label-free), before the supervised
    // update; the tape holds its own snapshot of the banks.
    for (const LcaLayerCapture& cap : fw.lca_layers) {
      Dictionary dict = dictionary_view(params, spec, cap.dict_name);
      metrics.recon_loss[cap.dict_name] +=
          reconstruction_loss(cap.input, cap.code, dict, spec.lca.lambda);
      recon_samples[cap.dict_name] += cap.input.dim(0);
      if (cfg.lr_dict != 0.0f) {
        Dictionary updated = dict_update(dict, cap.input, cap.code,
                                         cfg.lr_dict);
        params.at(cap.dict_name) = std::move(updated.features);
      }
    }

    tp.backward(loss_id);
    for (const auto& [name, id] : fw.param_ids)
      sgd_momentum_step(params.at(name), tp.grad(id), opt.velocity.at(name),
                        opt.lr, opt.momentum);

    metrics.supervised_loss += loss;
    ++n_batches;
  }
  if (n_batches == 0) throw Error("train_epoch: no usable batches");
  metrics.supervised_loss /= n_batches;
  metrics.train_accuracy = static_cast<double>(n_correct) / n_seen;
  for (auto& [name, total] : metrics.recon_loss)
    total /= static_cast<double>(recon_samples[name]);
  return metrics;
}

/// Predicted labels (argmax, ties to the lowest class index).
inline std::vector<int> predict_labels(ModelParams& params,
                                       const ModelSpec& spec,
                                       const std::vector<Tensor>& features,
                                       int batch_size = 32) {
  std::vector<int> preds;
  preds.reserve(features.size());
  for (size_t start = 0; start < features.size(); start += batch_size) {
    const size_t bsz = std::min<size_t>(batch_size, features.size() - start);
    std::vector<int> idx(bsz);
    for (size_t i = 0; i < bsz; ++i) idx[i] = static_cast<int>(start + i);
    Tensor batch = gather_batch(features, idx);
    Tensor logits = forward(params, spec, batch, /*train=*/false);
    for (size_t i = 0; i < bsz; ++i) {
      int best = 0;
      for (int k = 1; k < spec.n_classes; ++k)
        if (logits.data[i * spec.n_classes + k] >
            logits.data[i * spec.n_classes + best])
          best = k;
      preds.push_back(best);
    }
  }
  return preds;
}

inline double evaluate(ModelParams& params, const ModelSpec& spec,
                       const std::vector<Tensor>& features,
                       const std::vector<int>& labels, int batch_size = 32) {
  if (features.empty()) throw Error("evaluate: empty split");
  const std::vector<int> preds =
      predict_labels(params, spec, features, batch_size);
  int correct = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// 8-byte magic "LCANETPP", u64 manifest length, UTF-8 JSON manifest (format
// version, spec fields, ordered tensor records with name/shape/byte offsets),
// then a contiguous little-endian float32 blob. Writes are atomic.

constexpr char kCheckpointMagic[9] = "LCANETPP";

inline void save_checkpoint(const ModelParams& params, const ModelSpec& spec,
                            const std::string& path, uint64_t train_seed = 0) {
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["spec"] = spec.to_json();
  manifest["train_seed"] = train_seed;
  nlohmann::json records = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, tensor] : params.tensors) {
    const uint64_t len = tensor.data.size() * sizeof(float);
    records.push_back({{"name", name},
                       {"shape", tensor.shape},
                       {"byte_offset", offset},
                       {"byte_length", len}});
    offset += len;
  }
  manifest["tensors"] = std::move(records);
  const std::string text = manifest.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    const uint64_t manifest_len = text.size();
    out.write(reinterpret_cast<const char*>(&manifest_len), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, tensor] : params.tensors)
      out.write(reinterpret_cast<const char*>(tensor.data.data()),
                static_cast<std::streamsize>(tensor.data.size() *
                                             sizeof(float)));
    if (!out) throw DataError("failed while writing checkpoint: " + path);
  }
  std::filesystem::rename(tmp, path);
}

struct Checkpoint {
  ModelParams params;
  ModelSpec spec;
  uint64_t train_seed = 0;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path);
  uint64_t manifest_len = 0;
  in.read(reinterpret_cast<char*>(&manifest_len), 8);
  if (!in || manifest_len > (1ull << 30))
    throw DataError("corrupt checkpoint manifest length: " + path);
  std::string text(manifest_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(manifest_len));
  if (!in) throw DataError("truncated checkpoint manifest: " + path);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("unparseable checkpoint manifest: " + path + ": " +
                    e.what());
  }
  if (manifest.at("format_version").get<int>() != 1)
    throw DataError("unsupported checkpoint format version in " + path);

  Checkpoint ck;
  ck.spec = ModelSpec::from_json(manifest.at("spec"));
  ck.train_seed = manifest.value("train_seed", uint64_t(0));

  const auto expected = expected_shapes(ck.spec);
  for (const auto& rec : manifest.at("tensors")) {
    const std::string name = rec.at("name").get<std::string>();
    const std::vector<int> shape = rec.at("shape").get<std::vector<int>>();
    const uint64_t len = rec.at("byte_length").get<uint64_t>();
    auto it = expected.find(name);
    if (it == expected.end())
      throw DataError("checkpoint tensor '" + name +
                      "' not part of the spec: " + path);
    if (it->second != shape)
      throw DataError("checkpoint tensor '" + name +
                      "' has unexpected shape in " + path);
    Tensor t(shape);
    if (len != t.data.size() * sizeof(float))
      throw DataError("checkpoint tensor '" + name +
                      "' byte length disagrees with shape in " + path);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated checkpoint blob: " + path);
    ck.params.tensors[name] = std::move(t);
  }
  for (const auto& [name, shape] : expected)
    if (!ck.params.has(name))
      throw DataError("checkpoint missing tensor '" + name + "': " + path);
  return ck;
}

/// Loads a checkpoint and rejects it if it was not written for the expected
/// architecture variant.
inline Checkpoint load_checkpoint(const std::string& path, Variant expected) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.spec.variant != expected)
    throw DataError("checkpoint " + path + " holds a " +
                    variant_name(ck.spec.variant) + " model, expected " +
                    variant_name(expected));
  return ck;
}

}  // namespace lcanet
