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

// Experiment orchestration: loads a trained checkpoint and its dataset,
// sweeps perturbation strengths (background-noise SNR, feature-space
// epsilon), and emits machine-readable result records. Every record carries
// the seed and a config hash so it can be regenerated.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lcanet/attacks.hpp"
#include "lcanet/audio.hpp"
#include "lcanet/common.hpp"
#include "lcanet/mfcc.hpp"
#include "lcanet/model.hpp"

namespace lcanet {

// ---------------------------------------------------------------------------
// Result records and reports

struct ResultRecord {
  std::string model;
  std::string experiment;   // clean|background_noise|gaussian|fgsm|pgd|evasion
  std::string sweep_param;  // snr_db | epsilon | none
  double sweep_value = 0;
  double accuracy = 0;
  int64_t n = 0;            // sample count
  uint64_t seed = 0;
  double runtime_s = 0;
  std::string config_hash;
};

/// Stable 16-hex-digit hash of a key/value configuration; independent of the
/// order fields were inserted in.
inline std::string config_hash(const std::map<std::string, std::string>& kv) {
  uint64_t h = 14695981039346656037ull;
  for (const auto& [k, v] : kv) {  // std::map iterates in sorted key order
    h = fnv1a64(k, h);
    h = fnv1a64("=", h);
    h = fnv1a64(v, h);
    h = fnv1a64("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return std::string(buf);
}

inline std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

constexpr const char* kReportHeader =
    "model,experiment,sweep_param,sweep_value,accuracy,n,seed,runtime_s,"
    "config_hash";

inline void emit_report(const std::vector<ResultRecord>& records,
                        const std::string& format, const std::string& path) {
  if (records.empty()) throw Error("emit_report: no records");
  std::ostringstream os;
  if (format == "csv") {
    os << kReportHeader << "\n";
    for (const auto& r : records) {
      os << r.model << ',' << r.experiment << ',' << r.sweep_param << ','
         << format_g6(r.sweep_value) << ',' << format_g6(r.accuracy) << ','
         << r.n << ',' << r.seed << ',' << format_g6(r.runtime_s) << ','
         << r.config_hash << "\n";
    }
  } else if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
      nlohmann::json j{{"model", r.model},
                       {"experiment", r.experiment},
                       {"sweep_param", r.sweep_param},
                       {"accuracy", r.accuracy},
                       {"n", r.n},
                       {"seed", r.seed},
                       {"runtime_s", r.runtime_s},
                       {"config_hash", r.config_hash}};
      if (std::isinf(r.sweep_value))
        j["sweep_value"] = "inf";
      else
        j["sweep_value"] = r.sweep_value;
      arr.push_back(std::move(j));
    }
    os << arr.dump(2) << "\n";
  } else {
    throw Error("emit_report: unknown format '" + format + "'");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("emit_report: cannot write " + path);
  out << os.str();
  if (!out) throw DataError("emit_report: failed while writing " + path);
}

inline std::vector<ResultRecord> parse_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader)
    throw DataError("unexpected report header in " + path);
  std::vector<ResultRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9)
      throw DataError("malformed report row in " + path + ": " + line);
    ResultRecord r;
    r.model = cells[0];
    r.experiment = cells[1];
    r.sweep_param = cells[2];
    r.sweep_value = cells[3] == "inf" ? INFINITY : std::stod(cells[3]);
    r.accuracy = std::stod(cells[4]);
    r.n = std::stoll(cells[5]);
    r.seed = std::stoull(cells[6]);
    r.runtime_s = std::stod(cells[7]);
    r.config_hash = cells[8];
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<ResultRecord> parse_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report: " + path);
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("unparseable report " + path + ": " + e.what());
  }
  std::vector<ResultRecord> records;
  for (const auto& j : arr) {
    ResultRecord r;
    r.model = j.at("model").get<std::string>();
    r.experiment = j.at("experiment").get<std::string>();
    r.sweep_param = j.at("sweep_param").get<std::string>();
    r.sweep_value = j.at("sweep_value").is_string()
                        ? INFINITY
                        : j.at("sweep_value").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.n = j.at("n").get<int64_t>();
    r.seed = j.at("seed").get<uint64_t>();
    r.runtime_s = j.at("runtime_s").get<double>();
    r.config_hash = j.at("config_hash").get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Dataset featurization with an optional on-disk cache

/// Clean-feature cache keyed by (clip path, feature config hash, norm stats
/// hash). With no directory set, caching is in-memory only.
class FeatureCache {
 public:
  explicit FeatureCache(std::string dir = "") : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  Tensor get(const std::string& clip_path, const MfccExtractor& extractor,
             const NormStats& stats) {
    uint64_t key = fnv1a64(clip_path);
    key = hash_combine(key, extractor.config().hash());
    key = hash_combine(key, stats.hash());
    auto it = memory_.find(key);
    if (it != memory_.end()) return it->second;
    if (!dir_.empty()) {
      const std::string file = record_path(key);
      if (std::filesystem::exists(file)) {
        Tensor fm = load_feature_record(file);
        memory_[key] = fm;
        return fm;
      }
    }
    Tensor fm =
        apply_normalizer(extractor.compute(read_wav(clip_path)), stats);
    if (!dir_.empty()) save_feature_record(record_path(key), fm);
    memory_[key] = fm;
    return fm;
  }

 private:
  std::string record_path(uint64_t key) const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64 ".mfcc", key);
    return (std::filesystem::path(dir_) / buf).string();
  }
  std::string dir_;
  std::map<uint64_t, Tensor> memory_;
};

/// Everything a sweep needs: the trained model, its feature normalization,
/// and the featurized test split (plus raw waveforms for noise mixing).
struct ExperimentContext {
  ModelSpec spec;
  ModelParams params;
  uint64_t data_seed = 0;
  std::vector<std::string> classes;
  MfccExtractor extractor;
  NormStats stats;

  std::vector<AudioClip> test_clips;
  std::vector<int> test_labels;
  std::vector<Tensor> test_features;  // normalized, clean

  std::vector<AudioClip> noise_clips;  // raw, possibly longer than 1 s

  std::vector<Tensor> train_features;  // loaded only when requested
  std::vector<int> train_labels;
};

inline ExperimentContext load_context(const std::string& checkpoint_path,
                                      const std::string& data_root,
                                      const std::vector<std::string>& classes,
                                      uint64_t data_seed,
                                      bool need_train_split = false,
                                      const std::string& cache_dir = "") {
  ExperimentContext ctx;
  Checkpoint ck = load_checkpoint(checkpoint_path);
  ctx.spec = ck.spec;
  ctx.params = std::move(ck.params);
  ctx.data_seed = data_seed;
  ctx.classes = classes;
  ctx.stats.mean = ctx.params.at("feat_mean");
  ctx.stats.stdev = ctx.params.at("feat_std");

  const DatasetIndex index = index_dataset(data_root, classes, data_seed);
  FeatureCache cache(cache_dir);
  for (const DatasetEntry& e : index.entries) {
    if (e.split == Split::test) {
      ctx.test_clips.push_back(read_wav(e.path));
      ctx.test_labels.push_back(e.label);
      ctx.test_features.push_back(cache.get(e.path, ctx.extractor, ctx.stats));
    } else if (need_train_split) {
      ctx.train_labels.push_back(e.label);
      ctx.train_features.push_back(
          cache.get(e.path, ctx.extractor, ctx.stats));
    }
  }
  if (ctx.test_features.empty())
    throw DataError("no test samples under " + data_root);
  for (const std::string& p : index.noise_files)
    ctx.noise_clips.push_back(read_wav_raw(p));
  return ctx;
}

// ---------------------------------------------------------------------------
// Training entry point

struct TrainRun {
  ModelParams params;
  ModelSpec spec;
  std::vector<EpochMetrics> epochs;
  double seconds = 0;
};

/// Indexes the dataset, featurizes the training split, fits the feature
/// normalization, and runs the training loop. The normalization statistics
/// persist inside the returned parameters (and any checkpoint saved from
/// them).
inline TrainRun train_model(
    const std::string& data_root, const std::vector<std::string>& classes,
    const ModelSpec& spec, const TrainConfig& cfg,
    const std::function<void(int, const EpochMetrics&)>& on_epoch = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetIndex index = index_dataset(data_root, classes, cfg.seed);
  MfccExtractor extractor;
  std::vector<Tensor> raw;
  std::vector<int> labels;
  for (const DatasetEntry& e : index.entries) {
    if (e.split != Split::train) continue;
    raw.push_back(extractor.compute(read_wav(e.path)));
    labels.push_back(e.label);
  }
  if (raw.empty()) throw DataError("no training samples under " + data_root);
  const NormStats stats = fit_normalizer(raw);
  std::vector<Tensor> features;
  features.reserve(raw.size());
  for (const Tensor& fm : raw) features.push_back(apply_normalizer(fm, stats));

  TrainRun run;
  run.spec = spec;
  run.params = build(spec, cfg.seed);
  run.params.at("feat_mean") = stats.mean;
  run.params.at("feat_std") = stats.stdev;
  OptimizerState opt = make_optimizer(run.params, spec, cfg);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    run.epochs.push_back(
        train_epoch(run.params, spec, features, labels, cfg, epoch, opt));
    if (on_epoch) on_epoch(epoch, run.epochs.back());
  }
  run.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return run;
}

// ---------------------------------------------------------------------------
// Sweeps

inline ResultRecord run_clean_eval(ExperimentContext& ctx, uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultRecord r;
  r.model = variant_name(ctx.spec.variant);
  r.experiment = "clean";
  r.sweep_param = "none";
  r.sweep_value = 0;
  r.accuracy =
      evaluate(ctx.params, ctx.spec, ctx.test_features, ctx.test_labels);
  r.n = static_cast<int64_t>(ctx.test_features.size());
  r.seed = seed;
  r.runtime_s = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  r.config_hash = config_hash({{"model", r.model},
                               {"experiment", r.experiment},
                               {"seed", std::to_string(seed)}});
  return r;
}

/// Mixes background noise into every test waveform at each target SNR,
/// re-extracts features with the training normalization, and evaluates.
/// SNR = inf reproduces the clean accuracy exactly.
inline std::vector<ResultRecord> run_background_noise_sweep(
    ExperimentContext& ctx, const std::vector<double>& snr_list,
    uint64_t seed) {
  if (snr_list.empty()) throw Error("background-noise sweep: empty SNR list");
  std::vector<ResultRecord> records;
  for (const double snr : snr_list) {
    if (!std::isinf(snr) && ctx.noise_clips.empty())
      throw DataError(
          "background-noise sweep: no _background_noise_ files for finite "
          "SNR");
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Tensor> features;
    features.reserve(ctx.test_clips.size());
    for (size_t i = 0; i < ctx.test_clips.size(); ++i) {
      AudioClip mixed;
      if (std::isinf(snr)) {
        mixed = ctx.test_clips[i];
      } else {
        Rng pick(hash_combine(hash_combine(seed, fnv1a64(&snr, sizeof(snr))),
                              static_cast<uint64_t>(i)));
        const int noise_idx = pick.uniform_int(
            static_cast<int>(ctx.noise_clips.size()));
        mixed = mix_at_snr(ctx.test_clips[i], ctx.noise_clips[noise_idx], snr,
                           pick.next_u64())
                    .mixed;
      }
      features.push_back(
          apply_normalizer(ctx.extractor.compute(mixed), ctx.stats));
    }
    ResultRecord r;
    r.model = variant_name(ctx.spec.variant);
    r.experiment = "background_noise";
    r.sweep_param = "snr_db";
    r.sweep_value = snr;
    r.accuracy = evaluate(ctx.params, ctx.spec, features, ctx.test_labels);
    r.n = static_cast<int64_t>(features.size());
    r.seed = seed;
    r.runtime_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    r.config_hash = config_hash(
        {{"model", r.model},
         {"experiment", r.experiment},
         {"snr_db", format_g6(snr)},
         {"seed", std::to_string(seed)}});
    records.push_back(std::move(r));
  }
  return records;
}

struct AttackSweepOptions {
  int pgd_steps = 10;
  float pgd_alpha = 0.0f;  // 0 selects epsilon/4 per sweep point
  TrainConfig surrogate_cfg;  // used by the evasion path
  int batch_size = 32;
};

/// Attacks every test sample at each epsilon and evaluates the target on the
/// perturbed set. The epsilon = 0 point reproduces the clean accuracy
/// bit-exactly. Evasion trains one surrogate per sweep from query access
/// only and appends a record with its query count and target agreement.
inline std::vector<ResultRecord> run_attack_sweep(
    ExperimentContext& ctx, AttackKind kind,
    const std::vector<double>& eps_list, uint64_t seed,
    const AttackSweepOptions& opts = {}) {
  if (eps_list.empty()) throw Error("attack sweep: empty epsilon list");
  std::vector<ResultRecord> records;
  const std::string model = variant_name(ctx.spec.variant);

  SurrogateResult surrogate;
  if (kind == AttackKind::evasion) {
    if (ctx.train_features.empty())
      throw Error(
          "attack sweep: evasion needs the training split as probe set "
          "(load_context with need_train_split)");
    ModelOracle oracle(ctx.params, ctx.spec);
    ModelSpec surrogate_spec = ctx.spec;
    surrogate_spec.variant = Variant::cnn;  // weakest standard instantiation
    TrainConfig cfg = opts.surrogate_cfg;
    cfg.seed = hash_combine(seed, fnv1a64("surrogate"));
    const auto t0 = std::chrono::steady_clock::now();
    surrogate = train_surrogate(oracle, ctx.train_features, surrogate_spec, cfg);
    // Agreement with the target on the probe set, for auditability.
    std::vector<int> target_preds =
        predict_labels(ctx.params, ctx.spec, ctx.train_features);
    std::vector<int> surrogate_preds =
        predict_labels(surrogate.params, surrogate.spec, ctx.train_features);
    int agree = 0;
    for (size_t i = 0; i < target_preds.size(); ++i)
      if (target_preds[i] == surrogate_preds[i]) ++agree;
    ResultRecord r;
    r.model = model;
    r.experiment = "evasion_surrogate_agreement";
    r.sweep_param = "epsilon";
    r.sweep_value = 0;
    r.accuracy = static_cast<double>(agree) / target_preds.size();
    r.n = surrogate.query_count;
    r.seed = seed;
    r.runtime_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    r.config_hash = config_hash({{"model", model},
                                 {"experiment", r.experiment},
                                 {"seed", std::to_string(seed)}});
    records.push_back(std::move(r));
  }

  for (const double eps : eps_list) {
    const auto t0 = std::chrono::steady_clock::now();
    const float epsf = static_cast<float>(eps);
    std::vector<Tensor> perturbed;
    perturbed.reserve(ctx.test_features.size());
    if (kind == AttackKind::gaussian) {
      for (size_t i = 0; i < ctx.test_features.size(); ++i) {
        const uint64_t s = hash_combine(
            hash_combine(seed, fnv1a64(&eps, sizeof(eps))),
            static_cast<uint64_t>(i));
        perturbed.push_back(gaussian_perturb(ctx.test_features[i], epsf, s));
      }
    } else {
      const int bs = opts.batch_size;
      for (size_t start = 0; start < ctx.test_features.size();
           start += bs) {
        const size_t bsz =
            std::min<size_t>(bs, ctx.test_features.size() - start);
        std::vector<int> idx(bsz);
        std::vector<int> labels(bsz);
        for (size_t i = 0; i < bsz; ++i) {
          idx[i] = static_cast<int>(start + i);
          labels[i] = ctx.test_labels[start + i];
        }
        Tensor batch = gather_batch(ctx.test_features, idx);
        Tensor adv;
        if (kind == AttackKind::fgsm) {
          adv = fgsm(ctx.params, ctx.spec, batch, labels, epsf);
        } else if (kind == AttackKind::pgd) {
          const float alpha =
              opts.pgd_alpha > 0 ? opts.pgd_alpha : epsf / 4.0f;
          adv = pgd(ctx.params, ctx.spec, batch, labels, epsf, alpha,
                    opts.pgd_steps, seed);
        } else {
          adv = evasion_attack(surrogate, batch, labels, epsf);
        }
        const int64_t per = ctx.test_features[0].numel();
        for (size_t i = 0; i < bsz; ++i) {
          Tensor fm = ctx.test_features[0];
          std::copy(adv.data.begin() + static_cast<int64_t>(i) * per,
                    adv.data.begin() + static_cast<int64_t>(i + 1) * per,
                    fm.data.begin());
          perturbed.push_back(std::move(fm));
        }
      }
    }
    ResultRecord r;
    r.model = model;
    r.experiment = attack_name(kind);
    r.sweep_param = "epsilon";
    r.sweep_value = eps;
    r.accuracy = evaluate(ctx.params, ctx.spec, perturbed, ctx.test_labels);
    r.n = static_cast<int64_t>(perturbed.size());
    r.seed = seed;
    r.runtime_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    r.config_hash = config_hash({{"model", model},
                                 {"experiment", r.experiment},
                                 {"epsilon", format_g6(eps)},
                                 {"pgd_steps", std::to_string(opts.pgd_steps)},
                                 {"seed", std::to_string(seed)}});
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace lcanet
