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

// Unconditional property suite: numerics, dynamics, mixing, attacks, and
// persistence invariants, checked end to end in a few minutes. Prints one
// line per property and a summary line; the exit code is the number of
// failures.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "lcanet/attacks.hpp"
#include "lcanet/harness.hpp"
#include "lcanet/synth.hpp"
#include "oracles.hpp"

using namespace lcanet;

namespace {

struct PropReport {
  int failures = 0;
  int total = 0;
  void check(const std::string& name, bool ok, const std::string& detail) {
    ++total;
    if (!ok) ++failures;
    std::printf("[PROP] %-44s %s%s%s\n", name.c_str(), ok ? "PASS" : "FAIL",
                detail.empty() ? "" : "  ", detail.c_str());
    std::fflush(stdout);
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return std::string(buf);
}

ModelSpec default_spec(Variant v) {
  ModelSpec s;
  s.variant = v;
  return s;
}

}  // namespace

int main() {
  PropReport rep;
  namespace fs = std::filesystem;

  // --- conv/transpose adjointness (rel 1e-5) ---
  {
    Rng rng(1);
    double worst = 0;
    for (int trial = 0; trial < 12; ++trial) {
      const int stride = 1 + trial % 2, pad = trial % 3;
      Tensor x = random_normal<float>({2, 2, 8, 9}, rng);
      Tensor k = random_normal<float>({4, 2, 3, 3}, rng);
      Tensor cx = conv2d(x, k, stride, pad);
      Tensor y = random_normal<float>(cx.shape, rng);
      Tensor ty = conv2d_transpose(y, k, stride, pad, 8, 9);
      worst = std::max(worst,
                       oracles::rel_error(oracles::inner_product(cx, y),
                                          oracles::inner_product(x, ty)));
    }
    rep.check("conv/transpose adjointness", worst < 1e-5,
              fmt("worst rel err %.2e", worst));
  }

  // --- finite-difference gradient checks, double shadow (rel 1e-4) ---
  {
    Rng rng(2);
    double worst = 0;
    {  // conv input + kernel
      TensorD x = random_normal<double>({2, 2, 6, 6}, rng);
      TensorD k = random_normal<double>({3, 2, 3, 3}, rng);
      TensorD target = random_normal<double>({2, 3, 6, 6}, rng);
      auto loss = [&]() {
        TensorD y = conv2d(x, k, 1, 1);
        double acc = 0;
        for (int64_t i = 0; i < y.numel(); ++i) {
          const double d = y.data[i] - target.data[i];
          acc += 0.5 * d * d;
        }
        return acc;
      };
      TensorD y = conv2d(x, k, 1, 1);
      TensorD gy(y.shape);
      for (int64_t i = 0; i < y.numel(); ++i)
        gy.data[i] = y.data[i] - target.data[i];
      TensorD gx = conv2d_transpose(gy, k, 1, 1, 6, 6);
      TensorD gk = conv2d_weight_grad(x, gy, 3, 3, 1, 1);
      for (int64_t i = 0; i < x.numel(); i += 9)
        worst = std::max(worst,
                         oracles::rel_error(
                             gx.data[i], oracles::central_diff(loss, x, i,
                                                               1e-5),
                             1e-7));
      for (int64_t i = 0; i < k.numel(); i += 5)
        worst = std::max(worst,
                         oracles::rel_error(
                             gk.data[i], oracles::central_diff(loss, k, i,
                                                               1e-5),
                             1e-7));
    }
    {  // softmax cross-entropy
      TensorD logits = random_normal<double>({4, 3}, rng);
      const std::vector<int> labels = {0, 2, 1, 1};
      auto res = softmax_cross_entropy(logits, labels);
      TensorD g = softmax_cross_entropy_backward(res.softmax, labels);
      auto loss = [&]() {
        return softmax_cross_entropy(logits, labels).loss;
      };
      for (int64_t i = 0; i < logits.numel(); ++i)
        worst = std::max(
            worst, oracles::rel_error(
                       g.data[i],
                       oracles::central_diff(loss, logits, i, 1e-4), 1e-8));
    }
    rep.check("finite-difference gradients (float64)", worst < 1e-4,
              fmt("worst rel err %.2e", worst));
  }

  // --- end-to-end float32 input gradient at production size (rel 1e-2) ---
  {
    Rng rng(3);
    const ModelSpec spec = default_spec(Variant::lcanet_pp);
    ModelParams p = build(spec, 17);
    Tensor fm = random_normal<float>({1, 1, 20, 98}, rng);
    const std::vector<int> labels = {1};
    Tape tp;
    const TapeForward fw = forward_tape(tp, p, spec, fm, false);
    const int loss_id = t_softmax_cross_entropy(tp, fw.logits_id, labels);
    tp.backward(loss_id);
    const Tensor g = tp.grad(fw.input_id);
    auto loss_at = [&]() {
      return softmax_cross_entropy(forward(p, spec, fm, false), labels).loss;
    };
    double worst = 0;
    int checked = 0;
    Rng pick(33);
    while (checked < 10) {
      const int64_t i = pick.uniform_int(static_cast<int>(fm.numel()));
      if (std::abs(g.data[i]) < 5e-4f) continue;
      const float saved = fm.data[i];
      const float h = 1e-2f;
      fm.data[i] = saved + h;
      const double fp = loss_at();
      fm.data[i] = saved - h;
      const double fmv = loss_at();
      fm.data[i] = saved;
      worst = std::max(
          worst, oracles::rel_error(g.data[i], (fp - fmv) / (2.0 * h), 1e-6));
      ++checked;
    }
    rep.check("end-to-end input gradient (float32)", worst < 1e-2,
              fmt("worst rel err %.2e over 10 coords", worst));
  }

  // --- energy descent on 20 seeds ---
  {
    bool ok = true;
    double worst_rise = 0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(100 + seed);
      Dictionary dict = make_dictionary<float>(4, 1, 3, 3, 1, rng);
      dict.pad = 1;
      Tensor x = random_normal<float>({1, 1, 8, 8}, rng);
      LcaConfig cfg;
      cfg.lambda = 0.5f;
      cfg.gamma = 50.0f;
      Tensor drive = input_drive(x, dict);
      LcaState state;
      state.membrane = Tensor::zeros(drive.shape);
      state.code = Tensor::zeros(drive.shape);
      state.in_h = 8;
      state.in_w = 8;
      double prev = reconstruction_loss(x, state.code, dict, cfg.lambda);
      for (int it = 0; it < 40; ++it) {
        lca_step(state, drive, dict, cfg, it);
        const double e = reconstruction_loss(x, state.code, dict, cfg.lambda);
        if (it >= 3) {
          worst_rise = std::max(worst_rise, e - prev);
          if (e > prev + 1e-4) ok = false;
        }
        prev = e;
      }
    }
    rep.check("sparse-coding energy descent (20 seeds)", ok,
              fmt("worst step rise %.2e", worst_rise));
  }

  // --- sparsity monotone in lambda ---
  {
    Rng rng(4);
    Dictionary dict = make_dictionary<float>(6, 1, 5, 5, 1, rng);
    Tensor x = random_normal<float>({4, 1, 12, 14}, rng);
    bool ok = true;
    double prev_frac = 1.0;
    std::string detail;
    for (const float lambda : {0.1f, 0.5f, 1.0f, 2.0f}) {
      LcaConfig cfg;
      cfg.lambda = lambda;
      const LcaState st = lca_encode(x, dict, cfg);
      int64_t nnz = 0;
      for (float v : st.code.data)
        if (v != 0.0f) ++nnz;
      const double frac = static_cast<double>(nnz) / st.code.numel();
      detail += fmt("%.3f ", frac);
      if (frac > prev_frac) ok = false;
      prev_frac = frac;
    }
    rep.check("sparsity monotone in lambda", ok, "fractions " + detail);
  }

  // --- ISTA oracle energy within 5% on tiny 1-D instances ---
  {
    Rng rng(5);
    bool ok = true;
    double worst_ratio = 0;
    for (int trial = 0; trial < 4; ++trial) {
      Tensor features = random_normal<float>({2 + trial % 2, 1, 1, 3}, rng);
      normalize_features(features);
      Dictionary dict;
      dict.features = features;
      dict.stride = 1;
      dict.pad = 0;
      Tensor x = random_normal<float>({1, 1, 1, 12}, rng);
      LcaConfig cfg;
      cfg.lambda = 0.3f;
      cfg.gamma = 50.0f;
      cfg.n_iter = 600;
      const LcaState st = lca_encode(x, dict, cfg);
      const double lca_e = reconstruction_loss(x, st.code, dict, cfg.lambda);
      Tensor ista = oracles::ista_solve(x, dict.features, 1, 0, cfg.lambda,
                                        cfg.nonneg, 800, rng);
      const double ista_e = oracles::sparse_objective_direct(
          x, ista, dict.features, 1, 0, cfg.lambda);
      worst_ratio = std::max(worst_ratio, lca_e / ista_e);
      if (lca_e > 1.05 * ista_e + 1e-4) ok = false;
    }
    rep.check("energy within 5% of ISTA oracle", ok,
              fmt("worst ratio %.4f", worst_ratio));
  }

  // --- unit-norm feature invariant through updates ---
  {
    Rng rng(6);
    Dictionary dict = make_dictionary<float>(5, 1, 5, 5, 1, rng);
    double worst = 0;
    for (int it = 0; it < 8; ++it) {
      Tensor x = random_normal<float>({4, 1, 10, 10}, rng);
      LcaConfig cfg;
      cfg.lambda = 0.4f;
      cfg.n_iter = 30;
      const LcaState st = lca_encode(x, dict, cfg);
      dict = dict_update(dict, x, st.code, 0.02f);
      const int64_t per = dict.features.numel() / dict.count();
      for (int k = 0; k < dict.count(); ++k) {
        double sq = 0;
        for (int64_t i = 0; i < per; ++i) {
          const double v = dict.features.data[k * per + i];
          sq += v * v;
        }
        worst = std::max(worst, std::abs(std::sqrt(sq) - 1.0));
      }
    }
    rep.check("unit-norm feature invariant", worst < 1e-5,
              fmt("worst deviation %.2e", worst));
  }

  // --- SNR mixing within 0.1 dB ---
  {
    Rng rng(7);
    AudioClip signal, noise;
    signal.samples.resize(16000);
    noise.samples.resize(48000);
    for (auto& v : signal.samples) v = static_cast<float>(0.15 * rng.normal());
    for (auto& v : noise.samples) v = static_cast<float>(0.4 * rng.normal());
    double worst = 0;
    for (double snr : {-10.0, 0.0, 5.0, 15.0, 25.0, 40.0}) {
      const MixResult res = mix_at_snr(signal, noise, snr, 77);
      std::vector<float> crop(noise.samples.begin() + res.crop_offset,
                              noise.samples.begin() + res.crop_offset + 16000);
      for (auto& v : crop) v *= res.scale;
      const double achieved =
          20.0 * std::log10(rms(signal.samples) / rms(crop));
      worst = std::max(worst, std::abs(achieved - snr));
    }
    rep.check("SNR mixing within 0.1 dB", worst < 0.1,
              fmt("worst deviation %.3f dB", worst));
  }

  // --- FGSM equals single-step PGD bit for bit ---
  {
    Rng rng(8);
    bool ok = true;
    for (Variant v : {Variant::cnn, Variant::lcanet, Variant::lcanet_pp}) {
      ModelSpec spec = default_spec(v);
      spec.conv1_channels = 8;
      spec.conv2_channels = 12;
      spec.lca.n_iter = 10;
      ModelParams p = build(spec, 23);
      Tensor batch = random_normal<float>({2, 1, 20, 98}, rng);
      const std::vector<int> labels = {0, 2};
      const Tensor a = fgsm(p, spec, batch, labels, 0.02f);
      const Tensor b = pgd(p, spec, batch, labels, 0.02f, 0.02f, 1, 0);
      if (a.data != b.data) ok = false;
    }
    rep.check("fgsm equals 1-step pgd (bit exact)", ok, "");
  }

  // --- L-inf containment for all attacks ---
  {
    Rng rng(9);
    ModelSpec spec = default_spec(Variant::lcanet);
    spec.conv1_channels = 8;
    spec.conv2_channels = 12;
    spec.lca.n_iter = 10;
    ModelParams p = build(spec, 29);
    Tensor batch = random_normal<float>({3, 1, 20, 98}, rng);
    const std::vector<int> labels = {0, 1, 2};
    const float eps = 0.03f;
    float worst = 0;
    for (int mode = 0; mode < 2; ++mode) {
      const Tensor adv = mode == 0
                             ? fgsm(p, spec, batch, labels, eps)
                             : pgd(p, spec, batch, labels, eps, eps / 4, 10,
                                   0);
      for (int64_t i = 0; i < batch.numel(); ++i)
        worst = std::max(worst, std::abs(adv.data[i] - batch.data[i]));
    }
    rep.check("L-inf containment (fgsm, pgd)", worst <= eps + 1e-7f,
              fmt("max deviation %.5f vs eps %.5f", worst, eps));
  }

  // --- checkpoint round trip, bit exact ---
  {
    const fs::path dir = fs::temp_directory_path() / "lcanet_accept_ckpt";
    fs::create_directories(dir);
    const std::string path = (dir / "pp.ckpt").string();
    ModelSpec spec = default_spec(Variant::lcanet_pp);
    spec.conv1_channels = 8;
    spec.conv2_channels = 12;
    ModelParams p = build(spec, 31);
    save_checkpoint(p, spec, path, 31);
    const Checkpoint ck = load_checkpoint(path);
    bool ok = ck.spec.variant == Variant::lcanet_pp && ck.train_seed == 31;
    for (const auto& [name, t] : p.tensors)
      if (!ck.params.has(name) || ck.params.at(name).data != t.data)
        ok = false;
    rep.check("checkpoint round-trip bit-exact", ok, "");
  }

  // --- full-pipeline seeded determinism ---
  {
    const fs::path root = fs::temp_directory_path() / "lcanet_accept_det";
    if (!fs::exists(root / "yes")) {
      SynthConfig scfg;
      scfg.clips_per_class = 6;
      scfg.seed = 99;
      write_synth_dataset(root.string(), scfg);
    }
    bool ok = true;
    for (Variant v : {Variant::cnn, Variant::lcanet}) {
      ModelSpec spec = default_spec(v);
      spec.conv1_channels = 8;
      spec.conv2_channels = 12;
      spec.lca.n_iter = 10;
      TrainConfig cfg;
      cfg.epochs = 1;
      cfg.batch_size = 4;
      cfg.seed = 13;
      auto once = [&]() {
        TrainRun run =
            train_model(root.string(), {"yes", "no", "stop"}, spec, cfg);
        ExperimentContext ctx;
        ctx.spec = run.spec;
        ctx.params = run.params;
        ctx.stats.mean = run.params.at("feat_mean");
        ctx.stats.stdev = run.params.at("feat_std");
        const DatasetIndex index =
            index_dataset(root.string(), {"yes", "no", "stop"}, cfg.seed);
        for (const auto& e : index.entries) {
          if (e.split != Split::test) continue;
          ctx.test_clips.push_back(read_wav(e.path));
          ctx.test_labels.push_back(e.label);
          ctx.test_features.push_back(apply_normalizer(
              ctx.extractor.compute(ctx.test_clips.back()), ctx.stats));
        }
        ResultRecord clean = run_clean_eval(ctx, cfg.seed);
        const auto noise = run_background_noise_sweep(ctx, {18.0}, cfg.seed);
        return std::pair<double, double>(clean.accuracy, noise[0].accuracy);
      };
      const auto a = once();
      const auto b = once();
      if (std::memcmp(&a.first, &b.first, sizeof(double)) != 0 ||
          std::memcmp(&a.second, &b.second, sizeof(double)) != 0)
        ok = false;
    }
    rep.check("full-pipeline seeded determinism", ok, "");
  }

  std::printf("[criterion 6] property suite: %s (%d/%d checks passed)\n",
              rep.failures == 0 ? "PASS" : "FAIL", rep.total - rep.failures,
              rep.total);
  return rep.failures;
}
