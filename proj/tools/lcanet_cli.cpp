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

// Command-line interface: train models, evaluate them, and run the
// perturbation/attack sweeps. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numeric failure.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lcanet/harness.hpp"
#include "lcanet/model.hpp"
#include "lcanet/synth.hpp"

namespace {

using namespace lcanet;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<double> parse_value_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& item : split_commas(s)) {
    if (item == "inf" || item == "Inf" || item == "INF")
      out.push_back(INFINITY);
    else
      out.push_back(std::stod(item));
  }
  if (out.empty()) throw Error("empty value list: " + s);
  return out;
}

void print_records(const std::vector<ResultRecord>& records) {
  std::printf("%s\n", kReportHeader);
  for (const auto& r : records)
    std::printf("%s,%s,%s,%s,%s,%lld,%llu,%s,%s\n", r.model.c_str(),
                r.experiment.c_str(), r.sweep_param.c_str(),
                format_g6(r.sweep_value).c_str(),
                format_g6(r.accuracy).c_str(),
                static_cast<long long>(r.n),
                static_cast<unsigned long long>(r.seed),
                format_g6(r.runtime_s).c_str(), r.config_hash.c_str());
}

struct CommonArgs {
  std::string data_root;
  std::string classes = "yes,no,stop";
  uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  std::string cache_dir;
};

int run(int argc, char** argv) {
  CLI::App app{"Sparse-coding audio keyword classifiers and their "
               "robustness benchmark"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train a model and save a checkpoint");
  std::string model_name = "cnn";
  CommonArgs t_args;
  TrainConfig t_cfg;
  float lca_lambda = 1.0f;
  std::string t_checkpoint_out;
  train->add_option("--model", model_name, "cnn|lcanet|lcanet++")->required();
  train->add_option("--data-root", t_args.data_root)->required();
  train->add_option("--classes", t_args.classes, "comma-separated labels");
  train->add_option("--epochs", t_cfg.epochs);
  train->add_option("--lr", t_cfg.lr);
  train->add_option("--lr-dict", t_cfg.lr_dict);
  train->add_option("--lambda", lca_lambda, "sparsity trade-off");
  train->add_option("--batch-size", t_cfg.batch_size);
  train->add_option("--seed", t_args.seed);
  train->add_option("--out", t_checkpoint_out, "checkpoint path")->required();

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the clean test split");
  CommonArgs e_args;
  std::string e_checkpoint;
  eval_cmd->add_option("--checkpoint", e_checkpoint)->required();
  eval_cmd->add_option("--data-root", e_args.data_root)->required();
  eval_cmd->add_option("--classes", e_args.classes);
  eval_cmd->add_option("--seed", e_args.seed,
                       "data split seed (default: the checkpoint's)");
  eval_cmd->add_option("--out", e_args.out, "write records here");
  eval_cmd->add_option("--format", e_args.format, "csv|json");
  eval_cmd->add_option("--cache-dir", e_args.cache_dir);
  bool e_seed_given = false;
  eval_cmd->callback([&] { e_seed_given = eval_cmd->count("--seed") > 0; });

  // ---- perturb ----
  auto* perturb = app.add_subcommand("perturb", "Background-noise SNR sweep on test waveforms");
  CommonArgs p_args;
  std::string p_checkpoint, p_snr_list;
  perturb->add_option("--checkpoint", p_checkpoint)->required();
  perturb->add_option("--data-root", p_args.data_root)->required();
  perturb->add_option("--classes", p_args.classes);
  perturb->add_option("--seed", p_args.seed);
  perturb->add_option("--snr", p_snr_list, "comma-separated dB values, inf allowed")->required();
  perturb->add_option("--out", p_args.out);
  perturb->add_option("--format", p_args.format);
  perturb->add_option("--cache-dir", p_args.cache_dir);
  bool p_seed_given = false;
  perturb->callback([&] { p_seed_given = perturb->count("--seed") > 0; });

  // ---- attack ----
  auto* attack = app.add_subcommand("attack", "Feature-space perturbation/attack sweep");
  CommonArgs a_args;
  std::string a_checkpoint, a_kind, a_eps_list;
  AttackSweepOptions a_opts;
  attack->add_option("--checkpoint", a_checkpoint)->required();
  attack->add_option("--data-root", a_args.data_root)->required();
  attack->add_option("--classes", a_args.classes);
  attack->add_option("--seed", a_args.seed);
  attack->add_option("--attack", a_kind, "fgsm|pgd|gaussian|evasion")->required();
  attack->add_option("--eps", a_eps_list, "comma-separated budgets")->required();
  attack->add_option("--pgd-steps", a_opts.pgd_steps);
  attack->add_option("--pgd-alpha", a_opts.pgd_alpha, "0 selects eps/4");
  attack->add_option("--epochs", a_opts.surrogate_cfg.epochs,
                     "surrogate training epochs (evasion)");
  attack->add_option("--out", a_args.out);
  attack->add_option("--format", a_args.format);
  attack->add_option("--cache-dir", a_args.cache_dir);
  bool a_seed_given = false;
  attack->callback([&] { a_seed_given = attack->count("--seed") > 0; });

  // ---- report ----
  auto* report = app.add_subcommand("report", "Merge and reformat result records");
  std::vector<std::string> r_inputs;
  std::string r_out, r_format = "csv";
  report->add_option("--in", r_inputs, "input record files (.csv or .json)")->required();
  report->add_option("--out", r_out)->required();
  report->add_option("--format", r_format, "csv|json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
  }

  if (train->parsed()) {
    const ModelSpec spec = [&] {
      ModelSpec s;
      s.variant = parse_variant(model_name);
      s.lca.lambda = lca_lambda;
      return s;
    }();
    t_cfg.seed = t_args.seed;
    const TrainRun run = train_model(
        t_args.data_root, split_commas(t_args.classes), spec, t_cfg,
        [&](int epoch, const EpochMetrics& m) {
          std::printf("epoch %d/%d loss %.4f train-acc %.3f", epoch + 1,
                      t_cfg.epochs, m.supervised_loss, m.train_accuracy);
          for (const auto& [name, loss] : m.recon_loss)
            std::printf(" recon[%s] %.2f", name.c_str(), loss);
          std::printf("\n");
          std::fflush(stdout);
        });
    save_checkpoint(run.params, run.spec, t_checkpoint_out, t_cfg.seed);
    std::printf("saved checkpoint: %s (%.1fs)\n", t_checkpoint_out.c_str(),
                run.seconds);
    return 0;
  }

  if (eval_cmd->parsed()) {
    const uint64_t ck_seed = load_checkpoint(e_checkpoint).train_seed;
    const uint64_t seed = e_seed_given ? e_args.seed : ck_seed;
    ExperimentContext ctx =
        load_context(e_checkpoint, e_args.data_root,
                     split_commas(e_args.classes), seed, false,
                     e_args.cache_dir);
    std::vector<ResultRecord> records{run_clean_eval(ctx, seed)};
    print_records(records);
    if (!e_args.out.empty()) emit_report(records, e_args.format, e_args.out);
    return 0;
  }

  if (perturb->parsed()) {
    const uint64_t ck_seed = load_checkpoint(p_checkpoint).train_seed;
    const uint64_t seed = p_seed_given ? p_args.seed : ck_seed;
    ExperimentContext ctx =
        load_context(p_checkpoint, p_args.data_root,
                     split_commas(p_args.classes), seed, false,
                     p_args.cache_dir);
    const std::vector<ResultRecord> records =
        run_background_noise_sweep(ctx, parse_value_list(p_snr_list), seed);
    print_records(records);
    if (!p_args.out.empty()) emit_report(records, p_args.format, p_args.out);
    return 0;
  }

  if (attack->parsed()) {
    const AttackKind kind = parse_attack(a_kind);
    const uint64_t ck_seed = load_checkpoint(a_checkpoint).train_seed;
    const uint64_t seed = a_seed_given ? a_args.seed : ck_seed;
    ExperimentContext ctx = load_context(
        a_checkpoint, a_args.data_root, split_commas(a_args.classes), seed,
        kind == AttackKind::evasion, a_args.cache_dir);
    const std::vector<ResultRecord> records =
        run_attack_sweep(ctx, kind, parse_value_list(a_eps_list), seed, a_opts);
    print_records(records);
    if (!a_args.out.empty()) emit_report(records, a_args.format, a_args.out);
    return 0;
  }

  if (report->parsed()) {
    std::vector<ResultRecord> merged;
    for (const std::string& path : r_inputs) {
      const std::vector<ResultRecord> part =
          path.size() > 5 && path.substr(path.size() - 5) == ".json"
              ? parse_report_json(path)
              : parse_report_csv(path);
      merged.insert(merged.end(), part.begin(), part.end());
    }
    emit_report(merged, r_format, r_out);
    std::printf("wrote %zu records to %s\n", merged.size(), r_out.c_str());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lcanet::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const lcanet::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const lcanet::ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const lcanet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
