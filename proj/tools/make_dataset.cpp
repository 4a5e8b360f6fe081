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

// Generates a synthetic keyword dataset in the expected corpus layout, for
// smoke tests and benchmarking without a real recording corpus.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lcanet/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthesize a yes/no/stop keyword dataset"};
  std::string out;
  lcanet::SynthConfig cfg;
  app.add_option("--out", out, "output dataset root")->required();
  app.add_option("--clips-per-class", cfg.clips_per_class);
  app.add_option("--seed", cfg.seed);
  app.add_option("--snr-lo", cfg.clip_snr_lo_db, "per-clip noise floor (dB)");
  app.add_option("--snr-hi", cfg.clip_snr_hi_db);
  CLI11_PARSE(app, argc, argv);
  try {
    lcanet::write_synth_dataset(out, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::printf("wrote %d clips per class under %s\n", cfg.clips_per_class,
              out.c_str());
  return 0;
}
