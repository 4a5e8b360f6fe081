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

// Synthetic spoken-word dataset generator. Produces a keyword-corpus style
// directory tree (one folder per label plus _background_noise_) filled with
// word-like one-second clips: voiced formant glides, fricative bursts and
// stop closures, with per-clip pitch, timing, amplitude and noise-level
// variation. Deterministic for a fixed seed.
//
// The three default labels are built from distinct phone sequences:
//   yes   rising vowel glide, then a long high-frequency fricative
//   no    nasal onset, then a falling fully-voiced glide
//   stop  leading fricative, closure, open vowel, final burst

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "lcanet/audio.hpp"
#include "lcanet/common.hpp"

namespace lcanet {

struct SynthConfig {
  int clips_per_class = 100;
  uint64_t seed = 7;
  // Per-clip recording noise mixed over the whole second, relative to the
  // word's RMS. Lower values make the task harder.
  double clip_snr_lo_db = 6.0;
  double clip_snr_hi_db = 22.0;
  // Speaker variability.
  double pitch_lo_hz = 95.0;
  double pitch_hi_hz = 220.0;
  double formant_scale_lo = 0.82;
  double formant_scale_hi = 1.20;
  double duration_lo_s = 0.42;
  double duration_hi_s = 0.72;
  double noise_seconds = 30.0;  // length of each background-noise file
};

namespace synth_detail {

constexpr double kPi = 3.14159265358979323846;

inline double lerp(double a, double b, double t) { return a + (b - a) * t; }

/// Raised-cosine fade applied to both ends of a segment.
inline double edge_envelope(int n, int len, int fade) {
  if (n < fade) return 0.5 - 0.5 * std::cos(kPi * n / fade);
  if (n >= len - fade)
    return 0.5 - 0.5 * std::cos(kPi * (len - 1 - n) / fade);
  return 1.0;
}

/// Voiced phone: harmonics of f0 with amplitudes shaped by two formant
/// resonances gliding linearly across the segment.
inline void add_voiced(std::vector<float>& out, int start, int len, double f0,
                       double f1_a, double f1_b, double f2_a, double f2_b,
                       double f2_weight, Rng& rng) {
  const int n_harm =
      std::max(3, std::min(48, static_cast<int>(7400.0 / f0)));
  std::vector<double> phase(n_harm);
  for (int k = 0; k < n_harm; ++k) phase[k] = rng.uniform(0.0, 2.0 * kPi);
  const int fade = kSampleRate * 15 / 1000;
  for (int n = 0; n < len; ++n) {
    const double t = static_cast<double>(n) / kSampleRate;
    const double frac = static_cast<double>(n) / len;
    const double f1 = lerp(f1_a, f1_b, frac);
    const double f2 = lerp(f2_a, f2_b, frac);
    double s = 0;
    for (int k = 0; k < n_harm; ++k) {
      const double fk = (k + 1) * f0;
      if (fk > 7600.0) break;
      const double d1 = (fk - f1) / 120.0;
      const double d2 = (fk - f2) / 160.0;
      const double a = std::exp(-0.5 * d1 * d1) +
                       f2_weight * std::exp(-0.5 * d2 * d2) +
                       (k == 0 ? 0.15 : 0.0);
      s += a * std::sin(2.0 * kPi * fk * t + phase[k]);
    }
    out[start + n] += static_cast<float>(
        s * edge_envelope(n, len, std::min(fade, len / 3)));
  }
}

/// Fricative phone: low-passed noise ring-modulated up to a center band.
inline void add_fricative(std::vector<float>& out, int start, int len,
                          double center_hz, double bw_hz, Rng& rng) {
  const int fade = kSampleRate * 10 / 1000;
  const double a = std::exp(-2.0 * kPi * bw_hz / kSampleRate);
  double lp = 0;
  for (int n = 0; n < len; ++n) {
    const double t = static_cast<double>(n) / kSampleRate;
    lp = a * lp + (1.0 - a) * rng.normal();
    const double s = 6.0 * lp * std::sin(2.0 * kPi * center_hz * t);
    out[start + n] += static_cast<float>(
        s * edge_envelope(n, len, std::min(fade, len / 3)));
  }
}

/// Plosive release: a few milliseconds of sharply decaying wideband noise.
inline void add_burst(std::vector<float>& out, int start, int len, Rng& rng) {
  for (int n = 0; n < len; ++n) {
    const double env = std::exp(-6.0 * n / len);
    out[start + n] += static_cast<float>(1.2 * rng.normal() * env);
  }
}

inline double segment_rms(const std::vector<float>& buf, int start, int len) {
  double sq = 0;
  for (int n = 0; n < len; ++n)
    sq += static_cast<double>(buf[start + n]) * buf[start + n];
  return std::sqrt(sq / std::max(1, len));
}

/// Pink-ish noise (Paul Kellet's economy filter).
class PinkNoise {
 public:
  explicit PinkNoise(Rng& rng) : rng_(rng) {}
  double next() {
    const double w = rng_.normal();
    b0_ = 0.99765 * b0_ + w * 0.0990460;
    b1_ = 0.96300 * b1_ + w * 0.2965164;
    b2_ = 0.57000 * b2_ + w * 1.0526913;
    return b0_ + b1_ + b2_ + w * 0.1848;
  }

 private:
  Rng& rng_;
  double b0_ = 0, b1_ = 0, b2_ = 0;
};

}  // namespace synth_detail

/// Synthesizes one labeled word clip (canonical one-second waveform).
/// label: 0 = "yes"-like, 1 = "no"-like, 2 = "stop"-like.
inline std::vector<float> synth_word_clip(int label, const SynthConfig& cfg,
                                          Rng& rng) {
  using namespace synth_detail;
  const double f0 = rng.uniform(cfg.pitch_lo_hz, cfg.pitch_hi_hz);
  const double fs = rng.uniform(cfg.formant_scale_lo, cfg.formant_scale_hi);
  const double dur = rng.uniform(cfg.duration_lo_s, cfg.duration_hi_s);
  const int word_len = static_cast<int>(dur * kSampleRate);
  const int onset =
      rng.uniform_int(std::max(1, kClipSamples - word_len));
  const double amp = rng.uniform(0.05, 0.18);      // word RMS target
  const double snr_db = rng.uniform(cfg.clip_snr_lo_db, cfg.clip_snr_hi_db);

  std::vector<float> clip(kClipSamples, 0.0f);
  auto seg = [&](double a, double b) {
    const int s = onset + static_cast<int>(a * word_len);
    const int e = onset + static_cast<int>(b * word_len);
    return std::pair<int, int>(s, std::max(1, e - s));
  };

  if (label == 0) {  // rising glide + long final fricative
    auto [s1, l1] = seg(0.00, 0.45);
    add_voiced(clip, s1, l1, f0, 280 * fs, 540 * fs, 2150 * fs, 1800 * fs,
               0.65, rng);
    auto [s2, l2] = seg(0.42, 0.62);
    add_voiced(clip, s2, l2, f0, 540 * fs, 560 * fs, 1800 * fs, 1750 * fs,
               0.65, rng);
    auto [s3, l3] = seg(0.60, 1.00);
    add_fricative(clip, s3, l3, 5100 * fs, 900, rng);
  } else if (label == 1) {  // nasal onset + falling voiced glide
    auto [s1, l1] = seg(0.00, 0.28);
    add_voiced(clip, s1, l1, f0, 260 * fs, 260 * fs, 1050 * fs, 1000 * fs,
               0.25, rng);
    auto [s2, l2] = seg(0.25, 1.00);
    add_voiced(clip, s2, l2, f0, 640 * fs, 420 * fs, 1150 * fs, 840 * fs,
               0.80, rng);
  } else {  // leading fricative, closure, vowel, final burst
    auto [s1, l1] = seg(0.00, 0.28);
    add_fricative(clip, s1, l1, 4700 * fs, 900, rng);
    auto [s2, l2] = seg(0.38, 0.82);
    add_voiced(clip, s2, l2, f0, 690 * fs, 660 * fs, 1120 * fs, 1080 * fs,
               0.75, rng);
    auto [s3, l3] = seg(0.88, 0.94);
    add_burst(clip, s3, l3, rng);
  }

  // Scale the word to the target RMS, then add recording noise over the
  // whole clip at the drawn SNR.
  const double word_rms = segment_rms(clip, onset, word_len);
  if (word_rms > 0) {
    const float scale = static_cast<float>(amp / word_rms);
    for (auto& v : clip) v *= scale;
  }
  const double noise_rms = amp * std::pow(10.0, -snr_db / 20.0);
  PinkNoise pink(rng);
  for (auto& v : clip) {
    const double n = 0.6 * rng.normal() + 0.4 * pink.next() * 0.35;
    v += static_cast<float>(noise_rms * n);
  }
  return clip;
}

/// Writes one background-noise WAV of the requested flavor.
inline void synth_noise_file(const std::string& path, int flavor,
                             double seconds, Rng& rng) {
  using namespace synth_detail;
  const int len = static_cast<int>(seconds * kSampleRate);
  std::vector<float> buf(len, 0.0f);
  if (flavor == 0) {  // white
    for (auto& v : buf) v = static_cast<float>(0.12 * rng.normal());
  } else if (flavor == 1) {  // pink
    PinkNoise pink(rng);
    for (auto& v : buf) v = static_cast<float>(0.05 * pink.next());
  } else if (flavor == 2) {  // babble: overlapping voiced chatter
    const int n_voices = 7;
    for (int voice = 0; voice < n_voices; ++voice) {
      int pos = rng.uniform_int(kSampleRate / 2);
      const double f0 = rng.uniform(90.0, 230.0);
      while (pos < len - kSampleRate / 4) {
        const int seg_len =
            kSampleRate / 8 + rng.uniform_int(kSampleRate / 3);
        const double f1a = rng.uniform(250.0, 750.0);
        const double f1b = rng.uniform(250.0, 750.0);
        const double f2a = rng.uniform(800.0, 2300.0);
        const double f2b = rng.uniform(800.0, 2300.0);
        const int l = std::min(seg_len, len - pos);
        add_voiced(buf, pos, l, f0, f1a, f1b, f2a, f2b, 0.7, rng);
        pos += seg_len + rng.uniform_int(kSampleRate / 4);
      }
    }
    double rms = segment_rms(buf, 0, len);
    if (rms > 0)
      for (auto& v : buf) v = static_cast<float>(v * 0.1 / rms);
  } else if (flavor == 3) {  // running water: modulated mid-band noise
    const double a = std::exp(-2.0 * kPi * 900.0 / kSampleRate);
    double lp = 0;
    for (int n = 0; n < len; ++n) {
      const double t = static_cast<double>(n) / kSampleRate;
      lp = a * lp + (1.0 - a) * rng.normal();
      const double lfo = 0.7 + 0.3 * std::sin(2.0 * kPi * 0.6 * t);
      buf[n] = static_cast<float>(0.5 * lp * lfo *
                                  std::sin(2.0 * kPi * 1900.0 * t));
    }
  } else {  // machinery: hum plus a periodic clank
    for (int n = 0; n < len; ++n) {
      const double t = static_cast<double>(n) / kSampleRate;
      buf[n] = static_cast<float>(0.04 * std::sin(2.0 * kPi * 120.0 * t) +
                                  0.02 * std::sin(2.0 * kPi * 240.0 * t));
    }
    const int period = static_cast<int>(0.55 * kSampleRate);
    for (int start = period / 3; start + 600 < len; start += period) {
      for (int n = 0; n < 600; ++n)
        buf[start + n] += static_cast<float>(0.5 * rng.normal() *
                                             std::exp(-8.0 * n / 600.0));
    }
  }
  write_wav(path, buf);
}

/// Writes a full synthetic dataset in keyword-corpus layout:
///   <root>/{yes,no,stop}/<hash>_nohash_<k>.wav
///   <root>/_background_noise_/*.wav
inline void write_synth_dataset(const std::string& root,
                                const SynthConfig& cfg = SynthConfig{}) {
  namespace fs = std::filesystem;
  const std::vector<std::string> labels = {"yes", "no", "stop"};
  Rng master(cfg.seed);
  for (size_t label = 0; label < labels.size(); ++label) {
    const fs::path dir = fs::path(root) / labels[label];
    fs::create_directories(dir);
    for (int i = 0; i < cfg.clips_per_class; ++i) {
      Rng rng(hash_combine(cfg.seed, fnv1a64(labels[label]) +
                                         static_cast<uint64_t>(i)));
      const std::vector<float> clip =
          synth_word_clip(static_cast<int>(label), cfg, rng);
      char name[64];
      std::snprintf(name, sizeof(name), "%08x_nohash_%d.wav",
                    static_cast<unsigned>(fnv1a64(labels[label]) * 2654435761u +
                                          static_cast<unsigned>(i) * 97u),
                    i % 4);
      write_wav((dir / name).string(), clip);
    }
  }
  const fs::path noise_dir = fs::path(root) / "_background_noise_";
  fs::create_directories(noise_dir);
  const std::vector<std::string> noise_names = {
      "white_noise.wav", "pink_noise.wav", "babble.wav", "running_tap.wav",
      "exercise_bike.wav"};
  for (size_t i = 0; i < noise_names.size(); ++i) {
    Rng rng(hash_combine(cfg.seed, 0xB06ull + i));
    synth_noise_file((noise_dir / noise_names[i]).string(),
                     static_cast<int>(i), cfg.noise_seconds, rng);
  }
}

}  // namespace lcanet
