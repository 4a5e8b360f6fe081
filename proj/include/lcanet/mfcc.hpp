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

// Mel-frequency cepstral coefficients: Hann-windowed frames, a direct real
// DFT (512-point frames do not need FFT performance at this scale), a
// triangular mel filterbank, log compression, and an orthonormal DCT-II.
// Feature maps are standardized per coefficient with training-set statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "lcanet/audio.hpp"
#include "lcanet/common.hpp"
#include "lcanet/tensor.hpp"

namespace lcanet {

struct MfccConfig {
  int frame_len = 400;   // 25 ms at 16 kHz
  int hop = 160;         // 10 ms
  int fft_size = 512;
  int n_mels = 40;
  double fmin = 20.0;
  double fmax = 7600.0;
  int n_coeffs = 20;
  double log_floor = 1e-10;

  void validate() const {
    if (frame_len > fft_size)
      throw Error("MfccConfig: frame_len must be <= fft_size");
    if (fmax > kSampleRate / 2.0)
      throw Error("MfccConfig: fmax above Nyquist");
    if (n_coeffs > n_mels)
      throw Error("MfccConfig: n_coeffs must be <= n_mels");
  }

  int n_frames() const { return (kClipSamples - frame_len) / hop + 1; }

  uint64_t hash() const {
    uint64_t h = fnv1a64(&frame_len, sizeof(frame_len));
    h = fnv1a64(&hop, sizeof(hop), h);
    h = fnv1a64(&fft_size, sizeof(fft_size), h);
    h = fnv1a64(&n_mels, sizeof(n_mels), h);
    h = fnv1a64(&fmin, sizeof(fmin), h);
    h = fnv1a64(&fmax, sizeof(fmax), h);
    h = fnv1a64(&n_coeffs, sizeof(n_coeffs), h);
    h = fnv1a64(&log_floor, sizeof(log_floor), h);
    return h;
  }
};

inline double hz_to_mel(double f) {
  return 2595.0 * std::log10(1.0 + f / 700.0);
}

inline double mel_to_hz(double m) {
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

/// Triangular filterbank, n_mels x (fft_size/2 + 1). Filter centers are
/// equally spaced on the mel scale between fmin and fmax and snapped to FFT
/// bins; every filter peaks at exactly 1.0 at its center bin and is zero
/// outside its triangle. No area normalization.
inline TensorD mel_filterbank(const MfccConfig& cfg) {
  cfg.validate();
  const int n_bins = cfg.fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(kSampleRate) / cfg.fft_size;
  const double mel_lo = hz_to_mel(cfg.fmin), mel_hi = hz_to_mel(cfg.fmax);
  std::vector<int> centers(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    const double mel =
        mel_lo + (mel_hi - mel_lo) * i / static_cast<double>(cfg.n_mels + 1);
    centers[i] = static_cast<int>(std::lround(mel_to_hz(mel) / bin_hz));
  }
  for (int i = 1; i < cfg.n_mels + 2; ++i)
    if (centers[i] <= centers[i - 1])
      throw Error("mel_filterbank: duplicate filter centers; n_mels too "
                  "large for the FFT bin resolution");

  TensorD fb({cfg.n_mels, n_bins});
  for (int i = 1; i <= cfg.n_mels; ++i) {
    const int lo = centers[i - 1], mid = centers[i], hi = centers[i + 1];
    double* row = fb.ptr(static_cast<int64_t>(i - 1) * n_bins);
    for (int k = lo + 1; k <= mid; ++k)
      row[k] = static_cast<double>(k - lo) / (mid - lo);
    for (int k = mid + 1; k < hi; ++k)
      row[k] = static_cast<double>(hi - k) / (hi - mid);
  }
  return fb;
}

/// Precomputes windows, DFT tables, the filterbank and the DCT basis for one
/// configuration; reuse one extractor when featurizing many clips.
class MfccExtractor {
 public:
  explicit MfccExtractor(const MfccConfig& cfg = MfccConfig{}) : cfg_(cfg) {
    cfg_.validate();
    const int n_bins = cfg_.fft_size / 2 + 1;
    window_.resize(cfg_.frame_len);
    for (int t = 0; t < cfg_.frame_len; ++t)
      window_[t] = 0.5 - 0.5 * std::cos(2.0 * kPi * t / (cfg_.frame_len - 1));
    cos_table_.resize(static_cast<size_t>(n_bins) * cfg_.frame_len);
    sin_table_.resize(static_cast<size_t>(n_bins) * cfg_.frame_len);
    for (int k = 0; k < n_bins; ++k)
      for (int t = 0; t < cfg_.frame_len; ++t) {
        const double ang = 2.0 * kPi * k * t / cfg_.fft_size;
        cos_table_[static_cast<size_t>(k) * cfg_.frame_len + t] =
            std::cos(ang);
        sin_table_[static_cast<size_t>(k) * cfg_.frame_len + t] =
            std::sin(ang);
      }
    filterbank_ = mel_filterbank(cfg_);
    dct_.resize(static_cast<size_t>(cfg_.n_coeffs) * cfg_.n_mels);
    for (int k = 0; k < cfg_.n_coeffs; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / cfg_.n_mels)
                                  : std::sqrt(2.0 / cfg_.n_mels);
      for (int m = 0; m < cfg_.n_mels; ++m)
        dct_[static_cast<size_t>(k) * cfg_.n_mels + m] =
            scale * std::cos(kPi * (2 * m + 1) * k / (2.0 * cfg_.n_mels));
    }
  }

  const MfccConfig& config() const { return cfg_; }

  /// Hann-windowed frame f of a canonical clip (frame_len samples).
  std::vector<double> windowed_frame(const AudioClip& clip, int f) const {
    std::vector<double> frame(cfg_.frame_len);
    const int start = f * cfg_.hop;
    for (int t = 0; t < cfg_.frame_len; ++t)
      frame[t] = clip.samples[start + t] * window_[t];
    return frame;
  }

  /// One-sided power spectrum |DFT|^2 of a windowed frame, zero-padded to
  /// fft_size (bins 0 .. fft_size/2).
  std::vector<double> power_spectrum(const std::vector<double>& frame) const {
    const int n_bins = cfg_.fft_size / 2 + 1;
    std::vector<double> power(n_bins);
    for (int k = 0; k < n_bins; ++k) {
      const double* ck =
          cos_table_.data() + static_cast<size_t>(k) * cfg_.frame_len;
      const double* sk =
          sin_table_.data() + static_cast<size_t>(k) * cfg_.frame_len;
      double re = 0, im = 0;
      for (int t = 0; t < cfg_.frame_len; ++t) {
        re += frame[t] * ck[t];
        im -= frame[t] * sk[t];
      }
      power[k] = re * re + im * im;
    }
    return power;
  }

  /// Extracts a 1 x 1 x n_coeffs x n_frames feature map from a canonical
  /// one-second clip. No frame centering; natural log with a floor.
  Tensor compute(const AudioClip& clip) const {
    if (static_cast<int>(clip.samples.size()) != kClipSamples)
      throw Error("compute_mfcc: clip must be canonical (16000 samples)");
    const int n_frames = cfg_.n_frames();
    const int n_bins = cfg_.fft_size / 2 + 1;
    Tensor out({1, 1, cfg_.n_coeffs, n_frames});

    std::vector<double> logmel(cfg_.n_mels);
    for (int f = 0; f < n_frames; ++f) {
      const std::vector<double> power = power_spectrum(windowed_frame(clip, f));
      for (int m = 0; m < cfg_.n_mels; ++m) {
        const double* fbrow =
            filterbank_.ptr(static_cast<int64_t>(m) * n_bins);
        double e = 0;
        for (int k = 0; k < n_bins; ++k) e += fbrow[k] * power[k];
        logmel[m] = std::log(std::max(e, cfg_.log_floor));
      }
      for (int k = 0; k < cfg_.n_coeffs; ++k) {
        const double* drow = dct_.data() + static_cast<size_t>(k) * cfg_.n_mels;
        double c = 0;
        for (int m = 0; m < cfg_.n_mels; ++m) c += drow[m] * logmel[m];
        out.at(0, 0, k, f) = static_cast<float>(c);
      }
    }
    check_finite(out, "mfcc features");
    return out;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  MfccConfig cfg_;
  std::vector<double> window_;
  std::vector<double> cos_table_, sin_table_;
  TensorD filterbank_;
  std::vector<double> dct_;
};

inline Tensor compute_mfcc(const AudioClip& clip,
                           const MfccConfig& cfg = MfccConfig{}) {
  return MfccExtractor(cfg).compute(clip);
}

// ---------------------------------------------------------------------------
// Per-coefficient standardization with training-set statistics

struct NormStats {
  Tensor mean;  // n_coeffs
  Tensor stdev; // n_coeffs, floored at 1e-6

  uint64_t hash() const {
    uint64_t h = fnv1a64(mean.data.data(), mean.data.size() * sizeof(float));
    return fnv1a64(stdev.data.data(), stdev.data.size() * sizeof(float), h);
  }
};

/// Pools every frame of every training clip per coefficient.
inline NormStats fit_normalizer(const std::vector<Tensor>& train_features) {
  if (train_features.empty())
    throw Error("fit_normalizer: empty training collection");
  const int n_coeffs = train_features.front().dim(2);
  const int n_frames = train_features.front().dim(3);
  NormStats stats;
  stats.mean = Tensor::zeros({n_coeffs});
  stats.stdev = Tensor::zeros({n_coeffs});
  for (int c = 0; c < n_coeffs; ++c) {
    double sum = 0, sq = 0;
    int64_t n = 0;
    for (const Tensor& fm : train_features) {
      for (int f = 0; f < n_frames; ++f) {
        const double v = fm.at(0, 0, c, f);
        sum += v;
        sq += v * v;
        ++n;
      }
    }
    const double mean = sum / n;
    double var = sq / n - mean * mean;
    if (var < 0) var = 0;
    stats.mean.data[c] = static_cast<float>(mean);
    stats.stdev.data[c] =
        std::max(static_cast<float>(std::sqrt(var)), 1e-6f);
  }
  return stats;
}

inline Tensor apply_normalizer(const Tensor& fm, const NormStats& stats) {
  Tensor out(fm.shape);
  const int n_coeffs = fm.dim(2), n_frames = fm.dim(3);
  for (int c = 0; c < n_coeffs; ++c)
    for (int f = 0; f < n_frames; ++f)
      out.at(0, 0, c, f) =
          (fm.at(0, 0, c, f) - stats.mean.data[c]) / stats.stdev.data[c];
  return out;
}

// ---------------------------------------------------------------------------
// Optional per-clip binary feature cache:
// 16-byte header (magic "MFCC", u32 version, u32 rows, u32 cols) followed by
// a row-major float32 little-endian payload.

inline void save_feature_record(const std::string& path, const Tensor& fm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature record: " + path);
  const uint32_t version = 1;
  const uint32_t rows = static_cast<uint32_t>(fm.dim(2));
  const uint32_t cols = static_cast<uint32_t>(fm.dim(3));
  out.write("MFCC", 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(fm.data.data()),
            static_cast<std::streamsize>(fm.data.size() * sizeof(float)));
  if (!out) throw DataError("failed while writing feature record: " + path);
}

inline Tensor load_feature_record(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature record: " + path);
  char magic[4];
  uint32_t version = 0, rows = 0, cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in || std::memcmp(magic, "MFCC", 4) != 0)
    throw DataError("bad feature record header: " + path);
  if (version != 1)
    throw DataError("unsupported feature record version in " + path);
  Tensor fm({1, 1, static_cast<int>(rows), static_cast<int>(cols)});
  in.read(reinterpret_cast<char*>(fm.data.data()),
          static_cast<std::streamsize>(fm.data.size() * sizeof(float)));
  if (!in) throw DataError("truncated feature record: " + path);
  return fm;
}

}  // namespace lcanet
