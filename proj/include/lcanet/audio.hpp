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

// Speech-commands style audio ingestion: a PCM WAV parser, deterministic
// train/test dataset indexing, and SNR-controlled background-noise mixing.
//
// Expected dataset layout (one directory per label, optional noise folder):
//   <root>/<label>/*.wav
//   <root>/_background_noise_/*.wav

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lcanet/common.hpp"

namespace lcanet {

constexpr int kSampleRate = 16000;
constexpr int kClipSamples = 16000;  // canonical clip length: 1 second

/// Mono PCM waveform scaled to [-1, 1]. Canonical clips hold exactly one
/// second of audio; noise sources may be longer.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
};

// ---------------------------------------------------------------------------
// WAV parsing (RIFF little-endian, PCM 16-bit mono 16 kHz)

namespace detail {

inline uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

inline uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> bytes(static_cast<size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw DataError("failed to read file: " + path);
  return bytes;
}

}  // namespace detail

/// Parses a RIFF/WAVE file without canonicalization. Rejects anything that is
/// not PCM (format code 1), 16-bit, mono, 16 kHz. Samples scale by 1/32768.
inline AudioClip read_wav_raw(const std::string& path) {
  const std::vector<unsigned char> bytes = detail::read_file_bytes(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError("not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data_chunk = nullptr;
  uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t len = detail::read_u32(bytes.data() + pos + 4);
    if (pos + 8 + len > bytes.size())
      throw DataError("truncated chunk in WAV file: " + path);
    const unsigned char* body = bytes.data() + pos + 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw DataError("malformed fmt chunk in " + path);
      format = detail::read_u16(body + 0);
      channels = detail::read_u16(body + 2);
      rate = detail::read_u32(body + 4);
      bits = detail::read_u16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_chunk = body;
      data_len = len;
    }
    pos += 8 + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data_chunk == nullptr)
    throw DataError("WAV file missing fmt or data chunk: " + path);
  if (format != 1)
    throw DataError("unsupported WAV format code " + std::to_string(format) +
                    " (need PCM) in " + path);
  if (channels != 1)
    throw DataError("unsupported channel count " + std::to_string(channels) +
                    " (need mono) in " + path);
  if (bits != 16)
    throw DataError("unsupported bit depth " + std::to_string(bits) +
                    " (need 16-bit) in " + path);
  if (rate != kSampleRate)
    throw DataError("unsupported sample rate " + std::to_string(rate) +
                    " (need 16000) in " + path);

  AudioClip clip;
  clip.sample_rate = kSampleRate;
  const size_t n = data_len / 2;
  clip.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const int16_t v = static_cast<int16_t>(
        detail::read_u16(data_chunk + 2 * i));
    clip.samples[i] = static_cast<float>(v) / 32768.0f;
  }
  return clip;
}

/// Reads a WAV file and canonicalizes it to exactly one second: shorter
/// clips are zero-padded at the end, longer clips keep the first 16000
/// samples.
inline AudioClip read_wav(const std::string& path) {
  AudioClip clip = read_wav_raw(path);
  clip.samples.resize(kClipSamples, 0.0f);
  for (float v : clip.samples)
    if (!std::isfinite(v)) throw DataError("non-finite sample in " + path);
  return clip;
}

/// Writes 16-bit PCM mono. Samples are clamped to the int16 range.
inline void write_wav(const std::string& path,
                      const std::vector<float>& samples,
                      int sample_rate = kSampleRate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  auto put_u32 = [&](uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  auto put_u16 = [&](uint16_t v) {
    char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(sample_rate);
  put_u32(sample_rate * 2);  // byte rate
  put_u16(2);                // block align
  put_u16(16);               // bits per sample
  out.write("data", 4);
  put_u32(data_len);
  for (float s : samples) {
    float v = s * 32768.0f;
    v = std::min(std::max(v, -32768.0f), 32767.0f);
    put_u16(static_cast<uint16_t>(static_cast<int16_t>(std::lrint(v))));
  }
  if (!out) throw DataError("failed while writing: " + path);
}

// ---------------------------------------------------------------------------
// Dataset indexing

enum class Split { train, test };

struct DatasetEntry {
  std::string path;      // absolute or root-relative path to the wav
  std::string rel_path;  // label/file.wav, the split hash key
  int label = 0;
  Split split = Split::train;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;   // lexicographic by rel_path
  std::vector<std::string> classes;    // ordered label names
  std::vector<std::string> noise_files;
};

namespace detail {

/// Deterministic split assignment: files of one class are ordered by a keyed
/// hash of their relative path and the first 70% (rounded) become train.
/// A pure function of the path set and the seed.
inline std::vector<Split> assign_splits(const std::vector<std::string>& paths,
                                        uint64_t seed, double train_frac) {
  const size_t n = paths.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<uint64_t> keys(n);
  for (size_t i = 0; i < n; ++i)
    keys[i] = fnv1a64(paths[i], fnv1a64(&seed, sizeof(seed)));
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return paths[a] < paths[b];
  });
  const size_t n_train =
      static_cast<size_t>(std::llround(train_frac * static_cast<double>(n)));
  std::vector<Split> out(n, Split::test);
  for (size_t i = 0; i < n_train && i < n; ++i) out[order[i]] = Split::train;
  return out;
}

}  // namespace detail

/// Builds the dataset index for the given classes: lexicographic listing,
/// deterministic 70/30 per-class split keyed on (relative path, seed).
inline DatasetIndex index_dataset(const std::string& root,
                                  const std::vector<std::string>& classes,
                                  uint64_t seed) {
  namespace fs = std::filesystem;
  DatasetIndex index;
  index.classes = classes;
  for (size_t label = 0; label < classes.size(); ++label) {
    const fs::path dir = fs::path(root) / classes[label];
    if (!fs::is_directory(dir))
      throw DataError("missing class directory: " + dir.string());
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".wav")
        files.push_back(e.path().filename().string());
    }
    if (files.empty())
      throw DataError("class directory has no .wav files: " + dir.string());
    std::sort(files.begin(), files.end());
    std::vector<std::string> rels;
    rels.reserve(files.size());
    for (const auto& f : files) rels.push_back(classes[label] + "/" + f);
    const std::vector<Split> splits = detail::assign_splits(rels, seed, 0.7);
    for (size_t i = 0; i < files.size(); ++i) {
      DatasetEntry entry;
      entry.path = (dir / files[i]).string();
      entry.rel_path = rels[i];
      entry.label = static_cast<int>(label);
      entry.split = splits[i];
      index.entries.push_back(std::move(entry));
    }
  }
  const fs::path noise_dir = fs::path(root) / "_background_noise_";
  if (fs::is_directory(noise_dir)) {
    for (const auto& e : fs::directory_iterator(noise_dir))
      if (e.is_regular_file() && e.path().extension() == ".wav")
        index.noise_files.push_back(e.path().string());
    std::sort(index.noise_files.begin(), index.noise_files.end());
  }
  return index;
}

// ---------------------------------------------------------------------------
// SNR mixing

inline double rms(const std::vector<float>& samples) {
  if (samples.empty()) throw Error("rms: empty input");
  double sq = 0;
  for (float v : samples) sq += static_cast<double>(v) * v;
  return std::sqrt(sq / static_cast<double>(samples.size()));
}

struct MixResult {
  AudioClip mixed;
  float scale = 0;        // applied to the noise crop
  size_t crop_offset = 0;
};

/// Mixes a seeded random crop of `noise` into `signal` so that the ratio of
/// the two components hits the target SNR exactly:
///   output = signal + a * crop,  a = rms(signal) / (rms(crop) * 10^(snr/20)).
/// An infinite SNR returns the signal untouched. Samples are intentionally
/// not clamped to [-1, 1]; clipping would distort the controlled ratio.
inline MixResult mix_at_snr(const AudioClip& signal, const AudioClip& noise,
                            double snr_db, uint64_t seed) {
  MixResult res;
  if (std::isinf(snr_db) && snr_db > 0) {
    res.mixed = signal;
    return res;
  }
  const size_t n = signal.samples.size();
  if (noise.samples.size() < n)
    throw DataError("mix_at_snr: noise clip shorter than signal");
  const double signal_rms = rms(signal.samples);
  if (signal_rms <= 0)
    throw DataError("mix_at_snr: silent signal with finite SNR");
  Rng rng(seed);
  const size_t span = noise.samples.size() - n + 1;
  std::vector<float> crop(n);
  double crop_rms = 0;
  size_t offset = 0;
  bool ok = false;
  for (int attempt = 0; attempt < 10; ++attempt) {
    offset = static_cast<size_t>(rng.next_u64() % span);
    std::copy(noise.samples.begin() + offset,
              noise.samples.begin() + offset + n, crop.begin());
    crop_rms = rms(crop);
    if (crop_rms > 0) {
      ok = true;
      break;
    }
  }
  if (!ok) throw DataError("mix_at_snr: silent noise crop after 10 attempts");

  const double alpha = signal_rms / (crop_rms * std::pow(10.0, snr_db / 20.0));
  res.mixed.sample_rate = signal.sample_rate;
  res.mixed.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    res.mixed.samples[i] =
        signal.samples[i] + static_cast<float>(alpha) * crop[i];
  res.scale = static_cast<float>(alpha);
  res.crop_offset = offset;
  return res;
}

}  // namespace lcanet
