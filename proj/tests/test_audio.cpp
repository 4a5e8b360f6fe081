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

#include <cstring>
#include <filesystem>
#include <fstream>

#include "catch_amalgamated.hpp"
#include "lcanet/audio.hpp"

using namespace lcanet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lcanet_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Builds WAV bytes by hand so header fields can be forged.
std::vector<char> wav_bytes(uint16_t format, uint16_t channels, uint32_t rate,
                            uint16_t bits,
                            const std::vector<int16_t>& samples) {
  std::vector<char> b;
  auto put32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>(v >> (8 * i)));
  };
  auto put16 = [&](uint16_t v) {
    b.push_back(static_cast<char>(v));
    b.push_back(static_cast<char>(v >> 8));
  };
  auto tag = [&](const char* t) { b.insert(b.end(), t, t + 4); };
  tag("RIFF");
  put32(36 + static_cast<uint32_t>(samples.size() * 2));
  tag("WAVE");
  tag("fmt ");
  put32(16);
  put16(format);
  put16(channels);
  put32(rate);
  put32(rate * channels * bits / 8);
  put16(static_cast<uint16_t>(channels * bits / 8));
  put16(bits);
  tag("data");
  put32(static_cast<uint32_t>(samples.size() * 2));
  for (int16_t s : samples) put16(static_cast<uint16_t>(s));
  return b;
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("read_wav parses a silent one-second clip") {
  const fs::path dir = temp_dir("silent");
  write_bytes(dir / "z.wav",
              wav_bytes(1, 1, 16000, 16, std::vector<int16_t>(16000, 0)));
  const AudioClip clip = read_wav((dir / "z.wav").string());
  REQUIRE(clip.samples.size() == 16000);
  for (float v : clip.samples) CHECK(v == 0.0f);
}

TEST_CASE("read_wav scales int16 by 1/32768") {
  const fs::path dir = temp_dir("scale");
  write_bytes(dir / "s.wav", wav_bytes(1, 1, 16000, 16, {-32768, 32767, 0}));
  const AudioClip clip = read_wav((dir / "s.wav").string());
  CHECK(clip.samples[0] == -1.0f);
  CHECK(clip.samples[1] == 32767.0f / 32768.0f);
  CHECK(clip.samples[2] == 0.0f);
  CHECK(clip.samples.size() == 16000);  // zero-padded
  CHECK(clip.samples[3] == 0.0f);
}

TEST_CASE("write-then-read round trip of a 440 Hz sine") {
  const fs::path dir = temp_dir("sine");
  std::vector<float> sine(16000);
  for (int t = 0; t < 16000; ++t)
    sine[t] = 0.8f * std::sin(2.0 * 3.14159265358979 * 440.0 * t / 16000.0);
  write_wav((dir / "sine.wav").string(), sine);
  const AudioClip clip = read_wav((dir / "sine.wav").string());
  float max_err = 0;
  for (int t = 0; t < 16000; ++t)
    max_err = std::max(max_err, std::abs(clip.samples[t] - sine[t]));
  CHECK(max_err <= 1.0f / 32768.0f);
}

TEST_CASE("read_wav truncates long clips to the first second") {
  const fs::path dir = temp_dir("long");
  std::vector<int16_t> samples(20000);
  for (size_t i = 0; i < samples.size(); ++i)
    samples[i] = static_cast<int16_t>(i % 1000);
  write_bytes(dir / "l.wav", wav_bytes(1, 1, 16000, 16, samples));
  const AudioClip clip = read_wav((dir / "l.wav").string());
  REQUIRE(clip.samples.size() == 16000);
  CHECK(clip.samples[15999] == static_cast<float>(15999 % 1000) / 32768.0f);
}

TEST_CASE("read_wav rejects wrong formats with descriptive errors") {
  const fs::path dir = temp_dir("bad");
  write_bytes(dir / "float.wav", wav_bytes(3, 1, 16000, 16, {0}));
  CHECK_THROWS_MATCHES(read_wav((dir / "float.wav").string()), DataError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("PCM")));
  write_bytes(dir / "stereo.wav", wav_bytes(1, 2, 16000, 16, {0, 0}));
  CHECK_THROWS_MATCHES(read_wav((dir / "stereo.wav").string()), DataError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("mono")));
  write_bytes(dir / "rate.wav", wav_bytes(1, 1, 44100, 16, {0}));
  CHECK_THROWS_AS(read_wav((dir / "rate.wav").string()), DataError);
  std::vector<char> garbage = {'n', 'o', 't', 'a', 'w', 'a', 'v', 'e'};
  write_bytes(dir / "garbage.wav", garbage);
  CHECK_THROWS_AS(read_wav((dir / "garbage.wav").string()), DataError);
}

TEST_CASE("index_dataset splits 10 files into 7 train and 3 test") {
  const fs::path dir = temp_dir("split10");
  fs::create_directories(dir / "yes");
  const std::vector<int16_t> silence(100, 0);
  for (int i = 0; i < 10; ++i)
    write_bytes(dir / "yes" / ("f" + std::to_string(i) + ".wav"),
                wav_bytes(1, 1, 16000, 16, silence));
  const DatasetIndex index = index_dataset(dir.string(), {"yes"}, 42);
  int train = 0, test = 0;
  for (const auto& e : index.entries)
    (e.split == Split::train ? train : test)++;
  CHECK(train == 7);
  CHECK(test == 3);
}

TEST_CASE("index_dataset is deterministic and lexicographically ordered") {
  const fs::path dir = temp_dir("det");
  const std::vector<int16_t> silence(100, 0);
  for (const char* cls : {"yes", "no"}) {
    fs::create_directories(dir / cls);
    for (int i = 0; i < 6; ++i)
      write_bytes(dir / cls / ("c" + std::to_string(i) + ".wav"),
                  wav_bytes(1, 1, 16000, 16, silence));
  }
  const DatasetIndex a = index_dataset(dir.string(), {"yes", "no"}, 7);
  const DatasetIndex b = index_dataset(dir.string(), {"yes", "no"}, 7);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].rel_path == b.entries[i].rel_path);
    CHECK(a.entries[i].split == b.entries[i].split);
  }
  for (size_t i = 1; i < a.entries.size(); ++i)
    if (a.entries[i].label == a.entries[i - 1].label)
      CHECK(a.entries[i - 1].rel_path < a.entries[i].rel_path);
  // A different seed reshuffles the split eventually.
  const DatasetIndex c = index_dataset(dir.string(), {"yes", "no"}, 8);
  bool any_diff = false;
  for (size_t i = 0; i < a.entries.size(); ++i)
    any_diff |= a.entries[i].split != c.entries[i].split;
  CHECK(any_diff);
}

TEST_CASE("index_dataset reports missing and empty classes") {
  const fs::path dir = temp_dir("missing");
  fs::create_directories(dir / "yes");
  write_bytes(dir / "yes" / "a.wav",
              wav_bytes(1, 1, 16000, 16, {0}));
  CHECK_THROWS_MATCHES(index_dataset(dir.string(), {"yes", "nope"}, 1),
                       DataError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("nope")));
  fs::create_directories(dir / "empty");
  CHECK_THROWS_AS(index_dataset(dir.string(), {"yes", "empty"}, 1), DataError);
}

TEST_CASE("hash split of 1000 files lands at 700 train") {
  std::vector<std::string> paths;
  for (int i = 0; i < 1000; ++i)
    paths.push_back("cls/file_" + std::to_string(i) + ".wav");
  const auto splits = detail::assign_splits(paths, 99, 0.7);
  int train = 0;
  for (Split s : splits)
    if (s == Split::train) ++train;
  CHECK(train >= 695);
  CHECK(train <= 705);
  // Pure function of (paths, seed).
  CHECK(detail::assign_splits(paths, 99, 0.7) == splits);
}

TEST_CASE("rms basics") {
  CHECK(rms(std::vector<float>(100, 0.0f)) == 0.0);
  CHECK(rms(std::vector<float>(64, 0.5f)) == Catch::Approx(0.5));
  std::vector<float> sine(16000);
  for (int t = 0; t < 16000; ++t)
    sine[t] = std::sin(2.0 * 3.14159265358979 * 40.0 * t / 16000.0);
  CHECK(rms(sine) == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
  CHECK_THROWS_AS(rms(std::vector<float>{}), Error);
}

TEST_CASE("mix_at_snr with infinite SNR returns the signal untouched") {
  AudioClip signal;
  signal.samples.assign(16000, 0.25f);
  AudioClip noise;
  noise.samples.assign(32000, 0.1f);
  const MixResult res =
      mix_at_snr(signal, noise, std::numeric_limits<double>::infinity(), 3);
  CHECK(res.mixed.samples == signal.samples);
}

TEST_CASE("mix_at_snr equal-power and 20 dB scales") {
  Rng rng(7);
  AudioClip signal, noise;
  signal.samples.resize(16000);
  noise.samples.resize(16000);  // crop == whole noise clip
  for (int i = 0; i < 16000; ++i) {
    signal.samples[i] = 0.1f * ((i % 2) ? 1.0f : -1.0f);
    noise.samples[i] = 0.1f * ((i % 4) < 2 ? 1.0f : -1.0f);
  }
  const MixResult r0 = mix_at_snr(signal, noise, 0.0, 11);
  CHECK(r0.scale == Catch::Approx(1.0).margin(1e-6));
  const MixResult r20 = mix_at_snr(signal, noise, 20.0, 11);
  CHECK(r20.scale == Catch::Approx(0.1).margin(1e-6));
}

TEST_CASE("mix_at_snr achieves the target ratio within 0.1 dB") {
  Rng rng(8);
  AudioClip signal, noise;
  signal.samples.resize(16000);
  noise.samples.resize(48000);
  for (auto& v : signal.samples) v = static_cast<float>(0.2 * rng.normal());
  for (auto& v : noise.samples) v = static_cast<float>(0.5 * rng.normal());
  for (double snr : {-5.0, 0.0, 10.0, 20.0, 30.0}) {
    const MixResult res = mix_at_snr(signal, noise, snr, 17);
    std::vector<float> crop(noise.samples.begin() + res.crop_offset,
                            noise.samples.begin() + res.crop_offset + 16000);
    for (auto& v : crop) v *= res.scale;
    const double achieved =
        20.0 * std::log10(rms(signal.samples) / rms(crop));
    CHECK(std::abs(achieved - snr) < 0.1);
  }
}

TEST_CASE("mixing is linear: subtracting the scaled crop recovers the signal") {
  Rng rng(9);
  AudioClip signal, noise;
  signal.samples.resize(16000);
  noise.samples.resize(20000);
  for (auto& v : signal.samples) v = static_cast<float>(0.3 * rng.normal());
  for (auto& v : noise.samples) v = static_cast<float>(0.2 * rng.normal());
  const MixResult res = mix_at_snr(signal, noise, 12.0, 5);
  for (size_t i = 0; i < signal.samples.size(); ++i) {
    const float recovered =
        res.mixed.samples[i] -
        res.scale * noise.samples[res.crop_offset + i];
    CHECK(std::abs(recovered - signal.samples[i]) < 1e-6f);
  }
}

TEST_CASE("mix_at_snr rejects silent signals and silent noise") {
  AudioClip silent;
  silent.samples.assign(16000, 0.0f);
  AudioClip noise;
  noise.samples.assign(16000, 0.1f);
  CHECK_THROWS_AS(mix_at_snr(silent, noise, 10.0, 1), DataError);
  AudioClip signal;
  signal.samples.assign(16000, 0.1f);
  AudioClip silent_noise;
  silent_noise.samples.assign(16000, 0.0f);
  CHECK_THROWS_AS(mix_at_snr(signal, silent_noise, 10.0, 1), DataError);
  AudioClip short_noise;
  short_noise.samples.assign(100, 0.1f);
  CHECK_THROWS_AS(mix_at_snr(signal, short_noise, 10.0, 1), DataError);
}
