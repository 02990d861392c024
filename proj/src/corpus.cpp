/*
Copyright 2026 The qpnet Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "qpnet/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

namespace qpnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

double uniform(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

double gaussian(std::mt19937_64& rng) {
  // Box-Muller; good enough for a corpus noise floor
  double u1 = std::max(uniform(rng), 1e-12);
  double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Smooth contour shape in (0, 1): a few slow sinusoids around 0.5.
struct ContourShape {
  double a[3], freq[3], phase[3];

  double eval(double seconds) const {
    double v = 0.5;
    for (int j = 0; j < 3; ++j)
      v += a[j] * std::sin(2.0 * kPi * freq[j] * seconds + phase[j]);
    return v;
  }
};

ContourShape make_shape(std::mt19937_64& rng) {
  ContourShape s;
  double budget = 0.42;
  for (int j = 0; j < 3; ++j) {
    const double share = j == 2 ? budget : budget * (0.4 + 0.3 * uniform(rng));
    s.a[j] = share;
    budget -= share;
    s.freq[j] = 0.4 + 2.4 * uniform(rng);
    s.phase[j] = 2.0 * kPi * uniform(rng);
  }
  return s;
}

}  // namespace

std::vector<SpeakerSpec> default_speakers(int count) {
  // Overlapping but distinct ranges and spectral tilts.
  static const SpeakerSpec table[] = {
      {120.0, 200.0, 0.8}, {160.0, 260.0, 1.3}, {100.0, 170.0, 1.0},
      {200.0, 320.0, 0.6}, {130.0, 230.0, 1.6},
  };
  std::vector<SpeakerSpec> out;
  for (int k = 0; k < count; ++k) {
    SpeakerSpec s = table[k % 5];
    if (k >= 5) s.f0_min *= 1.05, s.f0_max *= 1.05;
    out.push_back(s);
  }
  return out;
}

std::string utterance_stem(int speaker, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%d_utt%02d", speaker, index);
  return buf;
}

std::vector<CorpusUtterance> synth_corpus(const CorpusConfig& cfg) {
  require(cfg.rate > 0 && cfg.speakers >= 1 && cfg.utterances >= 1 && cfg.seconds > 0,
          "synth_corpus: invalid corpus dimensions");
  require(cfg.harmonics >= 1 && cfg.amplitude > 0 && cfg.amplitude <= 0.95,
          "synth_corpus: invalid signal parameters");
  std::vector<SpeakerSpec> speakers =
      cfg.speaker_specs.empty() ? default_speakers(cfg.speakers) : cfg.speaker_specs;
  require(static_cast<int>(speakers.size()) == cfg.speakers,
          "synth_corpus: speaker spec count mismatch");
  for (const SpeakerSpec& s : speakers)
    require(s.f0_min > 0 && s.f0_min < s.f0_max && s.f0_max < cfg.rate / 2.0,
            "synth_corpus: invalid speaker F0 range");

  const int64_t t_len = static_cast<int64_t>(std::lround(cfg.seconds * cfg.rate));
  const int64_t fade = std::min<int64_t>(t_len / 8, static_cast<int64_t>(0.015 * cfg.rate));

  // Contour shapes and gap placement are per utterance index, so parallel
  // pairs align across speakers.
  std::vector<ContourShape> shapes;
  std::vector<std::pair<int64_t, int64_t>> gaps;  // [start, end), (0,0) = none
  std::mt19937_64 shape_rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 1);
  for (int i = 0; i < cfg.utterances; ++i) {
    shapes.push_back(make_shape(shape_rng));
    std::pair<int64_t, int64_t> gap{0, 0};
    if (uniform(shape_rng) < cfg.gap_prob) {
      const int64_t len = t_len / 8;
      const int64_t start = t_len / 4 + static_cast<int64_t>(uniform(shape_rng) * t_len / 2);
      gap = {start, std::min(start + len, t_len - t_len / 8)};
    }
    gaps.push_back(gap);
  }

  std::vector<CorpusUtterance> corpus;
  corpus.reserve(static_cast<size_t>(cfg.speakers * cfg.utterances));
  for (int spk = 0; spk < cfg.speakers; ++spk) {
    const SpeakerSpec& sp = speakers[static_cast<size_t>(spk)];
    // fixed spectral envelope per speaker
    std::mt19937_64 env_rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 1000 + spk);
    std::vector<double> amps(static_cast<size_t>(cfg.harmonics));
    double norm = 0.0;
    for (int h = 0; h < cfg.harmonics; ++h) {
      amps[static_cast<size_t>(h)] =
          std::pow(h + 1.0, -sp.tilt) * (0.7 + 0.6 * uniform(env_rng));
      norm += amps[static_cast<size_t>(h)];
    }
    for (double& a : amps) a = a / norm * cfg.amplitude;

    for (int i = 0; i < cfg.utterances; ++i) {
      std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 7919 * (spk + 1) + i);
      CorpusUtterance utt;
      utt.speaker = spk;
      utt.index = i;
      utt.wave.rate = cfg.rate;
      utt.wave.samples.resize(static_cast<size_t>(t_len));
      utt.f0_truth.assign(static_cast<size_t>(t_len), 0.0);

      const double log_ratio = std::log(sp.f0_max / sp.f0_min);
      // keep harmonics clear of Nyquist across the whole range
      int h_count = cfg.harmonics;
      while (h_count > 1 && h_count * sp.f0_max > 0.45 * cfg.rate) --h_count;

      const auto [gap_lo, gap_hi] = gaps[static_cast<size_t>(i)];
      double phase = uniform(rng);
      for (int64_t t = 0; t < t_len; ++t) {
        const double shape = std::clamp(shapes[static_cast<size_t>(i)].eval(
                                            static_cast<double>(t) / cfg.rate),
                                        0.02, 0.98);
        const double f0 = sp.f0_min * std::exp(log_ratio * shape);
        const bool in_gap = t >= gap_lo && t < gap_hi;

        double env = 1.0;
        if (t < fade) env = 0.5 - 0.5 * std::cos(kPi * t / static_cast<double>(fade));
        if (t >= t_len - fade)
          env = 0.5 - 0.5 * std::cos(kPi * (t_len - 1 - t) / static_cast<double>(fade));
        if (in_gap) env = 0.0;

        double v = 0.0;
        for (int h = 0; h < h_count; ++h)
          v += amps[static_cast<size_t>(h)] * std::sin(2.0 * kPi * (h + 1) * phase);
        v *= env;
        v += (in_gap ? 20.0 * cfg.noise_level : cfg.noise_level) * gaussian(rng);
        utt.wave.samples[static_cast<size_t>(t)] = std::clamp(v, -1.0, 1.0);
        utt.f0_truth[static_cast<size_t>(t)] = in_gap ? 0.0 : f0;

        phase += f0 / cfg.rate;
        if (phase >= 1.0) phase -= 1.0;
      }
      corpus.push_back(std::move(utt));
    }
  }
  return corpus;
}

void write_f0_sidecar(const std::string& path, const std::vector<double>& f0) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "write_f0_sidecar: cannot open " + path);
  os.write("QPF0", 4);
  const uint32_t n = static_cast<uint32_t>(f0.size());
  unsigned char b[4] = {static_cast<unsigned char>(n & 0xff),
                        static_cast<unsigned char>((n >> 8) & 0xff),
                        static_cast<unsigned char>((n >> 16) & 0xff),
                        static_cast<unsigned char>((n >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
  for (double v : f0) {
    float fv = static_cast<float>(v);
    uint32_t u;
    std::memcpy(&u, &fv, 4);
    unsigned char fb[4] = {static_cast<unsigned char>(u & 0xff),
                           static_cast<unsigned char>((u >> 8) & 0xff),
                           static_cast<unsigned char>((u >> 16) & 0xff),
                           static_cast<unsigned char>((u >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(fb), 4);
  }
}

std::vector<double> read_f0_sidecar(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_f0_sidecar: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::memcmp(magic, "QPF0", 4) == 0,
          "read_f0_sidecar: bad magic in " + path);
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  const uint32_t n = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                     (static_cast<uint32_t>(b[2]) << 16) |
                     (static_cast<uint32_t>(b[3]) << 24);
  std::vector<double> out(n);
  for (uint32_t i = 0; i < n; ++i) {
    unsigned char fb[4];
    is.read(reinterpret_cast<char*>(fb), 4);
    uint32_t u = static_cast<uint32_t>(fb[0]) | (static_cast<uint32_t>(fb[1]) << 8) |
                 (static_cast<uint32_t>(fb[2]) << 16) | (static_cast<uint32_t>(fb[3]) << 24);
    float fv;
    std::memcpy(&fv, &u, 4);
    out[i] = fv;
  }
  require(is.good(), "read_f0_sidecar: truncated file " + path);
  return out;
}

}  // namespace qpnet
