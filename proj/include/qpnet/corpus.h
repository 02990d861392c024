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

// Synthetic training corpus: per-speaker harmonic envelopes and F0 ranges,
// smooth random F0 contours shared across speakers so parallel pairs stay
// frame-aligned, plus per-sample ground-truth F0 sidecars.

#ifndef QPNET_CORPUS_H_
#define QPNET_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "qpnet/signal.h"

namespace qpnet {

struct SpeakerSpec {
  double f0_min = 120.0;
  double f0_max = 240.0;
  double tilt = 1.0;  // harmonic amplitude decay exponent
};

struct CorpusConfig {
  int rate = 22050;
  int speakers = 2;
  int utterances = 6;  // per speaker
  double seconds = 0.8;
  int harmonics = 6;
  double noise_level = 0.003;
  double amplitude = 0.6;
  double gap_prob = 0.0;  // chance of a short unvoiced (noise-only) stretch
  uint64_t seed = 1;
  std::vector<SpeakerSpec> speaker_specs;  // sized to `speakers` (or empty for defaults)
};

struct CorpusUtterance {
  int speaker = 0;
  int index = 0;
  WaveBuffer wave;
  std::vector<double> f0_truth;  // per sample, 0 where unvoiced
};

// Deterministic per seed. Utterance i of every speaker shares the same
// normalized contour shape, mapped into each speaker's log-F0 range.
std::vector<CorpusUtterance> synth_corpus(const CorpusConfig& cfg);

// Default speaker table used when the config carries no explicit specs.
std::vector<SpeakerSpec> default_speakers(int count);

std::string utterance_stem(int speaker, int index);

// Ground-truth sidecar: magic "QPF0", u32le count, float32 per-sample F0.
void write_f0_sidecar(const std::string& path, const std::vector<double>& f0);
std::vector<double> read_f0_sidecar(const std::string& path);

}  // namespace qpnet

#endif  // QPNET_CORPUS_H_
