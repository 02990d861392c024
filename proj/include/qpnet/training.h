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

// Teacher-forcing data plumbing: utterances prepared for vocoder training
// and the contiguous-window batch assembly both SI training and speaker
// adaptation draw from.

#ifndef QPNET_TRAINING_H_
#define QPNET_TRAINING_H_

#include <cstdint>
#include <random>
#include <vector>

#include "qpnet/vocoder.h"

namespace qpnet {

// One utterance preprocessed for teacher forcing: mu-law codes, per-sample
// conditioning (channels-major), and per-sample pitch factors when the
// architecture has adaptive layers.
struct UtteranceData {
  std::vector<uint8_t> codes;
  Tensor aux;               // [A x T]
  std::vector<double> e_t;  // empty for fixed-only architectures
};

UtteranceData prepare_utterance(const WaveBuffer& wave, const FrameFeatures& features,
                                const ArchitectureSpec& spec);

// Window of `length` samples starting at `offset`; the window is treated as
// its own sequence start (lookback before the window reads zeros).
TrainWindow make_window(const UtteranceData& utt, const ArchitectureSpec& spec,
                        int64_t offset, int64_t length);

// Random contiguous windows totaling ~batch_samples.
std::vector<TrainWindow> sample_batch(const std::vector<UtteranceData>& data,
                                      const ArchitectureSpec& spec, int64_t window,
                                      int64_t batch_samples, std::mt19937_64& rng);

// Deterministic non-overlapping cover of full windows (validation batches).
std::vector<TrainWindow> enumerate_windows(const std::vector<UtteranceData>& data,
                                           const ArchitectureSpec& spec, int64_t window);

struct VocoderTrainConfig {
  int64_t steps = 2000;
  int64_t window = 1024;
  int64_t batch_samples = 4096;
  double lr = 1e-4;
  uint64_t seed = 1;
  int64_t log_every = 100;
};

// Plain SI training loop; returns the per-step loss curve.
std::vector<double> train_vocoder(VocoderParams& params,
                                  const std::vector<UtteranceData>& data,
                                  const VocoderTrainConfig& cfg);

}  // namespace qpnet

#endif  // QPNET_TRAINING_H_
