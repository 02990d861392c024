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

// Desk-scale feature extraction: autocorrelation F0 tracking, mel-log-DCT
// cepstra, and two-band aperiodicity coding. The same analyzers run on both
// conditioning audio and generated audio, so downstream metrics compare like
// with like.

#ifndef QPNET_ANALYSIS_H_
#define QPNET_ANALYSIS_H_

#include <array>
#include <vector>

#include "qpnet/signal.h"

namespace qpnet {

struct AnalysisConfig {
  int64_t hop = 110;
  int64_t window = 512;            // mcep/aperiodicity frame, power of two
  int mcep_order = 34;
  double f0_min = 70.0;
  double f0_max = 400.0;
  double voicing_threshold = 0.45;
  double f0_window_factor = 4.0;   // F0 window = factor / f0_min seconds
};

// Per-frame F0 in Hz, 0 on unvoiced frames. Normalized autocorrelation peak
// within [rate/f0_max, rate/f0_min], parabolic lag refinement, voicing
// decision against the threshold. Rejects signals shorter than the window.
std::vector<double> estimate_f0(const WaveBuffer& wave, const AnalysisConfig& cfg);

// Hann window, power spectrum, mel triangle bank (2*order filters), log with
// a floor of 1e-8 relative to the frame's peak band energy, orthonormal
// DCT-II, first `order` coefficients.
std::vector<std::vector<double>> melcep_extract(const WaveBuffer& wave,
                                                const AnalysisConfig& cfg);

// Two band-averaged log ratios of pitch-predictive residual energy to total
// energy, bands split at rate/4, clamped to [-60, 0] dB and scaled to [-1, 0].
std::vector<std::array<double, 2>> code_aperiodicity(const WaveBuffer& wave,
                                                     const AnalysisConfig& cfg);

// Runs all three extractors plus continuous-F0 interpolation and truncates
// the streams to a common frame count.
FrameFeatures extract_features(const WaveBuffer& wave, const AnalysisConfig& cfg);

// Frame count for a given extractor window: floor((len - window)/hop) + 1.
int64_t frame_count(int64_t samples, int64_t window, int64_t hop);

// F0 analysis window in samples for this configuration.
int64_t f0_window_samples(int rate, const AnalysisConfig& cfg);

}  // namespace qpnet

#endif  // QPNET_ANALYSIS_H_
