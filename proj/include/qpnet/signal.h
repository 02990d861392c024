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

// Waveform containers, mu-law companding, continuous-F0 interpolation,
// frame-to-sample upsampling, and the WAV / feature file formats.

#ifndef QPNET_SIGNAL_H_
#define QPNET_SIGNAL_H_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qpnet/tensor.h"

namespace qpnet {

// A sampled waveform with amplitudes in [-1, 1].
struct WaveBuffer {
  std::vector<double> samples;
  int rate = 22050;
};

// 8-bit mu-law codes, one per source sample.
struct MuLawCode {
  std::vector<uint8_t> codes;
};

// Per-frame auxiliary features. All four streams share the frame count.
struct FrameFeatures {
  std::vector<double> continuous_f0;          // Hz, strictly positive
  std::vector<uint8_t> uv;                    // 1 = voiced
  std::vector<std::vector<double>> mcep;      // order M per frame
  std::vector<std::array<double, 2>> coded_ap;
  int64_t hop = 110;                          // samples per frame

  int64_t frames() const { return static_cast<int64_t>(continuous_f0.size()); }
  int mcep_dim() const { return mcep.empty() ? 0 : static_cast<int>(mcep[0].size()); }
  // Width of an upsampled row: [f0, uv, mcep..., ap0, ap1].
  int aux_dim() const { return mcep_dim() + 4; }
};

// code(x) = floor((F(x)+1)/2 * 256) clamped to [0,255], with
// F(x) = sign(x) * ln(1 + mu|x|) / ln(1 + mu). Rejects samples outside [-1,1].
MuLawCode mulaw_encode(const WaveBuffer& wave, int mu = 255);
uint8_t mulaw_encode_sample(double x, int mu = 255);

// Decodes each code at the center of its companded bin.
WaveBuffer mulaw_decode(const MuLawCode& codes, int rate, int mu = 255);
double mulaw_decode_sample(uint8_t code, int mu = 255);

// Input: per-frame F0 with 0 marking unvoiced frames. Unvoiced gaps are
// filled by linear interpolation in log-Hz; leading/trailing runs take the
// nearest voiced value. Rejects all-unvoiced input.
std::pair<std::vector<double>, std::vector<uint8_t>> interpolate_continuous_f0(
    const std::vector<double>& f0);

// Nearest-neighbor hold: row t of the result equals frame floor(t/hop), in
// the fixed column layout [continuous_f0, uv, mcep(0..M-1), coded_ap(0..1)].
// Result shape: {frames*hop, mcep_dim+4}.
Tensor upsample_features(const FrameFeatures& frames);

// 16-bit PCM mono RIFF, normalized by 1/32768.
WaveBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const WaveBuffer& wave);

// Feature file: magic "QPF1", u32le {frame_count, hop, mcep_dim}, then
// frame-major float32 rows in the upsample column layout.
void write_features(const std::string& path, const FrameFeatures& frames);
FrameFeatures read_features(const std::string& path);

}  // namespace qpnet

#endif  // QPNET_SIGNAL_H_
