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

// WaveNet-style vocoders with optional pitch-adaptive residual blocks:
// network assembly, teacher-forced training, and fast autoregressive
// generation backed by per-layer ring buffers.

#ifndef QPNET_VOCODER_H_
#define QPNET_VOCODER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "qpnet/autograd.h"
#include "qpnet/dilation.h"
#include "qpnet/signal.h"
#include "qpnet/tensor.h"

namespace qpnet {

// One residual block: two-tap dilated filters for the tanh and sigmoid
// paths, per-block auxiliary projections, and residual/skip 1x1s.
struct ResidualBlockParams {
  Parameter tap_fc, tap_fp;  // current / previous taps, filter path [C x C]
  Parameter tap_gc, tap_gp;  // gate path
  Parameter aux_fw, aux_fb;  // [C x A], [C]
  Parameter aux_gw, aux_gb;
  Parameter res_w, res_b;    // [C x C], [C]
  Parameter skip_w, skip_b;  // [S x C], [S]
};

struct VocoderParams {
  ArchitectureSpec spec;
  int aux_dim = 0;
  Parameter causal_w0, causal_w1, causal_b;  // entry taps over one-hot codes
  std::vector<ResidualBlockParams> fixed_blocks;
  std::vector<ResidualBlockParams> adaptive_blocks;
  Parameter head1_w, head1_b;  // [H x S], [H]
  Parameter head2_w, head2_b;  // [Q x H], [Q]

  std::vector<Parameter*> parameters();
  // The two post-skip 1x1 convolutions (the output layers an SDo update touches).
  std::vector<Parameter*> head_parameters();
  int64_t parameter_count() const;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
VocoderParams build_vocoder(const ArchitectureSpec& spec, int aux_dim, uint64_t seed);

// Batch teacher-forced logits [Q x T], double precision, no gradients.
// Inputs are shifted internally: position t consumes the one-hot of
// codes[t-1] (zeros at t=0), so logits at t depend only on codes[< t].
Tensor teacher_forced_forward(const VocoderParams& params,
                              const std::vector<uint8_t>& codes, const Tensor& aux,
                              const DilationPlan& plan);
// Same computation in single precision (flattened [Q x T]).
std::vector<float> teacher_forced_forward_single(const VocoderParams& params,
                                                 const std::vector<uint8_t>& codes,
                                                 const Tensor& aux,
                                                 const DilationPlan& plan);

// Tape-recorded forward for training; returns the logits node.
Tape::Ref vocoder_logits(Tape& tape, VocoderParams& params,
                         const std::vector<uint8_t>& codes, const Tensor& aux,
                         const DilationPlan& plan);

struct TrainWindow {
  std::vector<uint8_t> codes;
  Tensor aux;  // [A x T]
  DilationPlan plan;
};

// One optimizer step on the mean cross-entropy over the batch; returns the
// pre-update loss.
double train_step(VocoderParams& params, const std::vector<TrainWindow>& batch,
                  const AdamConfig& cfg);

// Mean teacher-forced cross-entropy of a window set, no gradients.
double batch_cross_entropy(const VocoderParams& params,
                           const std::vector<TrainWindow>& windows);

enum class Precision { kSingle, kDouble };

struct GenerateResult {
  MuLawCode codes;
  WaveBuffer wave;
};

// Sequential sampling from softmax(logits / temperature); temperature 0
// selects the argmax deterministically. The incremental path keeps one ring
// buffer per layer sized to that layer's largest dilation in the plan, so
// per-sample cost is independent of the utterance length. logits_out, when
// given, receives the per-step logits flattened [Q x T] for replay checks.
GenerateResult generate(const VocoderParams& params, const Tensor& aux,
                        const DilationPlan& plan, int rate, uint64_t seed,
                        double temperature = 1.0,
                        Precision precision = Precision::kDouble,
                        std::vector<double>* logits_out = nullptr);

void save_vocoder(const std::string& path, const VocoderParams& params);
VocoderParams load_vocoder(const std::string& path);

// [T x A] sample-major rows (upsample_features layout) -> [A x T].
Tensor aux_channels(const Tensor& rows);

}  // namespace qpnet

#endif  // QPNET_VOCODER_H_
