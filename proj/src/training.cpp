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

#include "qpnet/training.h"

#include <algorithm>

namespace qpnet {

UtteranceData prepare_utterance(const WaveBuffer& wave, const FrameFeatures& features,
                                const ArchitectureSpec& spec) {
  const int64_t t_len = std::min<int64_t>(static_cast<int64_t>(wave.samples.size()),
                                          features.frames() * features.hop);
  require(t_len > 0, "prepare_utterance: empty overlap of wave and features");

  WaveBuffer cut;
  cut.rate = wave.rate;
  cut.samples.assign(wave.samples.begin(), wave.samples.begin() + t_len);

  UtteranceData out;
  out.codes = mulaw_encode(cut).codes;
  Tensor rows = upsample_features(features);
  // truncate upsampled rows to the wave overlap
  Tensor aux_rows({t_len, rows.cols()});
  std::copy(rows.data.begin(), rows.data.begin() + t_len * rows.cols(),
            aux_rows.data.begin());
  out.aux = aux_channels(aux_rows);

  if (spec.adaptive_blocks() > 0) {
    std::vector<double> f0(static_cast<size_t>(t_len));
    for (int64_t t = 0; t < t_len; ++t)
      f0[static_cast<size_t>(t)] = out.aux.data[static_cast<size_t>(t)];  // row 0 = continuous F0
    out.e_t = pitch_dilation_factors(f0, wave.rate, spec.a);
  }
  return out;
}

TrainWindow make_window(const UtteranceData& utt, const ArchitectureSpec& spec,
                        int64_t offset, int64_t length) {
  const int64_t t_total = static_cast<int64_t>(utt.codes.size());
  require(offset >= 0 && length >= 1 && offset + length <= t_total,
          "make_window: window outside utterance");

  TrainWindow w;
  w.codes.assign(utt.codes.begin() + offset, utt.codes.begin() + offset + length);
  const int64_t a = utt.aux.rows();
  w.aux = Tensor({a, length});
  for (int64_t i = 0; i < a; ++i)
    std::copy(utt.aux.data.begin() + i * t_total + offset,
              utt.aux.data.begin() + i * t_total + offset + length,
              w.aux.data.begin() + i * length);
  if (spec.adaptive_blocks() > 0) {
    std::vector<double> e(utt.e_t.begin() + offset, utt.e_t.begin() + offset + length);
    w.plan = build_plan(spec, e);
  } else {
    w.plan = build_plan(spec, {});
  }
  return w;
}

std::vector<TrainWindow> sample_batch(const std::vector<UtteranceData>& data,
                                      const ArchitectureSpec& spec, int64_t window,
                                      int64_t batch_samples, std::mt19937_64& rng) {
  require(!data.empty(), "sample_batch: no utterances");
  std::vector<const UtteranceData*> usable;
  for (const UtteranceData& u : data)
    if (static_cast<int64_t>(u.codes.size()) >= window) usable.push_back(&u);
  require(!usable.empty(), "sample_batch: no utterance is at least one window long");

  const int64_t count = std::max<int64_t>(1, batch_samples / window);
  std::vector<TrainWindow> batch;
  batch.reserve(static_cast<size_t>(count));
  for (int64_t k = 0; k < count; ++k) {
    const UtteranceData& u = *usable[rng() % usable.size()];
    const int64_t max_off = static_cast<int64_t>(u.codes.size()) - window;
    const int64_t off = max_off == 0 ? 0 : static_cast<int64_t>(rng() % (max_off + 1));
    batch.push_back(make_window(u, spec, off, window));
  }
  return batch;
}

std::vector<TrainWindow> enumerate_windows(const std::vector<UtteranceData>& data,
                                           const ArchitectureSpec& spec, int64_t window) {
  std::vector<TrainWindow> out;
  for (const UtteranceData& u : data) {
    const int64_t t_total = static_cast<int64_t>(u.codes.size());
    for (int64_t off = 0; off + window <= t_total; off += window)
      out.push_back(make_window(u, spec, off, window));
  }
  require(!out.empty(), "enumerate_windows: no full windows in data");
  return out;
}

std::vector<double> train_vocoder(VocoderParams& params,
                                  const std::vector<UtteranceData>& data,
                                  const VocoderTrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  AdamConfig adam;
  adam.lr = cfg.lr;
  std::vector<double> curve;
  curve.reserve(static_cast<size_t>(cfg.steps));
  for (int64_t step = 0; step < cfg.steps; ++step) {
    auto batch = sample_batch(data, params.spec, cfg.window, cfg.batch_samples, rng);
    curve.push_back(train_step(params, batch, adam));
  }
  return curve;
}

}  // namespace qpnet
