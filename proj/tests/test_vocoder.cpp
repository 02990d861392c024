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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "probe_util.h"
#include "qpnet/analysis.h"
#include "qpnet/corpus.h"
#include "qpnet/training.h"
#include "qpnet/vocoder.h"

using namespace qpnet;

namespace {

ArchitectureSpec tiny_spec(int fl, int fr, int al, int ar, int ch = 16, int head = 32) {
  ArchitectureSpec s;
  s.fixed_layers = fl;
  s.fixed_repeats = fr;
  s.adaptive_layers = al;
  s.adaptive_repeats = ar;
  s.residual_channels = ch;
  s.skip_channels = ch;
  s.head_channels = head;
  return s;
}

Tensor random_aux(int a, int64_t t_len, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor aux({a, t_len});
  for (double& v : aux.data) v = ((rng() >> 11) * 0x1.0p-53) - 0.5;
  return aux;
}

std::vector<uint8_t> random_codes(int64_t t_len, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<uint8_t> codes(static_cast<size_t>(t_len));
  for (auto& c : codes) c = static_cast<uint8_t>(rng() % 256);
  return codes;
}

// smoothly varying e_t in a plausible desk range
std::vector<double> wavy_e(int64_t t_len, double lo, double hi) {
  std::vector<double> e(static_cast<size_t>(t_len));
  for (int64_t t = 0; t < t_len; ++t)
    e[static_cast<size_t>(t)] =
        lo + (hi - lo) * 0.5 * (1.0 + std::sin(t / 37.0));
  return e;
}

}  // namespace

TEST_CASE("build honors the published block counts") {
  VocoderParams wnf = build_vocoder(wnf_spec(), 38, 1);
  CHECK(wnf.fixed_blocks.size() == 30);
  CHECK(wnf.adaptive_blocks.size() == 0);

  VocoderParams qp = build_vocoder(qpnet_spec(), 38, 1);
  CHECK(qp.fixed_blocks.size() == 12);
  CHECK(qp.adaptive_blocks.size() == 4);
}

TEST_CASE("desk parameter count matches the closed-form audit") {
  const int aux = 24, c = 64, s = 64, h = 64, q = 256;
  VocoderParams p = build_vocoder(desk_spec(), aux, 3);
  const int64_t blocks = 3 + 2;
  const int64_t per_block = 4 * c * c + 2 * (c * aux + c) + (c * c + c) + (s * c + s);
  const int64_t expected = (2 * c * q + c)          // causal entry
                           + blocks * per_block     // residual blocks
                           + (h * s + h)            // head 1x1 #1
                           + (q * h + q);           // head 1x1 #2
  CHECK(p.parameter_count() == expected);
}

TEST_CASE("zeroed head produces uniform logits regardless of input") {
  ArchitectureSpec spec = tiny_spec(2, 1, 0, 0, 8, 8);
  VocoderParams p = build_vocoder(spec, 4, 5);
  p.head2_w.value.fill(0.0);
  p.head2_b.value.fill(0.0);
  DilationPlan plan = build_plan(spec, {});
  for (uint64_t seed : {1ull, 2ull}) {
    Tensor logits = teacher_forced_forward(p, random_codes(50, seed),
                                           random_aux(4, 50, seed), plan);
    for (double v : logits.data) CHECK(v == 0.0);
  }
}

TEST_CASE("impulse probes match the receptive-field closed form") {
  SUBCASE("compact fixed network") {
    ArchitectureSpec spec = tiny_spec(4, 4, 0, 0);
    const int64_t r = receptive_field(spec);
    CHECK(r == 61);
    VocoderParams p = qpnet_test::make_probe_vocoder(spec, 11);
    DilationPlan plan = build_plan(spec, {});
    const int64_t t0 = 20, t_len = t0 + r + 40;
    auto res = qpnet_test::probe_span(p, plan, t_len, t0, 21);
    CHECK(res.first_changed == t0 + 1);
    CHECK(res.last_changed == t0 + r + 1);
    CHECK(res.contiguous);
  }

  SUBCASE("pitch-adaptive network at constant e = 5") {
    ArchitectureSpec spec = qpnet_spec();
    const int64_t r = receptive_field(spec, 5.0);
    CHECK(r == 121);
    VocoderParams p = qpnet_test::make_probe_vocoder(spec, 12);
    const int64_t t0 = 30, t_len = t0 + r + 40;
    DilationPlan plan = build_plan(p.spec, std::vector<double>(t_len, 5.0));
    auto res = qpnet_test::probe_span(p, plan, t_len, t0, 22);
    CHECK(res.first_changed == t0 + 1);
    CHECK(res.last_changed == t0 + r + 1);
    CHECK(res.contiguous);
  }

  SUBCASE("five random small specs") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
      ArchitectureSpec spec = tiny_spec(3 + static_cast<int>(rng() % 2),
                                        1 + static_cast<int>(rng() % 3),
                                        static_cast<int>(rng() % 3), 1);
      if (spec.adaptive_layers == 0) spec.adaptive_repeats = 0;
      const double e = spec.adaptive_blocks() > 0 ? 1.5 + (rng() % 20) / 10.0 : 0.0;
      const int64_t r = receptive_field(spec, e);
      VocoderParams p = qpnet_test::make_probe_vocoder(spec, 100 + trial);
      const int64_t t0 = 15, t_len = t0 + r + 25;
      DilationPlan plan = spec.adaptive_blocks() > 0
                              ? build_plan(p.spec, std::vector<double>(t_len, e))
                              : build_plan(p.spec, {});
      auto res = qpnet_test::probe_span(p, plan, t_len, t0, 200 + trial);
      CHECK(res.first_changed == t0 + 1);
      CHECK(res.last_changed == t0 + r + 1);
      CHECK(res.contiguous);
    }
  }
}

TEST_CASE("teacher forcing is strictly causal on a standard-init network") {
  ArchitectureSpec spec = tiny_spec(3, 2, 2, 1, 8, 8);
  VocoderParams p = build_vocoder(spec, 4, 17);
  const int64_t t_len = 160, t0 = 70;
  DilationPlan plan = build_plan(spec, wavy_e(t_len, 2.0, 9.0));
  auto codes = random_codes(t_len, 3);
  Tensor aux = random_aux(4, t_len, 4);
  Tensor base = teacher_forced_forward(p, codes, aux, plan);
  auto flipped = codes;
  flipped[t0] = static_cast<uint8_t>((codes[t0] + 93) % 256);
  Tensor mod = teacher_forced_forward(p, flipped, aux, plan);
  for (int64_t t = 0; t <= t0; ++t)
    for (int64_t i = 0; i < 256; ++i) CHECK(base.at(i, t) == mod.at(i, t));
  bool any_after = false;
  for (int64_t t = t0 + 1; t < t_len; ++t)
    for (int64_t i = 0; i < 256; ++i) any_after |= base.at(i, t) != mod.at(i, t);
  CHECK(any_after);
}

TEST_CASE("tape forward equals the plain inference forward") {
  ArchitectureSpec spec = tiny_spec(2, 2, 2, 1, 8, 8);
  VocoderParams p = build_vocoder(spec, 5, 23);
  const int64_t t_len = 200;
  DilationPlan plan = build_plan(spec, wavy_e(t_len, 1.5, 7.0));
  auto codes = random_codes(t_len, 5);
  Tensor aux = random_aux(5, t_len, 6);

  Tensor plain = teacher_forced_forward(p, codes, aux, plan);
  Tape tape;
  Tape::Ref node = vocoder_logits(tape, p, codes, aux, plan);
  const Tensor& taped = tape.value(node);
  REQUIRE(taped.shape == plain.shape);
  for (int64_t i = 0; i < plain.numel(); ++i)
    CHECK(std::fabs(taped.data[i] - plain.data[i]) < 1e-10);
}

TEST_CASE("ring-buffer generation reproduces batch logits") {
  const int64_t t_len = 1200;
  struct Case {
    const char* name;
    ArchitectureSpec spec;
  };
  const Case cases[] = {
      {"wnc-shaped", tiny_spec(4, 4, 0, 0)},
      {"qpnet-shaped", tiny_spec(4, 3, 4, 1)},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    VocoderParams p = build_vocoder(c.spec, 6, 31);
    DilationPlan plan = c.spec.adaptive_blocks() > 0
                            ? build_plan(c.spec, wavy_e(t_len, 3.0, 14.0))
                            : build_plan(c.spec, {});
    Tensor aux = random_aux(6, t_len, 32);

    SUBCASE("single precision within 1e-5") {
      std::vector<double> gen_logits;
      GenerateResult gen =
          generate(p, aux, plan, 22050, 77, 1.0, Precision::kSingle, &gen_logits);
      REQUIRE(gen.codes.codes.size() == static_cast<size_t>(t_len));
      std::vector<float> batch = teacher_forced_forward_single(p, gen.codes.codes, aux, plan);
      double worst = 0.0;
      for (size_t i = 0; i < batch.size(); ++i)
        worst = std::max(worst, std::fabs(gen_logits[i] - static_cast<double>(batch[i])));
      CHECK(worst < 1e-5);
    }

    SUBCASE("double precision within 1e-10") {
      std::vector<double> gen_logits;
      GenerateResult gen =
          generate(p, aux, plan, 22050, 78, 1.0, Precision::kDouble, &gen_logits);
      Tensor batch = teacher_forced_forward(p, gen.codes.codes, aux, plan);
      double worst = 0.0;
      for (int64_t i = 0; i < batch.numel(); ++i)
        worst = std::max(worst, std::fabs(gen_logits[i] - batch.data[i]));
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("argmax generation is deterministic and seed-independent") {
  ArchitectureSpec spec = tiny_spec(3, 1, 2, 1, 8, 8);
  VocoderParams p = build_vocoder(spec, 4, 41);
  const int64_t t_len = 300;
  DilationPlan plan = build_plan(spec, wavy_e(t_len, 2.0, 8.0));
  Tensor aux = random_aux(4, t_len, 42);
  GenerateResult a = generate(p, aux, plan, 22050, 1, 0.0);
  GenerateResult b = generate(p, aux, plan, 22050, 999, 0.0);
  CHECK(a.codes.codes == b.codes.codes);
}

TEST_CASE("sampled generation is reproducible per seed") {
  ArchitectureSpec spec = tiny_spec(2, 2, 0, 0, 8, 8);
  VocoderParams p = build_vocoder(spec, 4, 43);
  const int64_t t_len = 280;
  DilationPlan plan = build_plan(spec, {});
  Tensor aux = random_aux(4, t_len, 44);
  GenerateResult a = generate(p, aux, plan, 22050, 5, 1.0);
  GenerateResult b = generate(p, aux, plan, 22050, 5, 1.0);
  GenerateResult c = generate(p, aux, plan, 22050, 6, 1.0);
  CHECK(a.codes.codes == b.codes.codes);
  CHECK(a.codes.codes != c.codes.codes);
}

TEST_CASE("a short training run beats the uniform baseline") {
  // one short synthetic utterance, fifty steps
  ArchitectureSpec spec = tiny_spec(3, 1, 2, 1, 16, 16);
  const int rate = 8000;
  const int64_t t_len = 1600;
  WaveBuffer wave;
  wave.rate = rate;
  for (int64_t t = 0; t < t_len; ++t)
    wave.samples.push_back(0.5 * std::sin(2.0 * 3.14159265 * 170.0 * t / rate));

  UtteranceData utt;
  utt.codes = mulaw_encode(wave).codes;
  utt.aux = Tensor({3, t_len});
  for (int64_t t = 0; t < t_len; ++t) {
    utt.aux.data[static_cast<size_t>(t)] = 170.0;
    utt.aux.data[static_cast<size_t>(t_len + t)] = 1.0;
    utt.aux.data[static_cast<size_t>(2 * t_len + t)] = 0.2;
  }
  utt.e_t = pitch_dilation_factors(std::vector<double>(t_len, 170.0), rate, spec.a);

  VocoderParams p = build_vocoder(spec, 3, 51);
  VocoderTrainConfig cfg;
  cfg.steps = 50;
  cfg.window = 400;
  cfg.batch_samples = 800;
  cfg.lr = 3e-3;
  cfg.seed = 52;
  std::vector<double> curve = train_vocoder(p, {utt}, cfg);
  CHECK(curve.back() < std::log(256.0));

  SUBCASE("a zero-rate step leaves the loss unchanged") {
    std::mt19937_64 rng(53);
    auto batch = sample_batch({utt}, spec, cfg.window, cfg.batch_samples, rng);
    AdamConfig frozen;
    frozen.lr = 0.0;
    const double l1 = train_step(p, batch, frozen);
    const double l2 = train_step(p, batch, frozen);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
  }
}

TEST_CASE("a trained pitch-adaptive vocoder follows constant-F0 conditioning") {
  // end-to-end pitch oracle: train on a narrow F0 band, generate at a
  // constant 180 Hz inside it, re-estimate the pitch of the output
  const int rate = 11025;
  AnalysisConfig acfg;
  acfg.hop = 55;
  acfg.window = 256;
  acfg.mcep_order = 20;
  acfg.f0_min = 80.0;
  acfg.f0_max = 400.0;

  ArchitectureSpec spec = desk_spec();
  spec.residual_channels = 48;
  spec.skip_channels = 48;
  spec.head_channels = 48;

  CorpusConfig corpus;
  corpus.rate = rate;
  corpus.speakers = 1;
  corpus.utterances = 6;
  corpus.seconds = 0.8;
  corpus.harmonics = 5;
  corpus.seed = 7777;
  corpus.speaker_specs = {{150.0, 220.0, 1.0}};

  std::vector<UtteranceData> data;
  for (const auto& utt : synth_corpus(corpus))
    data.push_back(prepare_utterance(utt.wave, extract_features(utt.wave, acfg), spec));

  VocoderParams p = build_vocoder(spec, acfg.mcep_order + 4, 7778);
  VocoderTrainConfig tcfg;
  tcfg.steps = 500;
  tcfg.window = 1024;
  tcfg.batch_samples = 2048;
  tcfg.lr = 2e-3;
  tcfg.seed = 7779;
  train_vocoder(p, data, tcfg);

  // constant-180Hz conditioning from a flat-contour utterance
  CorpusConfig flat = corpus;
  flat.utterances = 1;
  flat.seed = 7780;
  flat.speaker_specs = {{180.0, 180.0000001, 1.0}};
  const CorpusUtterance utt = synth_corpus(flat).front();
  FrameFeatures feats = extract_features(utt.wave, acfg);
  Tensor aux = aux_channels(upsample_features(feats));
  std::vector<double> f0(static_cast<size_t>(aux.cols()));
  for (int64_t t = 0; t < aux.cols(); ++t) f0[static_cast<size_t>(t)] = aux.data[static_cast<size_t>(t)];
  DilationPlan plan = build_plan(spec, pitch_dilation_factors(f0, rate, spec.a));
  GenerateResult gen = generate(p, aux, plan, rate, 7781, 1.0);

  std::vector<double> got = estimate_f0(gen.wave, acfg);
  int voiced = 0, close = 0;
  for (double v : got) {
    if (v <= 0.0) continue;
    ++voiced;
    if (std::fabs(v - 180.0) / 180.0 <= 0.05) ++close;
  }
  CAPTURE(voiced);
  CAPTURE(close);
  REQUIRE(voiced > 20);
  CHECK(static_cast<double>(close) / voiced >= 0.9);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  ArchitectureSpec spec = tiny_spec(2, 2, 2, 1, 8, 8);
  spec.adaptive_first = true;
  VocoderParams p = build_vocoder(spec, 5, 61);
  const std::string path =
      (std::filesystem::temp_directory_path() / "qpnet_ckpt.qpw").string();
  save_vocoder(path, p);
  VocoderParams r = load_vocoder(path);
  CHECK(r.spec.adaptive_first == true);
  CHECK(r.spec.fixed_layers == spec.fixed_layers);
  CHECK(r.aux_dim == 5);
  auto pa = p.parameters();
  auto pb = r.parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value.data == pb[i]->value.data);
  }
  std::filesystem::remove(path);
}

TEST_CASE("shape and plan mismatches are rejected") {
  ArchitectureSpec spec = tiny_spec(2, 1, 2, 1, 8, 8);
  VocoderParams p = build_vocoder(spec, 5, 71);
  DilationPlan plan = build_plan(spec, std::vector<double>(40, 4.0));
  CHECK_THROWS_AS(
      teacher_forced_forward(p, random_codes(40, 1), random_aux(4, 40, 2), plan),
      std::invalid_argument);  // aux dim
  CHECK_THROWS_AS(
      teacher_forced_forward(p, random_codes(50, 1), random_aux(5, 50, 2), plan),
      std::invalid_argument);  // plan covers 40, codes 50
}
