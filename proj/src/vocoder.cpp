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

#include "qpnet/vocoder.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "qpnet/checkpoint.h"

namespace qpnet {

namespace {

// Forward order of residual blocks; fixed module first unless the spec
// flips the cascade.
struct BlockRef {
  bool adaptive;
  int idx;
};

std::vector<BlockRef> block_order(const ArchitectureSpec& spec) {
  std::vector<BlockRef> order;
  auto push_fixed = [&] {
    for (int k = 0; k < spec.fixed_blocks(); ++k) order.push_back({false, k});
  };
  auto push_adaptive = [&] {
    for (int k = 0; k < spec.adaptive_blocks(); ++k) order.push_back({true, k});
  };
  if (spec.adaptive_first) {
    push_adaptive();
    push_fixed();
  } else {
    push_fixed();
    push_adaptive();
  }
  return order;
}

Tensor init_weight(std::vector<int64_t> shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols()));
  for (double& v : t.data)
    v = bound * (2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0);
  return t;
}

void validate_plan(const VocoderParams& p, const DilationPlan& plan, int64_t t_len) {
  require(static_cast<int64_t>(plan.fixed_dilations.size()) == p.spec.fixed_blocks(),
          "vocoder: plan fixed block count mismatch");
  require(static_cast<int64_t>(plan.adaptive_dilations.size()) == p.spec.adaptive_blocks(),
          "vocoder: plan adaptive block count mismatch");
  if (p.spec.adaptive_blocks() > 0)
    require(plan.samples() == t_len, "vocoder: plan does not cover the sample count");
}

}  // namespace

std::vector<Parameter*> VocoderParams::parameters() {
  std::vector<Parameter*> out = {&causal_w0, &causal_w1, &causal_b};
  auto add_block = [&out](ResidualBlockParams& b) {
    for (Parameter* p : {&b.tap_fc, &b.tap_fp, &b.tap_gc, &b.tap_gp, &b.aux_fw,
                         &b.aux_fb, &b.aux_gw, &b.aux_gb, &b.res_w, &b.res_b,
                         &b.skip_w, &b.skip_b})
      out.push_back(p);
  };
  for (auto& b : fixed_blocks) add_block(b);
  for (auto& b : adaptive_blocks) add_block(b);
  for (Parameter* p : {&head1_w, &head1_b, &head2_w, &head2_b}) out.push_back(p);
  return out;
}

std::vector<Parameter*> VocoderParams::head_parameters() {
  return {&head1_w, &head1_b, &head2_w, &head2_b};
}

int64_t VocoderParams::parameter_count() const {
  int64_t n = 0;
  auto* self = const_cast<VocoderParams*>(this);
  for (Parameter* p : self->parameters()) n += p->value.numel();
  return n;
}

VocoderParams build_vocoder(const ArchitectureSpec& spec, int aux_dim, uint64_t seed) {
  spec.validate();
  require(aux_dim > 0, "build_vocoder: aux_dim must be positive");
  std::mt19937_64 rng(seed);

  const int64_t c = spec.residual_channels;
  const int64_t s = spec.skip_channels;
  const int64_t h = spec.head_channels;
  const int64_t q = spec.quant_levels;
  const int64_t a = aux_dim;

  VocoderParams p;
  p.spec = spec;
  p.aux_dim = aux_dim;
  p.causal_w0 = Parameter("causal.w0", init_weight({c, q}, rng));
  p.causal_w1 = Parameter("causal.w1", init_weight({c, q}, rng));
  p.causal_b = Parameter("causal.b", Tensor::zeros({c}));

  auto make_block = [&](const std::string& prefix) {
    ResidualBlockParams b;
    b.tap_fc = Parameter(prefix + ".tap_fc", init_weight({c, c}, rng));
    b.tap_fp = Parameter(prefix + ".tap_fp", init_weight({c, c}, rng));
    b.tap_gc = Parameter(prefix + ".tap_gc", init_weight({c, c}, rng));
    b.tap_gp = Parameter(prefix + ".tap_gp", init_weight({c, c}, rng));
    b.aux_fw = Parameter(prefix + ".aux_fw", init_weight({c, a}, rng));
    b.aux_fb = Parameter(prefix + ".aux_fb", Tensor::zeros({c}));
    b.aux_gw = Parameter(prefix + ".aux_gw", init_weight({c, a}, rng));
    b.aux_gb = Parameter(prefix + ".aux_gb", Tensor::zeros({c}));
    b.res_w = Parameter(prefix + ".res_w", init_weight({c, c}, rng));
    b.res_b = Parameter(prefix + ".res_b", Tensor::zeros({c}));
    b.skip_w = Parameter(prefix + ".skip_w", init_weight({s, c}, rng));
    b.skip_b = Parameter(prefix + ".skip_b", Tensor::zeros({s}));
    return b;
  };
  for (int k = 0; k < spec.fixed_blocks(); ++k)
    p.fixed_blocks.push_back(make_block("fixed." + std::to_string(k)));
  for (int k = 0; k < spec.adaptive_blocks(); ++k)
    p.adaptive_blocks.push_back(make_block("adaptive." + std::to_string(k)));

  p.head1_w = Parameter("head.1.w", init_weight({h, s}, rng));
  p.head1_b = Parameter("head.1.b", Tensor::zeros({h}));
  p.head2_w = Parameter("head.2.w", init_weight({q, h}, rng));
  p.head2_b = Parameter("head.2.b", Tensor::zeros({q}));
  return p;
}

Tape::Ref vocoder_logits(Tape& tape, VocoderParams& p, const std::vector<uint8_t>& codes,
                         const Tensor& aux, const DilationPlan& plan) {
  const int64_t t_len = static_cast<int64_t>(codes.size());
  require(t_len > 0, "vocoder_logits: empty code sequence");
  require(aux.rows() == p.aux_dim && aux.cols() == t_len,
          "vocoder_logits: aux shape must be [aux_dim x T]");
  validate_plan(p, plan, t_len);

  Tape::Ref aux_in = tape.input(aux);
  Tape::Ref x = tape.causal_entry(codes, tape.param(p.causal_w0),
                                  tape.param(p.causal_w1), tape.param(p.causal_b));
  Tape::Ref skip_sum = -1;
  std::vector<int64_t> d_const(static_cast<size_t>(t_len));
  for (const BlockRef& br : block_order(p.spec)) {
    ResidualBlockParams& b = br.adaptive ? p.adaptive_blocks[br.idx] : p.fixed_blocks[br.idx];
    const std::vector<int64_t>* d = nullptr;
    if (br.adaptive) {
      d = &plan.adaptive_dilations[br.idx];
    } else {
      std::fill(d_const.begin(), d_const.end(), plan.fixed_dilations[br.idx]);
      d = &d_const;
    }
    Tape::Ref af = tape.dilated_tap(x, *d, tape.param(b.tap_fc), tape.param(b.tap_fp));
    Tape::Ref ag = tape.dilated_tap(x, *d, tape.param(b.tap_gc), tape.param(b.tap_gp));
    Tape::Ref hf = tape.conv1x1(aux_in, tape.param(b.aux_fw), tape.param(b.aux_fb));
    Tape::Ref hg = tape.conv1x1(aux_in, tape.param(b.aux_gw), tape.param(b.aux_gb));
    Tape::Ref z = tape.gated(af, ag, hf, hg);
    Tape::Ref sk = tape.conv1x1(z, tape.param(b.skip_w), tape.param(b.skip_b));
    skip_sum = skip_sum < 0 ? sk : tape.add(skip_sum, sk);
    x = tape.add(x, tape.conv1x1(z, tape.param(b.res_w), tape.param(b.res_b)));
  }
  Tape::Ref h = tape.relu(skip_sum);
  h = tape.conv1x1(h, tape.param(p.head1_w), tape.param(p.head1_b));
  h = tape.relu(h);
  return tape.conv1x1(h, tape.param(p.head2_w), tape.param(p.head2_b));
}

double train_step(VocoderParams& params, const std::vector<TrainWindow>& batch,
                  const AdamConfig& cfg) {
  require(!batch.empty(), "train_step: empty batch");
  std::vector<Parameter*> ps = params.parameters();
  for (Parameter* p : ps) p->zero_grad();

  double total = 0.0;
  const double inv_k = 1.0 / static_cast<double>(batch.size());
  for (const TrainWindow& w : batch) {
    Tape tape;
    Tape::Ref logits = vocoder_logits(tape, params, w.codes, w.aux, w.plan);
    Tape::Ref loss = tape.softmax_cross_entropy(logits, w.codes);
    tape.backward(loss, inv_k);
    total += tape.scalar(loss);
  }
  adam_step(ps, cfg);
  return total * inv_k;
}

// ---------------------------------------------------------------------------
// Inference paths. Batch and incremental generation share the same per-sample
// arithmetic; only the activation history storage differs (full matrix vs
// ring buffer). That keeps the cache-equivalence contract tight.

namespace {

template <typename S>
struct BlockWeights {
  std::vector<S> tap_fc, tap_fp, tap_gc, tap_gp;
  std::vector<S> aux_fw, aux_fb, aux_gw, aux_gb;
  std::vector<S> res_w, res_b, skip_w, skip_b;
  bool adaptive = false;
  int plan_idx = 0;
};

template <typename S>
struct VocoderWeights {
  ArchitectureSpec spec;
  int64_t c, s, h, q, a;
  // causal taps stored transposed [Q x C] for contiguous column reads
  std::vector<S> causal_w0t, causal_w1t, causal_b;
  std::vector<BlockWeights<S>> blocks;  // forward order
  std::vector<S> head1_w, head1_b, head2_w, head2_b;
};

template <typename S>
std::vector<S> cast_vec(const Tensor& t) {
  std::vector<S> out(t.data.size());
  for (size_t i = 0; i < t.data.size(); ++i) out[i] = static_cast<S>(t.data[i]);
  return out;
}

template <typename S>
std::vector<S> cast_transposed(const Tensor& t) {
  const int64_t r = t.rows(), c = t.cols();
  std::vector<S> out(static_cast<size_t>(r * c));
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j)
      out[static_cast<size_t>(j * r + i)] = static_cast<S>(t.data[static_cast<size_t>(i * c + j)]);
  return out;
}

template <typename S>
VocoderWeights<S> snapshot_weights(const VocoderParams& p) {
  VocoderWeights<S> w;
  w.spec = p.spec;
  w.c = p.spec.residual_channels;
  w.s = p.spec.skip_channels;
  w.h = p.spec.head_channels;
  w.q = p.spec.quant_levels;
  w.a = p.aux_dim;
  w.causal_w0t = cast_transposed<S>(p.causal_w0.value);
  w.causal_w1t = cast_transposed<S>(p.causal_w1.value);
  w.causal_b = cast_vec<S>(p.causal_b.value);
  for (const BlockRef& br : block_order(p.spec)) {
    const ResidualBlockParams& b =
        br.adaptive ? p.adaptive_blocks[br.idx] : p.fixed_blocks[br.idx];
    BlockWeights<S> bw;
    bw.adaptive = br.adaptive;
    bw.plan_idx = br.idx;
    bw.tap_fc = cast_vec<S>(b.tap_fc.value);
    bw.tap_fp = cast_vec<S>(b.tap_fp.value);
    bw.tap_gc = cast_vec<S>(b.tap_gc.value);
    bw.tap_gp = cast_vec<S>(b.tap_gp.value);
    bw.aux_fw = cast_vec<S>(b.aux_fw.value);
    bw.aux_fb = cast_vec<S>(b.aux_fb.value);
    bw.aux_gw = cast_vec<S>(b.aux_gw.value);
    bw.aux_gb = cast_vec<S>(b.aux_gb.value);
    bw.res_w = cast_vec<S>(b.res_w.value);
    bw.res_b = cast_vec<S>(b.res_b.value);
    bw.skip_w = cast_vec<S>(b.skip_w.value);
    bw.skip_b = cast_vec<S>(b.skip_b.value);
    w.blocks.push_back(std::move(bw));
  }
  w.head1_w = cast_vec<S>(p.head1_w.value);
  w.head1_b = cast_vec<S>(p.head1_b.value);
  w.head2_w = cast_vec<S>(p.head2_w.value);
  w.head2_b = cast_vec<S>(p.head2_b.value);
  return w;
}

template <typename S>
inline void matvec_acc(const S* w, int64_t rows, int64_t cols, const S* x, S* y) {
  for (int64_t i = 0; i < rows; ++i) {
    S acc = 0;
    const S* row = w + i * cols;
    for (int64_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

// Scratch for one sample step.
template <typename S>
struct StepBuffers {
  std::vector<S> x, af, ag, z, skip_sum, h1, h2;
  void resize(int64_t c, int64_t s, int64_t h) {
    x.resize(c);
    af.resize(c);
    ag.resize(c);
    z.resize(c);
    skip_sum.resize(s);
    h1.resize(h);
    h2.resize(h);
  }
};

// One output sample. fetch(block_pos, src_t, dst) copies that block's input
// at time src_t into dst (src_t < t guaranteed); store(block_pos, t, x) saves
// the block input for later lookback. logits must hold Q values.
template <typename S, typename Fetch, typename Store>
void sample_step(const VocoderWeights<S>& w, const DilationPlan& plan,
                 const std::vector<uint8_t>& codes, int64_t t, const S* aux_col,
                 Fetch&& fetch, Store&& store, StepBuffers<S>& sb,
                 std::vector<S>& xprev, S* logits) {
  const int64_t c = w.c;
  // causal entry over the previous two codes
  for (int64_t i = 0; i < c; ++i) sb.x[i] = w.causal_b[i];
  if (t >= 1) {
    const S* col = &w.causal_w0t[static_cast<size_t>(codes[t - 1]) * c];
    for (int64_t i = 0; i < c; ++i) sb.x[i] += col[i];
  }
  if (t >= 2) {
    const S* col = &w.causal_w1t[static_cast<size_t>(codes[t - 2]) * c];
    for (int64_t i = 0; i < c; ++i) sb.x[i] += col[i];
  }

  std::fill(sb.skip_sum.begin(), sb.skip_sum.end(), S(0));
  for (size_t bi = 0; bi < w.blocks.size(); ++bi) {
    const BlockWeights<S>& b = w.blocks[bi];
    const int64_t d = b.adaptive ? plan.adaptive_dilations[b.plan_idx][t]
                                 : plan.fixed_dilations[b.plan_idx];
    const int64_t src = t - d;
    bool have_prev = src >= 0;
    if (have_prev) fetch(bi, src, xprev.data());

    for (int64_t i = 0; i < c; ++i) {
      sb.af[i] = b.aux_fb[i];
      sb.ag[i] = b.aux_gb[i];
    }
    matvec_acc(b.aux_fw.data(), c, w.a, aux_col, sb.af.data());
    matvec_acc(b.aux_gw.data(), c, w.a, aux_col, sb.ag.data());
    matvec_acc(b.tap_fc.data(), c, c, sb.x.data(), sb.af.data());
    matvec_acc(b.tap_gc.data(), c, c, sb.x.data(), sb.ag.data());
    if (have_prev) {
      matvec_acc(b.tap_fp.data(), c, c, xprev.data(), sb.af.data());
      matvec_acc(b.tap_gp.data(), c, c, xprev.data(), sb.ag.data());
    }
    for (int64_t i = 0; i < c; ++i)
      sb.z[i] = std::tanh(sb.af[i]) * (S(1) / (S(1) + std::exp(-sb.ag[i])));

    store(bi, t, sb.x.data());
    for (int64_t i = 0; i < w.s; ++i) sb.skip_sum[i] += b.skip_b[i];
    matvec_acc(b.skip_w.data(), w.s, c, sb.z.data(), sb.skip_sum.data());
    for (int64_t i = 0; i < c; ++i) sb.x[i] += b.res_b[i];
    matvec_acc(b.res_w.data(), c, c, sb.z.data(), sb.x.data());
  }

  for (int64_t i = 0; i < w.s; ++i)
    sb.skip_sum[i] = sb.skip_sum[i] > S(0) ? sb.skip_sum[i] : S(0);
  for (int64_t i = 0; i < w.h; ++i) sb.h1[i] = w.head1_b[i];
  matvec_acc(w.head1_w.data(), w.h, w.s, sb.skip_sum.data(), sb.h1.data());
  for (int64_t i = 0; i < w.h; ++i) sb.h2[i] = sb.h1[i] > S(0) ? sb.h1[i] : S(0);
  for (int64_t i = 0; i < w.q; ++i) logits[i] = w.head2_b[i];
  matvec_acc(w.head2_w.data(), w.q, w.h, sb.h2.data(), logits);
}

// Batch forward sharing sample_step: per-block input histories kept whole.
template <typename S>
std::vector<S> plain_forward(const VocoderWeights<S>& w, const DilationPlan& plan,
                             const std::vector<uint8_t>& codes, const Tensor& aux) {
  const int64_t t_len = static_cast<int64_t>(codes.size());
  const int64_t c = w.c;
  std::vector<std::vector<S>> history(w.blocks.size());
  for (auto& h : history) h.assign(static_cast<size_t>(t_len * c), S(0));
  std::vector<S> aux_col(static_cast<size_t>(w.a));
  std::vector<S> logits(static_cast<size_t>(w.q * t_len));
  std::vector<S> step_logits(static_cast<size_t>(w.q));
  StepBuffers<S> sb;
  sb.resize(c, w.s, w.h);
  std::vector<S> xprev(static_cast<size_t>(c));

  auto fetch = [&](size_t bi, int64_t src, S* dst) {
    const S* row = &history[bi][static_cast<size_t>(src * c)];
    std::copy(row, row + c, dst);
  };
  auto store = [&](size_t bi, int64_t t, const S* x) {
    std::copy(x, x + c, &history[bi][static_cast<size_t>(t * c)]);
  };

  for (int64_t t = 0; t < t_len; ++t) {
    for (int64_t i = 0; i < w.a; ++i)
      aux_col[static_cast<size_t>(i)] = static_cast<S>(aux.data[static_cast<size_t>(i * t_len + t)]);
    sample_step(w, plan, codes, t, aux_col.data(), fetch, store, sb, xprev,
                step_logits.data());
    for (int64_t i = 0; i < w.q; ++i)
      logits[static_cast<size_t>(i * t_len + t)] = step_logits[static_cast<size_t>(i)];
  }
  return logits;
}

// Ring-buffered per-layer activation history for autoregressive generation.
// Capacity per layer is its largest dilation over the whole plan; reads
// happen before the same-slot write, so capacity == max dilation suffices.
template <typename S>
class GenerationState {
 public:
  GenerationState(const VocoderWeights<S>& w, const DilationPlan& plan)
      : weights_(w), plan_(plan) {
    caps_.resize(w.blocks.size());
    rings_.resize(w.blocks.size());
    for (size_t bi = 0; bi < w.blocks.size(); ++bi) {
      const BlockWeights<S>& b = w.blocks[bi];
      int64_t cap = b.adaptive ? plan.max_adaptive_dilation(b.plan_idx)
                               : plan.fixed_dilations[b.plan_idx];
      caps_[bi] = cap;
      rings_[bi].assign(static_cast<size_t>(cap * w.c), S(0));
    }
    sb_.resize(w.c, w.s, w.h);
    xprev_.resize(static_cast<size_t>(w.c));
  }

  void step(const std::vector<uint8_t>& codes, int64_t t, const S* aux_col, S* logits) {
    auto fetch = [this](size_t bi, int64_t src, S* dst) {
      const S* row = &rings_[bi][static_cast<size_t>((src % caps_[bi]) * weights_.c)];
      std::copy(row, row + weights_.c, dst);
    };
    auto store = [this](size_t bi, int64_t t_now, const S* x) {
      S* row = &rings_[bi][static_cast<size_t>((t_now % caps_[bi]) * weights_.c)];
      std::copy(x, x + weights_.c, row);
    };
    sample_step(weights_, plan_, codes, t, aux_col, fetch, store, sb_, xprev_, logits);
  }

 private:
  const VocoderWeights<S>& weights_;
  const DilationPlan& plan_;
  std::vector<int64_t> caps_;
  std::vector<std::vector<S>> rings_;
  StepBuffers<S> sb_;
  std::vector<S> xprev_;
};

template <typename S>
GenerateResult generate_impl(const VocoderParams& params, const Tensor& aux,
                             const DilationPlan& plan, int rate, uint64_t seed,
                             double temperature, std::vector<double>* logits_out) {
  const int64_t t_len = aux.cols();
  VocoderWeights<S> w = snapshot_weights<S>(params);
  GenerationState<S> state(w, plan);
  std::mt19937_64 rng(seed);

  std::vector<uint8_t> codes;
  codes.reserve(static_cast<size_t>(t_len));
  std::vector<S> aux_col(static_cast<size_t>(w.a));
  std::vector<S> logits(static_cast<size_t>(w.q));
  std::vector<double> probs(static_cast<size_t>(w.q));
  if (logits_out) logits_out->assign(static_cast<size_t>(w.q * t_len), 0.0);

  for (int64_t t = 0; t < t_len; ++t) {
    for (int64_t i = 0; i < w.a; ++i)
      aux_col[static_cast<size_t>(i)] = static_cast<S>(aux.data[static_cast<size_t>(i * t_len + t)]);
    state.step(codes, t, aux_col.data(), logits.data());
    if (logits_out)
      for (int64_t i = 0; i < w.q; ++i)
        (*logits_out)[static_cast<size_t>(i * t_len + t)] = static_cast<double>(logits[static_cast<size_t>(i)]);

    int pick = 0;
    if (temperature <= 0.0) {
      for (int64_t i = 1; i < w.q; ++i)
        if (logits[static_cast<size_t>(i)] > logits[static_cast<size_t>(pick)])
          pick = static_cast<int>(i);
    } else {
      double mx = logits[0];
      for (int64_t i = 1; i < w.q; ++i)
        mx = std::max(mx, static_cast<double>(logits[static_cast<size_t>(i)]));
      double z = 0.0;
      for (int64_t i = 0; i < w.q; ++i) {
        probs[static_cast<size_t>(i)] =
            std::exp((static_cast<double>(logits[static_cast<size_t>(i)]) - mx) / temperature);
        z += probs[static_cast<size_t>(i)];
      }
      const double u = ((rng() >> 11) * 0x1.0p-53) * z;
      double acc = 0.0;
      pick = static_cast<int>(w.q) - 1;
      for (int64_t i = 0; i < w.q; ++i) {
        acc += probs[static_cast<size_t>(i)];
        if (u < acc) {
          pick = static_cast<int>(i);
          break;
        }
      }
    }
    codes.push_back(static_cast<uint8_t>(pick));
  }

  GenerateResult out;
  out.codes.codes = std::move(codes);
  out.wave = mulaw_decode(out.codes, rate);
  return out;
}

}  // namespace

Tensor teacher_forced_forward(const VocoderParams& params, const std::vector<uint8_t>& codes,
                              const Tensor& aux, const DilationPlan& plan) {
  const int64_t t_len = static_cast<int64_t>(codes.size());
  require(t_len > 0, "teacher_forced_forward: empty code sequence");
  require(aux.rows() == params.aux_dim && aux.cols() == t_len,
          "teacher_forced_forward: aux shape must be [aux_dim x T]");
  validate_plan(params, plan, t_len);
  VocoderWeights<double> w = snapshot_weights<double>(params);
  std::vector<double> flat = plain_forward(w, plan, codes, aux);
  Tensor out({w.q, t_len});
  out.data = std::move(flat);
  return out;
}

std::vector<float> teacher_forced_forward_single(const VocoderParams& params,
                                                 const std::vector<uint8_t>& codes,
                                                 const Tensor& aux,
                                                 const DilationPlan& plan) {
  const int64_t t_len = static_cast<int64_t>(codes.size());
  require(t_len > 0, "teacher_forced_forward: empty code sequence");
  require(aux.rows() == params.aux_dim && aux.cols() == t_len,
          "teacher_forced_forward: aux shape must be [aux_dim x T]");
  validate_plan(params, plan, t_len);
  VocoderWeights<float> w = snapshot_weights<float>(params);
  return plain_forward(w, plan, codes, aux);
}

double batch_cross_entropy(const VocoderParams& params,
                           const std::vector<TrainWindow>& windows) {
  require(!windows.empty(), "batch_cross_entropy: empty window set");
  double total = 0.0;
  int64_t count = 0;
  for (const TrainWindow& w : windows) {
    Tensor logits = teacher_forced_forward(params, w.codes, w.aux, w.plan);
    const int64_t q = logits.rows(), t_len = logits.cols();
    for (int64_t t = 0; t < t_len; ++t) {
      double mx = logits.data[static_cast<size_t>(t)];
      for (int64_t i = 1; i < q; ++i)
        mx = std::max(mx, logits.data[static_cast<size_t>(i * t_len + t)]);
      double z = 0.0;
      for (int64_t i = 0; i < q; ++i)
        z += std::exp(logits.data[static_cast<size_t>(i * t_len + t)] - mx);
      const double l = logits.data[static_cast<size_t>(w.codes[t] * t_len + t)];
      total += -(l - mx - std::log(z));
    }
    count += t_len;
  }
  return total / static_cast<double>(count);
}

GenerateResult generate(const VocoderParams& params, const Tensor& aux,
                        const DilationPlan& plan, int rate, uint64_t seed,
                        double temperature, Precision precision,
                        std::vector<double>* logits_out) {
  require(aux.rows() == params.aux_dim, "generate: aux shape must be [aux_dim x T]");
  require(aux.cols() > 0, "generate: empty aux matrix");
  validate_plan(params, plan, aux.cols());
  if (precision == Precision::kSingle)
    return generate_impl<float>(params, aux, plan, rate, seed, temperature, logits_out);
  return generate_impl<double>(params, aux, plan, rate, seed, temperature, logits_out);
}

Tensor aux_channels(const Tensor& rows) {
  const int64_t t_len = rows.rows(), a = rows.cols();
  Tensor out({a, t_len});
  for (int64_t t = 0; t < t_len; ++t)
    for (int64_t i = 0; i < a; ++i)
      out.data[static_cast<size_t>(i * t_len + t)] = rows.data[static_cast<size_t>(t * a + i)];
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_vocoder(const std::string& path, const VocoderParams& params) {
  Checkpoint ckpt;
  ckpt.kind = CheckpointKind::kVocoder;
  const ArchitectureSpec& s = params.spec;
  ckpt.descriptor = {static_cast<uint32_t>(s.fixed_layers),
                     static_cast<uint32_t>(s.fixed_repeats),
                     static_cast<uint32_t>(s.adaptive_layers),
                     static_cast<uint32_t>(s.adaptive_repeats),
                     static_cast<uint32_t>(s.residual_channels),
                     static_cast<uint32_t>(s.skip_channels),
                     static_cast<uint32_t>(s.head_channels),
                     static_cast<uint32_t>(s.quant_levels),
                     static_cast<uint32_t>(s.a),
                     s.adaptive_first ? 1u : 0u,
                     static_cast<uint32_t>(params.aux_dim)};
  auto* self = const_cast<VocoderParams*>(&params);
  for (Parameter* p : self->parameters()) ckpt.blobs.emplace_back(p->name, p->value);
  write_checkpoint(path, ckpt);
}

VocoderParams load_vocoder(const std::string& path) {
  Checkpoint ckpt = read_checkpoint(path);
  require(ckpt.kind == CheckpointKind::kVocoder,
          "load_vocoder: not a vocoder checkpoint: " + path);
  require(ckpt.descriptor.size() == 11, "load_vocoder: bad descriptor in " + path);
  ArchitectureSpec s;
  s.fixed_layers = static_cast<int>(ckpt.descriptor[0]);
  s.fixed_repeats = static_cast<int>(ckpt.descriptor[1]);
  s.adaptive_layers = static_cast<int>(ckpt.descriptor[2]);
  s.adaptive_repeats = static_cast<int>(ckpt.descriptor[3]);
  s.residual_channels = static_cast<int>(ckpt.descriptor[4]);
  s.skip_channels = static_cast<int>(ckpt.descriptor[5]);
  s.head_channels = static_cast<int>(ckpt.descriptor[6]);
  s.quant_levels = static_cast<int>(ckpt.descriptor[7]);
  s.a = static_cast<int>(ckpt.descriptor[8]);
  s.adaptive_first = ckpt.descriptor[9] != 0;
  const int aux_dim = static_cast<int>(ckpt.descriptor[10]);

  VocoderParams params = build_vocoder(s, aux_dim, 0);
  for (Parameter* p : params.parameters()) {
    const Tensor& t = ckpt.blob(p->name);
    require(t.shape == p->value.shape, "load_vocoder: shape mismatch for " + p->name);
    p->value = t;
    p->grad = Tensor::zeros(t.shape);
  }
  return params;
}

}  // namespace qpnet
