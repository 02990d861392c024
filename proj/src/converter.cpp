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

#include "qpnet/converter.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "qpnet/checkpoint.h"

namespace qpnet {

namespace {

constexpr double kSigmaFloor = 1e-6;
constexpr double kStdFloor = 1e-6;

Tensor init_weight(std::vector<int64_t> shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols()));
  for (double& v : t.data) v = bound * (2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0);
  return t;
}

// rows (N x K) -> column-major-free Tensor [K x N] for the 1x1 stack
Tensor rows_to_channels(const std::vector<std::vector<double>>& rows) {
  const int64_t n = static_cast<int64_t>(rows.size());
  const int64_t k = static_cast<int64_t>(rows[0].size());
  Tensor out({k, n});
  for (int64_t t = 0; t < n; ++t)
    for (int64_t i = 0; i < k; ++i)
      out.data[static_cast<size_t>(i * n + t)] = rows[static_cast<size_t>(t)][static_cast<size_t>(i)];
  return out;
}

void mean_std(const std::vector<std::vector<double>>& rows, std::vector<double>& mean,
              std::vector<double>& var) {
  const size_t n = rows.size(), k = rows[0].size();
  mean.assign(k, 0.0);
  var.assign(k, 0.0);
  for (const auto& r : rows)
    for (size_t i = 0; i < k; ++i) mean[i] += r[i];
  for (size_t i = 0; i < k; ++i) mean[i] /= static_cast<double>(n);
  for (const auto& r : rows)
    for (size_t i = 0; i < k; ++i) {
      const double d = r[i] - mean[i];
      var[i] += d * d;
    }
  for (size_t i = 0; i < k; ++i) var[i] /= static_cast<double>(n);
}

}  // namespace

std::vector<Parameter*> ConversionModel::parameters() {
  std::vector<Parameter*> out;
  out.reserve(dnn.size());
  for (Parameter& p : dnn) out.push_back(&p);
  return out;
}

std::vector<std::vector<double>> append_deltas(
    const std::vector<std::vector<double>>& statics) {
  const int64_t n = static_cast<int64_t>(statics.size());
  require(n >= 1, "append_deltas: empty input");
  const size_t m = statics[0].size();
  std::vector<std::vector<double>> out(static_cast<size_t>(n), std::vector<double>(2 * m));
  for (int64_t t = 0; t < n; ++t) {
    const auto& prev = statics[static_cast<size_t>(std::max<int64_t>(t - 1, 0))];
    const auto& next = statics[static_cast<size_t>(std::min<int64_t>(t + 1, n - 1))];
    auto& row = out[static_cast<size_t>(t)];
    for (size_t i = 0; i < m; ++i) {
      row[i] = statics[static_cast<size_t>(t)][i];
      row[m + i] = 0.5 * (next[i] - prev[i]);
    }
  }
  return out;
}

ConverterTraining train_converter_aligned(
    const std::vector<std::vector<double>>& source_sd,
    const std::vector<std::vector<double>>& target_sd, int mcep_order,
    const ConverterConfig& cfg) {
  require(!source_sd.empty() && source_sd.size() == target_sd.size(),
          "train_converter: aligned frame counts required");
  const int64_t dim = static_cast<int64_t>(source_sd[0].size());
  require(dim == 2 * mcep_order, "train_converter: expected 2M-dimensional rows");

  ConversionModel model;
  model.mcep_order = mcep_order;
  std::vector<double> in_var, out_var;
  mean_std(source_sd, model.in_mean, in_var);
  mean_std(target_sd, model.out_mean, out_var);
  model.in_std.resize(in_var.size());
  for (size_t i = 0; i < in_var.size(); ++i)
    model.in_std[i] = std::max(std::sqrt(in_var[i]), kStdFloor);
  model.sigma.resize(out_var.size());
  for (size_t i = 0; i < out_var.size(); ++i)
    model.sigma[i] = std::max(out_var[i], kSigmaFloor);

  std::mt19937_64 rng(cfg.seed);
  std::vector<int64_t> widths;
  widths.push_back(dim);
  for (int l = 0; l < cfg.hidden_layers; ++l) widths.push_back(cfg.hidden_units);
  widths.push_back(dim);
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    model.dnn.emplace_back("dnn." + std::to_string(l) + ".w",
                           init_weight({widths[l + 1], widths[l]}, rng));
    model.dnn.emplace_back("dnn." + std::to_string(l) + ".b",
                           Tensor::zeros({widths[l + 1]}));
  }

  // Normalized design matrices. Unit weights here equal Sigma^-1 weights on
  // the raw residual because out_std = sqrt(sigma).
  const int64_t n = static_cast<int64_t>(source_sd.size());
  Tensor x = rows_to_channels(source_sd);
  Tensor y = rows_to_channels(target_sd);
  for (int64_t i = 0; i < dim; ++i) {
    const double im = model.in_mean[static_cast<size_t>(i)];
    const double is = model.in_std[static_cast<size_t>(i)];
    const double om = model.out_mean[static_cast<size_t>(i)];
    const double os = std::sqrt(model.sigma[static_cast<size_t>(i)]);
    for (int64_t t = 0; t < n; ++t) {
      x.data[static_cast<size_t>(i * n + t)] = (x.data[static_cast<size_t>(i * n + t)] - im) / is;
      y.data[static_cast<size_t>(i * n + t)] = (y.data[static_cast<size_t>(i * n + t)] - om) / os;
    }
  }
  const std::vector<double> unit(static_cast<size_t>(dim), 1.0);

  ConverterTraining out;
  std::vector<Parameter*> ps;
  for (Parameter& p : model.dnn) ps.push_back(&p);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Parameter* p : ps) p->zero_grad();
    Tape tape;
    Tape::Ref h = tape.input(x);
    for (size_t l = 0; l < model.dnn.size(); l += 2) {
      h = tape.conv1x1(h, tape.param(model.dnn[l]), tape.param(model.dnn[l + 1]));
      if (l + 2 < model.dnn.size()) h = tape.tanh_act(h);
    }
    Tape::Ref loss = tape.weighted_mse(h, y, unit);
    tape.backward(loss);
    out.loss_curve.push_back(tape.scalar(loss));
    sgd_step(ps, cfg.lr);
  }
  out.model = std::move(model);
  return out;
}

ConverterTraining train_converter(const std::vector<FrameFeatures>& source,
                                  const std::vector<FrameFeatures>& target,
                                  const ConverterConfig& cfg) {
  require(!source.empty() && source.size() == target.size(),
          "train_converter: parallel utterance lists required");
  const int m = source[0].mcep_dim();

  std::vector<std::vector<double>> src_sd, tgt_sd;
  std::vector<double> gv_sum(static_cast<size_t>(m), 0.0);
  std::vector<double> src_logf0, tgt_logf0;
  for (size_t u = 0; u < source.size(); ++u) {
    const FrameFeatures& s = source[u];
    const FrameFeatures& t = target[u];
    const int64_t nf = std::min(s.frames(), t.frames());
    require(nf >= 1, "train_converter: empty utterance");

    std::vector<std::vector<double>> ss(s.mcep.begin(), s.mcep.begin() + nf);
    std::vector<std::vector<double>> ts(t.mcep.begin(), t.mcep.begin() + nf);
    auto s_sd = append_deltas(ss);
    auto t_sd = append_deltas(ts);
    src_sd.insert(src_sd.end(), s_sd.begin(), s_sd.end());
    tgt_sd.insert(tgt_sd.end(), t_sd.begin(), t_sd.end());

    // per-utterance target static variance for the GV statistics
    std::vector<double> mean, var;
    mean_std(ts, mean, var);
    for (int d = 0; d < m; ++d) gv_sum[static_cast<size_t>(d)] += var[static_cast<size_t>(d)];

    for (int64_t f = 0; f < nf; ++f) {
      if (s.uv[static_cast<size_t>(f)]) src_logf0.push_back(std::log(s.continuous_f0[static_cast<size_t>(f)]));
      if (t.uv[static_cast<size_t>(f)]) tgt_logf0.push_back(std::log(t.continuous_f0[static_cast<size_t>(f)]));
    }
  }

  ConverterTraining out = train_converter_aligned(src_sd, tgt_sd, m, cfg);
  out.model.gv_target.resize(static_cast<size_t>(m));
  for (int d = 0; d < m; ++d) {
    double gv = gv_sum[static_cast<size_t>(d)] / static_cast<double>(source.size());
    out.model.gv_target[static_cast<size_t>(d)] = std::max(gv, kSigmaFloor);
  }

  auto stats_of = [](const std::vector<double>& v, double& mean, double& sd) {
    require(!v.empty(), "train_converter: no voiced frames for F0 statistics");
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(v.size()));
  };
  stats_of(src_logf0, out.model.logf0.mean_src, out.model.logf0.std_src);
  stats_of(tgt_logf0, out.model.logf0.mean_tgt, out.model.logf0.std_tgt);
  return out;
}

std::vector<std::vector<double>> convert(const ConversionModel& model,
                                         const std::vector<std::vector<double>>& source_sd) {
  require(!source_sd.empty(), "convert: empty input");
  const size_t dim = static_cast<size_t>(2 * model.mcep_order);
  require(source_sd[0].size() == dim, "convert: dimension mismatch");

  const size_t n_layers = model.dnn.size() / 2;
  std::vector<std::vector<double>> out;
  out.reserve(source_sd.size());
  std::vector<double> h, nxt;
  for (const auto& row : source_sd) {
    h.resize(dim);
    for (size_t i = 0; i < dim; ++i) h[i] = (row[i] - model.in_mean[i]) / model.in_std[i];
    for (size_t l = 0; l < n_layers; ++l) {
      const Tensor& w = model.dnn[2 * l].value;
      const Tensor& b = model.dnn[2 * l + 1].value;
      nxt.assign(static_cast<size_t>(w.rows()), 0.0);
      for (int64_t i = 0; i < w.rows(); ++i) {
        double acc = b.data[static_cast<size_t>(i)];
        for (int64_t j = 0; j < w.cols(); ++j)
          acc += w.data[static_cast<size_t>(i * w.cols() + j)] * h[static_cast<size_t>(j)];
        nxt[static_cast<size_t>(i)] = l + 1 < n_layers ? std::tanh(acc) : acc;
      }
      h = nxt;
    }
    std::vector<double> raw(dim);
    for (size_t i = 0; i < dim; ++i)
      raw[i] = model.out_mean[i] + std::sqrt(model.sigma[i]) * h[i];
    out.push_back(std::move(raw));
  }
  return out;
}

std::vector<std::vector<double>> mlpg(const std::vector<std::vector<double>>& means_sd,
                                      const std::vector<double>& sigma) {
  const int64_t t_len = static_cast<int64_t>(means_sd.size());
  require(t_len >= 1, "mlpg: need at least one frame");
  const int64_t m = static_cast<int64_t>(means_sd[0].size()) / 2;
  require(static_cast<int64_t>(sigma.size()) == 2 * m, "mlpg: sigma length mismatch");
  for (double s : sigma) require(s > 0.0, "mlpg: sigma entries must be positive");

  // Delta window rows with boundary replication: row 0 is (c1-c0)/2, interior
  // rows (c[n+1]-c[n-1])/2, last row (c[T-1]-c[T-2])/2. For T == 1 the delta
  // row is zero and the system reduces to the static observation.
  std::vector<std::vector<double>> traj(static_cast<size_t>(t_len),
                                        std::vector<double>(static_cast<size_t>(m)));
  std::vector<double> diag(static_cast<size_t>(t_len));
  std::vector<double> off1(static_cast<size_t>(t_len));  // band +1: A[i, i+1]
  std::vector<double> off2(static_cast<size_t>(t_len));  // band +2: A[i, i+2]
  std::vector<double> rhs(static_cast<size_t>(t_len));
  std::vector<double> ld(static_cast<size_t>(t_len)), l1(static_cast<size_t>(t_len)),
      l2(static_cast<size_t>(t_len)), y(static_cast<size_t>(t_len));

  for (int64_t d = 0; d < m; ++d) {
    const double ws = 1.0 / sigma[static_cast<size_t>(d)];
    const double wd = 1.0 / sigma[static_cast<size_t>(m + d)];
    std::fill(diag.begin(), diag.end(), 0.0);
    std::fill(off1.begin(), off1.end(), 0.0);
    std::fill(off2.begin(), off2.end(), 0.0);
    std::fill(rhs.begin(), rhs.end(), 0.0);

    for (int64_t t = 0; t < t_len; ++t) {
      diag[static_cast<size_t>(t)] += ws;
      rhs[static_cast<size_t>(t)] += ws * means_sd[static_cast<size_t>(t)][static_cast<size_t>(d)];
    }
    for (int64_t t = 0; t < t_len; ++t) {
      // delta row t touches columns lo and hi with coefficients -+0.5
      const int64_t lo = std::max<int64_t>(t - 1, 0);
      const int64_t hi = std::min<int64_t>(t + 1, t_len - 1);
      if (lo == hi) continue;  // T == 1: zero row
      const double mu = means_sd[static_cast<size_t>(t)][static_cast<size_t>(m + d)];
      diag[static_cast<size_t>(lo)] += 0.25 * wd;
      diag[static_cast<size_t>(hi)] += 0.25 * wd;
      if (hi - lo == 1)
        off1[static_cast<size_t>(lo)] -= 0.25 * wd;
      else
        off2[static_cast<size_t>(lo)] -= 0.25 * wd;
      rhs[static_cast<size_t>(lo)] -= 0.5 * wd * mu;
      rhs[static_cast<size_t>(hi)] += 0.5 * wd * mu;
    }

    // banded Cholesky, bandwidth 2
    for (int64_t i = 0; i < t_len; ++i) {
      double s = diag[static_cast<size_t>(i)];
      if (i >= 1) s -= l1[static_cast<size_t>(i - 1)] * l1[static_cast<size_t>(i - 1)];
      if (i >= 2) s -= l2[static_cast<size_t>(i - 2)] * l2[static_cast<size_t>(i - 2)];
      require(s > 0.0, "mlpg: system not positive definite");
      ld[static_cast<size_t>(i)] = std::sqrt(s);
      if (i + 1 < t_len) {
        double v = off1[static_cast<size_t>(i)];
        if (i >= 1) v -= l1[static_cast<size_t>(i - 1)] * l2[static_cast<size_t>(i - 1)];
        l1[static_cast<size_t>(i)] = v / ld[static_cast<size_t>(i)];
      }
      if (i + 2 < t_len) l2[static_cast<size_t>(i)] = off2[static_cast<size_t>(i)] / ld[static_cast<size_t>(i)];
    }
    for (int64_t i = 0; i < t_len; ++i) {
      double v = rhs[static_cast<size_t>(i)];
      if (i >= 1) v -= l1[static_cast<size_t>(i - 1)] * y[static_cast<size_t>(i - 1)];
      if (i >= 2) v -= l2[static_cast<size_t>(i - 2)] * y[static_cast<size_t>(i - 2)];
      y[static_cast<size_t>(i)] = v / ld[static_cast<size_t>(i)];
    }
    for (int64_t i = t_len - 1; i >= 0; --i) {
      double v = y[static_cast<size_t>(i)];
      if (i + 1 < t_len) v -= l1[static_cast<size_t>(i)] * traj[static_cast<size_t>(i + 1)][static_cast<size_t>(d)];
      if (i + 2 < t_len) v -= l2[static_cast<size_t>(i)] * traj[static_cast<size_t>(i + 2)][static_cast<size_t>(d)];
      traj[static_cast<size_t>(i)][static_cast<size_t>(d)] = v / ld[static_cast<size_t>(i)];
    }
  }
  return traj;
}

std::vector<std::vector<double>> gv_postfilter(const std::vector<std::vector<double>>& traj,
                                               const std::vector<double>& gv_target) {
  const int64_t t_len = static_cast<int64_t>(traj.size());
  require(t_len >= 2, "gv_postfilter: need at least two frames");
  const size_t m = traj[0].size();
  require(gv_target.size() == m, "gv_postfilter: dimension mismatch");
  for (double g : gv_target) require(g > 0.0, "gv_postfilter: target variances must be positive");

  std::vector<std::vector<double>> out = traj;
  for (size_t d = 1; d < m; ++d) {
    double mean = 0.0;
    for (int64_t t = 0; t < t_len; ++t) mean += traj[static_cast<size_t>(t)][d];
    mean /= static_cast<double>(t_len);
    double var = 0.0;
    for (int64_t t = 0; t < t_len; ++t) {
      const double dv = traj[static_cast<size_t>(t)][d] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(t_len);
    // flat trajectories pass through; the threshold absorbs summation dust
    if (var <= 1e-14 * (1.0 + mean * mean)) continue;
    const double g = std::sqrt(gv_target[d] / var);
    for (int64_t t = 0; t < t_len; ++t)
      out[static_cast<size_t>(t)][d] = g * (traj[static_cast<size_t>(t)][d] - mean) + mean;
  }
  return out;
}

std::vector<double> transform_logf0(const std::vector<double>& f0, const LogF0Stats& stats) {
  require(stats.std_src > 0.0, "transform_logf0: source std must be positive");
  std::vector<double> out(f0.size(), 0.0);
  for (size_t i = 0; i < f0.size(); ++i) {
    if (f0[i] <= 0.0) continue;  // unvoiced stays unvoiced
    const double z = (std::log(f0[i]) - stats.mean_src) / stats.std_src;
    out[i] = std::exp(stats.mean_tgt + stats.std_tgt * z);
  }
  return out;
}

FrameFeatures convert_features(const ConversionModel& model, const FrameFeatures& src) {
  require(src.mcep_dim() == model.mcep_order, "convert_features: mcep order mismatch");
  FrameFeatures out;
  out.hop = src.hop;
  out.uv = src.uv;
  out.coded_ap = src.coded_ap;  // source ap adopted directly
  out.continuous_f0 = transform_logf0(src.continuous_f0, model.logf0);

  auto sd = append_deltas(src.mcep);
  auto means = convert(model, sd);
  auto traj = mlpg(means, model.sigma);
  out.mcep = traj.size() >= 2 ? gv_postfilter(traj, model.gv_target) : traj;
  return out;
}

void save_converter(const std::string& path, const ConversionModel& model) {
  Checkpoint ckpt;
  ckpt.kind = CheckpointKind::kConverter;
  const uint32_t n_layers = static_cast<uint32_t>(model.dnn.size() / 2);
  const uint32_t hidden = n_layers >= 2
                              ? static_cast<uint32_t>(model.dnn[0].value.rows())
                              : 0;
  ckpt.descriptor = {static_cast<uint32_t>(model.mcep_order), n_layers, hidden};
  for (const Parameter& p : model.dnn) ckpt.blobs.emplace_back(p.name, p.value);

  auto vec_blob = [&](const std::string& name, const std::vector<double>& v) {
    ckpt.blobs.emplace_back(name, Tensor({static_cast<int64_t>(v.size())}, v));
  };
  vec_blob("stats.in_mean", model.in_mean);
  vec_blob("stats.in_std", model.in_std);
  vec_blob("stats.out_mean", model.out_mean);
  vec_blob("stats.sigma", model.sigma);
  vec_blob("stats.gv", model.gv_target);
  vec_blob("stats.logf0", {model.logf0.mean_src, model.logf0.std_src,
                           model.logf0.mean_tgt, model.logf0.std_tgt});
  write_checkpoint(path, ckpt);
}

ConversionModel load_converter(const std::string& path) {
  Checkpoint ckpt = read_checkpoint(path);
  require(ckpt.kind == CheckpointKind::kConverter,
          "load_converter: not a converter checkpoint: " + path);
  require(ckpt.descriptor.size() == 3, "load_converter: bad descriptor in " + path);

  ConversionModel model;
  model.mcep_order = static_cast<int>(ckpt.descriptor[0]);
  const uint32_t n_layers = ckpt.descriptor[1];
  for (uint32_t l = 0; l < n_layers; ++l) {
    const std::string base = "dnn." + std::to_string(l);
    model.dnn.emplace_back(base + ".w", ckpt.blob(base + ".w"));
    model.dnn.emplace_back(base + ".b", ckpt.blob(base + ".b"));
  }
  model.in_mean = ckpt.blob("stats.in_mean").data;
  model.in_std = ckpt.blob("stats.in_std").data;
  model.out_mean = ckpt.blob("stats.out_mean").data;
  model.sigma = ckpt.blob("stats.sigma").data;
  model.gv_target = ckpt.blob("stats.gv").data;
  const auto& lf = ckpt.blob("stats.logf0").data;
  require(lf.size() == 4, "load_converter: bad logf0 stats in " + path);
  model.logf0 = {lf[0], lf[1], lf[2], lf[3]};
  return model;
}

}  // namespace qpnet
