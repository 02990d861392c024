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

#include "qpnet/autograd.h"

#include <Eigen/Dense>

#include <cmath>

namespace qpnet {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const Mat>;
using MMap = Eigen::Map<Mat>;

CMap map2(const Tensor& t) { return CMap(t.data.data(), t.rows(), t.cols()); }
MMap map2(Tensor& t) { return MMap(t.data.data(), t.rows(), t.cols()); }

// Gathered copy G[:,t] = X[:,t-d[t]], zero when t-d[t] < 0.
Tensor gather_previous(const Tensor& x, const std::vector<int64_t>& d) {
  const int64_t c = x.rows(), t_len = x.cols();
  Tensor g(x.shape);
  for (int64_t t = 0; t < t_len; ++t) {
    const int64_t src = t - d[static_cast<size_t>(t)];
    if (src < 0) continue;
    for (int64_t i = 0; i < c; ++i) g.data[i * t_len + t] = x.data[i * t_len + src];
  }
  return g;
}

}  // namespace

Tape::Ref Tape::push(Tensor value, bool needs_grad, std::function<void()> back,
                     Parameter* bound) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  n.bound = bound;
  nodes_.push_back(std::move(n));
  return static_cast<Ref>(nodes_.size() - 1);
}

Tensor& Tape::grad_of(Ref r) {
  Node& n = nodes_[static_cast<size_t>(r)];
  if (!n.grad_alloc) {
    n.grad = Tensor::zeros(n.value.shape);
    n.grad_alloc = true;
  }
  return n.grad;
}

Tape::Ref Tape::input(Tensor v) { return push(std::move(v), false); }

Tape::Ref Tape::param(Parameter& p) { return push(p.value, true, nullptr, &p); }

Tape::Ref Tape::conv1x1(Ref x, Ref w, Ref b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  require(wv.cols() == xv.rows(), "conv1x1: weight/input channel mismatch");
  require(bv.numel() == wv.rows(), "conv1x1: bias/weight channel mismatch");

  Tensor out({wv.rows(), xv.cols()});
  map2(out).noalias() = map2(wv) * map2(xv);
  for (int64_t i = 0; i < out.rows(); ++i) {
    double* row = &out.data[static_cast<size_t>(i * out.cols())];
    for (int64_t t = 0; t < out.cols(); ++t) row[t] += bv.data[static_cast<size_t>(i)];
  }

  const bool ng = needs(x) || needs(w) || needs(b);
  Ref r = push(std::move(out), ng);
  if (ng) {
    nodes_.back().back = [this, r, x, w, b]() {
      const Tensor& dy = grad_of(r);
      if (needs(w)) map2(grad_of(w)).noalias() += map2(dy) * map2(value(x)).transpose();
      if (needs(b)) {
        Tensor& db = grad_of(b);
        for (int64_t i = 0; i < dy.rows(); ++i) {
          double acc = 0.0;
          const double* row = &dy.data[static_cast<size_t>(i * dy.cols())];
          for (int64_t t = 0; t < dy.cols(); ++t) acc += row[t];
          db.data[static_cast<size_t>(i)] += acc;
        }
      }
      if (needs(x)) map2(grad_of(x)).noalias() += map2(value(w)).transpose() * map2(dy);
    };
  }
  return r;
}

Tape::Ref Tape::dilated_tap(Ref x, const std::vector<int64_t>& dilation, Ref wc, Ref wp) {
  const Tensor& xv = value(x);
  const Tensor& wcv = value(wc);
  const Tensor& wpv = value(wp);
  require(static_cast<int64_t>(dilation.size()) == xv.cols(),
          "dilated_tap: dilation length must match timesteps");
  for (int64_t d : dilation) require(d >= 1, "dilated_tap: dilation must be >= 1");
  require(wcv.cols() == xv.rows() && wpv.cols() == xv.rows() && wcv.rows() == wpv.rows(),
          "dilated_tap: weight shape mismatch");

  Tensor g = gather_previous(xv, dilation);
  Tensor out({wcv.rows(), xv.cols()});
  map2(out).noalias() = map2(wcv) * map2(xv);
  map2(out).noalias() += map2(wpv) * map2(g);

  const bool ng = needs(x) || needs(wc) || needs(wp);
  Ref r = push(std::move(out), ng);
  if (ng) {
    std::vector<int64_t> d = dilation;
    nodes_.back().back = [this, r, x, wc, wp, d = std::move(d)]() {
      const Tensor& dy = grad_of(r);
      const Tensor& xv = value(x);
      if (needs(wc)) map2(grad_of(wc)).noalias() += map2(dy) * map2(xv).transpose();
      if (needs(wp)) {
        Tensor g = gather_previous(xv, d);
        map2(grad_of(wp)).noalias() += map2(dy) * map2(g).transpose();
      }
      if (needs(x)) {
        Tensor& dx = grad_of(x);
        map2(dx).noalias() += map2(value(wc)).transpose() * map2(dy);
        // scatter-add the previous-tap path: column t lands on t - d[t]
        Tensor p({xv.rows(), xv.cols()});
        map2(p).noalias() = map2(value(wp)).transpose() * map2(dy);
        const int64_t c = xv.rows(), t_len = xv.cols();
        for (int64_t t = 0; t < t_len; ++t) {
          const int64_t dst = t - d[static_cast<size_t>(t)];
          if (dst < 0) continue;
          for (int64_t i = 0; i < c; ++i)
            dx.data[i * t_len + dst] += p.data[i * t_len + t];
        }
      }
    };
  }
  return r;
}

Tape::Ref Tape::causal_entry(const std::vector<uint8_t>& codes, Ref w0, Ref w1, Ref b) {
  const Tensor& w0v = value(w0);
  const Tensor& w1v = value(w1);
  const Tensor& bv = value(b);
  require(w0v.same_shape(w1v), "causal_entry: tap weights must share shape");
  require(bv.numel() == w0v.rows(), "causal_entry: bias channel mismatch");
  const int64_t c = w0v.rows(), q = w0v.cols();
  const int64_t t_len = static_cast<int64_t>(codes.size());
  for (uint8_t code : codes)
    require(code < q, "causal_entry: code outside quantizer range");

  Tensor out({c, t_len});
  for (int64_t t = 0; t < t_len; ++t) {
    for (int64_t i = 0; i < c; ++i) {
      double v = bv.data[static_cast<size_t>(i)];
      if (t >= 1) v += w0v.data[i * q + codes[static_cast<size_t>(t - 1)]];
      if (t >= 2) v += w1v.data[i * q + codes[static_cast<size_t>(t - 2)]];
      out.data[i * t_len + t] = v;
    }
  }

  const bool ng = needs(w0) || needs(w1) || needs(b);
  Ref r = push(std::move(out), ng);
  if (ng) {
    std::vector<uint8_t> cs = codes;
    nodes_.back().back = [this, r, w0, w1, b, cs = std::move(cs), c, q, t_len]() {
      const Tensor& dy = grad_of(r);
      if (needs(b)) {
        Tensor& db = grad_of(b);
        for (int64_t i = 0; i < c; ++i) {
          double acc = 0.0;
          for (int64_t t = 0; t < t_len; ++t) acc += dy.data[i * t_len + t];
          db.data[static_cast<size_t>(i)] += acc;
        }
      }
      if (needs(w0)) {
        Tensor& dw = grad_of(w0);
        for (int64_t t = 1; t < t_len; ++t) {
          const int64_t col = cs[static_cast<size_t>(t - 1)];
          for (int64_t i = 0; i < c; ++i) dw.data[i * q + col] += dy.data[i * t_len + t];
        }
      }
      if (needs(w1)) {
        Tensor& dw = grad_of(w1);
        for (int64_t t = 2; t < t_len; ++t) {
          const int64_t col = cs[static_cast<size_t>(t - 2)];
          for (int64_t i = 0; i < c; ++i) dw.data[i * q + col] += dy.data[i * t_len + t];
        }
      }
    };
  }
  return r;
}

Tape::Ref Tape::gated(Ref xf, Ref xg, Ref hf, Ref hg) {
  const Tensor& a = value(xf);
  require(a.same_shape(value(xg)) && a.same_shape(value(hf)) && a.same_shape(value(hg)),
          "gated: all inputs must share shape");
  const int64_t n = a.numel();

  Tensor tf(a.shape), sg(a.shape), out(a.shape);
  for (int64_t i = 0; i < n; ++i) {
    tf.data[i] = std::tanh(value(xf).data[i] + value(hf).data[i]);
    sg.data[i] = 1.0 / (1.0 + std::exp(-(value(xg).data[i] + value(hg).data[i])));
    out.data[i] = tf.data[i] * sg.data[i];
  }

  const bool ng = needs(xf) || needs(xg) || needs(hf) || needs(hg);
  Ref r = push(std::move(out), ng);
  if (ng) {
    nodes_.back().back = [this, r, xf, xg, hf, hg, tf = std::move(tf),
                          sg = std::move(sg), n]() {
      const Tensor& dy = grad_of(r);
      for (int64_t i = 0; i < n; ++i) {
        const double df = dy.data[i] * sg.data[i] * (1.0 - tf.data[i] * tf.data[i]);
        const double dg = dy.data[i] * tf.data[i] * sg.data[i] * (1.0 - sg.data[i]);
        if (needs(xf)) grad_of(xf).data[i] += df;
        if (needs(hf)) grad_of(hf).data[i] += df;
        if (needs(xg)) grad_of(xg).data[i] += dg;
        if (needs(hg)) grad_of(hg).data[i] += dg;
      }
    };
  }
  return r;
}

Tape::Ref Tape::add(Ref a, Ref b) {
  const Tensor& av = value(a);
  require(av.same_shape(value(b)), "add: shape mismatch");
  Tensor out(av.shape);
  const int64_t n = av.numel();
  for (int64_t i = 0; i < n; ++i) out.data[i] = av.data[i] + value(b).data[i];

  const bool ng = needs(a) || needs(b);
  Ref r = push(std::move(out), ng);
  if (ng) {
    nodes_.back().back = [this, r, a, b, n]() {
      const Tensor& dy = grad_of(r);
      if (needs(a)) {
        Tensor& da = grad_of(a);
        for (int64_t i = 0; i < n; ++i) da.data[i] += dy.data[i];
      }
      if (needs(b)) {
        Tensor& db = grad_of(b);
        for (int64_t i = 0; i < n; ++i) db.data[i] += dy.data[i];
      }
    };
  }
  return r;
}

Tape::Ref Tape::relu(Ref x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape);
  const int64_t n = xv.numel();
  for (int64_t i = 0; i < n; ++i) out.data[i] = xv.data[i] > 0.0 ? xv.data[i] : 0.0;

  const bool ng = needs(x);
  Ref r = push(std::move(out), ng);
  if (ng) {
    nodes_.back().back = [this, r, x, n]() {
      const Tensor& dy = grad_of(r);
      Tensor& dx = grad_of(x);
      const Tensor& xv = value(x);
      for (int64_t i = 0; i < n; ++i)
        if (xv.data[i] > 0.0) dx.data[i] += dy.data[i];
    };
  }
  return r;
}

Tape::Ref Tape::tanh_act(Ref x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape);
  const int64_t n = xv.numel();
  for (int64_t i = 0; i < n; ++i) out.data[i] = std::tanh(xv.data[i]);

  const bool ng = needs(x);
  Ref r = push(std::move(out), ng);
  if (ng) {
    nodes_.back().back = [this, r, x, n]() {
      const Tensor& dy = grad_of(r);
      const Tensor& y = value(r);
      Tensor& dx = grad_of(x);
      for (int64_t i = 0; i < n; ++i) dx.data[i] += dy.data[i] * (1.0 - y.data[i] * y.data[i]);
    };
  }
  return r;
}

Tape::Ref Tape::scale(Ref x, double s) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape);
  const int64_t n = xv.numel();
  for (int64_t i = 0; i < n; ++i) out.data[i] = s * xv.data[i];

  const bool ng = needs(x);
  Ref r = push(std::move(out), ng);
  if (ng) {
    nodes_.back().back = [this, r, x, s, n]() {
      const Tensor& dy = grad_of(r);
      Tensor& dx = grad_of(x);
      for (int64_t i = 0; i < n; ++i) dx.data[i] += s * dy.data[i];
    };
  }
  return r;
}

Tape::Ref Tape::softmax_cross_entropy(Ref logits, const std::vector<uint8_t>& targets) {
  const Tensor& lv = value(logits);
  const int64_t k = lv.rows(), t_len = lv.cols();
  require(static_cast<int64_t>(targets.size()) == t_len,
          "softmax_cross_entropy: target length mismatch");
  for (uint8_t c : targets)
    require(c < k, "softmax_cross_entropy: target outside class range");

  Tensor probs(lv.shape);
  double loss = 0.0;
  for (int64_t t = 0; t < t_len; ++t) {
    double mx = lv.data[t];
    for (int64_t i = 1; i < k; ++i) mx = std::max(mx, lv.data[i * t_len + t]);
    double z = 0.0;
    for (int64_t i = 0; i < k; ++i) {
      const double e = std::exp(lv.data[i * t_len + t] - mx);
      probs.data[i * t_len + t] = e;
      z += e;
    }
    for (int64_t i = 0; i < k; ++i) probs.data[i * t_len + t] /= z;
    loss -= std::log(probs.data[targets[static_cast<size_t>(t)] * t_len + t]);
  }
  loss /= static_cast<double>(t_len);

  const bool ng = needs(logits);
  Ref r = push(Tensor({1}, {loss}), ng);
  if (ng) {
    std::vector<uint8_t> tg = targets;
    nodes_.back().back = [this, r, logits, probs = std::move(probs), tg = std::move(tg),
                          k, t_len]() {
      const double seed = grad_of(r).data[0];
      Tensor& dl = grad_of(logits);
      const double inv_t = 1.0 / static_cast<double>(t_len);
      for (int64_t t = 0; t < t_len; ++t) {
        for (int64_t i = 0; i < k; ++i) {
          double g = probs.data[i * t_len + t];
          if (i == tg[static_cast<size_t>(t)]) g -= 1.0;
          dl.data[i * t_len + t] += seed * inv_t * g;
        }
      }
    };
  }
  return r;
}

Tape::Ref Tape::weighted_mse(Ref pred, const Tensor& target,
                             const std::vector<double>& inv_var) {
  const Tensor& pv = value(pred);
  require(pv.same_shape(target), "weighted_mse: prediction/target shape mismatch");
  require(static_cast<int64_t>(inv_var.size()) == pv.rows(),
          "weighted_mse: weight length must match feature dim");
  const int64_t k = pv.rows(), t_len = pv.cols();

  double loss = 0.0;
  for (int64_t i = 0; i < k; ++i) {
    const double w = inv_var[static_cast<size_t>(i)];
    for (int64_t t = 0; t < t_len; ++t) {
      const double d = pv.data[i * t_len + t] - target.data[i * t_len + t];
      loss += w * d * d;
    }
  }
  loss *= 0.5 / static_cast<double>(t_len);

  const bool ng = needs(pred);
  Ref r = push(Tensor({1}, {loss}), ng);
  if (ng) {
    nodes_.back().back = [this, r, pred, target, inv_var, k, t_len]() {
      const double seed = grad_of(r).data[0];
      Tensor& dp = grad_of(pred);
      const Tensor& pv = value(pred);
      const double inv_t = 1.0 / static_cast<double>(t_len);
      for (int64_t i = 0; i < k; ++i) {
        const double w = inv_var[static_cast<size_t>(i)];
        for (int64_t t = 0; t < t_len; ++t) {
          const double d = pv.data[i * t_len + t] - target.data[i * t_len + t];
          dp.data[i * t_len + t] += seed * inv_t * w * d;
        }
      }
    };
  }
  return r;
}

Tape::Ref Tape::weighted_sum(Ref x, const Tensor& weights) {
  const Tensor& xv = value(x);
  require(xv.same_shape(weights), "weighted_sum: shape mismatch");
  double acc = 0.0;
  const int64_t n = xv.numel();
  for (int64_t i = 0; i < n; ++i) acc += xv.data[i] * weights.data[i];

  const bool ng = needs(x);
  Ref r = push(Tensor({1}, {acc}), ng);
  if (ng) {
    nodes_.back().back = [this, r, x, weights, n]() {
      const double seed = grad_of(r).data[0];
      Tensor& dx = grad_of(x);
      for (int64_t i = 0; i < n; ++i) dx.data[i] += seed * weights.data[i];
    };
  }
  return r;
}

double Tape::scalar(Ref r) const {
  const Tensor& v = value(r);
  require(v.numel() == 1, "scalar: node is not a scalar");
  return v.data[0];
}

void Tape::backward(Ref loss, double seed) {
  require(!nodes_.empty(), "backward: no forward computation recorded");
  require(loss >= 0 && static_cast<size_t>(loss) < nodes_.size(), "backward: bad node");
  require(!swept_, "backward: tape already swept");
  require(value(loss).numel() == 1, "backward: loss must be scalar");
  swept_ = true;

  grad_of(loss).data[0] = seed;
  for (int64_t i = static_cast<int64_t>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.back && n.grad_alloc) n.back();
  }
  for (Node& n : nodes_) {
    if (n.bound && n.grad_alloc) {
      double* dst = n.bound->grad.data.data();
      const double* src = n.grad.data.data();
      const int64_t count = n.grad.numel();
      for (int64_t i = 0; i < count; ++i) dst[i] += src[i];
    }
  }
}

void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    AdamState& st = p->adam;
    if (st.m.numel() == 0) {
      st.m = Tensor::zeros(p->value.shape);
      st.v = Tensor::zeros(p->value.shape);
    }
    st.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    const int64_t n = p->value.numel();
    for (int64_t i = 0; i < n; ++i) {
      const double g = p->grad.data[i];
      st.m.data[i] = cfg.beta1 * st.m.data[i] + (1.0 - cfg.beta1) * g;
      st.v.data[i] = cfg.beta2 * st.v.data[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = st.m.data[i] / bc1;
      const double vhat = st.v.data[i] / bc2;
      p->value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void sgd_step(const std::vector<Parameter*>& params, double lr) {
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    const int64_t n = p->value.numel();
    for (int64_t i = 0; i < n; ++i) p->value.data[i] -= lr * p->grad.data[i];
  }
}

}  // namespace qpnet
