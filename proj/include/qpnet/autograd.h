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

// Minimal reverse-mode kernel: a recorded operation tape over dense tensors,
// the handful of layers the vocoders and the spectral converter need, and an
// adaptive-moment optimizer. Double precision throughout.

#ifndef QPNET_AUTOGRAD_H_
#define QPNET_AUTOGRAD_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qpnet/tensor.h"

namespace qpnet {

struct AdamState {
  Tensor m, v;
  int64_t step = 0;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
  AdamState adam;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape)) {}

  void zero_grad() { grad.fill(0.0); }
};

// Records a forward computation; backward() replays it in reverse and
// accumulates into the bound Parameters' grad fields. One tape per forward
// pass; tapes are single-threaded.
class Tape {
 public:
  using Ref = int32_t;

  Ref input(Tensor v);            // constant leaf
  Ref param(Parameter& p);        // trainable leaf; grads flow back to p.grad

  const Tensor& value(Ref r) const { return nodes_[static_cast<size_t>(r)].value; }

  // out[:,t] = W in[:,t] + b
  Ref conv1x1(Ref x, Ref w, Ref b);
  // out[:,t] = Wc in[:,t] + Wp in[:,t-d[t]], zeros before the signal start
  Ref dilated_tap(Ref x, const std::vector<int64_t>& dilation, Ref wc, Ref wp);
  // out[:,t] = W0[:,codes[t-1]] + W1[:,codes[t-2]] + b  (one-hot convolution
  // of the previous two codes; positions without history read zeros)
  Ref causal_entry(const std::vector<uint8_t>& codes, Ref w0, Ref w1, Ref b);
  // Z = tanh(xf + hf) * sigmoid(xg + hg), elementwise
  Ref gated(Ref xf, Ref xg, Ref hf, Ref hg);
  Ref add(Ref a, Ref b);
  Ref relu(Ref x);
  Ref tanh_act(Ref x);
  Ref scale(Ref x, double s);
  // mean over t of -log softmax(logits[:,t])[target[t]]; scalar node
  Ref softmax_cross_entropy(Ref logits, const std::vector<uint8_t>& targets);
  // (0.5/T) * sum over frames and dims of inv_var[k] * (pred - target)^2
  Ref weighted_mse(Ref pred, const Tensor& target, const std::vector<double>& inv_var);
  // sum of elementwise product with fixed weights; scalar probe head used by
  // the finite-difference checker
  Ref weighted_sum(Ref x, const Tensor& weights);

  double scalar(Ref r) const;

  // Reverse-mode sweep from a scalar node. seed scales the upstream gradient
  // (used to average multi-window batches). Rejects repeated sweeps and
  // sweeps over empty tapes.
  void backward(Ref loss, double seed = 1.0);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    bool grad_alloc = false;
    Parameter* bound = nullptr;
    std::function<void()> back;
  };

  Ref push(Tensor value, bool needs_grad, std::function<void()> back = nullptr,
           Parameter* bound = nullptr);
  Tensor& grad_of(Ref r);
  bool needs(Ref r) const { return nodes_[static_cast<size_t>(r)].needs_grad; }

  std::vector<Node> nodes_;
  bool swept_ = false;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected adaptive-moment update on trainable parameters;
// moments persist inside each Parameter.
void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg);

// Plain gradient-descent update (used by the framewise converter, whose
// training contract wants monotone full-batch descent).
void sgd_step(const std::vector<Parameter*>& params, double lr);

}  // namespace qpnet

#endif  // QPNET_AUTOGRAD_H_
