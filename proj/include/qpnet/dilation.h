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

// Dilation scheduling: fixed doubling stacks, pitch-dependent dilation
// factors e_t = rate / (f0 * a), and the per-sample adaptive schedules the
// vocoder's pitch-dependent layers follow.

#ifndef QPNET_DILATION_H_
#define QPNET_DILATION_H_

#include <cstdint>
#include <string>
#include <vector>

namespace qpnet {

struct ArchitectureSpec {
  int fixed_layers = 0;
  int fixed_repeats = 0;
  int adaptive_layers = 0;   // 0 for a vanilla fixed-dilation network
  int adaptive_repeats = 0;
  int residual_channels = 64;
  int skip_channels = 64;
  int head_channels = 64;
  int quant_levels = 256;
  int a = 8;                 // samples per pitch cycle the taps resolve
  bool adaptive_first = false;  // block order: fixed->adaptive by default

  int fixed_blocks() const { return fixed_layers * fixed_repeats; }
  int adaptive_blocks() const { return adaptive_layers * adaptive_repeats; }

  void validate() const;
};

// Named presets with the published layer counts and channel sizes.
ArchitectureSpec wnf_spec();
ArchitectureSpec wnc_spec();
ArchitectureSpec qpnet_spec();
ArchitectureSpec desk_spec();  // small instance used throughout the tests

struct DilationPlan {
  std::vector<int64_t> fixed_dilations;   // one per fixed block
  std::vector<double> e_t;                // per-sample dilation factor
  // adaptive_dilations[block][t] = max(1, round_half_up(e_t[t] * 2^(k mod L)))
  std::vector<std::vector<int64_t>> adaptive_dilations;

  int64_t samples() const { return static_cast<int64_t>(e_t.size()); }
  int64_t max_adaptive_dilation(int block) const;
};

// e_t[t] = rate / (f0[t] * a). All F0 values must be strictly positive
// (continuous-F0 interpolation runs first).
std::vector<double> pitch_dilation_factors(const std::vector<double>& f0_per_sample,
                                           int rate, int a);

// Fixed dilations 2^(k mod fixed_layers); adaptive per-sample dilations from
// e_t, rounded half-up and floored at 1.
DilationPlan build_plan(const ArchitectureSpec& spec, const std::vector<double>& e_t);

// Dependence span r: output t depends on inputs [t-r, t]. Closed form
// 1 (causal entry) + sum of fixed dilations + sum of adaptive dilations at a
// constant e. e_const is required iff the spec has adaptive layers.
int64_t receptive_field(const ArchitectureSpec& spec, double e_const = 0.0);

// Human-readable per-layer dilation report for the CLI.
std::string plan_report(const ArchitectureSpec& spec, const DilationPlan& plan);

int64_t round_half_up(double x);

}  // namespace qpnet

#endif  // QPNET_DILATION_H_
