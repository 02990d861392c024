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

#include "qpnet/dilation.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qpnet/common.h"

namespace qpnet {

int64_t round_half_up(double x) { return static_cast<int64_t>(std::floor(x + 0.5)); }

void ArchitectureSpec::validate() const {
  require(fixed_layers >= 0 && fixed_repeats >= 0 && adaptive_layers >= 0 &&
              adaptive_repeats >= 0,
          "ArchitectureSpec: negative layer counts");
  require(fixed_blocks() >= 1, "ArchitectureSpec: need at least one fixed block");
  require(adaptive_layers == 0 || adaptive_repeats >= 1,
          "ArchitectureSpec: adaptive layers without repeats");
  require(residual_channels > 0 && skip_channels > 0 && head_channels > 0,
          "ArchitectureSpec: channel sizes must be positive");
  require(quant_levels == 256, "ArchitectureSpec: quant_levels must be 256 for 8-bit mu-law");
  require(adaptive_blocks() == 0 || a >= 1, "ArchitectureSpec: a must be >= 1");
}

ArchitectureSpec wnf_spec() {
  ArchitectureSpec s;
  s.fixed_layers = 10;
  s.fixed_repeats = 3;
  s.residual_channels = 512;
  s.skip_channels = 512;
  s.head_channels = 256;
  return s;
}

ArchitectureSpec wnc_spec() {
  ArchitectureSpec s;
  s.fixed_layers = 4;
  s.fixed_repeats = 4;
  s.residual_channels = 512;
  s.skip_channels = 512;
  s.head_channels = 256;
  return s;
}

ArchitectureSpec qpnet_spec() {
  ArchitectureSpec s;
  s.fixed_layers = 4;
  s.fixed_repeats = 3;
  s.adaptive_layers = 4;
  s.adaptive_repeats = 1;
  s.residual_channels = 512;
  s.skip_channels = 512;
  s.head_channels = 256;
  s.a = 8;
  return s;
}

ArchitectureSpec desk_spec() {
  ArchitectureSpec s;
  s.fixed_layers = 3;
  s.fixed_repeats = 1;
  s.adaptive_layers = 2;
  s.adaptive_repeats = 1;
  s.residual_channels = 64;
  s.skip_channels = 64;
  s.head_channels = 64;
  s.a = 8;
  return s;
}

std::vector<double> pitch_dilation_factors(const std::vector<double>& f0_per_sample,
                                           int rate, int a) {
  require(rate > 0, "pitch_dilation_factors: rate must be positive");
  require(a >= 1, "pitch_dilation_factors: a must be >= 1");
  std::vector<double> e;
  e.reserve(f0_per_sample.size());
  for (double f0 : f0_per_sample) {
    require(f0 > 0.0, "pitch_dilation_factors: nonpositive F0 (interpolate first)");
    e.push_back(static_cast<double>(rate) / (f0 * a));
  }
  return e;
}

DilationPlan build_plan(const ArchitectureSpec& spec, const std::vector<double>& e_t) {
  spec.validate();
  require(spec.adaptive_blocks() == 0 || !e_t.empty(),
          "build_plan: adaptive layers need a nonempty e_t sequence");

  DilationPlan plan;
  plan.fixed_dilations.resize(spec.fixed_blocks());
  for (int k = 0; k < spec.fixed_blocks(); ++k)
    plan.fixed_dilations[k] = int64_t{1} << (k % spec.fixed_layers);

  plan.e_t = e_t;
  plan.adaptive_dilations.assign(spec.adaptive_blocks(), {});
  for (int k = 0; k < spec.adaptive_blocks(); ++k) {
    const double base = static_cast<double>(int64_t{1} << (k % spec.adaptive_layers));
    auto& d = plan.adaptive_dilations[k];
    d.resize(e_t.size());
    for (size_t t = 0; t < e_t.size(); ++t)
      d[t] = std::max<int64_t>(1, round_half_up(e_t[t] * base));
  }
  return plan;
}

int64_t DilationPlan::max_adaptive_dilation(int block) const {
  const auto& d = adaptive_dilations[block];
  require(!d.empty(), "DilationPlan: empty adaptive schedule");
  return *std::max_element(d.begin(), d.end());
}

int64_t receptive_field(const ArchitectureSpec& spec, double e_const) {
  spec.validate();
  require(spec.adaptive_blocks() == 0 || e_const > 0.0,
          "receptive_field: e_const required with adaptive layers");
  int64_t r = 1;  // causal entry lookback
  for (int k = 0; k < spec.fixed_blocks(); ++k)
    r += int64_t{1} << (k % spec.fixed_layers);
  for (int k = 0; k < spec.adaptive_blocks(); ++k) {
    const double base = static_cast<double>(int64_t{1} << (k % spec.adaptive_layers));
    r += std::max<int64_t>(1, round_half_up(e_const * base));
  }
  return r;
}

std::string plan_report(const ArchitectureSpec& spec, const DilationPlan& plan) {
  std::ostringstream os;
  os << "architecture: fixed " << spec.fixed_layers << "x" << spec.fixed_repeats
     << ", adaptive " << spec.adaptive_layers << "x" << spec.adaptive_repeats
     << ", a=" << spec.a << ", channels " << spec.residual_channels << "/"
     << spec.skip_channels << "/" << spec.head_channels << "\n";
  os << "fixed dilations:";
  for (int64_t d : plan.fixed_dilations) os << " " << d;
  os << "\n";
  if (!plan.adaptive_dilations.empty() && plan.samples() > 0) {
    double e_min = plan.e_t[0], e_max = plan.e_t[0];
    for (double e : plan.e_t) {
      e_min = std::min(e_min, e);
      e_max = std::max(e_max, e);
    }
    os << "samples: " << plan.samples() << ", e_t range [" << e_min << ", " << e_max
       << "]\n";
    for (size_t k = 0; k < plan.adaptive_dilations.size(); ++k) {
      const auto& d = plan.adaptive_dilations[k];
      auto [lo, hi] = std::minmax_element(d.begin(), d.end());
      os << "adaptive layer " << k << ": dilation range [" << *lo << ", " << *hi << "]\n";
    }
    int64_t span_lo = receptive_field(spec, e_min);
    int64_t span_hi = receptive_field(spec, e_max);
    os << "dependence span range [" << span_lo << ", " << span_hi << "] samples\n";
  } else {
    os << "dependence span: " << receptive_field(spec) << " samples\n";
  }
  return os.str();
}

}  // namespace qpnet
