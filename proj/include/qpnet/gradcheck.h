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

// Central finite-difference gradient checker. The loss callback must rebuild
// the forward pass from scratch on every call; the checker itself never
// touches the tape, so it stays independent of the reverse-mode path it
// verifies.

#ifndef QPNET_GRADCHECK_H_
#define QPNET_GRADCHECK_H_

#include <cmath>
#include <functional>
#include <vector>

#include "qpnet/autograd.h"

namespace qpnet {

struct GradCheck {
  std::vector<Parameter*> params;
  std::function<double()> loss;           // forward only
  std::function<void()> compute_grads;    // zero grads, forward, backward
  double step = 1e-5;
};

// Max over all checked elements of |fd - analytic| / max(1, |fd|, |analytic|).
inline double max_fd_rel_error(const GradCheck& check) {
  check.compute_grads();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(check.params.size());
  for (Parameter* p : check.params) analytic.push_back(p->grad.data);

  double worst = 0.0;
  for (size_t pi = 0; pi < check.params.size(); ++pi) {
    Parameter* p = check.params[pi];
    const int64_t n = p->value.numel();
    for (int64_t i = 0; i < n; ++i) {
      const double keep = p->value.data[i];
      p->value.data[i] = keep + check.step;
      const double up = check.loss();
      p->value.data[i] = keep - check.step;
      const double down = check.loss();
      p->value.data[i] = keep;
      const double fd = (up - down) / (2.0 * check.step);
      const double an = analytic[pi][static_cast<size_t>(i)];
      const double denom = std::max({1.0, std::fabs(fd), std::fabs(an)});
      worst = std::max(worst, std::fabs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace qpnet

#endif  // QPNET_GRADCHECK_H_
