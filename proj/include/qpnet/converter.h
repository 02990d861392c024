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

// Framewise spectral conversion: a feedforward DNN over static+delta
// mel-cepstra trained under a diagonal-covariance Gaussian model, maximum
// likelihood trajectory generation, a global-variance postfilter, and the
// log-domain F0 transform.

#ifndef QPNET_CONVERTER_H_
#define QPNET_CONVERTER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "qpnet/autograd.h"
#include "qpnet/signal.h"

namespace qpnet {

struct ConverterConfig {
  int hidden_layers = 2;
  int hidden_units = 64;
  int epochs = 300;
  double lr = 0.05;  // full-batch descent stays monotone for lr <= 0.1 here
  uint64_t seed = 1;
};

struct LogF0Stats {
  double mean_src = 0.0, std_src = 0.0;
  double mean_tgt = 0.0, std_tgt = 0.0;
};

// The DNN consumes z-scored source vectors and predicts z-scored target
// vectors; out_mean/sigma restore the raw scale. With Sigma the diagonal
// target-variance matrix, the unit-weight error in normalized space equals
// the Sigma^-1-weighted squared error of the raw-space prediction, so
// training minimizes the Gaussian objective directly.
struct ConversionModel {
  int mcep_order = 0;                   // M; feature vectors are 2M (static+delta)
  std::vector<Parameter> dnn;           // w0,b0,w1,b1,... ending in a linear layer
  std::vector<double> in_mean, in_std;  // source stats, 2M
  std::vector<double> out_mean;         // target mean, 2M
  std::vector<double> sigma;            // target diag variances, floored at 1e-6
  std::vector<double> gv_target;        // per-dim target global variance, M
  LogF0Stats logf0;

  std::vector<Parameter*> parameters();
};

// delta[n] = 0.5 * (static[n+1] - static[n-1]) with boundary replication;
// output rows are [static | delta].
std::vector<std::vector<double>> append_deltas(
    const std::vector<std::vector<double>>& statics);

struct ConverterTraining {
  ConversionModel model;
  std::vector<double> loss_curve;  // objective per epoch
};

// Core trainer on aligned static+delta rows (full-batch gradient descent).
// gv_target and logf0 stats are left empty; the feature-level wrapper fills
// them.
ConverterTraining train_converter_aligned(
    const std::vector<std::vector<double>>& source_sd,
    const std::vector<std::vector<double>>& target_sd, int mcep_order,
    const ConverterConfig& cfg);

// Assembles aligned pairs from parallel utterances (truncating each pair to
// the shorter frame count), then trains and attaches GV and voiced log-F0
// statistics.
ConverterTraining train_converter(const std::vector<FrameFeatures>& source,
                                  const std::vector<FrameFeatures>& target,
                                  const ConverterConfig& cfg);

// Gaussian mean f(S_n) per frame, raw target scale.
std::vector<std::vector<double>> convert(const ConversionModel& model,
                                         const std::vector<std::vector<double>>& source_sd);

// Solves (W' Sigma^-1 W) c = W' Sigma^-1 mu per dimension, where W stacks the
// identity over the static rows and the delta window rows; banded Cholesky.
std::vector<std::vector<double>> mlpg(const std::vector<std::vector<double>>& means_sd,
                                      const std::vector<double>& sigma);

// Per dim d >= 1 rescales the trajectory around its mean to the target global
// variance; dimension 0 and zero-variance dims pass through.
std::vector<std::vector<double>> gv_postfilter(const std::vector<std::vector<double>>& traj,
                                               const std::vector<double>& gv_target);

// Voiced frames: log f' = (log f - mu_src)/sd_src * sd_tgt + mu_tgt.
// Unvoiced (f0 == 0) frames stay unvoiced. Rejects sd_src == 0.
std::vector<double> transform_logf0(const std::vector<double>& f0,
                                    const LogF0Stats& stats);

// Full conversion routing: mcep via DNN + MLPG + GV, F0 via the log-linear
// transform, aperiodicity passed through.
FrameFeatures convert_features(const ConversionModel& model, const FrameFeatures& src);

void save_converter(const std::string& path, const ConversionModel& model);
ConversionModel load_converter(const std::string& path);

}  // namespace qpnet

#endif  // QPNET_CONVERTER_H_
