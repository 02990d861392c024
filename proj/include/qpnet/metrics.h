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

// Objective evaluation: mel-cepstral distortion and RMSE of log F0 between
// conditioning features and features re-extracted from generated audio.

#ifndef QPNET_METRICS_H_
#define QPNET_METRICS_H_

#include <string>
#include <vector>

#include "qpnet/analysis.h"
#include "qpnet/signal.h"

namespace qpnet {

// Mean over frames of (10/ln 10) * sqrt(2 * sum_{d>=1} (c_d - c'_d)^2);
// dimension 0 (energy) excluded. Rejects frame-count or dim mismatches.
double mcd_db(const std::vector<std::vector<double>>& reference,
              const std::vector<std::vector<double>>& test);

struct LogF0Result {
  double rmse = 0.0;               // natural-log RMSE over both-voiced frames
  int64_t overlap_frames = 0;
  double overlap_fraction = 0.0;   // both-voiced / total
  bool empty_overlap = true;
};

// Inputs are per-frame Hz with 0 marking unvoiced. Frames voiced in both
// streams enter the RMSE; disjoint voicing yields the distinguished
// empty-overlap result, never a silent 0.
LogF0Result logf0_rmse(const std::vector<double>& reference_f0,
                       const std::vector<double>& test_f0);

struct EvalPair {
  std::string name;
  std::string wav_path;
  std::string feature_path;
};

struct EvalRow {
  std::string name;
  bool ok = false;
  std::string error;
  int64_t frames = 0;
  double mcd = 0.0;
  double rmse = 0.0;
  double voiced_overlap = 0.0;
};

// Re-extracts mcep and F0 from each WAV at the conditioning hop and compares
// against the paired feature file. Trailing partial frames are dropped from
// both sides; larger mismatches become per-file error rows and the run
// continues.
std::vector<EvalRow> evaluate_run(const std::vector<EvalPair>& pairs,
                                  const AnalysisConfig& cfg);

// UTF-8 TSV with a header, one row per utterance, and a mean row.
void write_report(const std::string& path, const std::vector<EvalRow>& rows);

}  // namespace qpnet

#endif  // QPNET_METRICS_H_
