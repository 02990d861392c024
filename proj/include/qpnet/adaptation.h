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

// Speaker adaptation of a trained vocoder: SDo updates only the two post-skip
// output convolutions, SDa updates the whole network. Both log a train/val
// cross-entropy ledger.

#ifndef QPNET_ADAPTATION_H_
#define QPNET_ADAPTATION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "qpnet/training.h"

namespace qpnet {

enum class FinetuneMode {
  kOutputOnly,    // SDo
  kWholeNetwork,  // SDa
};

FinetuneMode finetune_mode_from_string(const std::string& s);

struct FinetuneConfig {
  FinetuneMode mode = FinetuneMode::kWholeNetwork;
  int64_t iterations = 50;  // desk defaults: 50 for SDa, 500 for SDo
  int64_t window = 1024;
  int64_t batch_samples = 4096;
  double lr = 1e-4;
  int64_t ledger_every = 5;
  uint64_t seed = 7;
};

struct LedgerRow {
  int64_t iter;
  double train_ce;
  double val_ce;
};

// Fine-tunes in place. iterations == 0 leaves the parameters untouched and
// returns an empty ledger. Optimizer moments restart for the updated subset.
std::vector<LedgerRow> finetune(VocoderParams& params,
                                const std::vector<UtteranceData>& train_data,
                                const std::vector<UtteranceData>& val_data,
                                const FinetuneConfig& cfg);

// Mean teacher-forced cross-entropy over a deterministic window cover of the
// validation data; no gradients, no state mutation.
double validation_loss(const VocoderParams& params,
                       const std::vector<UtteranceData>& val_data, int64_t window);

// Text ledger, one "iter<TAB>train_ce<TAB>val_ce" line per row.
void write_ledger(const std::string& path, const std::vector<LedgerRow>& rows);
std::vector<LedgerRow> read_ledger(const std::string& path);

}  // namespace qpnet

#endif  // QPNET_ADAPTATION_H_
