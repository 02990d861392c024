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

// Batch pipeline stages over a run directory: corpus synthesis, feature
// extraction, vocoder training and adaptation, converter training, feature
// conversion, waveform generation, and evaluation. Every stage writes a
// manifest (inputs, outputs, seed, content hashes) and is byte-deterministic
// given the same config.

#ifndef QPNET_PIPELINE_H_
#define QPNET_PIPELINE_H_

#include <stdexcept>
#include <string>

#include "qpnet/analysis.h"
#include "qpnet/config.h"
#include "qpnet/corpus.h"
#include "qpnet/dilation.h"

namespace qpnet {

// Error classes the CLI maps to exit codes.
struct MissingInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CompatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,        // bad flags, malformed config
  kExitMissingInput = 2, // a stage input does not exist
  kExitCompat = 3,       // format or architecture mismatch
  kExitRuntime = 4,      // anything else
};

void stage_synth_corpus(const Config& cfg);
void stage_extract(const Config& cfg);
void stage_train_vocoder(const Config& cfg);
void stage_adapt(const Config& cfg);
void stage_train_converter(const Config& cfg);
void stage_convert(const Config& cfg);
void stage_generate(const Config& cfg);
void stage_evaluate(const Config& cfg);
std::string stage_plan_report(const Config& cfg);

// Dispatch by stage name; throws std::invalid_argument for unknown stages.
void run_stage(const std::string& stage, const Config& cfg);

// Config decoding shared with tests.
AnalysisConfig analysis_config(const Config& cfg);
ArchitectureSpec arch_from_config(const Config& cfg);
CorpusConfig corpus_config(const Config& cfg);

uint64_t fnv1a64_file(const std::string& path);

}  // namespace qpnet

#endif  // QPNET_PIPELINE_H_
