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

// Parameter checkpoint container: magic "QPW1", a kind tag, a fixed u32
// architecture descriptor, then named parameter blobs (name, shape, 64-bit
// floats), all little-endian.

#ifndef QPNET_CHECKPOINT_H_
#define QPNET_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qpnet/tensor.h"

namespace qpnet {

enum class CheckpointKind : uint32_t {
  kVocoder = 0,
  kConverter = 1,
};

struct Checkpoint {
  CheckpointKind kind = CheckpointKind::kVocoder;
  std::vector<uint32_t> descriptor;
  std::vector<std::pair<std::string, Tensor>> blobs;

  const Tensor& blob(const std::string& name) const;
  bool has(const std::string& name) const;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace qpnet

#endif  // QPNET_CHECKPOINT_H_
