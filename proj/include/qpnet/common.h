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

#ifndef QPNET_COMMON_H_
#define QPNET_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qpnet {

// Contract violations (bad arguments, malformed files) throw; callers that
// want exit codes map exception types at the CLI boundary.
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

}  // namespace qpnet

#endif  // QPNET_COMMON_H_
