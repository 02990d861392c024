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

// Flat "key = value" run configuration. '#' starts a comment; CLI overrides
// are applied on top as key=value strings.

#ifndef QPNET_CONFIG_H_
#define QPNET_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qpnet {

class Config {
 public:
  static Config load(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  void apply_override(const std::string& key_eq_value);

  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;                       // required
  std::string str_or(const std::string& key, const std::string& def) const;
  int64_t i64(const std::string& key) const;
  int64_t i64_or(const std::string& key, int64_t def) const;
  double f64(const std::string& key) const;
  double f64_or(const std::string& key, double def) const;
  uint64_t seed_or(const std::string& key, uint64_t def) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace qpnet

#endif  // QPNET_CONFIG_H_
