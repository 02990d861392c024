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

#include "qpnet/config.h"

#include <fstream>
#include <sstream>

#include "qpnet/common.h"

namespace qpnet {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    require(eq != std::string::npos,
            "config: missing '=' on line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), "config: empty key on line " + std::to_string(lineno));
    cfg.kv_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_string(buf.str());
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

void Config::apply_override(const std::string& kev) {
  const size_t eq = kev.find('=');
  require(eq != std::string::npos && eq > 0, "override must look like key=value: " + kev);
  kv_[kev.substr(0, eq)] = kev.substr(eq + 1);
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::str(const std::string& key) const {
  auto it = kv_.find(key);
  require(it != kv_.end(), "config: missing required key '" + key + "'");
  return it->second;
}

std::string Config::str_or(const std::string& key, const std::string& def) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

int64_t Config::i64(const std::string& key) const {
  const std::string v = str(key);
  try {
    size_t pos = 0;
    int64_t out = std::stoll(v, &pos);
    require(pos == v.size(), "config: '" + key + "' is not an integer: " + v);
    return out;
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    fail("config: '" + key + "' is not an integer: " + v);
  }
}

int64_t Config::i64_or(const std::string& key, int64_t def) const {
  return has(key) ? i64(key) : def;
}

double Config::f64(const std::string& key) const {
  const std::string v = str(key);
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    require(pos == v.size(), "config: '" + key + "' is not a number: " + v);
    return out;
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    fail("config: '" + key + "' is not a number: " + v);
  }
}

double Config::f64_or(const std::string& key, double def) const {
  return has(key) ? f64(key) : def;
}

uint64_t Config::seed_or(const std::string& key, uint64_t def) const {
  return has(key) ? static_cast<uint64_t>(i64(key)) : def;
}

}  // namespace qpnet
