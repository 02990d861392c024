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

#include "qpnet/checkpoint.h"

#include <cstring>
#include <fstream>

namespace qpnet {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

const Tensor& Checkpoint::blob(const std::string& name) const {
  for (const auto& [n, t] : blobs)
    if (n == name) return t;
  fail("checkpoint: missing blob " + name);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, t] : blobs)
    if (n == name) return true;
  return false;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "write_checkpoint: cannot open " + path);
  os.write("QPW1", 4);
  put_u32(os, static_cast<uint32_t>(ckpt.kind));
  put_u32(os, static_cast<uint32_t>(ckpt.descriptor.size()));
  for (uint32_t v : ckpt.descriptor) put_u32(os, v);
  put_u32(os, static_cast<uint32_t>(ckpt.blobs.size()));
  for (const auto& [name, t] : ckpt.blobs) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(t.shape.size()));
    for (int64_t d : t.shape) put_u32(os, static_cast<uint32_t>(d));
    for (double v : t.data) put_f64(os, v);
  }
  require(os.good(), "write_checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::memcmp(magic, "QPW1", 4) == 0,
          "read_checkpoint: bad magic in " + path);

  Checkpoint ckpt;
  ckpt.kind = static_cast<CheckpointKind>(get_u32(is));
  const uint32_t desc_len = get_u32(is);
  require(desc_len <= 64, "read_checkpoint: implausible descriptor in " + path);
  ckpt.descriptor.resize(desc_len);
  for (uint32_t i = 0; i < desc_len; ++i) ckpt.descriptor[i] = get_u32(is);

  const uint32_t count = get_u32(is);
  ckpt.blobs.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = get_u32(is);
    require(is.good() && name_len <= 4096, "read_checkpoint: corrupt blob name");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t ndim = get_u32(is);
    require(ndim <= 8, "read_checkpoint: corrupt blob shape");
    std::vector<int64_t> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = get_u32(is);
    Tensor t(shape);
    for (int64_t j = 0; j < t.numel(); ++j) t.data[static_cast<size_t>(j)] = get_f64(is);
    require(is.good(), "read_checkpoint: truncated blob " + name);
    ckpt.blobs.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

}  // namespace qpnet
