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

#include "qpnet/signal.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace qpnet {

namespace {

constexpr int kQuantLevels = 256;

double compand(double x, int mu) {
  double f = std::log1p(mu * std::fabs(x)) / std::log1p(static_cast<double>(mu));
  return x < 0 ? -f : f;
}

double expand(double f, int mu) {
  double x = std::expm1(std::fabs(f) * std::log1p(static_cast<double>(mu))) / mu;
  return f < 0 ? -x : x;
}

}  // namespace

uint8_t mulaw_encode_sample(double x, int mu) {
  require(x >= -1.0 && x <= 1.0, "mulaw_encode: sample outside [-1, 1]");
  double f = compand(x, mu);
  int code = static_cast<int>(std::floor((f + 1.0) / 2.0 * kQuantLevels));
  return static_cast<uint8_t>(std::clamp(code, 0, kQuantLevels - 1));
}

MuLawCode mulaw_encode(const WaveBuffer& wave, int mu) {
  MuLawCode out;
  out.codes.reserve(wave.samples.size());
  for (double x : wave.samples) out.codes.push_back(mulaw_encode_sample(x, mu));
  return out;
}

double mulaw_decode_sample(uint8_t code, int mu) {
  double f = (code + 0.5) * (2.0 / kQuantLevels) - 1.0;  // bin center
  return expand(f, mu);
}

WaveBuffer mulaw_decode(const MuLawCode& codes, int rate, int mu) {
  require(rate > 0, "mulaw_decode: rate must be positive");
  WaveBuffer out;
  out.rate = rate;
  out.samples.reserve(codes.codes.size());
  for (uint8_t c : codes.codes) out.samples.push_back(mulaw_decode_sample(c, mu));
  return out;
}

std::pair<std::vector<double>, std::vector<uint8_t>> interpolate_continuous_f0(
    const std::vector<double>& f0) {
  const int64_t n = static_cast<int64_t>(f0.size());
  std::vector<uint8_t> uv(n, 0);
  std::vector<int64_t> voiced;
  for (int64_t i = 0; i < n; ++i) {
    if (f0[i] > 0.0) {
      uv[i] = 1;
      voiced.push_back(i);
    }
  }
  require(!voiced.empty(), "interpolate_continuous_f0: no voiced frames");

  std::vector<double> out(n, 0.0);
  for (int64_t i : voiced) out[i] = f0[i];
  // Edge runs: constant extension of the nearest voiced value.
  for (int64_t i = 0; i < voiced.front(); ++i) out[i] = f0[voiced.front()];
  for (int64_t i = voiced.back() + 1; i < n; ++i) out[i] = f0[voiced.back()];
  // Interior gaps: linear in log-Hz between flanking voiced frames.
  for (size_t k = 0; k + 1 < voiced.size(); ++k) {
    int64_t a = voiced[k], b = voiced[k + 1];
    if (b - a < 2) continue;
    double la = std::log(f0[a]), lb = std::log(f0[b]);
    for (int64_t i = a + 1; i < b; ++i) {
      double w = static_cast<double>(i - a) / static_cast<double>(b - a);
      out[i] = std::exp(la + w * (lb - la));
    }
  }
  return {out, uv};
}

Tensor upsample_features(const FrameFeatures& frames) {
  const int64_t n = frames.frames();
  require(n > 0, "upsample_features: empty frame sequence");
  require(frames.hop > 0, "upsample_features: hop must be positive");
  require(static_cast<int64_t>(frames.uv.size()) == n &&
              static_cast<int64_t>(frames.mcep.size()) == n &&
              static_cast<int64_t>(frames.coded_ap.size()) == n,
          "upsample_features: stream frame counts differ");

  const int w = frames.aux_dim();
  const int m = frames.mcep_dim();
  Tensor out({n * frames.hop, w});
  for (int64_t t = 0; t < n * frames.hop; ++t) {
    const int64_t f = t / frames.hop;
    double* row = &out.data[static_cast<size_t>(t) * w];
    row[0] = frames.continuous_f0[f];
    row[1] = frames.uv[f];
    for (int d = 0; d < m; ++d) row[2 + d] = frames.mcep[f][d];
    row[2 + m] = frames.coded_ap[f][0];
    row[3 + m] = frames.coded_ap[f][1];
  }
  return out;
}

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

void put_u16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void put_f32(std::ostream& os, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(os, u);
}

float get_f32(std::istream& is) {
  uint32_t u = get_u32(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace

WaveBuffer read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_wav: cannot open " + path);
  char tag[4];
  is.read(tag, 4);
  require(std::memcmp(tag, "RIFF", 4) == 0, "read_wav: not a RIFF file: " + path);
  get_u32(is);  // riff size
  is.read(tag, 4);
  require(std::memcmp(tag, "WAVE", 4) == 0, "read_wav: not a WAVE file: " + path);

  WaveBuffer wave;
  uint16_t channels = 0, bits = 0;
  bool got_fmt = false;
  while (is.read(tag, 4)) {
    uint32_t size = get_u32(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      uint16_t format = get_u16(is);
      channels = get_u16(is);
      wave.rate = static_cast<int>(get_u32(is));
      get_u32(is);  // byte rate
      get_u16(is);  // block align
      bits = get_u16(is);
      require(format == 1, "read_wav: only PCM supported: " + path);
      if (size > 16) is.seekg(size - 16, std::ios::cur);
      got_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      require(got_fmt, "read_wav: data chunk before fmt: " + path);
      require(channels == 1 && bits == 16, "read_wav: expected 16-bit mono: " + path);
      const uint32_t count = size / 2;
      wave.samples.resize(count);
      std::vector<char> raw(size);
      is.read(raw.data(), size);
      for (uint32_t i = 0; i < count; ++i) {
        int16_t s = static_cast<int16_t>(
            static_cast<unsigned char>(raw[2 * i]) |
            (static_cast<unsigned char>(raw[2 * i + 1]) << 8));
        wave.samples[i] = s / 32768.0;
      }
      return wave;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
    }
  }
  fail("read_wav: no data chunk in " + path);
}

void write_wav(const std::string& path, const WaveBuffer& wave) {
  require(wave.rate > 0, "write_wav: rate must be positive");
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "write_wav: cannot open " + path);
  const uint32_t n = static_cast<uint32_t>(wave.samples.size());
  const uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, 1);  // PCM
  put_u16(os, 1);  // mono
  put_u32(os, static_cast<uint32_t>(wave.rate));
  put_u32(os, static_cast<uint32_t>(wave.rate) * 2);
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (uint32_t i = 0; i < n; ++i) {
    double v = std::round(wave.samples[i] * 32768.0);
    int16_t s = static_cast<int16_t>(std::clamp(v, -32768.0, 32767.0));
    unsigned char b[2] = {static_cast<unsigned char>(s & 0xff),
                          static_cast<unsigned char>((s >> 8) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
  }
}

void write_features(const std::string& path, const FrameFeatures& frames) {
  require(frames.frames() > 0, "write_features: empty frame sequence");
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "write_features: cannot open " + path);
  os.write("QPF1", 4);
  put_u32(os, static_cast<uint32_t>(frames.frames()));
  put_u32(os, static_cast<uint32_t>(frames.hop));
  put_u32(os, static_cast<uint32_t>(frames.mcep_dim()));
  const int m = frames.mcep_dim();
  for (int64_t f = 0; f < frames.frames(); ++f) {
    put_f32(os, static_cast<float>(frames.continuous_f0[f]));
    put_f32(os, static_cast<float>(frames.uv[f]));
    for (int d = 0; d < m; ++d) put_f32(os, static_cast<float>(frames.mcep[f][d]));
    put_f32(os, static_cast<float>(frames.coded_ap[f][0]));
    put_f32(os, static_cast<float>(frames.coded_ap[f][1]));
  }
}

FrameFeatures read_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_features: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::memcmp(magic, "QPF1", 4) == 0,
          "read_features: bad magic in " + path);
  const uint32_t count = get_u32(is);
  const uint32_t hop = get_u32(is);
  const uint32_t m = get_u32(is);
  require(count > 0 && hop > 0, "read_features: corrupt header in " + path);

  FrameFeatures out;
  out.hop = hop;
  out.continuous_f0.resize(count);
  out.uv.resize(count);
  out.mcep.assign(count, std::vector<double>(m));
  out.coded_ap.resize(count);
  for (uint32_t f = 0; f < count; ++f) {
    out.continuous_f0[f] = get_f32(is);
    out.uv[f] = get_f32(is) > 0.5f ? 1 : 0;
    for (uint32_t d = 0; d < m; ++d) out.mcep[f][d] = get_f32(is);
    out.coded_ap[f][0] = get_f32(is);
    out.coded_ap[f][1] = get_f32(is);
  }
  require(is.good(), "read_features: truncated file " + path);
  return out;
}

}  // namespace qpnet
