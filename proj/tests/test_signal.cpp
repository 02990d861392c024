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

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "qpnet/signal.h"

using namespace qpnet;

namespace {

// Mean-value roundtrip bound: half companded bin width times the derivative
// of the expansion, the derivative taken at the far end of the traversed
// interval. The first-order variant that evaluates the derivative at x alone
// undershoots by up to a factor exp(ln(1+mu)/256) at small-|x| bin edges.
double roundtrip_bound(double x, double xhat, int mu = 255) {
  const double far = std::max(std::fabs(x), std::fabs(xhat));
  return std::log1p(static_cast<double>(mu)) * (1.0 + mu * far) / (mu * 256.0);
}

}  // namespace

TEST_CASE("mu-law encode hits the pinned code values") {
  CHECK(mulaw_encode_sample(0.0) == 128);
  CHECK(mulaw_encode_sample(1.0) == 255);
  CHECK(mulaw_encode_sample(0.5) == 240);
  CHECK(mulaw_encode_sample(-1.0) == 0);
}

TEST_CASE("mu-law encode rejects out-of-range samples") {
  WaveBuffer w;
  w.samples = {0.0, 1.0001};
  CHECK_THROWS_AS(mulaw_encode(w), std::invalid_argument);
  w.samples = {-1.2};
  CHECK_THROWS_AS(mulaw_encode(w), std::invalid_argument);
}

TEST_CASE("mu-law encode is monotone non-decreasing") {
  int prev = 0;
  for (int i = 0; i <= 20000; ++i) {
    const double x = -1.0 + 2.0 * i / 20000.0;
    const int c = mulaw_encode_sample(x);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("mu-law center code decodes near zero") {
  const double v = mulaw_decode_sample(128);
  CHECK(std::fabs(v) < 1.8e-4);  // within one companded bin of zero
}

TEST_CASE("mu-law roundtrip error obeys the analytic bound on a 1e5 sweep") {
  const int n = 100000;
  double worst_ratio = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = -1.0 + 2.0 * i / n;
    const double xhat = mulaw_decode_sample(mulaw_encode_sample(x));
    const double err = std::fabs(x - xhat);
    CHECK(err <= roundtrip_bound(x, xhat));
    const double first_order = std::log(256.0) * (1.0 + 255.0 * std::fabs(x)) / (255.0 * 256.0);
    worst_ratio = std::max(worst_ratio, err / first_order);
  }
  // The first-order bound is exceeded only by the provable second-order
  // factor exp(ln(256)/256) ~ 1.0219.
  CHECK(worst_ratio > 1.0);
  CHECK(worst_ratio <= std::exp(std::log(256.0) / 256.0) + 1e-9);
}

TEST_CASE("mu-law roundtrip is odd-symmetric up to one quantization step") {
  for (int i = 0; i <= 5000; ++i) {
    const double x = i / 5000.0;
    const double pos = mulaw_decode_sample(mulaw_encode_sample(x));
    const double neg = mulaw_decode_sample(mulaw_encode_sample(-x));
    CHECK(std::fabs(pos + neg) <= 2.0 * roundtrip_bound(x, pos) + 1e-12);
  }
}

TEST_CASE("continuous F0 interpolation") {
  SUBCASE("log-linear gap fill hits the geometric midpoint") {
    auto [f0, uv] = interpolate_continuous_f0({100.0, 0.0, 400.0});
    CHECK(f0[0] == doctest::Approx(100.0));
    CHECK(f0[1] == doctest::Approx(200.0));
    CHECK(f0[2] == doctest::Approx(400.0));
    CHECK(uv == std::vector<uint8_t>{1, 0, 1});
  }
  SUBCASE("edge runs take the nearest voiced value") {
    auto [f0, uv] = interpolate_continuous_f0({0.0, 0.0, 150.0, 0.0});
    for (double v : f0) CHECK(v == doctest::Approx(150.0));
    CHECK(uv == std::vector<uint8_t>{0, 0, 1, 0});
  }
  SUBCASE("all-voiced input is unchanged") {
    auto [f0, uv] = interpolate_continuous_f0({120.0, 130.0, 125.0});
    CHECK(f0 == std::vector<double>{120.0, 130.0, 125.0});
    CHECK(uv == std::vector<uint8_t>{1, 1, 1});
  }
  SUBCASE("all-unvoiced input is rejected") {
    CHECK_THROWS_AS(interpolate_continuous_f0({0.0, 0.0}), std::invalid_argument);
  }
  SUBCASE("random sparse contours stay positive and exact on voiced frames") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> in(40, 0.0);
      int voiced = 0;
      for (double& v : in)
        if (rng() % 3 == 0) {
          v = 80.0 + (rng() % 300);
          ++voiced;
        }
      if (voiced == 0) in[7] = 200.0;
      auto [f0, uv] = interpolate_continuous_f0(in);
      for (size_t i = 0; i < in.size(); ++i) {
        CHECK(f0[i] > 0.0);
        if (in[i] > 0.0) CHECK(f0[i] == doctest::Approx(in[i]));
      }
    }
  }
}

namespace {

FrameFeatures random_features(int frames, int m, int64_t hop, uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
  FrameFeatures f;
  f.hop = hop;
  for (int i = 0; i < frames; ++i) {
    f.continuous_f0.push_back(100.0 + 200.0 * u());
    f.uv.push_back(u() > 0.3 ? 1 : 0);
    std::vector<double> mc(m);
    for (double& v : mc) v = 2.0 * u() - 1.0;
    f.mcep.push_back(mc);
    f.coded_ap.push_back({-u(), -u()});
  }
  return f;
}

}  // namespace

TEST_CASE("feature upsampling holds each frame for hop samples") {
  FrameFeatures f = random_features(3, 4, 4, 21);
  Tensor m = upsample_features(f);
  CHECK(m.rows() == 12);
  CHECK(m.cols() == 8);
  for (int t = 0; t < 4; ++t)
    for (int c = 0; c < 8; ++c) CHECK(m.at(t, c) == m.at(0, c));

  SUBCASE("hop 1 is the identity on frame count") {
    f.hop = 1;
    Tensor one = upsample_features(f);
    CHECK(one.rows() == f.frames());
  }

  SUBCASE("row t equals frame floor(t/hop), loop oracle") {
    FrameFeatures g = random_features(7, 5, 3, 22);
    Tensor mm = upsample_features(g);
    for (int64_t t = 0; t < mm.rows(); ++t) {
      const int64_t fr = t / g.hop;
      CHECK(mm.at(t, 0) == doctest::Approx(g.continuous_f0[fr]));
      CHECK(mm.at(t, 1) == doctest::Approx(static_cast<double>(g.uv[fr])));
      for (int d = 0; d < 5; ++d) CHECK(mm.at(t, 2 + d) == doctest::Approx(g.mcep[fr][d]));
      CHECK(mm.at(t, 7) == doctest::Approx(g.coded_ap[fr][0]));
      CHECK(mm.at(t, 8 - 1 + 1) == doctest::Approx(g.coded_ap[fr][1]));
    }
  }

  SUBCASE("empty frames are rejected") {
    FrameFeatures empty;
    CHECK_THROWS_AS(upsample_features(empty), std::invalid_argument);
  }
}

TEST_CASE("wav roundtrip preserves rate and samples to 16-bit resolution") {
  const std::string path = (std::filesystem::temp_directory_path() / "qpnet_t.wav").string();
  WaveBuffer w;
  w.rate = 16000;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) w.samples.push_back(2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0);
  write_wav(path, w);
  WaveBuffer r = read_wav(path);
  REQUIRE(r.rate == 16000);
  REQUIRE(r.samples.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::fabs(r.samples[i] - w.samples[i]) <= 1.0 / 32768.0);
  std::filesystem::remove(path);
}

TEST_CASE("feature file roundtrip") {
  const std::string path = (std::filesystem::temp_directory_path() / "qpnet_t.qpf").string();
  FrameFeatures f = random_features(9, 6, 110, 5);
  write_features(path, f);
  FrameFeatures r = read_features(path);
  REQUIRE(r.frames() == f.frames());
  CHECK(r.hop == f.hop);
  CHECK(r.mcep_dim() == f.mcep_dim());
  for (int64_t i = 0; i < f.frames(); ++i) {
    CHECK(r.continuous_f0[i] == doctest::Approx(f.continuous_f0[i]).epsilon(1e-6));
    CHECK(r.uv[i] == f.uv[i]);
    for (int d = 0; d < f.mcep_dim(); ++d)
      CHECK(r.mcep[i][d] == doctest::Approx(f.mcep[i][d]).epsilon(1e-6));
  }
  std::filesystem::remove(path);
}
