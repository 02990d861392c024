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

#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "qpnet/converter.h"

using namespace qpnet;

namespace {

std::mt19937_64 g_rng(777);
double urand() { return 2.0 * ((g_rng() >> 11) * 0x1.0p-53) - 1.0; }

std::vector<std::vector<double>> random_rows(int n, int m) {
  std::vector<std::vector<double>> out(n, std::vector<double>(m));
  for (auto& r : out)
    for (double& v : r) v = urand();
  return out;
}

// Dense MLPG oracle: builds W = [I; D] explicitly and solves the normal
// equations by Gaussian elimination, one dimension at a time.
std::vector<std::vector<double>> mlpg_dense_oracle(
    const std::vector<std::vector<double>>& means_sd, const std::vector<double>& sigma) {
  const int t_len = static_cast<int>(means_sd.size());
  const int m = static_cast<int>(means_sd[0].size()) / 2;
  std::vector<std::vector<double>> traj(t_len, std::vector<double>(m));

  for (int d = 0; d < m; ++d) {
    // rows 0..T-1: identity (static), rows T..2T-1: delta window
    std::vector<std::vector<double>> w(2 * t_len, std::vector<double>(t_len, 0.0));
    std::vector<double> mu(2 * t_len), inv(2 * t_len);
    for (int t = 0; t < t_len; ++t) {
      w[t][t] = 1.0;
      mu[t] = means_sd[t][d];
      inv[t] = 1.0 / sigma[d];
    }
    for (int t = 0; t < t_len; ++t) {
      const int lo = std::max(t - 1, 0), hi = std::min(t + 1, t_len - 1);
      if (lo != hi) {
        w[t_len + t][lo] -= 0.5;
        w[t_len + t][hi] += 0.5;
      }
      mu[t_len + t] = means_sd[t][m + d];
      inv[t_len + t] = 1.0 / sigma[m + d];
    }
    // normal equations A c = b
    std::vector<std::vector<double>> a(t_len, std::vector<double>(t_len, 0.0));
    std::vector<double> b(t_len, 0.0);
    for (int r = 0; r < 2 * t_len; ++r)
      for (int i = 0; i < t_len; ++i) {
        if (w[r][i] == 0.0) continue;
        b[i] += w[r][i] * inv[r] * mu[r];
        for (int j = 0; j < t_len; ++j) a[i][j] += w[r][i] * inv[r] * w[r][j];
      }
    // gaussian elimination with partial pivoting
    std::vector<int> perm(t_len);
    for (int i = 0; i < t_len; ++i) perm[i] = i;
    for (int col = 0; col < t_len; ++col) {
      int piv = col;
      for (int r = col + 1; r < t_len; ++r)
        if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
      std::swap(a[col], a[piv]);
      std::swap(b[col], b[piv]);
      for (int r = col + 1; r < t_len; ++r) {
        const double f = a[r][col] / a[col][col];
        for (int j = col; j < t_len; ++j) a[r][j] -= f * a[col][j];
        b[r] -= f * b[col];
      }
    }
    for (int i = t_len - 1; i >= 0; --i) {
      double v = b[i];
      for (int j = i + 1; j < t_len; ++j) v -= a[i][j] * traj[j][d];
      traj[i][d] = v / a[i][i];
    }
  }
  return traj;
}

}  // namespace

TEST_CASE("delta features") {
  SUBCASE("constants have zero deltas") {
    auto sd = append_deltas({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}});
    for (const auto& r : sd) {
      CHECK(r[2] == 0.0);
      CHECK(r[3] == 0.0);
    }
  }
  SUBCASE("a linear ramp has interior deltas equal to the slope") {
    std::vector<std::vector<double>> statics;
    for (int n = 0; n < 6; ++n) statics.push_back({0.5 * n, -1.25 * n});
    auto sd = append_deltas(statics);
    for (int n = 1; n < 5; ++n) {
      CHECK(sd[n][2] == doctest::Approx(0.5));
      CHECK(sd[n][3] == doctest::Approx(-1.25));
    }
    // replicated boundaries use the one-sided half difference
    CHECK(sd[0][2] == doctest::Approx(0.25));
    CHECK(sd[5][2] == doctest::Approx(0.25));
  }
  SUBCASE("random rows match the loop oracle") {
    auto statics = random_rows(9, 3);
    auto sd = append_deltas(statics);
    for (int n = 0; n < 9; ++n)
      for (int i = 0; i < 3; ++i) {
        const auto& prev = statics[std::max(n - 1, 0)];
        const auto& next = statics[std::min(n + 1, 8)];
        CHECK(std::fabs(sd[n][3 + i] - 0.5 * (next[i] - prev[i])) < 1e-12);
        CHECK(sd[n][i] == statics[n][i]);
      }
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(append_deltas({}), std::invalid_argument);
  }
}

TEST_CASE("weighted squared error scales uniformly with the weights") {
  // scaling Sigma by a positive scalar scales the objective but moves no argmin
  Parameter pred("p", Tensor({3, 4}));
  for (double& v : pred.value.data) v = urand();
  Tensor target({3, 4});
  for (double& v : target.data) v = urand();
  std::vector<double> w = {0.5, 1.5, 2.5};
  std::vector<double> w3 = {1.5, 4.5, 7.5};
  Tape t1, t2;
  const double l1 = t1.scalar(t1.weighted_mse(t1.param(pred), target, w));
  const double l2 = t2.scalar(t2.weighted_mse(t2.param(pred), target, w3));
  CHECK(l2 == doctest::Approx(3.0 * l1).epsilon(1e-12));
}

TEST_CASE("the converter learns the identity map") {
  const int m = 4;
  // correlated smooth rows so the map is learnable
  std::vector<std::vector<double>> statics;
  for (int n = 0; n < 400; ++n) {
    std::vector<double> r(m);
    for (int i = 0; i < m; ++i)
      r[i] = std::sin(0.05 * n + i) + 0.1 * urand();
    statics.push_back(r);
  }
  auto sd = append_deltas(statics);
  ConverterConfig cfg;
  cfg.hidden_layers = 1;
  cfg.hidden_units = 16;
  cfg.epochs = 400;
  cfg.lr = 0.1;
  cfg.seed = 9;
  ConverterTraining t = train_converter_aligned(sd, sd, m, cfg);

  auto out = convert(t.model, sd);
  double worst = 0.0;
  for (size_t n = 0; n < sd.size(); ++n)
    for (int i = 0; i < 2 * m; ++i) {
      const double scale = std::sqrt(t.model.sigma[i]);
      worst = std::max(worst, std::fabs(out[n][i] - sd[n][i]) / scale);
    }
  CHECK(worst < 0.5);  // residual well under one target standard deviation

  SUBCASE("training loss is non-increasing at the desk learning rate") {
    for (size_t e = 1; e < t.loss_curve.size(); ++e)
      CHECK(t.loss_curve[e] <= t.loss_curve[e - 1] + 1e-12);
  }
}

TEST_CASE("conversion forward pass") {
  const int m = 3;
  auto sd = append_deltas(random_rows(40, m));
  ConverterConfig cfg;
  cfg.hidden_layers = 2;
  cfg.hidden_units = 8;
  cfg.epochs = 5;
  cfg.lr = 0.01;
  ConverterTraining t = train_converter_aligned(sd, sd, m, cfg);

  SUBCASE("deterministic across calls") {
    CHECK(convert(t.model, sd) == convert(t.model, sd));
  }

  SUBCASE("matches a loop oracle") {
    auto out = convert(t.model, sd);
    for (size_t n = 0; n < sd.size(); ++n) {
      std::vector<double> h(2 * m);
      for (int i = 0; i < 2 * m; ++i)
        h[i] = (sd[n][i] - t.model.in_mean[i]) / t.model.in_std[i];
      const size_t layers = t.model.dnn.size() / 2;
      for (size_t l = 0; l < layers; ++l) {
        const Tensor& w = t.model.dnn[2 * l].value;
        const Tensor& b = t.model.dnn[2 * l + 1].value;
        std::vector<double> nxt(w.rows());
        for (int64_t i = 0; i < w.rows(); ++i) {
          double acc = b.data[i];
          for (int64_t j = 0; j < w.cols(); ++j) acc += w.at(i, j) * h[j];
          nxt[i] = l + 1 < layers ? std::tanh(acc) : acc;
        }
        h = nxt;
      }
      for (int i = 0; i < 2 * m; ++i) {
        const double raw = t.model.out_mean[i] + std::sqrt(t.model.sigma[i]) * h[i];
        CHECK(std::fabs(out[n][i] - raw) < 1e-12);
      }
    }
  }

  SUBCASE("zero weights produce a constant output") {
    ConversionModel zeroed = t.model;
    for (Parameter& p : zeroed.dnn) p.value.fill(0.0);
    auto out = convert(zeroed, sd);
    for (size_t n = 1; n < out.size(); ++n) CHECK(out[n] == out[0]);
    for (int i = 0; i < 2 * m; ++i)
      CHECK(out[0][i] == doctest::Approx(zeroed.out_mean[i]));
  }

  SUBCASE("dimension mismatches are rejected") {
    CHECK_THROWS_AS(convert(t.model, random_rows(3, 2 * m + 2)), std::invalid_argument);
  }
}

TEST_CASE("mlpg trajectory generation") {
  SUBCASE("stationary means reproduce the statics exactly") {
    const int m = 2, t_len = 8;
    std::vector<std::vector<double>> means(t_len, std::vector<double>(2 * m, 0.0));
    for (int t = 0; t < t_len; ++t) {
      means[t][0] = 3.5;
      means[t][1] = -1.25;  // deltas stay zero
    }
    std::vector<double> sigma(2 * m, 0.7);
    auto traj = mlpg(means, sigma);
    for (int t = 0; t < t_len; ++t) {
      CHECK(traj[t][0] == doctest::Approx(3.5).epsilon(1e-10));
      CHECK(traj[t][1] == doctest::Approx(-1.25).epsilon(1e-10));
    }
  }

  SUBCASE("random cases match the dense solve for all T <= 10") {
    for (int t_len = 1; t_len <= 10; ++t_len) {
      for (int rep = 0; rep < 3; ++rep) {
        const int m = 2;
        auto means = random_rows(t_len, 2 * m);
        std::vector<double> sigma(2 * m);
        for (double& s : sigma) s = 0.2 + std::fabs(urand());
        auto fast = mlpg(means, sigma);
        auto dense = mlpg_dense_oracle(means, sigma);
        for (int t = 0; t < t_len; ++t)
          for (int d = 0; d < m; ++d)
            CHECK(std::fabs(fast[t][d] - dense[t][d]) < 1e-8);
      }
    }
  }

  SUBCASE("huge delta variances recover the static means") {
    const int m = 2, t_len = 7;
    auto means = random_rows(t_len, 2 * m);
    std::vector<double> sigma = {1.0, 1.0, 1e12, 1e12};
    auto traj = mlpg(means, sigma);
    for (int t = 0; t < t_len; ++t)
      for (int d = 0; d < m; ++d)
        CHECK(std::fabs(traj[t][d] - means[t][d]) < 1e-4);
  }
}

TEST_CASE("global variance postfilter") {
  auto traj = random_rows(30, 4);
  SUBCASE("own variance is a fixed point") {
    std::vector<double> gv(4, 0.0);
    std::vector<double> mean(4, 0.0);
    for (const auto& r : traj)
      for (int d = 0; d < 4; ++d) mean[d] += r[d] / 30.0;
    for (const auto& r : traj)
      for (int d = 0; d < 4; ++d) gv[d] += (r[d] - mean[d]) * (r[d] - mean[d]) / 30.0;
    std::vector<double> gv_pos = gv;
    for (double& g : gv_pos) g = std::max(g, 1e-9);
    auto out = gv_postfilter(traj, gv_pos);
    for (int t = 0; t < 30; ++t)
      for (int d = 0; d < 4; ++d) CHECK(out[t][d] == doctest::Approx(traj[t][d]));
  }

  SUBCASE("target variance is achieved exactly and the mean is preserved") {
    std::vector<double> gv = {0.5, 1.7, 0.02, 3.0};
    auto out = gv_postfilter(traj, gv);
    for (int d = 1; d < 4; ++d) {
      double mean_in = 0.0, mean_out = 0.0;
      for (int t = 0; t < 30; ++t) {
        mean_in += traj[t][d] / 30.0;
        mean_out += out[t][d] / 30.0;
      }
      double var_out = 0.0;
      for (int t = 0; t < 30; ++t)
        var_out += (out[t][d] - mean_out) * (out[t][d] - mean_out) / 30.0;
      CHECK(std::fabs(mean_out - mean_in) < 1e-10);
      CHECK(std::fabs(var_out - gv[d]) < 1e-10);
    }
    // dimension 0 passes through untouched
    for (int t = 0; t < 30; ++t) CHECK(out[t][0] == traj[t][0]);
  }

  SUBCASE("flat dimensions pass through") {
    auto flat = traj;
    for (int t = 0; t < 30; ++t) flat[t][2] = 0.77;
    auto out = gv_postfilter(flat, {1.0, 1.0, 1.0, 1.0});
    for (int t = 0; t < 30; ++t) CHECK(out[t][2] == 0.77);
  }
}

TEST_CASE("log-domain F0 transform") {
  LogF0Stats same{std::log(150.0), 0.3, std::log(150.0), 0.3};
  SUBCASE("identical stats give the identity on voiced frames") {
    std::vector<double> f0 = {120.0, 0.0, 180.0};
    auto out = transform_logf0(f0, same);
    CHECK(out[0] == doctest::Approx(120.0));
    CHECK(out[1] == 0.0);
    CHECK(out[2] == doctest::Approx(180.0));
  }
  SUBCASE("the source mean maps to the target mean") {
    LogF0Stats st{std::log(140.0), 0.25, std::log(210.0), 0.4};
    auto out = transform_logf0({140.0}, st);
    CHECK(out[0] == doctest::Approx(210.0));
  }
  SUBCASE("doubling the target deviation doubles the log offset") {
    LogF0Stats st{std::log(140.0), 0.25, std::log(210.0), 0.2};
    LogF0Stats st2 = st;
    st2.std_tgt = 0.4;
    const double f = 178.3;
    const double d1 = std::log(transform_logf0({f}, st)[0]) - st.mean_tgt;
    const double d2 = std::log(transform_logf0({f}, st2)[0]) - st.mean_tgt;
    CHECK(d2 == doctest::Approx(2.0 * d1));
  }
  SUBCASE("zero source deviation is rejected") {
    LogF0Stats st{std::log(140.0), 0.0, std::log(210.0), 0.4};
    CHECK_THROWS_AS(transform_logf0({140.0}, st), std::invalid_argument);
  }
}

TEST_CASE("converter checkpoints round-trip") {
  const int m = 3;
  auto sd = append_deltas(random_rows(30, m));
  ConverterConfig cfg;
  cfg.hidden_layers = 1;
  cfg.hidden_units = 6;
  cfg.epochs = 3;
  ConverterTraining t = train_converter_aligned(sd, sd, m, cfg);
  t.model.gv_target.assign(m, 0.5);
  t.model.logf0 = {5.0, 0.2, 5.3, 0.25};

  const std::string path =
      (std::filesystem::temp_directory_path() / "qpnet_conv.qpw").string();
  save_converter(path, t.model);
  ConversionModel r = load_converter(path);
  CHECK(r.mcep_order == m);
  CHECK(r.sigma == t.model.sigma);
  CHECK(r.gv_target == t.model.gv_target);
  CHECK(r.logf0.mean_tgt == t.model.logf0.mean_tgt);
  REQUIRE(r.dnn.size() == t.model.dnn.size());
  for (size_t i = 0; i < r.dnn.size(); ++i)
    CHECK(r.dnn[i].value.data == t.model.dnn[i].value.data);
  CHECK(convert(r, sd) == convert(t.model, sd));
  std::filesystem::remove(path);
}
