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

#include "qpnet/analysis.h"

#include <algorithm>
#include <cmath>
#include <complex>

namespace qpnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT.
void fft(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

void power_spectrum(const double* frame, int64_t window, std::vector<double>& out) {
  std::vector<std::complex<double>> buf(window);
  for (int64_t i = 0; i < window; ++i) {
    double h = 0.5 - 0.5 * std::cos(2.0 * kPi * i / static_cast<double>(window));
    buf[i] = frame[i] * h;
  }
  fft(buf);
  out.resize(window / 2 + 1);
  for (int64_t k = 0; k <= window / 2; ++k) out[k] = std::norm(buf[k]);
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

struct LagSearch {
  int64_t lag_min, lag_max;
};

LagSearch lag_range(int rate, const AnalysisConfig& cfg) {
  require(cfg.f0_min > 0 && cfg.f0_min < cfg.f0_max && cfg.f0_max < rate / 2.0,
          "analysis: need 0 < f0_min < f0_max < rate/2");
  return {static_cast<int64_t>(std::ceil(rate / cfg.f0_max)),
          static_cast<int64_t>(std::floor(rate / cfg.f0_min))};
}

// Normalized cross-correlation over a fixed n = window - lag_max overlap so
// values are comparable across lags. Picks the shortest local maximum within
// 3% of the global peak (guards against period-doubling on clean harmonics),
// then refines the lag parabolically.
struct NccResult {
  double value = 0.0;
  double lag = 0.0;
  bool valid = false;
};

NccResult ncc_search(const double* x, int64_t window, int64_t lag_min, int64_t lag_max) {
  const int64_t n = window - lag_max;
  NccResult out;
  if (n < 2) return out;
  double e0 = 0.0;
  for (int64_t i = 0; i < n; ++i) e0 += x[i] * x[i];
  if (e0 <= 1e-300) return out;

  const int64_t nlags = lag_max - lag_min + 1;
  std::vector<double> r(nlags, 0.0);
  double global = -2.0;
  for (int64_t lag = lag_min; lag <= lag_max; ++lag) {
    double num = 0.0, el = 0.0;
    const double* y = x + lag;
    for (int64_t i = 0; i < n; ++i) {
      num += x[i] * y[i];
      el += y[i] * y[i];
    }
    double den = std::sqrt(e0 * el);
    r[lag - lag_min] = den > 1e-300 ? num / den : 0.0;
    global = std::max(global, r[lag - lag_min]);
  }

  int64_t pick = -1;
  for (int64_t k = 0; k < nlags; ++k) {
    const bool local_max = (k == 0 || r[k] >= r[k - 1]) && (k + 1 == nlags || r[k] >= r[k + 1]);
    if (local_max && r[k] >= 0.97 * global) {
      pick = k;
      break;
    }
  }
  if (pick < 0) return out;

  double lag_f = static_cast<double>(lag_min + pick);
  double value = r[pick];
  if (pick > 0 && pick + 1 < nlags) {
    double ym = r[pick - 1], y0 = r[pick], yp = r[pick + 1];
    double denom = ym - 2.0 * y0 + yp;
    if (std::fabs(denom) > 1e-12) {
      double delta = 0.5 * (ym - yp) / denom;
      if (std::fabs(delta) <= 0.5) {
        lag_f += delta;
        value = y0 - 0.25 * (ym - yp) * delta;
      }
    }
  }
  out.value = value;
  out.lag = lag_f;
  out.valid = true;
  return out;
}

}  // namespace

int64_t frame_count(int64_t samples, int64_t window, int64_t hop) {
  require(hop > 0, "analysis: hop must be positive");
  require(samples >= window, "analysis: window longer than signal");
  return (samples - window) / hop + 1;
}

int64_t f0_window_samples(int rate, const AnalysisConfig& cfg) {
  return static_cast<int64_t>(std::lround(cfg.f0_window_factor * rate / cfg.f0_min));
}

std::vector<double> estimate_f0(const WaveBuffer& wave, const AnalysisConfig& cfg) {
  const auto [lag_min, lag_max] = lag_range(wave.rate, cfg);
  const int64_t window = f0_window_samples(wave.rate, cfg);
  require(window > 2 * lag_max, "estimate_f0: window too short for f0_min");
  const int64_t len = static_cast<int64_t>(wave.samples.size());
  const int64_t nf = frame_count(len, window, cfg.hop);

  std::vector<double> f0(nf, 0.0);
  for (int64_t f = 0; f < nf; ++f) {
    const double* x = wave.samples.data() + f * cfg.hop;
    NccResult peak = ncc_search(x, window, lag_min, lag_max);
    if (peak.valid && peak.value >= cfg.voicing_threshold && peak.lag > 0.0) {
      f0[f] = wave.rate / peak.lag;
    }
  }
  return f0;
}

std::vector<std::vector<double>> melcep_extract(const WaveBuffer& wave,
                                                const AnalysisConfig& cfg) {
  require(cfg.mcep_order >= 2, "melcep_extract: order must be >= 2");
  require(is_power_of_two(cfg.window), "melcep_extract: window must be a power of two");
  const int64_t len = static_cast<int64_t>(wave.samples.size());
  const int64_t nf = frame_count(len, cfg.window, cfg.hop);
  const int nfilt = 2 * cfg.mcep_order;
  const int nbins = static_cast<int>(cfg.window / 2 + 1);
  const double nyquist = wave.rate / 2.0;

  // Triangle filter bank on the mel scale, edges from 0 to Nyquist.
  std::vector<double> edges(nfilt + 2);
  const double mel_hi = hz_to_mel(nyquist);
  for (int k = 0; k < nfilt + 2; ++k)
    edges[k] = mel_to_hz(mel_hi * k / static_cast<double>(nfilt + 1));
  std::vector<std::vector<std::pair<int, double>>> bank(nfilt);
  for (int j = 0; j < nfilt; ++j) {
    const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
    for (int b = 0; b < nbins; ++b) {
      const double f = b * nyquist / (nbins - 1);
      double w = 0.0;
      if (f > lo && f < mid) w = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) w = (hi - f) / (hi - mid);
      if (w > 0.0) bank[j].push_back({b, w});
    }
  }

  std::vector<std::vector<double>> mcep(nf, std::vector<double>(cfg.mcep_order, 0.0));
  std::vector<double> power, energy(nfilt);
  for (int64_t f = 0; f < nf; ++f) {
    power_spectrum(wave.samples.data() + f * cfg.hop, cfg.window, power);
    double emax = 0.0;
    for (int j = 0; j < nfilt; ++j) {
      double e = 0.0;
      for (const auto& [b, w] : bank[j]) e += w * power[b];
      energy[j] = e;
      emax = std::max(emax, e);
    }
    const double floor_e = std::max(1e-8 * emax, 1e-100);
    for (int j = 0; j < nfilt; ++j) energy[j] = std::log(std::max(energy[j], floor_e));
    // orthonormal DCT-II, first `order` coefficients
    for (int k = 0; k < cfg.mcep_order; ++k) {
      double acc = 0.0;
      for (int j = 0; j < nfilt; ++j)
        acc += energy[j] * std::cos(kPi * k * (j + 0.5) / nfilt);
      const double s = k == 0 ? std::sqrt(1.0 / nfilt) : std::sqrt(2.0 / nfilt);
      mcep[f][k] = s * acc;
    }
  }
  return mcep;
}

std::vector<std::array<double, 2>> code_aperiodicity(const WaveBuffer& wave,
                                                     const AnalysisConfig& cfg) {
  require(is_power_of_two(cfg.window), "code_aperiodicity: window must be a power of two");
  const auto [lag_min, lag_max] = lag_range(wave.rate, cfg);
  require(cfg.window > lag_max, "code_aperiodicity: window too short for f0_min");
  const int64_t len = static_cast<int64_t>(wave.samples.size());
  const int64_t nf = frame_count(len, cfg.window, cfg.hop);
  const int nbins = static_cast<int>(cfg.window / 2 + 1);
  // band split at rate/4 = half of Nyquist
  const int split = (nbins - 1) / 2;

  std::vector<std::array<double, 2>> out(nf, {-1.0, -1.0});
  std::vector<double> frame(cfg.window), resid(cfg.window), ptotal, presid;
  for (int64_t f = 0; f < nf; ++f) {
    const int64_t start = f * cfg.hop;
    const double* x = wave.samples.data() + start;
    for (int64_t i = 0; i < cfg.window; ++i) frame[i] = x[i];

    // One-period predictor with history read from before the frame when
    // available; optimal single-tap gain over the frame.
    NccResult peak = ncc_search(x, cfg.window, lag_min, lag_max);
    double rho = 0.0;
    int64_t tau = peak.valid ? static_cast<int64_t>(std::lround(peak.lag)) : 0;
    if (tau > 0) {
      double num = 0.0, den = 0.0;
      for (int64_t i = 0; i < cfg.window; ++i) {
        const int64_t g = start + i - tau;
        const double prev = g >= 0 ? wave.samples[g] : 0.0;
        num += frame[i] * prev;
        den += prev * prev;
      }
      if (den > 1e-300) rho = std::clamp(num / den, 0.0, 1.5);
    }
    for (int64_t i = 0; i < cfg.window; ++i) {
      const int64_t g = start + i - tau;
      const double prev = (tau > 0 && g >= 0) ? wave.samples[g] : 0.0;
      resid[i] = frame[i] - rho * prev;
    }

    power_spectrum(frame.data(), cfg.window, ptotal);
    power_spectrum(resid.data(), cfg.window, presid);
    for (int band = 0; band < 2; ++band) {
      const int b0 = band == 0 ? 0 : split;
      const int b1 = band == 0 ? split : nbins;
      double et = 0.0, er = 0.0;
      for (int b = b0; b < b1; ++b) {
        et += ptotal[b];
        er += presid[b];
      }
      if (et <= 1e-300) {
        out[f][band] = -1.0;  // 0/0 guarded to the floor
        continue;
      }
      double db = 10.0 * std::log10(std::max(er / et, 1e-30));
      out[f][band] = std::clamp(db, -60.0, 0.0) / 60.0;
    }
  }
  return out;
}

FrameFeatures extract_features(const WaveBuffer& wave, const AnalysisConfig& cfg) {
  std::vector<double> f0 = estimate_f0(wave, cfg);
  auto [cont_f0, uv] = interpolate_continuous_f0(f0);
  std::vector<std::vector<double>> mcep = melcep_extract(wave, cfg);
  std::vector<std::array<double, 2>> ap = code_aperiodicity(wave, cfg);

  const int64_t nf = std::min({static_cast<int64_t>(cont_f0.size()),
                               static_cast<int64_t>(mcep.size()),
                               static_cast<int64_t>(ap.size())});
  require(nf > 0, "extract_features: no complete frames");

  FrameFeatures out;
  out.hop = cfg.hop;
  out.continuous_f0.assign(cont_f0.begin(), cont_f0.begin() + nf);
  out.uv.assign(uv.begin(), uv.begin() + nf);
  out.mcep.assign(mcep.begin(), mcep.begin() + nf);
  out.coded_ap.assign(ap.begin(), ap.begin() + nf);
  return out;
}

}  // namespace qpnet
