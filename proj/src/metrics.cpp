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

#include "qpnet/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace qpnet {

double mcd_db(const std::vector<std::vector<double>>& reference,
              const std::vector<std::vector<double>>& test) {
  require(!reference.empty() && reference.size() == test.size(),
          "mcd: frame-count mismatch");
  const size_t m = reference[0].size();
  const double k = 10.0 / std::log(10.0);
  double acc = 0.0;
  for (size_t f = 0; f < reference.size(); ++f) {
    require(reference[f].size() == m && test[f].size() == m, "mcd: dimension mismatch");
    double ss = 0.0;
    for (size_t d = 1; d < m; ++d) {
      const double diff = reference[f][d] - test[f][d];
      ss += diff * diff;
    }
    acc += k * std::sqrt(2.0 * ss);
  }
  return acc / static_cast<double>(reference.size());
}

LogF0Result logf0_rmse(const std::vector<double>& reference_f0,
                       const std::vector<double>& test_f0) {
  require(reference_f0.size() == test_f0.size(), "logf0_rmse: frame-count mismatch");
  LogF0Result out;
  double acc = 0.0;
  for (size_t f = 0; f < reference_f0.size(); ++f) {
    if (reference_f0[f] > 0.0 && test_f0[f] > 0.0) {
      const double d = std::log(reference_f0[f]) - std::log(test_f0[f]);
      acc += d * d;
      out.overlap_frames += 1;
    }
  }
  if (out.overlap_frames == 0) return out;  // distinguished empty-overlap result
  out.empty_overlap = false;
  out.rmse = std::sqrt(acc / static_cast<double>(out.overlap_frames));
  out.overlap_fraction =
      static_cast<double>(out.overlap_frames) / static_cast<double>(reference_f0.size());
  return out;
}

std::vector<EvalRow> evaluate_run(const std::vector<EvalPair>& pairs,
                                  const AnalysisConfig& cfg) {
  std::vector<EvalRow> rows;
  rows.reserve(pairs.size());
  for (const EvalPair& pair : pairs) {
    EvalRow row;
    row.name = pair.name;
    try {
      WaveBuffer wave = read_wav(pair.wav_path);
      FrameFeatures cond = read_features(pair.feature_path);

      AnalysisConfig acfg = cfg;
      acfg.hop = cond.hop;
      acfg.mcep_order = cond.mcep_dim();
      std::vector<std::vector<double>> mcep = melcep_extract(wave, acfg);
      std::vector<double> f0 = estimate_f0(wave, acfg);

      const int64_t nf = std::min<int64_t>(
          {cond.frames(), static_cast<int64_t>(mcep.size()), static_cast<int64_t>(f0.size())});
      // trailing frames lost to the analysis windows are expected; anything
      // beyond that is a pairing error
      const int64_t budget =
          std::max(f0_window_samples(wave.rate, acfg), acfg.window) / acfg.hop + 2;
      require(nf >= 1, "no comparable frames");
      require(cond.frames() - nf <= budget, "conditioning/audio length mismatch");

      std::vector<std::vector<double>> ref(cond.mcep.begin(), cond.mcep.begin() + nf);
      mcep.resize(static_cast<size_t>(nf));
      row.mcd = mcd_db(ref, mcep);

      std::vector<double> ref_f0(static_cast<size_t>(nf), 0.0);
      for (int64_t f = 0; f < nf; ++f)
        if (cond.uv[static_cast<size_t>(f)])
          ref_f0[static_cast<size_t>(f)] = cond.continuous_f0[static_cast<size_t>(f)];
      f0.resize(static_cast<size_t>(nf));
      LogF0Result lf = logf0_rmse(ref_f0, f0);
      require(!lf.empty_overlap, "no both-voiced frames");
      row.rmse = lf.rmse;
      row.voiced_overlap = lf.overlap_fraction;
      row.frames = nf;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report(const std::string& path, const std::vector<EvalRow>& rows) {
  std::ofstream os(path);
  require(os.good(), "write_report: cannot open " + path);
  os << "utterance\tstatus\tframes\tmcd_db\tlogf0_rmse\tvoiced_overlap\n";
  char buf[256];
  double mcd_sum = 0.0, rmse_sum = 0.0, overlap_sum = 0.0;
  int64_t ok_count = 0;
  for (const EvalRow& r : rows) {
    if (r.ok) {
      std::snprintf(buf, sizeof(buf), "%s\tok\t%lld\t%.6f\t%.6f\t%.6f\n", r.name.c_str(),
                    static_cast<long long>(r.frames), r.mcd, r.rmse, r.voiced_overlap);
      os << buf;
      mcd_sum += r.mcd;
      rmse_sum += r.rmse;
      overlap_sum += r.voiced_overlap;
      ok_count += 1;
    } else {
      os << r.name << "\terror:" << r.error << "\t0\t-\t-\t-\n";
    }
  }
  if (ok_count > 0) {
    std::snprintf(buf, sizeof(buf), "mean\tok\t%lld\t%.6f\t%.6f\t%.6f\n",
                  static_cast<long long>(ok_count), mcd_sum / ok_count,
                  rmse_sum / ok_count, overlap_sum / ok_count);
    os << buf;
  }
}

}  // namespace qpnet
