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

#include "qpnet/adaptation.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qpnet {

FinetuneMode finetune_mode_from_string(const std::string& s) {
  if (s == "sdo") return FinetuneMode::kOutputOnly;
  if (s == "sda") return FinetuneMode::kWholeNetwork;
  fail("finetune mode must be 'sdo' or 'sda', got '" + s + "'");
}

double validation_loss(const VocoderParams& params,
                       const std::vector<UtteranceData>& val_data, int64_t window) {
  require(!val_data.empty(), "validation_loss: empty validation set");
  auto windows = enumerate_windows(val_data, params.spec, window);
  return batch_cross_entropy(params, windows);
}

std::vector<LedgerRow> finetune(VocoderParams& params,
                                const std::vector<UtteranceData>& train_data,
                                const std::vector<UtteranceData>& val_data,
                                const FinetuneConfig& cfg) {
  require(!train_data.empty(), "finetune: empty adaptation data");
  std::vector<LedgerRow> ledger;
  if (cfg.iterations == 0) return ledger;

  std::vector<Parameter*> all = params.parameters();
  std::vector<Parameter*> head = params.head_parameters();
  const bool head_only = cfg.mode == FinetuneMode::kOutputOnly;
  for (Parameter* p : all) {
    p->trainable = !head_only;
    p->adam = AdamState{};
  }
  if (head_only)
    for (Parameter* p : head) p->trainable = true;

  std::mt19937_64 rng(cfg.seed);
  AdamConfig adam;
  adam.lr = cfg.lr;
  for (int64_t it = 1; it <= cfg.iterations; ++it) {
    auto batch = sample_batch(train_data, params.spec, cfg.window, cfg.batch_samples, rng);
    const double train_ce = train_step(params, batch, adam);
    if (it == 1 || it == cfg.iterations || it % cfg.ledger_every == 0) {
      const double val_ce = validation_loss(params, val_data, cfg.window);
      ledger.push_back({it, train_ce, val_ce});
    }
  }
  for (Parameter* p : all) p->trainable = true;
  return ledger;
}

void write_ledger(const std::string& path, const std::vector<LedgerRow>& rows) {
  std::ofstream os(path);
  require(os.good(), "write_ledger: cannot open " + path);
  for (const LedgerRow& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%lld\t%.9f\t%.9f\n",
                  static_cast<long long>(r.iter), r.train_ce, r.val_ce);
    os << buf;
  }
}

std::vector<LedgerRow> read_ledger(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "read_ledger: cannot open " + path);
  std::vector<LedgerRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    LedgerRow r{};
    ls >> r.iter >> r.train_ce >> r.val_ce;
    require(!ls.fail(), "read_ledger: malformed line in " + path);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace qpnet
