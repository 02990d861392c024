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

// qpnet <subcommand> --config <path> [key=value ...]
//
// Subcommands: synth-corpus, extract, train-vocoder, adapt, train-converter,
// convert, generate, evaluate, plan. Exit codes: 0 ok, 1 usage/config,
// 2 missing input, 3 format/architecture mismatch, 4 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "qpnet/config.h"
#include "qpnet/pipeline.h"

namespace {

const std::vector<std::string> kStages = {
    "synth-corpus", "extract",  "train-vocoder", "adapt", "train-converter",
    "convert",      "generate", "evaluate",      "plan"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-periodic vocoder pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<CLI::App*> subs;
  for (const std::string& name : kStages) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("overrides", overrides, "key=value config overrides");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    qpnet::Config cfg =
        config_path.empty() ? qpnet::Config{} : qpnet::Config::load(config_path);
    for (const std::string& kv : overrides) cfg.apply_override(kv);

    if (stage == "plan") {
      std::fputs(qpnet::stage_plan_report(cfg).c_str(), stdout);
      return qpnet::kExitOk;
    }
    qpnet::run_stage(stage, cfg);
    return qpnet::kExitOk;
  } catch (const qpnet::MissingInputError& e) {
    std::fprintf(stderr, "qpnet %s: %s\n", stage.c_str(), e.what());
    return qpnet::kExitMissingInput;
  } catch (const qpnet::CompatError& e) {
    std::fprintf(stderr, "qpnet %s: %s\n", stage.c_str(), e.what());
    return qpnet::kExitCompat;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "qpnet %s: %s\n", stage.c_str(), e.what());
    return qpnet::kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qpnet %s: %s\n", stage.c_str(), e.what());
    return qpnet::kExitRuntime;
  }
}
