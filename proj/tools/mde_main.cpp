// tools/mde_main.cpp

// Copyright 2026  MDE Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// CLI over the C API: mde <stage> --config <path> [--set k=v]... [--seed n]
// [--jobs n]. Exit codes: 0 ok, 1 validation error, 2 IO error.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mde/mde.h"

namespace {

int fail(mde_status status) {
  std::fprintf(stderr, "mde: error: %s\n", mde_last_error());
  switch (status) {
    case MDE_ERR_IO:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"mispronunciation detection pipeline"};
  app.set_version_flag("--version", mde_version());

  std::string config_path;
  std::vector<std::string> overrides;
  long seed = -1;
  long jobs = -1;

  const std::vector<std::string> stages = {
      "synth", "train", "decode", "detect", "calibrate", "evaluate", "run"};
  std::string stage;
  app.add_option("stage", stage, "pipeline stage")
      ->required()
      ->check(CLI::IsMember(stages));
  app.add_option("--config", config_path, "configuration file");
  app.add_option("--set", overrides, "override: key=value")
      ->take_all()
      ->expected(-1);
  app.add_option("--seed", seed, "override the corpus/model seed");
  app.add_option("--jobs", jobs, "worker pool size");

  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<mde_config, decltype(&mde_config_destroy)> cfg(
      mde_config_create(), &mde_config_destroy);
  if (!cfg) {
    std::fprintf(stderr, "mde: out of memory\n");
    return 1;
  }

  if (!config_path.empty()) {
    if (mde_status s = mde_config_load_file(cfg.get(), config_path.c_str());
        s != MDE_OK)
      return fail(s);
  }
  for (const std::string &kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "mde: --set expects key=value, got \"%s\"\n",
                   kv.c_str());
      return 1;
    }
    if (mde_status s = mde_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                                      kv.substr(eq + 1).c_str());
        s != MDE_OK)
      return fail(s);
  }
  if (seed >= 0) {
    if (mde_status s = mde_config_set(cfg.get(), "seed",
                                      std::to_string(seed).c_str());
        s != MDE_OK)
      return fail(s);
  }
  if (jobs >= 1) {
    if (mde_status s = mde_config_set(cfg.get(), "jobs",
                                      std::to_string(jobs).c_str());
        s != MDE_OK)
      return fail(s);
  }

  if (mde_status s = mde_run_stage(cfg.get(), stage.c_str()); s != MDE_OK)
    return fail(s);
  return 0;
}
